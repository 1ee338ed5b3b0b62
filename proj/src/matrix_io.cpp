#include "pcseg/matrix_io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "pcseg/error.hpp"

namespace pcseg {

namespace {

constexpr char kMagic[8] = {'R', 'M', '3', 'D', 'M', 'A', 'T', '1'};

template <typename T>
void put_le(std::string& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(bytes, sizeof(T));
}

template <typename T>
T get_le(const char* p) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

}  // namespace

void write_matrix(const FloatMatrix& m, const std::filesystem::path& path) {
  if (m.data.size() != m.rows * m.cols) throw Error(ErrorKind::Shape, "matrix data size does not match rows * cols");
  std::string out(kMagic, sizeof kMagic);
  out.reserve(24 + m.data.size() * 4);
  put_le<std::uint64_t>(out, m.rows);
  put_le<std::uint64_t>(out, m.cols);
  for (float v : m.data) put_le<float>(out, v);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

FloatMatrix read_matrix(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  const std::string data((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  if (data.size() < 24 || std::memcmp(data.data(), kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorKind::Parse, "'" + path.string() + "' is not an RM3DMAT1 matrix");
  }
  FloatMatrix m;
  m.rows = get_le<std::uint64_t>(data.data() + 8);
  m.cols = get_le<std::uint64_t>(data.data() + 16);
  if (m.cols != 0 && m.rows > (data.size() - 24) / 4 / m.cols) {
    throw Error(ErrorKind::Parse, "'" + path.string() + "' is truncated");
  }
  const std::size_t count = m.rows * m.cols;
  if (data.size() != 24 + count * 4) {
    throw Error(ErrorKind::Parse, "'" + path.string() + "' size does not match its header");
  }
  m.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) m.data[i] = get_le<float>(data.data() + 24 + 4 * i);
  return m;
}

FloatMatrix to_float_matrix(const DescriptorMatrix& d) {
  FloatMatrix m;
  m.rows = d.rows;
  m.cols = d.cols;
  m.data.resize(d.data.size());
  for (std::size_t i = 0; i < d.data.size(); ++i) m.data[i] = static_cast<float>(d.data[i]);
  return m;
}

DescriptorMatrix load_external_embeddings(const std::filesystem::path& path, std::size_t expected_rows) {
  const FloatMatrix m = read_matrix(path);
  if (m.rows != expected_rows) {
    throw Error(ErrorKind::Shape, "embedding matrix has " + std::to_string(m.rows) + " rows, cloud has " +
                                      std::to_string(expected_rows) + " points");
  }
  DescriptorMatrix d;
  d.kind = DescriptorKind::External;
  d.rows = m.rows;
  d.cols = m.cols;
  d.data.assign(m.data.begin(), m.data.end());
  d.isolated.assign(m.rows, 0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    bool zero = true;
    for (float v : m.row(i)) zero = zero && v == 0.0f;
    d.isolated[i] = zero ? 1 : 0;
  }
  return d;
}

}  // namespace pcseg
