#include "pcseg/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "pcseg/config.hpp"
#include "pcseg/error.hpp"
#include "pcseg/random.hpp"

namespace pcseg {

namespace {

constexpr double kPi = std::numbers::pi;

Mat3 rotation_from_degrees(const Vec3& deg) {
  const Vec3 rad = deg * kPi / 180.0;
  return (Eigen::AngleAxisd(rad.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(rad.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(rad.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

struct Sample {
  Vec3 position;
  Vec3 normal;
};

// Uniform point on the primitive surface in its local frame.
Sample sample_local(const Primitive& p, Rng& rng) {
  switch (p.shape) {
    case Primitive::Shape::Plane: {
      const double u = (uniform_unit(rng) - 0.5) * p.size.x();
      const double v = (uniform_unit(rng) - 0.5) * p.size.y();
      return {Vec3(u, v, 0.0), Vec3::UnitZ()};
    }
    case Primitive::Shape::Box: {
      const Vec3 h = p.size / 2.0;
      const double areas[3] = {p.size.y() * p.size.z(), p.size.x() * p.size.z(), p.size.x() * p.size.y()};
      const double total = 2.0 * (areas[0] + areas[1] + areas[2]);
      double pick = uniform_unit(rng) * total;
      int face = 0;
      for (; face < 5; ++face) {
        const double a = areas[face / 2];
        if (pick < a) break;
        pick -= a;
      }
      const int axis = face / 2;
      const double sign = face % 2 == 0 ? 1.0 : -1.0;
      Vec3 q;
      for (int k = 0; k < 3; ++k) q[k] = (uniform_unit(rng) - 0.5) * p.size[k];
      q[axis] = sign * h[axis];
      Vec3 n = Vec3::Zero();
      n[axis] = sign;
      return {q, n};
    }
    case Primitive::Shape::Sphere: {
      const double z = 2.0 * uniform_unit(rng) - 1.0;
      const double phi = 2.0 * kPi * uniform_unit(rng);
      const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
      const Vec3 n(s * std::cos(phi), s * std::sin(phi), z);
      return {n * p.radius, n};
    }
  }
  return {};
}

Vec3 parse_vec3(const std::string& key, const std::string& value, std::size_t line) {
  Vec3 v;
  std::size_t pos = 0;
  for (int k = 0; k < 3; ++k) {
    while (pos < value.size() && (value[pos] == ' ' || value[pos] == '\t')) ++pos;
    const auto end = value.find_first_of(" \t", pos);
    const auto token = value.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    if (token.empty()) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": '" + key + "' expects three numbers", line);
    }
    v[k] = parse_number(key, token, line);
    pos = end == std::string::npos ? value.size() : end;
  }
  while (pos < value.size() && (value[pos] == ' ' || value[pos] == '\t')) ++pos;
  if (pos != value.size()) {
    throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": '" + key + "' expects three numbers", line);
  }
  return v;
}

std::string vec_text(const Vec3& v) {
  return format_number(v.x()) + " " + format_number(v.y()) + " " + format_number(v.z());
}

}  // namespace

double Primitive::area() const {
  switch (shape) {
    case Shape::Plane: return size.x() * size.y();
    case Shape::Box: return 2.0 * (size.x() * size.y() + size.y() * size.z() + size.x() * size.z());
    case Shape::Sphere: return 4.0 * kPi * radius * radius;
  }
  return 0.0;
}

void SceneSpec::validate() const {
  std::set<std::int32_t> instances;
  for (std::size_t i = 0; i < primitives.size(); ++i) {
    const auto& p = primitives[i];
    const std::string where = "primitive " + std::to_string(i) + ": ";
    if (!(p.density > 0.0)) throw Error(ErrorKind::Bounds, where + "density must be > 0");
    if (!(p.noise >= 0.0)) throw Error(ErrorKind::Bounds, where + "noise must be >= 0");
    if (p.shape == Primitive::Shape::Sphere ? !(p.radius > 0.0)
                                            : !(p.size.x() > 0.0 && p.size.y() > 0.0 &&
                                                (p.shape == Primitive::Shape::Plane || p.size.z() > 0.0))) {
      throw Error(ErrorKind::Bounds, where + "extent must be > 0");
    }
    if (p.class_id < 0) throw Error(ErrorKind::Bounds, where + "class must be >= 0");
    if (p.color && (p.color->minCoeff() < 0.0 || p.color->maxCoeff() > 1.0)) {
      throw Error(ErrorKind::Bounds, where + "color must lie in [0, 1]");
    }
    if (!instances.insert(p.instance).second) {
      throw Error(ErrorKind::Bounds, where + "instance id " + std::to_string(p.instance) + " is repeated");
    }
  }
}

PointCloud generate(const SceneSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  bool colored = !spec.primitives.empty();
  for (const auto& p : spec.primitives) colored = colored && p.color.has_value();

  PointCloud cloud;
  std::vector<Vec3> normals;
  std::vector<ClassId> classes;
  std::vector<std::int32_t> instances;
  std::vector<Vec3> colors;
  for (const auto& p : spec.primitives) {
    std::poisson_distribution<std::uint64_t> count_dist(p.density * p.area());
    const std::uint64_t count = count_dist(rng);
    const Mat3 r = rotation_from_degrees(p.rotation_deg);
    for (std::uint64_t k = 0; k < count; ++k) {
      const Sample s = sample_local(p, rng);
      const Vec3 n = r * s.normal;
      Vec3 pos = p.center + r * s.position;
      if (p.noise > 0.0) pos += n * (p.noise * gauss(rng));
      cloud.positions.push_back(pos);
      normals.push_back(n.normalized());
      classes.push_back(p.class_id);
      instances.push_back(p.instance);
      if (colored) colors.push_back(*p.color);
    }
  }
  cloud.normals = std::move(normals);
  cloud.gt_labels = std::move(classes);
  cloud.gt_instances = std::move(instances);
  if (colored) cloud.colors = std::move(colors);
  return cloud;
}

SceneSpec parse_scene_spec(std::string_view text) {
  SceneSpec spec;
  for (const auto& section : parse_key_value(text)) {
    if (section.name.empty()) {
      for (std::size_t i = 0; i < section.entries.size(); ++i) {
        const auto& [key, value] = section.entries[i];
        const std::size_t line = section.entry_lines[i];
        if (key != "seed") {
          throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": unknown scene key '" + key + "'", line);
        }
        const auto s = parse_integer(key, value, line);
        if (s < 0) throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": seed must be >= 0", line);
        spec.seed = static_cast<std::uint64_t>(s);
      }
      continue;
    }
    Primitive p;
    if (section.name == "plane") p.shape = Primitive::Shape::Plane;
    else if (section.name == "box") p.shape = Primitive::Shape::Box;
    else if (section.name == "sphere") p.shape = Primitive::Shape::Sphere;
    else {
      throw Error(ErrorKind::Parse,
                  "line " + std::to_string(section.line) + ": unknown primitive '" + section.name + "'",
                  section.line);
    }
    p.instance = static_cast<std::int32_t>(spec.primitives.size());
    for (std::size_t i = 0; i < section.entries.size(); ++i) {
      const auto& [key, value] = section.entries[i];
      const std::size_t line = section.entry_lines[i];
      if (key == "center") p.center = parse_vec3(key, value, line);
      else if (key == "rotation") p.rotation_deg = parse_vec3(key, value, line);
      else if (key == "size" && p.shape == Primitive::Shape::Box) p.size = parse_vec3(key, value, line);
      else if (key == "size" && p.shape == Primitive::Shape::Plane) {
        const Vec3 v = parse_vec3(key, value + " 0", line);
        p.size = Vec3(v.x(), v.y(), 0.0);
      } else if (key == "radius" && p.shape == Primitive::Shape::Sphere) p.radius = parse_number(key, value, line);
      else if (key == "class") p.class_id = static_cast<ClassId>(parse_integer(key, value, line));
      else if (key == "instance") p.instance = static_cast<std::int32_t>(parse_integer(key, value, line));
      else if (key == "density") p.density = parse_number(key, value, line);
      else if (key == "noise") p.noise = parse_number(key, value, line);
      else if (key == "color") p.color = parse_vec3(key, value, line);
      else {
        throw Error(ErrorKind::Parse,
                    "line " + std::to_string(line) + ": key '" + key + "' does not apply to [" + section.name + "]",
                    line);
      }
    }
    spec.primitives.push_back(p);
  }
  spec.validate();
  return spec;
}

SceneSpec load_scene_spec(const std::filesystem::path& path) { return parse_scene_spec(read_text_file(path)); }

std::string to_text(const SceneSpec& spec) {
  std::string out = "seed = " + std::to_string(spec.seed) + "\n";
  for (const auto& p : spec.primitives) {
    switch (p.shape) {
      case Primitive::Shape::Plane: out += "\n[plane]\n"; break;
      case Primitive::Shape::Box: out += "\n[box]\n"; break;
      case Primitive::Shape::Sphere: out += "\n[sphere]\n"; break;
    }
    out += "center = " + vec_text(p.center) + "\n";
    out += "rotation = " + vec_text(p.rotation_deg) + "\n";
    if (p.shape == Primitive::Shape::Plane) out += "size = " + format_number(p.size.x()) + " " + format_number(p.size.y()) + "\n";
    if (p.shape == Primitive::Shape::Box) out += "size = " + vec_text(p.size) + "\n";
    if (p.shape == Primitive::Shape::Sphere) out += "radius = " + format_number(p.radius) + "\n";
    out += "class = " + std::to_string(p.class_id) + "\n";
    out += "instance = " + std::to_string(p.instance) + "\n";
    out += "density = " + format_number(p.density) + "\n";
    out += "noise = " + format_number(p.noise) + "\n";
    if (p.color) out += "color = " + vec_text(*p.color) + "\n";
  }
  return out;
}

SceneSpec preset_scene(std::string_view name, std::uint64_t seed) {
  SceneSpec spec;
  spec.seed = seed;
  auto plane = [](Vec3 center, Vec3 rot, double sx, double sy, ClassId cls, int inst, double density, Vec3 color) {
    Primitive p;
    p.shape = Primitive::Shape::Plane;
    p.center = center;
    p.rotation_deg = rot;
    p.size = Vec3(sx, sy, 0.0);
    p.class_id = cls;
    p.instance = inst;
    p.density = density;
    p.noise = 0.001;
    p.color = color;
    return p;
  };
  if (name == "single-plane") {
    spec.primitives.push_back(plane(Vec3(0.5, 0.5, 0.0), Vec3::Zero(), 1.0, 1.0, 0, 0, 2000, Vec3(0.6, 0.6, 0.6)));
  } else if (name == "two-planes") {
    spec.primitives.push_back(plane(Vec3(0.5, 0.5, 0.0), Vec3::Zero(), 1.0, 1.0, 0, 0, 2000, Vec3(0.6, 0.6, 0.6)));
    spec.primitives.push_back(
        plane(Vec3(0.0, 0.5, 0.5), Vec3(0.0, 90.0, 0.0), 1.0, 1.0, 1, 1, 2000, Vec3(0.9, 0.2, 0.2)));
  } else if (name == "parallel-planes") {
    spec.primitives.push_back(plane(Vec3(0.5, 0.5, 0.0), Vec3::Zero(), 1.0, 1.0, 0, 0, 2000, Vec3(0.6, 0.6, 0.6)));
    spec.primitives.push_back(plane(Vec3(0.5, 0.5, 1.0), Vec3::Zero(), 1.0, 1.0, 1, 1, 2000, Vec3(0.9, 0.2, 0.2)));
  } else if (name == "five-primitives") {
    spec.primitives.push_back(plane(Vec3(0.0, 0.0, 0.0), Vec3::Zero(), 4.0, 4.0, 0, 0, 1800, Vec3(0.0, 0.0, 0.0)));
    spec.primitives.push_back(
        plane(Vec3(-2.6, 0.0, 1.2), Vec3(0.0, 90.0, 0.0), 2.0, 4.0, 1, 1, 1800, Vec3(1.0, 1.0, 0.0)));
    Primitive box_a;
    box_a.shape = Primitive::Shape::Box;
    box_a.center = Vec3(0.8, 0.9, 0.6);
    box_a.size = Vec3(0.8, 0.6, 0.5);
    box_a.class_id = 2;
    box_a.instance = 2;
    box_a.density = 1800;
    box_a.noise = 0.001;
    box_a.color = Vec3(1.0, 0.0, 1.0);
    spec.primitives.push_back(box_a);
    Primitive sphere;
    sphere.shape = Primitive::Shape::Sphere;
    sphere.center = Vec3(-0.9, -0.9, 0.9);
    sphere.radius = 0.5;
    sphere.class_id = 3;
    sphere.instance = 3;
    sphere.density = 1800;
    sphere.noise = 0.001;
    sphere.color = Vec3(0.0, 1.0, 1.0);
    spec.primitives.push_back(sphere);
    Primitive box_b = box_a;
    box_b.center = Vec3(0.9, -1.0, 0.7);
    box_b.size = Vec3(0.5, 0.5, 0.7);
    box_b.rotation_deg = Vec3(0.0, 0.0, 30.0);
    box_b.class_id = 4;
    box_b.instance = 4;
    box_b.color = Vec3(1.0, 1.0, 1.0);
    spec.primitives.push_back(box_b);
  } else {
    throw Error(ErrorKind::Usage, "unknown preset scene '" + std::string(name) + "'");
  }
  return spec;
}

}  // namespace pcseg
