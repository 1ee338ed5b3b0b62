#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "pcseg/error.hpp"
#include "pcseg/matrix_io.hpp"

using namespace pcseg;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "pcseg");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / "pcseg_cli_test";
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  fs::path dir;
};

}  // namespace

TEST(CliExitCodes, MapErrorKinds) {
  EXPECT_EQ(cli::exit_code_for(Error(ErrorKind::Usage, "x")), 2);
  EXPECT_EQ(cli::exit_code_for(Error(ErrorKind::Io, "x")), 2);
  EXPECT_EQ(cli::exit_code_for(Error(ErrorKind::Parse, "x")), 2);
  EXPECT_EQ(cli::exit_code_for(Error(ErrorKind::Shape, "x")), 3);
  EXPECT_EQ(cli::exit_code_for(Error(ErrorKind::Internal, "x")), 4);
  EXPECT_EQ(cli::exit_code_for(std::runtime_error("x")), 4);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"oversegment", "--in", path("missing.ply"), "--out", path("o")}).code, 2);
  EXPECT_EQ(run({"synth", "--preset", "nope", "--out", path("x.ply")}).code, 2);
  EXPECT_EQ(run({"--radius", "-1", "synth", "--preset", "single-plane", "--out", path("x.ply")}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(Cli, OversegmentParallelPlanes) {
  ASSERT_EQ(run({"synth", "--preset", "parallel-planes", "--out", path("pp.ply")}).code, 0);
  const CliRun r = run({"--theta-th", "45", "--radius", "0.1", "--seed-fraction", "0", "oversegment", "--in",
                        path("pp.ply"), "--out", path("pp"), "--sample-fraction", "0.0001"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("regions 2\n"), std::string::npos) << r.out;
  for (const char* ext : {".partition", ".regions", ".labels", ".manifest"}) {
    EXPECT_TRUE(fs::exists(path(std::string("pp") + ext))) << ext;
  }
  EXPECT_NE(slurp(path("pp.manifest")).find("theta_th = 45"), std::string::npos);
}

TEST_F(Cli, PropagateEvalAndPredictorShapes) {
  ASSERT_EQ(run({"synth", "--preset", "five-primitives", "--out", path("s.ply")}).code, 0);
  const CliRun r = run({"propagate", "--in", path("s.ply"), "--out", path("p"), "--sample-fraction", "0.002",
                     "--predictor", "oracle"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(slurp(path("p.trace.csv"))), 9u);

  const CliRun e = run({"eval", "--pred", path("p.labels"), "--gt", path("p.labels")});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_NE(e.out.find("sem,all,miou,1\n"), std::string::npos) << e.out;

  {
    std::ofstream f(path("bad.mat"));
    f << "garbage";
  }
  EXPECT_EQ(run({"propagate", "--in", path("s.ply"), "--out", path("q"), "--sample-fraction", "0.002", "--predictor",
                 "file:" + path("bad.mat")})
                .code,
            2);
  write_matrix(FloatMatrix{2, 5, std::vector<float>(10, 0.2f)}, path("short.mat"));
  EXPECT_EQ(run({"propagate", "--in", path("s.ply"), "--out", path("q"), "--sample-fraction", "0.002", "--predictor",
                 "file:" + path("short.mat")})
                .code,
            3);
  EXPECT_EQ(run({"propagate", "--in", path("s.ply"), "--out", path("q"), "--sample-fraction", "0.002", "--predictor",
                 "magic"})
                .code,
            2);
}

TEST_F(Cli, BenchKnnWithoutQueriesWritesHeader) {
  const CliRun r = run({"bench-knn", "--uniform", "1000", "--queries", "0", "--out", path("b.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(slurp(path("b.csv"))), 1u);
}

TEST_F(Cli, DescriptorDims) {
  ASSERT_EQ(run({"synth", "--preset", "single-plane", "--out", path("sp.ply")}).code, 0);
  const std::vector<std::pair<std::string, std::string>> kinds = {
      {"adapted-pfh", "cols 125\n"}, {"original-pfh", "cols 625\n"}, {"fpfh", "cols 33\n"}};
  for (const auto& [kind, cols] : kinds) {
    const CliRun r = run({"descriptor", "--in", path("sp.ply"), "--kind", kind, "--out", path(kind + ".mat")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find(cols), std::string::npos) << kind << r.out;
  }
  EXPECT_EQ(run({"descriptor", "--in", path("sp.ply"), "--kind", "shot", "--out", path("x.mat")}).code, 2);
}

TEST_F(Cli, ReplayReproducesOutputs) {
  ASSERT_EQ(run({"synth", "--preset", "two-planes", "--out", path("t.ply")}).code, 0);
  ASSERT_EQ(run({"oversegment", "--in", path("t.ply"), "--out", path("a"), "--sample-fraction", "0.002"}).code, 0);
  const CliRun r = run({"replay", "--manifest", path("a.manifest"), "--out", path("b")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(path("a.labels")), slurp(path("b.labels")));
  EXPECT_EQ(slurp(path("a.partition")), slurp(path("b.partition")));
}
