#include <nlohmann/json.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out, err;
};

fs::path scratch_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("emod_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Result run(const std::string& args) {
  const auto dir = scratch_dir();
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string("cd '") + dir.string() + "' && '" + EMOD_CLI_PATH + "' " + args + " >'" + out.string() +
                          "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

const std::string kFastModulus = "modulus --example L1 --d 1 --alpha 0.25 --tmin 0.001953125 --tmax 0.0625 --tsteps 11";

}  // namespace

TEST(Cli, ModulusWritesCurveAndFit) {
  const auto r = run(kFastModulus + " --out l1");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(slurp(scratch_dir() / "l1.json"));
  EXPECT_NEAR(j["fit"]["slope"].get<double>(), 1.5, 0.1);
  EXPECT_EQ(j["seed"], 0);
  EXPECT_TRUE(j.contains("version"));
  EXPECT_EQ(j["config"]["example"], "L1");
  const auto csv = slurp(scratch_dir() / "l1.csv");
  EXPECT_NE(csv.find("# config="), std::string::npos);
  EXPECT_NE(csv.find("t,value\n"), std::string::npos);
}

TEST(Cli, AboveTheStripStillRunsInSaturatedRegime) {
  const auto r = run("modulus --example L1 --d 1 --alpha 2 --tmin 0.001953125 --tmax 0.0625 --tsteps 8");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out.substr(r.out.find("\n{") + 1));
  EXPECT_EQ(j["regime"], "saturated");
  EXPECT_DOUBLE_EQ(j["expected_exponent"].get<double>(), 2.0);
}

TEST(Cli, ZeroExponentIsAValidationError) {
  const auto r = run("modulus --example S2 --alpha 0");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("zero exponent excluded"), std::string::npos) << r.err;
}

TEST(Cli, ValidationErrorsNameTheStrip) {
  auto r = run("modulus --example S2 --alpha -0.8");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("validity strip"), std::string::npos) << r.err;
  r = run("approx --example E5 --d 2 --p 0.5");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("p must be >= 1"), std::string::npos) << r.err;
  r = run("approx --example S2");
  EXPECT_EQ(r.code, 1);
  r = run("modulus --example Q7");
  EXPECT_EQ(r.code, 1);
  r = run("modulus --bogus-flag");
  EXPECT_EQ(r.code, 1);
  r = run("");
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, PolynomialInputIsReproducedExactly) {
  const auto r = run("approx --poly \"x1*x2 - 0.5*x3^2\" --domain sphere --d 3 --nmin 4 --nmax 12 --out poly");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(slurp(scratch_dir() / "poly.json"));
  EXPECT_NE(j["note"].get<std::string>().find("exact reproduction"), std::string::npos);
  EXPECT_LT(j["reproduction"]["max_error"].get<double>(), 1e-8);
  std::istringstream csv(slurp(scratch_dir() / "poly.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(csv, line)) {
    if (line.empty() || line[0] == '#' || line == "n,value") continue;
    EXPECT_EQ(std::stod(line.substr(line.find(',') + 1)), 0.0) << line;
    ++rows;
  }
  EXPECT_GT(rows, 0);
}

TEST(Cli, PolynomialParseErrors) {
  EXPECT_EQ(run("approx --poly \"x1*\" --domain sphere --d 3").code, 1);
  EXPECT_EQ(run("approx --poly \"x4\" --domain sphere --d 3").code, 1);
  EXPECT_EQ(run("approx --poly \"x1\" --domain torus --d 3").code, 1);
}

TEST(Cli, VerifyPassesAndIsReproducible) {
  const auto a = run("verify --seed 5 --out va");
  ASSERT_EQ(a.code, 0) << a.err;
  const auto b = run("verify --seed 5 --out vb");
  ASSERT_EQ(b.code, 0) << b.err;
  const auto ja = slurp(scratch_dir() / "va.json"), jb = slurp(scratch_dir() / "vb.json");
  EXPECT_EQ(ja, jb);
  const auto j = json::parse(ja);
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_EQ(j["seed"], 5);
  EXPECT_GE(j["checks"].size(), 10u);
}

TEST(Cli, CorruptedToleranceFails) {
  auto r = run("verify --tol-scale 0");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("failed"), std::string::npos);
  r = run("verify --tol-scale -1");
  EXPECT_EQ(r.code, 1);
  r = run("verify --tol-scale abc");
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, EmbeddedConfigReproducesOutputByteIdentically) {
  ASSERT_EQ(run(kFastModulus + " --seed 9 --out first").code, 0);
  const auto j = json::parse(slurp(scratch_dir() / "first.json"));
  {
    std::ofstream os(scratch_dir() / "embedded.json");
    os << j["config"].dump();
  }
  const auto r = run("modulus --config embedded.json --out second");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(scratch_dir() / "first.csv"), slurp(scratch_dir() / "second.csv"));
  EXPECT_EQ(slurp(scratch_dir() / "first.json"), slurp(scratch_dir() / "second.json"));
}

TEST(Cli, ConfigFileErrors) {
  EXPECT_EQ(run("modulus --config missing.json").code, 1);
  {
    std::ofstream os(scratch_dir() / "broken.json");
    os << "{ not json";
  }
  EXPECT_EQ(run("modulus --config broken.json").code, 1);
  {
    std::ofstream os(scratch_dir() / "typed.json");
    os << R"({"example": "L1", "d": "one"})";
  }
  EXPECT_EQ(run("modulus --config typed.json").code, 1);
}

TEST(Cli, CatalogListsEveryExample) {
  const auto r = run("catalog");
  ASSERT_EQ(r.code, 0);
  for (const char* id : {"S1", "S2", "S3", "S4", "L1", "B1", "B2", "B3", "B4", "E1", "E2", "E3", "E4", "E5", "E6"})
    EXPECT_NE(r.out.find(std::string(id) + "\t"), std::string::npos) << id;
}
