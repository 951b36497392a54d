#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "mlembed/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string log;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "mlembed");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream log;
  Run r;
  r.code = mlembed::run_cli(static_cast<int>(argv.size()), argv.data(), out, log);
  r.out = out.str();
  r.log = log.str();
  return r;
}

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "mlembed_cli_tests";
  fs::create_directories(dir);
  return dir;
}

std::string write(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string value_of(const std::string& report, const std::string& key) {
  std::istringstream in(report);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key + ": ", 0) == 0) return line.substr(key.size() + 2);
  }
  return {};
}

double number_of(const std::string& report, const std::string& key) { return std::stod(value_of(report, key)); }

}  // namespace

TEST_CASE("evaluate examples") {
  const auto id = run({"evaluate", "--model", testing::model_path("identity_1d"), "--points", write("half.txt", "0.5\n")});
  CHECK(id.code == 0);
  CHECK(id.out == "0.5\n");

  const auto gp = run({"evaluate", "--model", testing::model_path("gp_n1"), "--points", write("one.txt", "1\n")});
  CHECK(gp.code == 0);
  double mean = 0.0;
  double var = 0.0;
  std::istringstream(gp.out) >> mean >> var;
  CHECK(std::abs(mean - 0.6065306597126334) <= 1e-12);
  CHECK(std::abs(var - 0.6321205588285577) <= 1e-12);

  const auto bad = run({"evaluate", "--model", testing::model_path("identity_1d"), "--points",
                        write("bad.txt", "0.1\na b\n")});
  CHECK(bad.code == 2);
  CHECK(bad.log.find("row 2") != std::string::npos);

  const auto wide = run({"evaluate", "--model", testing::model_path("identity_1d"), "--points",
                         write("wide.txt", "0.1\n0.2 0.3\n")});
  CHECK(wide.code == 2);
  CHECK(wide.log.find("row 2") != std::string::npos);
}

TEST_CASE("solve examples") {
  const auto relu = run({"solve", "--model", testing::model_path("relu_shift"), "--formulation", "fullspace"});
  CHECK(relu.code == 0);
  CHECK(value_of(relu.out, "solver") == "milp");
  CHECK(std::abs(number_of(relu.out, "optimum") + 0.5) <= 1e-9);

  const auto gp = run({"solve", "--model", testing::model_path("gp_n1_neg")});
  CHECK(gp.code == 0);
  CHECK(value_of(gp.out, "solver") == "global");
  CHECK(std::abs(number_of(gp.out, "optimum") + 1.0) <= 1e-5);
  CHECK(std::abs(number_of(gp.out, "x")) <= 1e-2);

  const auto tree = run({"solve", "--model", testing::model_path("trees_2d"), "--formulation", "reduced"});
  CHECK(tree.code == 2);
  CHECK(tree.log.find("config") != std::string::npos);

  const auto usage = run({"solve", "--model", testing::model_path("gp_n1"), "--sense", "sideways"});
  CHECK(usage.code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"solve", "--model", (scratch() / "missing.json").string()}).code == 2);
}

TEST_CASE("solve writes a machine-readable document") {
  const std::string path = (scratch() / "solve.json").string();
  const auto r = run({"solve", "--model", testing::model_path("tanh_1_8_1"), "--grid", "201", "--out", path});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(slurp(path));
  CHECK(j["command"] == "solve");
  CHECK(j["result"]["status"] == "converged");
  CHECK(std::abs(j["result"]["optimum"].get<double>() - number_of(r.out, "optimum")) == 0.0);
  CHECK(std::abs(j["result"]["optimum"].get<double>() - j["result"]["grid_optimum"].get<double>()) <= 1e-3);
  CHECK(r.log.find("time:") != std::string::npos);
  CHECK(r.out.find("time") == std::string::npos);
}

TEST_CASE("compare examples") {
  for (const char* name : {"tanh_1_8_1", "identity_1d", "gp_n3"}) {
    const auto r = run({"compare", "--model", testing::model_path(name)});
    INFO(name);
    CHECK(r.code == 0);
    CHECK(value_of(r.out, "agreement") == "yes");
    CHECK(number_of(r.out, "difference") <= 1e-4);
  }
  const auto id = run({"compare", "--model", testing::model_path("identity_1d")});
  CHECK(number_of(id.out, "reduced.optimum") == -1.0);
  CHECK(number_of(id.out, "fullspace.optimum") == -1.0);

  // A zero tolerance is a regression signal unless the assertion is off.
  const auto strict = run({"compare", "--model", testing::model_path("tanh_1_8_1"), "--tolerance", "-1"});
  CHECK(strict.code == 1);
  const auto relaxed =
      run({"compare", "--model", testing::model_path("tanh_1_8_1"), "--tolerance", "-1", "--no-assert"});
  CHECK(relaxed.code == 0);
}

TEST_CASE("formulate") {
  const auto r = run({"formulate", "--model", testing::model_path("relu_shift")});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("Minimize\n", 0) == 0);
  CHECK(r.out.find("Binaries\n") != std::string::npos);
  CHECK(r.out.find("\nEnd\n") != std::string::npos);
  const auto nl = run({"formulate", "--model", testing::model_path("tanh_1_8_1")});
  CHECK(nl.code == 2);
  CHECK(!nl.log.empty());
}

TEST_CASE("bo") {
  const auto r = run({"bo", "--function", "quadratic", "--budget", "12"});
  CHECK(r.code == 0);
  CHECK(std::abs(number_of(r.out, "best_x") - 0.3) <= 1e-2);
  CHECK(number_of(r.out, "evaluations") == 12);
  CHECK(run({"bo", "--function", "nope"}).code == 2);
  CHECK(run({"bo", "--budget", "2", "--initial", "3"}).code == 2);
}

TEST_CASE("repeated runs are byte-identical") {
  const std::vector<std::vector<std::string>> commands{
      {"evaluate", "--model", testing::model_path("gp_n10_2d"), "--points", write("pts.txt", "0 0\n0.5 -0.25\n")},
      {"solve", "--model", testing::model_path("tanh_2_4_1"), "--threads", "2"},
      {"solve", "--model", testing::model_path("crs_2d"), "--formulation", "fullspace"},
      {"compare", "--model", testing::model_path("relu_1_6_1")},
      {"formulate", "--model", testing::model_path("trees_2d")},
      {"bo", "--function", "forrester", "--budget", "6"},
  };
  for (const auto& c : commands) {
    const auto a = run(c);
    const auto b = run(c);
    INFO(c[0]);
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
  }
  const std::string p1 = (scratch() / "a.json").string();
  const std::string p2 = (scratch() / "b.json").string();
  run({"compare", "--model", testing::model_path("gp_n1"), "--out", p1});
  run({"compare", "--model", testing::model_path("gp_n1"), "--out", p2});
  CHECK(slurp(p1) == slurp(p2));
}
