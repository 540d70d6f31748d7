#include "doctest.h"

#include <cmath>
#include <sstream>

#include "json.hpp"

#include "hypoflow/cli.hpp"

using namespace hypoflow;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string data(const std::string& name) { return std::string(HYPOFLOW_TEST_DATA) + "/" + name; }

}  // namespace

TEST_CASE("spectrum of the OU model") {
  const Run r = run({"spectrum", "--model", "quadratic", "--m", "1", "--gamma", "1", "--nx", "16", "--nv", "16"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(std::abs(j["gap"].get<double>() - 0.5) < 1e-6);
  CHECK(j["kernel_dim"] == 1);
  CHECK(j["relaxation_time"].get<double>() >= j["relaxation_lower_bound"].get<double>());
}

TEST_CASE("rate-scan CSV peaks at critical damping") {
  const Run r = run({"rate-scan", "--model", "quadratic", "--m", "0.01"});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("gamma,spectral_gap", 0) == 0);
  double best_gamma = 0.0, best_gap = -1.0;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string g, gap;
    std::getline(row, g, ',');
    std::getline(row, gap, ',');
    if (std::stod(gap) > best_gap) {
      best_gap = std::stod(gap);
      best_gamma = std::stod(g);
    }
  }
  CHECK(best_gamma == doctest::Approx(0.2).epsilon(0.13));
  CHECK(best_gap == doctest::Approx(0.1).epsilon(0.01));
}

TEST_CASE("lift-check on the two-qubit model") {
  const Run r = run({"lift-check", "--model", "two-qubit"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["php_residual"].get<double>() < 1e-10);
  CHECK(j["kernel_dims"]["ker_ls"] == 4);
  CHECK(j["kernel_dims"]["ker_l"] == 2);
}

TEST_CASE("model catalog") {
  const Run r = run({"models"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  std::map<std::string, std::string> classes;
  for (const json& m : j["models"]) classes[m["name"]] = m["classification"];
  CHECK(classes.at("quadratic") == "hypocoercive");
  CHECK(classes.at("periodic-free") == "hypocoercive");
  CHECK(classes.at("thermal-qubit") == "coercive");
  CHECK(classes.at("two-qubit") == "hypocoercive");
}

TEST_CASE("model files and config files") {
  const Run file_model = run({"lift-check", "--model", data("dephasing_pair.json")});
  REQUIRE(file_model.code == 0);
  CHECK(json::parse(file_model.out)["kernel_dims"]["ker_l"] == 2);

  const Run from_config = run({"spectrum", "--config", data("spectrum.toml")});
  REQUIRE(from_config.code == 0);
  // gamma = 3 > 2: overdamped branch, gap (3 - sqrt 5) / 2
  CHECK(json::parse(from_config.out)["gap"].get<double>() == doctest::Approx((3.0 - std::sqrt(5.0)) / 2.0).epsilon(1e-8));

  const Run overridden = run({"spectrum", "--config", data("spectrum.toml"), "--gamma", "1"});
  REQUIRE(overridden.code == 0);
  CHECK(json::parse(overridden.out)["gap"].get<double>() == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("configuration errors exit with code 2 and error JSON") {
  for (const std::vector<std::string>& args :
       {std::vector<std::string>{"spectrum", "--config", data("bad_key.toml")},
        std::vector<std::string>{"spectrum", "--model", "no-such-model"},
        std::vector<std::string>{"spectrum", "--gamma", "fast"},
        std::vector<std::string>{"spectrum", "--tol", "-1"},
        std::vector<std::string>{"spectrum", "--unknown-flag", "1"},
        std::vector<std::string>{"lift-check", "--format", "csv"},
        std::vector<std::string>{}}) {
    const Run r = run(args);
    CHECK(r.code == 2);
    CHECK(json::parse(r.err)["error"]["kind"] == "config");
  }
}

TEST_CASE("numerical failures exit with code 3") {
  // the thermal qubit has no overdamped gap to build a flow-Poincare fit on
  const Run r = run({"flow-poincare", "--model", "thermal-qubit"});
  CHECK(r.code == 3);
  CHECK(json::parse(r.err)["error"]["kind"] == "numerical");
}

TEST_CASE("identical inputs give byte-identical reports") {
  const std::vector<std::string> args = {"simulate", "--model", "quadratic", "--paths", "500", "--steps", "100",
                                         "--seed", "9", "--format", "json"};
  const Run a = run(args), b = run(args);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
}

TEST_CASE("formulas and pretty output") {
  const Run r = run({"formulas", "--kind", "langevin", "--m", "4", "--gamma", "2"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["rate"].get<double>() == doctest::Approx(0.5));
  const Run p = run({"formulas", "--kind", "quantum", "--pretty"});
  REQUIRE(p.code == 0);
  CHECK(p.out.find("optimal_gamma") != std::string::npos);
}
