#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "iclv/cli.hpp"
#include "iclv/error.hpp"
#include "iclv/report.hpp"

using namespace iclv;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct Cli {
  std::ostringstream out, err;
  int operator()(std::vector<std::string> args) {
    out.str("");
    err.str("");
    return run(args, out, err);
  }
};

}  // namespace

TEST_CASE("model spec: parse, render, parse again") {
  const auto spec = testutil::small_spec(true);
  CHECK(spec.parameters.contains("lambda.attitude"));
  CHECK(spec.parameters.contains(loading_name("I2")));
  CHECK(spec.parameters.contains(threshold_name("I3", 4)));
  CHECK(spec.parameters.at(sigma_name("attitude")).fixed);
  const auto again = parse_model_spec(render_model_spec(spec));
  CHECK(render_model_spec(again) == render_model_spec(spec));
}

TEST_CASE("model spec errors carry line numbers") {
  auto text = testutil::small_spec_text(false);
  text += "[bogus]\n";
  try {
    parse_model_spec(text);
    FAIL("expected an error");
  } catch (const SpecError& e) {
    CHECK(e.line() > 0);
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_model_spec("[model]\nname = x\n[alternatives]\na\nb\n"), SpecError);
}

TEST_CASE("results file round trip") {
  EstimationResult r;
  r.model_name = "m";
  r.params.add("asc.car", ParamRole::Asc, 0.123456789012345);
  r.params.add("beta.time", ParamRole::UtilityCoefficient, -0.05, false);
  r.params.add("asc.bus", ParamRole::Asc, 0.0, true);
  r.std_errors = {0.01, 0.002, std::numeric_limits<double>::quiet_NaN()};
  r.t_stats = {12.3456789, -25.0, std::numeric_limits<double>::quiet_NaN()};
  r.ll_history = {-10.0, -9.5};
  r.notes = {"a note", "another"};
  r.converged = true;
  const auto text = results_to_text(r);
  CHECK(results_to_text(parse_results(text)) == text);
}

TEST_CASE("significance stars and estimation table layout") {
  CHECK(significance_stars(9.70) == "***");
  CHECK(significance_stars(-2.12) == "**");
  CHECK(significance_stars(1.69) == "*");
  CHECK(significance_stars(1.62).empty());
  EstimationResult r;
  r.model_name = "ICLV-MNL";
  r.params.add("asc.walk", ParamRole::Asc, 2.32);
  r.params.add("lambda.tangibles", ParamRole::LatentCoefficient, 0.25);
  r.std_errors = {0.24, 0.067};
  r.t_stats = {9.70, 3.72};
  r.n_observations = 4408;
  r.rho2 = 0.3622;
  r.adj_rho2 = 0.3602;
  r.bic = 10284.56;
  const auto table = render_estimation_table({r});
  for (const char* s : {"Coef.", "t-stat", "Latent variables:", "Model summary:", "Rho-squared", "Adj.Rho-squared",
                        "0.3602", "10284.56", "4408", "2.320***", "0.250***"})
    CHECK(table.find(s) != std::string::npos);
}

TEST_CASE("CLI pipeline: simulate, estimate, effects, report") {
  testutil::TempDir dir;
  Cli cli;
  const auto d = dir.file("sim");
  REQUIRE(cli({"-q", "simulate", "--preset", "table6-mnl", "-o", d, "--respondents", "150", "--seed", "3"}) == kExitOk);
  const auto spec = d + "/spec.txt";
  const auto res = d + "/results.txt";
  REQUIRE(cli({"-q", "estimate", "--spec", spec, "-o", res}) == kExitOk);
  CHECK(cli.out.str().find("Model summary:") != std::string::npos);
  const auto first = slurp(res);
  REQUIRE(cli({"-q", "estimate", "--spec", spec, "-o", res, "--format", "none"}) == kExitOk);
  CHECK(slurp(res) == first);

  REQUIRE(cli({"-q", "effects", "--spec", spec, "--results", res, "--variable", "cost", "--alternative",
               "pickup_on_way", "--format", "csv"}) == kExitOk);
  CHECK(cli.out.str().rfind("variable,alternative", 0) == 0);
  CHECK(cli.out.str().find("cost,pickup_on_way") != std::string::npos);

  REQUIRE(cli({"-q", "report", res, "--format", "text"}) == kExitOk);
  for (const char* s : {"Coef.", "t-stat", "Rho-squared", "Adj.Rho-squared", "BIC", "Number of observations"})
    CHECK(cli.out.str().find(s) != std::string::npos);

  REQUIRE(cli({"-q", "summarize", "--spec", spec}) == kExitOk);
  CHECK(!cli.out.str().empty());
}

TEST_CASE("CLI: design, psych and non-convergence exit code") {
  testutil::TempDir dir;
  Cli cli;
  REQUIRE(cli({"-q", "design", "--runs", "32", "-o", dir.file("design.csv")}) == kExitOk);
  CHECK(!slurp(dir.file("design.csv")).empty());
  const auto d = dir.file("sim");
  REQUIRE(cli({"-q", "simulate", "-o", d, "--respondents", "200"}) == kExitOk);
  REQUIRE(cli({"-q", "psych", "--spec", d + "/spec.txt"}) == kExitOk);
  CHECK(cli.out.str().find("KMO") != std::string::npos);
  CHECK(cli({"-q", "estimate", "--spec", d + "/spec_mnl.txt", "-o", dir.file("r.txt"), "--max-iterations", "1"}) ==
        kExitNotConverged);
  CHECK(slurp(dir.file("r.txt")).find("converged = false") != std::string::npos);
}

TEST_CASE("CLI validation errors exit with 1 and leave inputs untouched") {
  testutil::TempDir dir;
  Cli cli;
  CHECK(cli({"estimate", "--spec", dir.file("missing.txt"), "-o", dir.file("r.txt")}) == kExitValidation);
  CHECK(cli({"--no-such-flag"}) == kExitValidation);
  CHECK(cli({"frobnicate"}) == kExitValidation);
  std::ofstream(dir.file("bad.txt")) << "[model]\nname = x\n[nonsense]\n";
  const auto before = slurp(dir.file("bad.txt"));
  CHECK(cli({"estimate", "--spec", dir.file("bad.txt"), "-o", dir.file("r.txt")}) == kExitValidation);
  CHECK(cli.err.str().find("line") != std::string::npos);
  CHECK(slurp(dir.file("bad.txt")) == before);
}
