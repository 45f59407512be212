#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "iclv/choice_kernel.hpp"
#include "iclv/draws.hpp"
#include "iclv/error.hpp"
#include "iclv/estimator.hpp"
#include "iclv/latent_kernel.hpp"
#include "iclv/likelihood.hpp"
#include "iclv/normal.hpp"
#include "iclv/report.hpp"
#include "iclv/simulator.hpp"

#ifdef ICLV_HAVE_BOOST
#include <boost/math/distributions/normal.hpp>
#endif

using namespace iclv;

namespace {

// Radical inverse written out digit by digit.
double radical_inverse(int base, std::size_t i) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % static_cast<std::size_t>(base));
    i /= static_cast<std::size_t>(base);
  }
  return r;
}

ParameterVector with_values(const ModelSpec& spec, const std::vector<double>& theta) {
  ParameterVector p = spec.parameters;
  p.set_values(theta);
  return p;
}

}  // namespace

TEST_CASE("Halton sequence examples") {
  const auto h = halton_sequence(2, 4, 0);
  CHECK(h == std::vector<double>{0.5, 0.25, 0.75, 0.125});
  const auto h3 = halton_sequence(3, 200, 10);
  for (std::size_t i = 0; i < h3.size(); ++i) {
    CHECK(h3[i] == doctest::Approx(radical_inverse(3, i + 11)).epsilon(1e-15));
    CHECK(h3[i] > 0.0);
    CHECK(h3[i] < 1.0);
  }
  const auto big = halton_sequence(5, 10000, 10);
  CHECK(std::fabs(std::accumulate(big.begin(), big.end(), 0.0) / 1e4 - 0.5) < 0.01);
  CHECK_THROWS(halton_sequence(4, 10, 0));
}

TEST_CASE("inverse normal CDF") {
  CHECK(inv_normal_cdf(0.5) == 0.0);
  CHECK(std::fabs(inv_normal_cdf(0.975) - 1.959964) < 1e-6);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-12.0, 0.0);
  for (int i = 0; i < 2000; ++i) {
    const double p = std::pow(10.0, u(rng));
#ifdef ICLV_HAVE_BOOST
    boost::math::normal_distribution<double> N;
    CHECK(std::fabs(inv_normal_cdf(p) - boost::math::quantile(N, p)) < 1e-9);
#endif
    const double x = inv_normal_cdf(p);
    CHECK(std::fabs(normal_cdf(x) - p) <= 1e-9 * std::max(p, 1e-3));
  }
  // Symmetry on points where 1 - p is exact.
  for (int k = 1; k < 1024; ++k) {
    const double p = k / 1024.0;
    CHECK(std::fabs(inv_normal_cdf(p) + inv_normal_cdf(1.0 - p)) <= 1e-12);
  }
  CHECK_THROWS(inv_normal_cdf(0.0));
  CHECK_THROWS(inv_normal_cdf(1.0));
}

TEST_CASE("fit statistics") {
  const auto same = fit_stats(-300.0, -300.0, 5, 100);
  CHECK(same.rho2 == 0.0);
  const auto a = fit_stats(-5000.0, -10000.0, 10, 2204);
  CHECK(a.rho2 == doctest::Approx(0.5));
  CHECK(a.adj_rho2 == doctest::Approx(0.499));
  const auto b = fit_stats(-100.0, -400.0, 10, 1000);
  CHECK(std::fabs(b.bic - (200.0 + 10.0 * std::log(1000.0))) < 1e-12);
  CHECK(std::fabs(b.bic - 269.078) < 1e-3);
  CHECK_THROWS(fit_stats(-1.0, 0.0, 1, 10));
}

TEST_CASE("vacuous latents: simulated LL is choice LL plus a draw-free constant") {
  auto cfg = testutil::small_truth_config(true, 80, 3);
  const auto ds = simulate_dataset(cfg);
  auto theta = truth_vector(cfg);
  ParameterVector p = with_values(cfg.spec, theta);
  p.set("lambda.attitude", 0.0);
  for (const char* s : {"I1", "I2", "I3"}) p.set(loading_name(s), 0.0);
  DrawPlan one = cfg.spec.draws, many = cfg.spec.draws;
  one.draws = 1;
  many.draws = 100;
  const double l1 = simulated_loglik(cfg.spec, p, ds, one);
  const double l100 = simulated_loglik(cfg.spec, p, ds, many);
  CHECK(std::fabs(l1 - l100) <= 1e-10);

  const CompiledModel model(cfg.spec);
  const auto ms = model.measurement(p.values());
  double indicators = 0.0;
  const std::vector<double> a = {0.0};
  for (const auto& r : ds.respondents) indicators += indicator_loglik(ms, r.indicators, a);
  std::vector<std::vector<double>> lat(ds.respondents.size(), std::vector<double>{0.0});
  CHECK(l1 == doctest::Approx(choice_loglik(cfg.spec.utility, p, ds, lat) + indicators).epsilon(1e-12));
}

TEST_CASE("degenerate disturbance reproduces the deterministic joint likelihood") {
  auto cfg = testutil::small_truth_config(true, 60, 4);
  const auto ds = simulate_dataset(cfg);
  ParameterVector p = with_values(cfg.spec, truth_vector(cfg));
  p.set(sigma_name("attitude"), 1e-13);
  DrawPlan plan = cfg.spec.draws;
  plan.draws = 1;
  const double sim = simulated_loglik(cfg.spec, p, ds, plan);

  const double beta = p.value("beta.attitude.male");
  const CompiledModel model(cfg.spec);
  const auto ms = model.measurement(p.values());
  double expected = 0.0;
  for (const auto& r : ds.respondents) {
    const std::vector<double> a = {beta * r.sociodemographics[0]};
    expected += indicator_loglik(ms, r.indicators, a);
    for (const auto& t : r.tasks) {
      const auto v = systematic_utility(cfg.spec.utility, p, t, r.sociodemographics, a);
      expected += std::log(logit_probabilities(v, t.availability)[static_cast<std::size_t>(t.chosen)]);
    }
  }
  CHECK(sim == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("simulated gradient matches finite differences with fixed draws") {
  auto cfg = testutil::small_truth_config(true, 50, 5);
  const auto ds = simulate_dataset(cfg);
  DrawPlan plan = cfg.spec.draws;
  plan.draws = 30;
  for (auto unit : {IntegrationUnit::Respondent, IntegrationUnit::Task}) {
    plan.unit = unit;
    const SimulatedLikelihood sl(cfg.spec, ds, plan);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd(0.0, 0.2);
    for (int rep = 0; rep < 10; ++rep) {
      auto theta = truth_vector(cfg);
      for (auto i : cfg.spec.parameters.free_indices()) theta[i] += nd(rng);
      std::vector<double> g(theta.size());
      sl.value_and_gradient(theta, g);
      double num = 0.0, den = 0.0;
      for (auto i : cfg.spec.parameters.free_indices()) {
        const double h = 1e-5 * std::max(1.0, std::fabs(theta[i]));
        auto up = theta, down = theta;
        up[i] += h;
        down[i] -= h;
        const double fd = (sl.value(up) - sl.value(down)) / (2 * h);
        num += (g[i] - fd) * (g[i] - fd);
        den += fd * fd;
      }
      CHECK(std::sqrt(num / den) < 1e-5);
    }
  }
}

TEST_CASE("pseudo-random MSL noise shrinks with more draws") {
  auto cfg = testutil::small_truth_config(true, 200, 6);
  const auto ds = simulate_dataset(cfg);
  const auto p = with_values(cfg.spec, truth_vector(cfg));
  std::vector<double> a, b;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    DrawPlan plan = cfg.spec.draws;
    plan.sequence = DrawSequence::PseudoRandom;
    plan.seed = seed;
    plan.draws = 250;
    a.push_back(simulated_loglik(cfg.spec, p, ds, plan));
    plan.draws = 500;
    b.push_back(simulated_loglik(cfg.spec, p, ds, plan));
  }
  auto sd = [](const std::vector<double>& x) {
    const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(x.size() - 1));
  };
  const double ratio = sd(a) / sd(b);
  CHECK(ratio > 1.0);
  CHECK(ratio < 2.2);
}

TEST_CASE("MNL estimation: monotone ascent, convergence, and t = estimate / SE") {
  auto cfg = testutil::small_truth_config(false, 300, 7);
  const auto ds = simulate_dataset(cfg);
  const auto r = estimate(cfg.spec, ds);
  CHECK(r.converged);
  for (std::size_t i = 1; i < r.ll_history.size(); ++i) CHECK(r.ll_history[i] >= r.ll_history[i - 1]);
  for (std::size_t i = 0; i < r.params.size(); ++i) {
    if (r.params[i].fixed) continue;
    CHECK(r.std_errors[i] > 0.0);
    CHECK(r.t_stats[i] == doctest::Approx(r.params[i].value / r.std_errors[i]));
  }
  const auto fs = fit_stats(r.ll_final, r.ll_null, r.n_free, r.n_observations);
  CHECK(r.bic == doctest::Approx(fs.bic));
  CHECK(r.bic == doctest::Approx(-2 * r.ll_final + 5 * std::log(1200.0)));
  CHECK(r.n_observations == 1200);
  CHECK(r.ll_null == doctest::Approx(-1200 * std::log(3.0)));
}

TEST_CASE("BIC observation count follows the selected convention") {
  auto cfg = testutil::small_truth_config(true, 100, 8);
  const auto ds = simulate_dataset(cfg);
  DrawPlan plan = cfg.spec.draws;
  plan.draws = 20;
  OptimizerOptions opt = cfg.spec.optimizer;
  opt.max_iterations = 3;
  const auto tasks = estimate(cfg.spec, ds, plan, opt);
  opt.bic_observations = BicObservations::TasksAndIndicators;
  const auto both = estimate(cfg.spec, ds, plan, opt);
  CHECK(tasks.n_observations == 400);
  CHECK(both.n_observations == 700);
}

TEST_CASE("non-convergence is reported, not thrown") {
  auto cfg = testutil::small_truth_config(false, 100, 9);
  const auto ds = simulate_dataset(cfg);
  OptimizerOptions opt = cfg.spec.optimizer;
  opt.max_iterations = 1;
  const auto r = estimate(cfg.spec, ds, cfg.spec.draws, opt);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 1);
  CHECK(!r.message.empty());
}

TEST_CASE("unidentified coefficient is reported as singular") {
  auto cfg = testutil::small_truth_config(false, 100, 10);
  auto ds = simulate_dataset(cfg);
  for (auto& r : ds.respondents) r.sociodemographics[0] = 0.0;  // male never varies
  const auto r = estimate(cfg.spec, ds);
  REQUIRE(!r.singular_parameters.empty());
  CHECK(std::find(r.singular_parameters.begin(), r.singular_parameters.end(), "beta.male.car") !=
        r.singular_parameters.end());
}

TEST_CASE("estimation is reproducible and thread invariant") {
  auto cfg = testutil::small_truth_config(true, 80, 11);
  const auto ds = simulate_dataset(cfg);
  DrawPlan plan = cfg.spec.draws;
  plan.draws = 15;
  OptimizerOptions o1 = cfg.spec.optimizer, o3 = o1;
  o1.threads = 1;
  o3.threads = 3;
  o1.robust = o3.robust = true;
  const auto a = results_to_text(estimate(cfg.spec, ds, plan, o1));
  CHECK(a == results_to_text(estimate(cfg.spec, ds, plan, o3)));
  CHECK(a == results_to_text(estimate(cfg.spec, ds, plan, o1)));
}

TEST_CASE("switched-off ICLV reproduces the MNL fit") {
  auto cfg = testutil::small_truth_config(true, 200, 12);
  const auto ds = simulate_dataset(cfg);
  auto mnl = testutil::small_spec(false);
  mnl.indicator_names = ds.indicator_names;
  const auto off = with_latents_switched_off(cfg.spec);
  DrawPlan plan = off.draws;
  plan.draws = 10;
  const auto a = estimate(mnl, ds);
  const auto b = estimate(off, ds, plan, off.optimizer);
  CHECK(std::fabs(a.ll_final - b.ll_final) < 1e-4);
  for (const auto& p : a.params.items()) CHECK(b.params.value(p.name) == doctest::Approx(p.value).epsilon(1e-3));
}

TEST_CASE("starting values: constants from log shares, thresholds from marginals") {
  auto cfg = testutil::small_truth_config(true, 300, 13);
  const auto ds = simulate_dataset(cfg);
  const auto p = starting_values(cfg.spec, ds);
  // Counts smoothed by one half; thresholds scaled by sqrt(1 + loading^2) for the start loading of 1.
  double car = 0.5, bus = 0.5;
  for (const auto& r : ds.respondents)
    for (const auto& t : r.tasks) {
      car += t.chosen == 0;
      bus += t.chosen == 2;
    }
  CHECK(p.value("asc.car") == doctest::Approx(std::log(car / bus)).epsilon(1e-14));
  CHECK(p.value("beta.time") == 0.0);
  double first = 0.5;
  for (const auto& r : ds.respondents) first += r.indicators[0] == 1;
  const double share = first / (static_cast<double>(ds.respondents.size()) + 2.5);
  CHECK(p.value(threshold_name("I1", 1)) == doctest::Approx(std::sqrt(2.0) * inv_normal_cdf(share)).epsilon(1e-12));
}

TEST_CASE("empty Likert categories fix the bounding threshold and are noted") {
  auto cfg = testutil::small_truth_config(true, 100, 14);
  auto ds = simulate_dataset(cfg);
  for (auto& r : ds.respondents)
    if (r.indicators[1] == 1) r.indicators[1] = 2;
  ParameterVector p = starting_values(cfg.spec, ds);
  std::vector<std::string> redefined;
  const auto notes = fix_empty_categories(cfg.spec, ds, p, &redefined);
  CHECK(notes.size() == 1);
  CHECK(p.at(threshold_name("I2", 1)).fixed);
  CHECK(redefined == std::vector<std::string>{threshold_name("I2", 2)});
}

TEST_CASE("MNL recovery: coverage of truth by estimate +- 2 SE") {
  auto cfg = table6_truth_config(false, 7);
  cfg.seed = 2718;
  const auto rep = recovery_study(cfg, 50, cfg.spec.draws, cfg.spec.optimizer);
  CHECK(rep.failures == 0);
  CHECK(rep.mean_coverage() >= 0.90);
}

TEST_CASE("zero-coefficient truth is recovered without bias") {
  auto cfg = testutil::small_truth_config(false, 200, 15);
  cfg.truth.set("beta.male.car", 0.0);
  const auto rep = recovery_study(cfg, 30, cfg.spec.draws, cfg.spec.optimizer);
  const auto it = std::find_if(rep.parameters.begin(), rep.parameters.end(),
                               [](const auto& p) { return p.name == "beta.male.car"; });
  REQUIRE(it != rep.parameters.end());
  CHECK(std::fabs(it->mean_estimate) <= 2.0 * it->rmse / std::sqrt(30.0));
}
