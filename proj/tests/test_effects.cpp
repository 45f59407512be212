#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "iclv/effects.hpp"
#include "iclv/error.hpp"
#include "iclv/simulator.hpp"

using namespace iclv;

namespace {

FittedModel fitted(const ModelSpec& spec, const std::vector<std::pair<std::string, double>>& values, int draws = 20) {
  FittedModel fm{spec, spec.parameters.values(), spec.draws};
  for (const auto& [name, v] : values) fm.theta[spec.parameters.index(name)] = v;
  fm.plan.draws = draws;
  return fm;
}

// Average over tasks of P_alt(x = 1) - P_alt(x = 0) with two full probability passes.
double two_pass(const FittedModel& fm, const ChoiceDataset& ds, int socio, int alt) {
  ChoiceDataset one = ds, zero = ds;
  for (auto& r : one.respondents) r.sociodemographics[static_cast<std::size_t>(socio)] = 1.0;
  for (auto& r : zero.respondents) r.sociodemographics[static_cast<std::size_t>(socio)] = 0.0;
  const auto p1 = simulated_probabilities(fm, one), p0 = simulated_probabilities(fm, zero);
  double s = 0.0;
  for (std::size_t t = 0; t < p1.size(); ++t) s += p1[t][static_cast<std::size_t>(alt)] - p0[t][static_cast<std::size_t>(alt)];
  return s / static_cast<double>(p1.size());
}

}  // namespace

TEST_CASE("zero coefficient gives zero elasticity and marginal effect") {
  const auto spec = testutil::small_spec(false);
  const auto ds = testutil::small_dataset(20, 2);
  const auto fm = fitted(spec, {{"asc.car", 0.3}});
  CHECK(*elasticity(fm, ds, "time", "car").elasticity == 0.0);
  CHECK(marginal_effect(fm, ds, "time", "train").marginal_effect == 0.0);
  CHECK(marginal_effect(fm, ds, "male", "car").marginal_effect == 0.0);
}

TEST_CASE("single observation point elasticity") {
  auto ds = testutil::small_dataset(1, 1);
  auto& t = ds.respondents[0].tasks[0];
  t.availability = {1, 0, 1};
  t.chosen = 0;
  t.attribute(0, 0) = 2.0;
  t.attribute(2, 0) = 2.0;
  const auto spec = testutil::small_spec(false);
  const auto fm = fitted(spec, {{"beta.time", -0.68}});
  const auto e = elasticity(fm, ds, "time", "car");
  CHECK(*e.elasticity == doctest::Approx(-0.68 * 2.0 * (1.0 - 0.5)));
  CHECK(e.marginal_effect == doctest::Approx(-0.68 * 0.25));
  CHECK(e.observations == 1);
}

TEST_CASE("analytic and finite-difference elasticities agree on random models") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> nd;
  const auto mnl = testutil::small_spec(false), iclv = testutil::small_spec(true);
  EffectOptions fd;
  fd.method = EffectMethod::FiniteDifference;
  for (int rep = 0; rep < 100; ++rep) {
    const auto ds = testutil::small_dataset(15, 2, static_cast<std::uint64_t>(100 + rep));
    const bool latent = rep % 2 == 1;
    const auto& spec = latent ? iclv : mnl;
    std::vector<std::pair<std::string, double>> v = {{"asc.car", nd(rng)},
                                                     {"asc.train", nd(rng)},
                                                     {"beta.time", -0.05 + 0.02 * nd(rng)},
                                                     {"beta.cost", -0.3 + 0.2 * nd(rng)},
                                                     {"beta.male.car", nd(rng)}};
    if (latent) {
      v.push_back({"lambda.attitude", nd(rng)});
      v.push_back({"beta.attitude.male", nd(rng)});
    }
    const auto fm = fitted(spec, v, 10);
    for (const char* alt : {"car", "train", "bus"}) {
      for (const char* var : {"time", "cost"}) {
        const double a = *elasticity(fm, ds, var, alt).elasticity;
        const double f = *elasticity(fm, ds, var, alt, fd).elasticity;
        CHECK(std::fabs(a - f) <= 0.005 * std::fabs(f));
      }
      const double ma = marginal_effect(fm, ds, "time", alt).marginal_effect;
      const double mf = marginal_effect(fm, ds, "time", alt, fd).marginal_effect;
      CHECK(std::fabs(ma - mf) <= 1e-9 + 0.005 * std::fabs(mf));
    }
  }
}

TEST_CASE("dummy marginal effect equals the two-pass probability difference") {
  const auto spec = testutil::small_spec(true);
  const auto ds = testutil::small_dataset(40, 3, 77);
  const auto fm = fitted(spec, {{"asc.car", 0.2}, {"beta.male.car", 0.7}, {"lambda.attitude", 0.9},
                                {"beta.attitude.male", -0.6}, {"beta.time", -0.04}});
  for (int alt = 0; alt < 3; ++alt) {
    const auto me = marginal_effect(fm, ds, "male", ds.alternatives[static_cast<std::size_t>(alt)].label);
    CHECK(me.dummy);
    CHECK_FALSE(me.elasticity.has_value());
    CHECK(std::fabs(me.marginal_effect - two_pass(fm, ds, 0, alt)) <= 1e-10);
  }
  // A dummy with a zero coefficient everywhere does nothing.
  const auto quiet = fitted(spec, {{"asc.car", 0.2}});
  CHECK(std::fabs(marginal_effect(quiet, ds, "male", "car").marginal_effect) <= 1e-15);
}

TEST_CASE("probability changes sum to zero across alternatives") {
  const auto spec = testutil::small_spec(true);
  auto ds = testutil::small_dataset(30, 2, 5);
  const auto fm = fitted(spec, {{"asc.car", 0.5}, {"beta.cost", -0.4}, {"lambda.attitude", 0.3}});
  const auto p0 = simulated_probabilities(fm, ds);
  for (auto& r : ds.respondents)
    for (auto& t : r.tasks) t.attribute(1, 1) *= 1.01;
  const auto p1 = simulated_probabilities(fm, ds);
  for (std::size_t t = 0; t < p0.size(); ++t) {
    double d = 0.0;
    for (std::size_t j = 0; j < 3; ++j) d += p1[t][j] - p0[t][j];
    CHECK(std::fabs(d) <= 1e-10);
  }
}

TEST_CASE("own elasticity takes the sign of the coefficient for positive attributes") {
  const auto spec = testutil::small_spec(false);
  const auto ds = testutil::small_dataset(25, 2, 9);
  for (double b : {-0.2, 0.15}) {
    const auto fm = fitted(spec, {{"beta.cost", b}, {"asc.train", 0.4}});
    for (const char* alt : {"car", "train", "bus"}) {
      const auto e = elasticity(fm, ds, "cost", alt);
      CHECK((*e.elasticity > 0) == (b > 0));
      CHECK((e.marginal_effect > 0) == (b > 0));
    }
  }
}

TEST_CASE("averaging conventions are labelled and both available") {
  const auto spec = testutil::small_spec(false);
  const auto ds = testutil::small_dataset(25, 2, 9);
  const auto fm = fitted(spec, {{"beta.cost", -0.5}, {"asc.car", 1.0}});
  EffectOptions means;
  means.averaging = Averaging::AtMeans;
  const auto a = elasticity(fm, ds, "cost", "car");
  const auto m = elasticity(fm, ds, "cost", "car", means);
  CHECK(a.averaging == Averaging::SampleAverage);
  CHECK(m.averaging == Averaging::AtMeans);
  CHECK(to_string(m.averaging) == "at_means");
  CHECK(to_string(a.method) == "analytic");
  const auto csv = effects_to_csv({a, m});
  CHECK(csv.rfind("variable,alternative,dummy,marginal_effect,elasticity,method,averaging,observations\n", 0) == 0);
  CHECK(csv.find("sample_average") != std::string::npos);
  CHECK(csv.find("at_means") != std::string::npos);
}

TEST_CASE("effect errors") {
  const auto spec = testutil::small_spec(false);
  const auto ds = testutil::small_dataset(10, 2);
  const auto fm = fitted(spec, {{"beta.male.car", 0.4}});
  CHECK_THROWS_WITH_AS(elasticity(fm, ds, "male", "car"), doctest::Contains("0/1"), SpecError);
  CHECK_THROWS_WITH_AS(marginal_effect(fm, ds, "age", "car"), doctest::Contains("does not enter"), SpecError);
  // A socio-demographic term in one alternative moves the others through the denominator.
  CHECK(marginal_effect(fm, ds, "male", "train").marginal_effect < 0.0);
  CHECK_THROWS_AS(marginal_effect(fm, ds, "speed", "car"), SpecError);
  CHECK_THROWS_AS(marginal_effect(fm, ds, "time", "plane"), SpecError);
}

TEST_CASE("effects table covers attributes and socio-demographic terms") {
  const auto spec = testutil::small_spec(false);
  const auto ds = testutil::small_dataset(10, 2);
  const auto fm = fitted(spec, {{"beta.male.car", 0.4}, {"beta.time", -0.1}});
  const auto table = effects_table(fm, ds);
  int time_rows = 0, male_rows = 0;
  for (const auto& e : table) {
    time_rows += e.variable == "time";
    male_rows += e.variable == "male";
  }
  CHECK(time_rows == 3);
  CHECK(male_rows == 1);
  CHECK(render_effects(table).find("male") != std::string::npos);
}
