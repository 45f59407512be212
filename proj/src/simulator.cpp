#include "iclv/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>

#include "iclv/error.hpp"
#include "iclv/likelihood.hpp"
#include "iclv/normal.hpp"
#include "iclv/parallel.hpp"
#include "iclv/text.hpp"

namespace iclv {

std::vector<CategoricalMarginal> table3_marginals() {
  return {
      {"gender", {1, 0}, {46.82, 53.18}},
      {"age", {1, 0}, {0.18 + 20.33 + 57.35, 16.88 + 5.26 + 0.0}},
      {"education", {1, 0}, {1.09 + 4.54, 85.48 + 8.89}},
      {"income", {1, 0}, {8.89 + 15.25, 50.64 + 25.23}},
      {"bike_freq", {1, 2, 3, 4, 5, 6, 7}, {19.59, 26.95, 22.69, 6.81, 15.61, 1.45, 6.90}},
      {"bike_time", {1, 2, 3, 4, 5}, {7.44, 27.40, 42.10, 18.33, 4.72}},
  };
}

std::vector<std::string> dbs_attribute_names() { return {"weather", "commute", "access_time", "ride_time", "cost"}; }

void dbs_scenario(const ScenarioSet& design, std::size_t run, ChoiceTask& task) {
  const auto get = [&](const char* name) {
    const int a = design.attribute_index(name);
    if (a < 0) throw SpecError(std::string("design lacks attribute '") + name + "'");
    return design.level_value(run, static_cast<std::size_t>(a));
  };
  const double weather = get("weather");
  const double commute = get("commute");
  const double d = get("distance");
  const double way_walk = get("way_walk");
  const double detour_walk = get("detour_walk");
  const double bike_cost = get("bike_cost");

  constexpr double walk_speed = 80.0;  // m/min
  constexpr double bike_speed = 250.0;
  constexpr double bus_speed = 200.0;
  constexpr double car_speed = 400.0;
  const double congestion = weather > 0.5 ? 1.25 : 1.0;
  const double taxi_fare = 9.0;  // flag fall covers the whole range
  const double hailing_fare = (3.0 + 1.5 * d / 1000.0) * (weather > 0.5 ? 1.3 : 1.0);

  const double access[7] = {get("bike_wait"), way_walk, detour_walk, get("bus_wait"), get("taxi_wait"),
                            get("ride_hailing_wait"), 0.0};
  const double ride[7] = {d / bike_speed,
                          (d - walk_speed * way_walk) / bike_speed,
                          (d + walk_speed * detour_walk) / bike_speed,
                          congestion * d / bus_speed,
                          congestion * d / car_speed,
                          congestion * d / car_speed,
                          d / walk_speed};
  // Costs are differences from a reference fare: the standard 1.5 CNY bike
  // fare, the 2 CNY bus fare, and the taxi fare for ride-hailing.
  const double cost[7] = {bike_cost - 1.5, bike_cost - 1.5, bike_cost - 1.5, (d <= 1000.0 ? 1.0 : 2.0) - 2.0,
                          0.0, hailing_fare - taxi_fare, 0.0};

  constexpr std::size_t K = 5;
  task.num_attributes = K;
  task.attributes.assign(7 * K, 0.0);
  task.availability.assign(7, 1);
  for (int j = 0; j < 7; ++j) {
    task.attribute(j, 0) = weather;
    task.attribute(j, 1) = commute;
    task.attribute(j, 2) = access[j];
    task.attribute(j, 3) = ride[j];
    task.attribute(j, 4) = cost[j];
  }
}

std::vector<double> truth_vector(const TruthConfig& cfg) {
  std::vector<double> theta = cfg.spec.parameters.values();
  for (const auto& p : cfg.truth.items()) {
    if (!cfg.spec.parameters.contains(p.name)) throw SpecError("truth names unknown parameter '" + p.name + "'");
    theta[cfg.spec.parameters.index(p.name)] = p.value;
  }
  return theta;
}

void validate(const TruthConfig& cfg) {
  if (cfg.respondents == 0 || cfg.tasks_per_respondent == 0) throw SpecError("respondent and task counts must be positive");
  if (cfg.design.runs.empty()) throw SpecError("truth config has an empty design");
  validate(cfg.design);
  const auto theta = truth_vector(cfg);
  for (double v : theta) {
    if (!std::isfinite(v)) throw SpecError("truth parameters must be finite");
  }
  const CompiledModel model(cfg.spec);
  for (const auto& l : model.latents()) {
    if (!(theta[l.sigma] > 0.0)) throw SpecError("structural scale must be positive");
  }
  for (const auto& name : cfg.spec.sociodemographic_names) {
    const auto it = std::find_if(cfg.socio.begin(), cfg.socio.end(), [&](const auto& m) { return m.name == name; });
    if (it == cfg.socio.end()) throw SpecError("no sampling marginal for socio-demographic '" + name + "'");
    if (it->values.size() != it->probabilities.size() || it->values.empty()) {
      throw SpecError("marginal '" + name + "' is malformed");
    }
    for (double p : it->probabilities) {
      if (!(p >= 0.0)) throw SpecError("marginal '" + name + "' has a negative probability");
    }
  }
}

namespace {

double sample_marginal(const CategoricalMarginal& m, double u) {
  double total = 0.0;
  for (double p : m.probabilities) total += p;
  double cum = 0.0;
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    cum += m.probabilities[i] / total;
    if (u < cum) return m.values[i];
  }
  return m.values.back();
}

std::vector<std::size_t> runs_for(const TruthConfig& cfg, std::size_t respondent) {
  const auto T = cfg.tasks_per_respondent;
  const auto& d = cfg.design;
  std::vector<std::size_t> out;
  if (!d.blocks.empty() && d.blocks.front().size() == T) {
    for (int r : d.blocks[respondent % d.blocks.size()]) out.push_back(static_cast<std::size_t>(r));
  } else {
    for (std::size_t t = 0; t < T; ++t) out.push_back((respondent * T + t) % d.runs.size());
  }
  return out;
}

}  // namespace

ChoiceDataset simulate_dataset(const TruthConfig& cfg, int threads) {
  validate(cfg);
  const auto& spec = cfg.spec;
  const CompiledModel model(spec);
  const auto theta = truth_vector(cfg);
  const auto J = spec.alternatives.size();
  const auto L = model.num_latents();

  std::vector<const CategoricalMarginal*> marginals;
  for (const auto& name : spec.sociodemographic_names) {
    marginals.push_back(&*std::find_if(cfg.socio.begin(), cfg.socio.end(), [&](const auto& m) { return m.name == name; }));
  }

  ChoiceDataset ds;
  ds.alternatives = spec.alternatives;
  ds.attribute_names = spec.attribute_names;
  ds.sociodemographic_names = spec.sociodemographic_names;
  ds.indicator_names = spec.indicator_names;
  ds.likert_categories = spec.likert_categories;
  ds.respondents.resize(cfg.respondents);

  parallel_for(cfg.respondents, resolve_threads(threads), [&](std::size_t n) {
    std::mt19937_64 rng(derive_seed(cfg.seed, n));
    Respondent& resp = ds.respondents[n];
    resp.id = static_cast<int>(n + 1);
    for (const auto* m : marginals) resp.sociodemographics.push_back(sample_marginal(*m, uniform_open01(rng)));

    std::vector<double> xi(L), a(L);
    for (auto& x : xi) x = inv_normal_cdf(uniform_open01(rng));
    model.latent_values(theta, resp.sociodemographics, xi, a);

    resp.indicators.assign(spec.indicator_names.size(), 1);
    for (const auto& ind : model.indicators()) {
      std::vector<double> tau(ind.thresholds.size());
      model.thresholds(theta, ind, tau);
      const double index = theta[ind.intercept] + theta[ind.loading] * a[static_cast<std::size_t>(ind.latent)];
      const double u = uniform_open01(rng);
      int category = static_cast<int>(tau.size()) + 1;
      for (std::size_t k = 0; k < tau.size(); ++k) {
        if (u < normal_cdf(tau[k] - index)) {
          category = static_cast<int>(k) + 1;
          break;
        }
      }
      resp.indicators[static_cast<std::size_t>(ind.column)] = category;
    }

    std::vector<double> v(J);
    const auto runs = runs_for(cfg, n);
    for (std::size_t t = 0; t < runs.size(); ++t) {
      ChoiceTask task;
      task.respondent_id = resp.id;
      task.task_id = static_cast<int>(t + 1);
      cfg.scenario(cfg.design, runs[t], task);
      if (task.num_attributes != spec.attribute_names.size() || task.attributes.size() != J * task.num_attributes) {
        throw SpecError("scenario mapper produced attributes that do not match the spec");
      }
      systematic_utility(model.utility(), theta, task, resp.sociodemographics, a, v);
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < J; ++j) {
        const double u = -std::log(-std::log(uniform_open01(rng)));
        if (task.availability[j] && v[j] + u > best) {
          best = v[j] + u;
          task.chosen = static_cast<int>(j);
        }
      }
      if (task.chosen < 0) throw DataError("scenario leaves no alternative available");
      resp.tasks.push_back(std::move(task));
    }
  });
  validate(ds);
  return ds;
}

RecoveryReport recovery_study(const TruthConfig& cfg, std::size_t replications, const DrawPlan& plan,
                              const OptimizerOptions& options, const RecoveryProgress& progress) {
  if (replications == 0) throw SpecError("recovery study needs at least one replication");
  validate(cfg);
  const auto theta = truth_vector(cfg);
  const auto free = cfg.spec.parameters.free_indices();

  struct Outcome {
    bool ok = false;
    std::string error;
    std::vector<double> est, se;
  };
  std::vector<Outcome> outcomes(replications);
  const int threads = resolve_threads(options.threads);
  const bool outer = threads > 1 && replications > 1;
  OptimizerOptions inner = options;
  if (outer) inner.threads = 1;
  std::mutex progress_mutex;

  parallel_for(replications, outer ? threads : 1, [&](std::size_t r) {
    Outcome& out = outcomes[r];
    TruthConfig rep = cfg;
    rep.seed = derive_seed(cfg.seed, r);
    try {
      const auto ds = simulate_dataset(rep, inner.threads);
      const auto res = estimate(cfg.spec, ds, plan, inner);
      if (!res.converged) out.error = "not converged: " + res.message;
      else if (!res.singular_parameters.empty()) out.error = "singular Hessian";
      else {
        out.ok = true;
        for (auto i : free) {
          const auto& name = res.params[i].name;
          const bool redefined = std::find(res.redefined_parameters.begin(), res.redefined_parameters.end(), name) !=
                                 res.redefined_parameters.end();
          out.est.push_back(res.params[i].value);
          // NaN SE drops the pair: fixed here, or no longer comparable with the truth.
          out.se.push_back(redefined ? std::numeric_limits<double>::quiet_NaN() : res.std_errors[i]);
        }
      }
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(r, &res, out.error);
      }
    } catch (const std::exception& e) {
      out.error = e.what();
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(r, nullptr, out.error);
      }
    }
  });

  RecoveryReport rep;
  rep.replications = replications;
  for (std::size_t r = 0; r < replications; ++r) {
    if (!outcomes[r].ok) {
      ++rep.failures;
      rep.failure_messages.push_back("replication " + std::to_string(r) + ": " + outcomes[r].error);
    }
  }
  for (std::size_t k = 0; k < free.size(); ++k) {
    ParameterRecovery pr;
    pr.name = cfg.spec.parameters[free[k]].name;
    pr.truth = theta[free[k]];
    double sum = 0.0, sq = 0.0;
    std::size_t covered = 0, signs = 0;
    for (const auto& o : outcomes) {
      if (!o.ok || !std::isfinite(o.se[k])) continue;  // failed, or fixed in this replication
      ++pr.replications;
      const double e = o.est[k];
      sum += e;
      sq += (e - pr.truth) * (e - pr.truth);
      if (std::fabs(e - pr.truth) <= 2.0 * o.se[k]) ++covered;
      if ((e > 0.0 && pr.truth > 0.0) || (e < 0.0 && pr.truth < 0.0)) ++signs;
    }
    if (pr.replications) {
      const auto n = static_cast<double>(pr.replications);
      pr.mean_estimate = sum / n;
      pr.bias = pr.mean_estimate - pr.truth;
      pr.rmse = std::sqrt(sq / n);
      pr.coverage = static_cast<double>(covered) / n;
      pr.sign_agreement = pr.truth == 0.0 ? std::numeric_limits<double>::quiet_NaN() : static_cast<double>(signs) / n;
    }
    rep.covered_pairs += covered;
    rep.total_pairs += pr.replications;
    rep.parameters.push_back(pr);
  }
  return rep;
}

std::string render_recovery(const RecoveryReport& report) {
  std::ostringstream os;
  os << "replications: " << report.replications << " (failed " << report.failures << ")\n";
  os << "parameter,truth,mean,bias,rmse,coverage,sign_agreement\n";
  for (const auto& p : report.parameters) {
    os << p.name << ',' << text::fixed(p.truth, 4) << ',' << text::fixed(p.mean_estimate, 4) << ','
       << text::fixed(p.bias, 4) << ',' << text::fixed(p.rmse, 4) << ',' << text::fixed(p.coverage, 3) << ','
       << (std::isnan(p.sign_agreement) ? std::string("NA") : text::fixed(p.sign_agreement, 3)) << '\n';
  }
  os << "mean coverage: " << text::fixed(report.mean_coverage(), 4) << '\n';
  for (const auto& m : report.failure_messages) os << m << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Published seven-mode model.

namespace {

struct Coef {
  const char* name;
  const char* alternatives;
  const char* term;
  double value;
};

// Choice part of the ICLV-MNL column.
const Coef kChoiceTruth[] = {
    {"asc.wait_in_place", "wait_in_place", "asc", -0.73},
    {"asc.pickup_on_way", "pickup_on_way", "asc", -2.31},
    {"asc.pickup_on_detour", "pickup_on_detour", "asc", -5.98},
    {"asc.taxi", "taxi", "asc", -3.27},
    {"asc.ride_hailing", "ride_hailing", "asc", -8.90},
    {"asc.walk", "walk", "asc", 2.32},
    {"beta.education.wait_in_place", "wait_in_place", "socio education", 0.85},
    {"beta.income.pickup_on_way", "pickup_on_way", "socio income", 0.71},
    {"beta.gender.pickup_on_way", "pickup_on_way", "socio gender", 0.21},
    {"beta.gender.pickup_on_detour", "pickup_on_detour", "socio gender", -0.59},
    {"beta.bike_freq.wait_in_place", "wait_in_place", "socio bike_freq", 0.17},
    {"beta.bike_freq.pickup_on_way", "pickup_on_way", "socio bike_freq", 0.09},
    {"beta.bike_time.wait_in_place", "wait_in_place", "socio bike_time", 0.13},
    {"beta.bike_time.pickup_on_way", "pickup_on_way", "socio bike_time", 0.18},
    {"beta.bike_time.pickup_on_detour", "pickup_on_detour", "socio bike_time", 0.53},
    {"beta.commute.pickup_on_way", "pickup_on_way", "attr commute", 0.43},
    {"beta.commute.pickup_on_detour", "pickup_on_detour", "attr commute", -0.39},
    {"beta.weather.wait_in_place", "wait_in_place", "attr weather", -2.77},
    {"beta.weather.pickup_on_way", "pickup_on_way", "attr weather", -2.41},
    {"beta.weather.pickup_on_detour", "pickup_on_detour", "attr weather", -1.39},
    {"beta.weather.taxi", "taxi", "attr weather", 0.76},
    {"beta.weather.ride_hailing", "ride_hailing", "attr weather", 0.98},
    {"beta.weather.walk", "walk", "attr weather", -1.40},
    {"beta.access_time.wait_in_place", "wait_in_place", "attr access_time", -0.94},
    {"beta.access_time.pickup_on_way", "pickup_on_way", "attr access_time", -0.68},
    {"beta.access_time.taxi", "taxi", "attr access_time", -0.02},
    {"beta.access_time.bus", "bus", "attr access_time", -0.08},
    {"beta.access_time.ride_hailing", "ride_hailing", "attr access_time", -0.20},
    {"beta.ride_time.wait_in_place", "wait_in_place", "attr ride_time", 0.14},
    {"beta.ride_time.pickup_on_way", "pickup_on_way", "attr ride_time", 0.11},
    {"beta.ride_time.pickup_on_detour", "pickup_on_detour", "attr ride_time", 0.18},
    {"beta.ride_time.bus", "bus", "attr ride_time", 0.15},
    {"beta.ride_time.taxi", "taxi", "attr ride_time", 0.46},
    {"beta.ride_time.walk", "walk", "attr ride_time", -0.16},
    {"beta.cost.wait_in_place", "wait_in_place", "attr cost", -0.82},
    {"beta.cost.pickup_on_way", "pickup_on_way", "attr cost", -2.85},
    {"beta.cost.pickup_on_detour", "pickup_on_detour", "attr cost", -3.43},
    {"beta.cost.bus", "bus", "attr cost", -0.24},
    {"beta.cost.ride_hailing", "ride_hailing", "attr cost", -1.84},
};

struct LatentTruth {
  const char* name;
  double lambda;
  std::vector<const char*> indicators;
  std::vector<double> efa_loadings;
  std::vector<double> structural;  // gender, age, education, income
};

const std::vector<LatentTruth>& latent_truth() {
  static const std::vector<LatentTruth> t = {
      {"accessibility", 0.08, {"A1", "A2", "A3"}, {0.801, 0.691, 0.649}, {0.20, 0.30, -0.25, -0.15}},
      {"tangibles", 0.25, {"T1", "T2", "T3", "T4"}, {0.763, 0.702, 0.700, 0.616}, {0.15, 0.25, -0.30, 0.20}},
      {"social_benefit", 0.02, {"SB1", "SB2", "SB3"}, {0.785, 0.694, 0.580}, {-0.20, 0.30, -0.35, 0.10}},
  };
  return t;
}

// Response distributions (percent, categories 1..5).
const std::vector<std::pair<const char*, std::vector<double>>>& table4_distributions() {
  static const std::vector<std::pair<const char*, std::vector<double>>> t = {
      {"A1", {0.91, 6.90, 23.41, 44.64, 24.13}},  {"A2", {1.09, 4.72, 16.51, 52.45, 25.23}},
      {"A3", {1.27, 8.35, 23.95, 46.10, 20.33}},  {"T1", {4.36, 18.51, 28.67, 33.03, 15.43}},
      {"T2", {2.54, 9.62, 23.23, 43.56, 21.05}},  {"T3", {2.90, 17.97, 28.49, 36.12, 14.52}},
      {"T4", {1.81, 11.62, 21.77, 45.55, 19.24}}, {"SB1", {0.3, 1.17, 6.15, 34.38, 57.90}},
      {"SB2", {0.36, 0.91, 9.80, 44.10, 44.83}},  {"SB3", {0.544, 4.17, 15.06, 41.74, 38.48}},
  };
  return t;
}

}  // namespace

std::string table6_spec_text(bool latents) {
  std::ostringstream os;
  os << "[model]\nname = " << (latents ? "iclv_mnl" : "mnl") << "\n\n";
  os << "[alternatives]\n";
  for (const auto& a : dbs_alternatives()) os << a.label << (a.is_base ? " = base" : "") << '\n';
  os << "\n[data]\nchoices = choices.csv\nrespondents = respondents.csv\n";
  os << "attributes = " << text::join(dbs_attribute_names(), " ") << '\n';
  os << "sociodemographics = gender age education income bike_freq bike_time\n";
  if (latents) os << "indicators = A1 A2 A3 T1 T2 T3 T4 SB1 SB2 SB3\n";
  os << "\n[utility]\n";
  for (const auto& c : kChoiceTruth) os << c.name << " = " << c.alternatives << " : " << c.term << '\n';
  if (latents) {
    for (const auto& l : latent_truth()) {
      os << "lambda." << l.name << " = wait_in_place pickup_on_way pickup_on_detour : latent " << l.name << '\n';
    }
    for (const auto& l : latent_truth()) {
      os << "\n[latent " << l.name << "]\nindicators =";
      for (const char* s : l.indicators) os << ' ' << s;
      os << "\nregressors = gender age education income\n";
    }
  }
  os << "\n[draws]\ncount = 500\nsequence = halton\nskip = 10\nseed = 1\nunit = respondent\n";
  os << "\n[optimizer]\nmax_iterations = 1000\ngradient_tolerance = 1e-5\nrelative_tolerance = 1e-9\n"
        "hessian_step = 1e-4\nbic_observations = tasks\n";
  return os.str();
}

ModelSpec table6_spec(bool latents) { return parse_model_spec(table6_spec_text(latents)); }

ParameterVector table6_truth(const ModelSpec& spec) {
  ParameterVector truth;
  for (const auto& c : kChoiceTruth) truth.add(c.name, spec.parameters.at(c.name).role, c.value);
  if (!spec.has_latents()) return truth;

  const auto marg = table3_marginals();
  const char* regressors[] = {"gender", "age", "education", "income"};
  for (const auto& l : latent_truth()) {
    truth.add("lambda." + std::string(l.name), ParamRole::LatentCoefficient, l.lambda);
    double mean = 0.0, var = 1.0;
    for (std::size_t k = 0; k < 4; ++k) {
      const double b = l.structural[k];
      truth.add(structural_name(l.name, regressors[k]), ParamRole::StructuralCoefficient, b);
      const auto& m = *std::find_if(marg.begin(), marg.end(), [&](const auto& x) { return x.name == regressors[k]; });
      const double p = m.probabilities[0] / (m.probabilities[0] + m.probabilities[1]);
      mean += b * p;
      var += b * b * p * (1.0 - p);
    }
    for (std::size_t s = 0; s < l.indicators.size(); ++s) {
      const std::string ind = l.indicators[s];
      const double ell = l.efa_loadings[s];
      const double load = ell / std::sqrt(1.0 - ell * ell);
      truth.add(loading_name(ind), ParamRole::MeasurementLoading, load);
      const auto& dist = std::find_if(table4_distributions().begin(), table4_distributions().end(),
                                      [&](const auto& x) { return ind == x.first; })
                             ->second;
      double total = 0.0;
      for (double p : dist) total += p;
      const double centre = load * mean;
      const double scale = std::sqrt(load * load * var + 1.0);
      double cum = 0.0, prev = 0.0;
      for (int k = 1; k < 5; ++k) {
        cum += dist[static_cast<std::size_t>(k - 1)] / total;
        const double tau = centre + scale * inv_normal_cdf(cum);
        if (k == 1) truth.add(threshold_name(ind, 1), ParamRole::ThresholdBase, tau);
        else truth.add(threshold_name(ind, k), ParamRole::ThresholdIncrement, std::log(tau - prev));
        prev = tau;
      }
    }
  }
  return truth;
}

TruthConfig table6_truth_config(bool latents, std::uint64_t seed) {
  TruthConfig cfg;
  cfg.spec = table6_spec(latents);
  cfg.truth = table6_truth(cfg.spec);
  cfg.design = generate_design(table1_attributes(), 32, seed);
  assign_blocks(cfg.design, 4, seed);
  cfg.seed = seed;
  return cfg;
}

}  // namespace iclv
