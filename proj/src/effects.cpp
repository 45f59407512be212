#include "iclv/effects.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "iclv/error.hpp"
#include "iclv/likelihood.hpp"
#include "iclv/parallel.hpp"
#include "iclv/text.hpp"

namespace iclv {

std::string_view to_string(EffectMethod m) {
  return m == EffectMethod::Analytic ? "analytic" : "finite_difference";
}

std::string_view to_string(Averaging a) { return a == Averaging::SampleAverage ? "sample_average" : "at_means"; }

FittedModel fitted_model(const ModelSpec& spec, const EstimationResult& result, const DrawPlan& plan) {
  FittedModel m{spec, {}, plan};
  m.theta.assign(spec.parameters.size(), 0.0);
  for (std::size_t i = 0; i < spec.parameters.size(); ++i) {
    m.theta[i] = result.params.contains(spec.parameters[i].name) ? result.params.value(spec.parameters[i].name)
                                                                  : spec.parameters[i].value;
  }
  return m;
}

namespace {

enum class VarKind { Attribute, Socio };

struct Target {
  VarKind kind = VarKind::Attribute;
  int index = 0;
  bool dummy = false;
  int alternative = 0;
};

// Probabilities of one task averaged over the latent draws of one unit.
class Evaluator {
 public:
  Evaluator(const FittedModel& fm, const ChoiceDataset& ds)
      : model_(fm.spec), theta_(fm.theta), J_(ds.num_alternatives()) {
    if (theta_.size() != model_.num_params()) throw SpecError("parameter vector does not match the model");
    if (model_.num_latents() > 0) {
      draws_ = StandardDraws(fm.plan, ds.respondents.size(), model_.num_latents());
    }
  }

  std::size_t num_draws() const { return model_.num_latents() > 0 ? draws_.draws() : 1; }

  // dV_j/dx for a continuous target; constant across draws.
  std::vector<double> utility_slopes(const Target& tg) const {
    std::vector<double> dv(J_, 0.0);
    std::vector<double> da(model_.num_latents(), 0.0);
    if (tg.kind == VarKind::Socio) {
      for (std::size_t l = 0; l < model_.num_latents(); ++l) {
        const auto& c = model_.latents()[l];
        for (std::size_t k = 0; k < c.regressors.size(); ++k) {
          if (c.regressors[k] == tg.index) da[l] += theta_[c.coefficients[k]];
        }
      }
    }
    for (const auto& t : model_.utility().terms) {
      const auto a = static_cast<std::size_t>(t.alternative);
      if (tg.kind == VarKind::Attribute && t.source == TermSource::Attribute && t.source_index == tg.index &&
          t.alternative == tg.alternative) {
        dv[a] += theta_[t.parameter];
      } else if (tg.kind == VarKind::Socio && t.source == TermSource::Sociodemographic && t.source_index == tg.index) {
        dv[a] += theta_[t.parameter];
      } else if (tg.kind == VarKind::Socio && t.source == TermSource::Latent) {
        dv[a] += theta_[t.parameter] * da[static_cast<std::size_t>(t.source_index)];
      }
    }
    return dv;
  }

  // Mean probability of `alt` and, when `dv` is given, its derivative.
  void evaluate(const ChoiceTask& task, std::span<const double> socio, std::size_t unit, int alt,
                const std::vector<double>* dv, double& p_mean, double& dp_mean) const {
    const std::size_t L = model_.num_latents();
    const std::size_t R = num_draws();
    std::vector<double> a(L), v(J_), p(J_);
    double ps = 0.0, ds = 0.0;
    const auto i = static_cast<std::size_t>(alt);
    for (std::size_t r = 0; r < R; ++r) {
      if (L > 0) model_.latent_values(theta_, socio, draws_.at(unit, r), a);
      systematic_utility(model_.utility(), theta_, task, socio, a, v);
      logit_probabilities(v, task.availability, p);
      ps += p[i];
      if (dv) {
        double avg = 0.0;
        for (std::size_t j = 0; j < J_; ++j) avg += p[j] * (*dv)[j];
        ds += p[i] * ((*dv)[i] - avg);
      }
    }
    p_mean = ps / static_cast<double>(R);
    dp_mean = ds / static_cast<double>(R);
  }

  void all_probabilities(const ChoiceTask& task, std::span<const double> socio, std::size_t unit,
                         std::vector<double>& out) const {
    const std::size_t L = model_.num_latents();
    const std::size_t R = num_draws();
    std::vector<double> a(L), v(J_), p(J_);
    out.assign(J_, 0.0);
    for (std::size_t r = 0; r < R; ++r) {
      if (L > 0) model_.latent_values(theta_, socio, draws_.at(unit, r), a);
      systematic_utility(model_.utility(), theta_, task, socio, a, v);
      logit_probabilities(v, task.availability, p);
      for (std::size_t j = 0; j < J_; ++j) out[j] += p[j];
    }
    for (auto& x : out) x /= static_cast<double>(R);
  }

  const CompiledModel& model() const { return model_; }

 private:
  CompiledModel model_;
  std::vector<double> theta_;
  std::size_t J_;
  StandardDraws draws_;
};

bool is_binary(double x) { return x == 0.0 || x == 1.0; }

bool attribute_is_dummy(const ChoiceDataset& ds, int k) {
  for (const auto& r : ds.respondents)
    for (const auto& t : r.tasks)
      for (std::size_t j = 0; j < ds.num_alternatives(); ++j)
        if (!is_binary(t.attribute(static_cast<int>(j), static_cast<std::size_t>(k)))) return false;
  return true;
}

bool socio_is_dummy(const ChoiceDataset& ds, int z) {
  for (const auto& r : ds.respondents)
    if (!is_binary(r.sociodemographics[static_cast<std::size_t>(z)])) return false;
  return true;
}

// True when the variable moves any utility, directly or through a latent.
bool socio_enters(const CompiledModel& m, const std::vector<double>& theta, int z) {
  for (const auto& t : m.utility().terms) {
    if (t.source == TermSource::Sociodemographic && t.source_index == z) return true;
  }
  for (std::size_t l = 0; l < m.num_latents(); ++l) {
    const auto& c = m.latents()[l];
    bool in_structural = std::find(c.regressors.begin(), c.regressors.end(), z) != c.regressors.end();
    if (!in_structural) continue;
    for (const auto& t : m.utility().terms) {
      if (t.source == TermSource::Latent && static_cast<std::size_t>(t.source_index) == l && theta[t.parameter] != 0.0)
        return true;
    }
  }
  return false;
}

Target resolve(const Evaluator& ev, const FittedModel& fm, const ChoiceDataset& ds, const std::string& variable,
               const std::string& alternative) {
  Target tg;
  tg.alternative = ds.alternative_index(alternative);
  if (tg.alternative < 0) throw SpecError("unknown alternative '" + alternative + "'");
  const auto& terms = ev.model().utility().terms;
  if (int k = ds.attribute_index(variable); k >= 0) {
    tg.kind = VarKind::Attribute;
    tg.index = k;
    tg.dummy = attribute_is_dummy(ds, k);
    bool present = false;
    for (const auto& t : terms) {
      if (t.source != TermSource::Attribute || t.source_index != k) continue;
      if (tg.dummy || t.alternative == tg.alternative) present = true;
    }
    if (!present) throw SpecError("'" + variable + "' does not enter the utility of '" + alternative + "'");
    return tg;
  }
  if (int z = ds.sociodemographic_index(variable); z >= 0) {
    tg.kind = VarKind::Socio;
    tg.index = z;
    tg.dummy = socio_is_dummy(ds, z);
    if (!socio_enters(ev.model(), fm.theta, z))
      throw SpecError("'" + variable + "' does not enter the utility of '" + alternative + "'");
    return tg;
  }
  throw SpecError("unknown variable '" + variable + "'");
}

double& slot(const Target& tg, ChoiceTask& task, std::vector<double>& socio) {
  if (tg.kind == VarKind::Socio) return socio[static_cast<std::size_t>(tg.index)];
  return task.attribute(tg.alternative, static_cast<std::size_t>(tg.index));
}

void set_dummy(const Target& tg, ChoiceTask& task, std::vector<double>& socio, std::size_t J, double value) {
  if (tg.kind == VarKind::Socio) {
    socio[static_cast<std::size_t>(tg.index)] = value;
    return;
  }
  for (std::size_t j = 0; j < J; ++j) task.attribute(static_cast<int>(j), static_cast<std::size_t>(tg.index)) = value;
}

struct Observation {
  ChoiceTask task;
  std::vector<double> socio;
  std::size_t unit = 0;
};

double observation_value(const Evaluator& ev, const Target& tg, const std::vector<double>& dv, Observation obs,
                         const EffectOptions& opt, bool want_elasticity, std::size_t J) {
  double p = 0.0, dp = 0.0;
  if (tg.dummy) {
    set_dummy(tg, obs.task, obs.socio, J, 1.0);
    double p1 = 0.0, p0 = 0.0, unused = 0.0;
    ev.evaluate(obs.task, obs.socio, obs.unit, tg.alternative, nullptr, p1, unused);
    set_dummy(tg, obs.task, obs.socio, J, 0.0);
    ev.evaluate(obs.task, obs.socio, obs.unit, tg.alternative, nullptr, p0, unused);
    return p1 - p0;
  }
  const double x = slot(tg, obs.task, obs.socio);
  if (opt.method == EffectMethod::Analytic) {
    ev.evaluate(obs.task, obs.socio, obs.unit, tg.alternative, &dv, p, dp);
    if (!want_elasticity) return dp;
    return p > 0.0 ? dp * x / p : 0.0;
  }
  if (want_elasticity) {
    if (x == 0.0) return 0.0;
    double pp = 0.0, pm = 0.0, unused = 0.0;
    slot(tg, obs.task, obs.socio) = x * (1.0 + opt.relative_step);
    ev.evaluate(obs.task, obs.socio, obs.unit, tg.alternative, nullptr, pp, unused);
    slot(tg, obs.task, obs.socio) = x * (1.0 - opt.relative_step);
    ev.evaluate(obs.task, obs.socio, obs.unit, tg.alternative, nullptr, pm, unused);
    if (pp + pm <= 0.0) return 0.0;
    // Arc elasticity with midpoint bases.
    return ((pp - pm) / (pp + pm)) / opt.relative_step;
  }
  const double h = opt.relative_step * std::max(1.0, std::abs(x));
  double pp = 0.0, pm = 0.0, unused = 0.0;
  slot(tg, obs.task, obs.socio) = x + h;
  ev.evaluate(obs.task, obs.socio, obs.unit, tg.alternative, nullptr, pp, unused);
  slot(tg, obs.task, obs.socio) = x - h;
  ev.evaluate(obs.task, obs.socio, obs.unit, tg.alternative, nullptr, pm, unused);
  return (pp - pm) / (2.0 * h);
}

Observation mean_observation(const ChoiceDataset& ds) {
  Observation o;
  const auto& first = ds.respondents.front().tasks.front();
  o.task = first;
  std::fill(o.task.attributes.begin(), o.task.attributes.end(), 0.0);
  std::fill(o.task.availability.begin(), o.task.availability.end(), 0);
  o.socio.assign(ds.respondents.front().sociodemographics.size(), 0.0);
  std::size_t n_tasks = 0;
  for (const auto& r : ds.respondents) {
    for (std::size_t z = 0; z < o.socio.size(); ++z) o.socio[z] += r.sociodemographics[z];
    for (const auto& t : r.tasks) {
      for (std::size_t i = 0; i < t.attributes.size(); ++i) o.task.attributes[i] += t.attributes[i];
      for (std::size_t j = 0; j < t.availability.size(); ++j) o.task.availability[j] |= t.availability[j];
      ++n_tasks;
    }
  }
  for (auto& x : o.socio) x /= static_cast<double>(ds.respondents.size());
  for (auto& x : o.task.attributes) x /= static_cast<double>(n_tasks);
  o.unit = 0;
  return o;
}

double average_effect(const FittedModel& fm, const ChoiceDataset& ds, const Evaluator& ev, const Target& tg,
                      const EffectOptions& opt, bool want_elasticity, std::size_t& count) {
  const std::size_t J = ds.num_alternatives();
  const auto dv = tg.dummy ? std::vector<double>{} : ev.utility_slopes(tg);
  if (opt.averaging == Averaging::AtMeans) {
    Observation o = mean_observation(ds);
    if (!o.task.available(tg.alternative)) throw DataError("alternative is never available");
    count = 1;
    return observation_value(ev, tg, dv, std::move(o), opt, want_elasticity, J);
  }
  const std::size_t N = ds.respondents.size();
  std::vector<double> sums(N, 0.0);
  std::vector<std::size_t> counts(N, 0);
  parallel_for(N, resolve_threads(fm.spec.optimizer.threads), [&](std::size_t n) {
    const auto& resp = ds.respondents[n];
    std::vector<double> values;
    for (const auto& task : resp.tasks) {
      if (!task.available(tg.alternative)) continue;
      values.push_back(observation_value(ev, tg, dv, Observation{task, resp.sociodemographics, n}, opt,
                                         want_elasticity, J));
    }
    sums[n] = pairwise_sum(values);
    counts[n] = values.size();
  });
  count = 0;
  for (auto c : counts) count += c;
  if (count == 0) throw DataError("alternative is never available");
  return pairwise_sum(sums) / static_cast<double>(count);
}

}  // namespace

EffectResult elasticity(const FittedModel& model, const ChoiceDataset& ds, const std::string& variable,
                        const std::string& alternative, const EffectOptions& options) {
  check_compatible(model.spec, ds);
  Evaluator ev(model, ds);
  const Target tg = resolve(ev, model, ds, variable, alternative);
  if (tg.dummy) throw SpecError("'" + variable + "' is a 0/1 variable; use the marginal effect");
  EffectResult r;
  r.variable = variable;
  r.alternative = alternative;
  r.method = options.method;
  r.averaging = options.averaging;
  r.elasticity = average_effect(model, ds, ev, tg, options, true, r.observations);
  r.marginal_effect = average_effect(model, ds, ev, tg, options, false, r.observations);
  return r;
}

EffectResult marginal_effect(const FittedModel& model, const ChoiceDataset& ds, const std::string& variable,
                             const std::string& alternative, const EffectOptions& options) {
  check_compatible(model.spec, ds);
  Evaluator ev(model, ds);
  const Target tg = resolve(ev, model, ds, variable, alternative);
  EffectResult r;
  r.variable = variable;
  r.alternative = alternative;
  r.dummy = tg.dummy;
  r.method = options.method;
  r.averaging = options.averaging;
  r.marginal_effect = average_effect(model, ds, ev, tg, options, false, r.observations);
  return r;
}

std::vector<std::vector<double>> simulated_probabilities(const FittedModel& model, const ChoiceDataset& ds) {
  check_compatible(model.spec, ds);
  Evaluator ev(model, ds);
  std::vector<std::vector<std::vector<double>>> per(ds.respondents.size());
  parallel_for(ds.respondents.size(), resolve_threads(model.spec.optimizer.threads), [&](std::size_t n) {
    const auto& resp = ds.respondents[n];
    per[n].resize(resp.tasks.size());
    for (std::size_t t = 0; t < resp.tasks.size(); ++t)
      ev.all_probabilities(resp.tasks[t], resp.sociodemographics, n, per[n][t]);
  });
  std::vector<std::vector<double>> out;
  for (auto& r : per)
    for (auto& t : r) out.push_back(std::move(t));
  return out;
}

std::vector<EffectResult> effects_table(const FittedModel& model, const ChoiceDataset& ds, const EffectOptions& options) {
  std::vector<EffectResult> out;
  CompiledModel cm(model.spec);
  for (std::size_t j = 0; j < ds.num_alternatives(); ++j) {
    const auto& alt = ds.alternatives[j].label;
    std::vector<int> attrs;
    for (const auto& t : cm.utility().terms) {
      if (t.source == TermSource::Attribute && t.alternative == static_cast<int>(j) &&
          std::find(attrs.begin(), attrs.end(), t.source_index) == attrs.end())
        attrs.push_back(t.source_index);
    }
    std::sort(attrs.begin(), attrs.end());
    for (int k : attrs) {
      const auto& name = ds.attribute_names[static_cast<std::size_t>(k)];
      out.push_back(attribute_is_dummy(ds, k) ? marginal_effect(model, ds, name, alt, options)
                                              : elasticity(model, ds, name, alt, options));
    }
    for (std::size_t z = 0; z < ds.sociodemographic_names.size(); ++z) {
      bool direct = false;
      for (const auto& t : cm.utility().terms)
        if (t.source == TermSource::Sociodemographic && t.source_index == static_cast<int>(z) &&
            t.alternative == static_cast<int>(j))
          direct = true;
      if (!direct) continue;
      const auto& name = ds.sociodemographic_names[z];
      out.push_back(socio_is_dummy(ds, static_cast<int>(z)) ? marginal_effect(model, ds, name, alt, options)
                                                             : elasticity(model, ds, name, alt, options));
    }
  }
  return out;
}

std::string effects_to_csv(const std::vector<EffectResult>& effects) {
  std::ostringstream os;
  os << "variable,alternative,dummy,marginal_effect,elasticity,method,averaging,observations\n";
  for (const auto& e : effects) {
    os << e.variable << ',' << e.alternative << ',' << (e.dummy ? 1 : 0) << ','
       << text::format_double(e.marginal_effect) << ','
       << (e.elasticity ? text::format_double(*e.elasticity) : std::string()) << ',' << to_string(e.method) << ','
       << to_string(e.averaging) << ',' << e.observations << '\n';
  }
  return os.str();
}

std::string render_effects(const std::vector<EffectResult>& effects) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-22s %-18s %12s %12s\n", "Variable", "Alternative", "Marg.effect", "Elasticity");
  os << line;
  for (const auto& e : effects) {
    std::snprintf(line, sizeof line, "%-22s %-18s %12s %12s\n", e.variable.c_str(), e.alternative.c_str(),
                  text::fixed(e.marginal_effect, 4).c_str(), e.elasticity ? text::fixed(*e.elasticity, 4).c_str() : "-");
    os << line;
  }
  return os.str();
}

}  // namespace iclv
