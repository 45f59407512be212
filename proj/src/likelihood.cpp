#include "iclv/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "iclv/error.hpp"
#include "iclv/parallel.hpp"

namespace iclv {

CompiledModel::CompiledModel(const ModelSpec& spec) : num_params_(spec.parameters.size()) {
  utility_ = bind(spec.utility, spec.parameters);
  const auto& P = spec.parameters;
  std::vector<int> latent_of(spec.indicator_names.size(), -1);
  for (std::size_t l = 0; l < spec.latents.size(); ++l) {
    const auto& lv = spec.latents[l];
    Latent c;
    c.intercept = P.index(zeta_name(lv.name));
    c.sigma = P.index(sigma_name(lv.name));
    for (int z : lv.regressors) {
      c.regressors.push_back(z);
      c.coefficients.push_back(
          P.index(structural_name(lv.name, spec.sociodemographic_names[static_cast<std::size_t>(z)])));
    }
    latents_.push_back(std::move(c));
    for (int s : lv.indicators) latent_of[static_cast<std::size_t>(s)] = static_cast<int>(l);
  }
  // Indicators in column order so measurement output lines up with the data.
  for (std::size_t s = 0; s < spec.indicator_names.size(); ++s) {
    if (latent_of[s] < 0) continue;
    const auto& name = spec.indicator_names[s];
    Indicator ind;
    ind.column = static_cast<int>(s);
    ind.latent = latent_of[s];
    ind.intercept = P.index(gamma_name(name));
    ind.loading = P.index(loading_name(name));
    for (int k = 1; k < spec.likert_categories; ++k) ind.thresholds.push_back(P.index(threshold_name(name, k)));
    indicators_.push_back(std::move(ind));
  }
}

void CompiledModel::latent_values(std::span<const double> theta, std::span<const double> socio,
                                  std::span<const double> std_draw, std::span<double> a) const {
  for (std::size_t l = 0; l < latents_.size(); ++l) {
    const auto& c = latents_[l];
    double v = theta[c.intercept] + theta[c.sigma] * (std_draw.empty() ? 0.0 : std_draw[l]);
    for (std::size_t k = 0; k < c.regressors.size(); ++k) {
      v += theta[c.coefficients[k]] * socio[static_cast<std::size_t>(c.regressors[k])];
    }
    a[l] = v;
  }
}

void CompiledModel::thresholds(std::span<const double> theta, const Indicator& ind, std::span<double> tau) const {
  tau[0] = theta[ind.thresholds[0]];
  for (std::size_t k = 1; k < ind.thresholds.size(); ++k) tau[k] = tau[k - 1] + std::exp(theta[ind.thresholds[k]]);
}

StructuralEquation CompiledModel::structural_equation(std::span<const double> theta, std::size_t latent,
                                                      std::size_t num_socio) const {
  const auto& c = latents_[latent];
  StructuralEquation eq;
  eq.intercept = theta[c.intercept];
  eq.sigma = theta[c.sigma];
  eq.coefficients.assign(num_socio, 0.0);
  for (std::size_t k = 0; k < c.regressors.size(); ++k) {
    eq.coefficients[static_cast<std::size_t>(c.regressors[k])] += theta[c.coefficients[k]];
  }
  return eq;
}

MeasurementSpec CompiledModel::measurement(std::span<const double> theta) const {
  MeasurementSpec ms;
  for (const auto& ind : indicators_) {
    OrderedProbitIndicator op;
    op.intercept = theta[ind.intercept];
    op.loading = theta[ind.loading];
    op.thresholds.resize(ind.thresholds.size());
    thresholds(theta, ind, op.thresholds);
    ms.indicators.push_back(std::move(op));
    ms.latent_of.push_back(ind.latent);
  }
  return ms;
}

struct SimulatedLikelihood::Workspace {
  std::vector<double> a, da, v, p, vfixed, g, acc;
  Workspace(std::size_t L, std::size_t J, std::size_t tasks, std::size_t P)
      : a(L), da(L), v(J), p(J), vfixed(tasks * J), g(P), acc(P) {}
};

SimulatedLikelihood::SimulatedLikelihood(const ModelSpec& spec, const ChoiceDataset& ds, const DrawPlan& plan,
                                         int threads)
    : model_(spec), ds_(&ds), threads_(resolve_threads(threads)) {
  check_compatible(spec, ds);
  simulate_ = model_.num_latents() > 0;
  for (std::size_t n = 0; n < ds.respondents.size(); ++n) {
    const auto T = ds.respondents[n].tasks.size();
    if (plan.unit == IntegrationUnit::Respondent || T == 0) {
      units_.push_back({n, 0, T, 1.0});
    } else {
      for (std::size_t t = 0; t < T; ++t) units_.push_back({n, t, t + 1, 1.0 / static_cast<double>(T)});
    }
  }
  if (simulate_) draws_ = StandardDraws(plan, units_.size(), model_.num_latents());
}

double SimulatedLikelihood::unit_loglik(std::span<const double> theta, const Unit& unit, std::size_t unit_index,
                                        std::span<const double> tau, bool with_indicators, Workspace& ws,
                                        double* score) const {
  const auto& resp = ds_->respondents[unit.respondent];
  const auto& util = model_.utility();
  const auto J = model_.num_alternatives();
  const auto L = model_.num_latents();
  const auto P = model_.num_params();
  const std::span<const double> socio(resp.sociodemographics);
  const std::size_t X1 = model_.indicators().empty() ? 0 : model_.indicators().front().thresholds.size();

  // Utility terms that do not involve a latent are fixed across draws.
  for (std::size_t t = unit.task_begin; t < unit.task_end; ++t) {
    const auto& task = resp.tasks[t];
    double* vf = ws.vfixed.data() + (t - unit.task_begin) * J;
    std::fill(vf, vf + J, 0.0);
    for (const auto& term : util.terms) {
      if (term.source == TermSource::Latent) continue;
      vf[term.alternative] += theta[term.parameter] * util.term_value(term, task, socio, {});
    }
  }

  const std::size_t R = simulate_ ? draws_.draws() : 1;
  double max_ll = -std::numeric_limits<double>::infinity();
  double sum_w = 0.0;
  if (score) std::fill(ws.acc.begin(), ws.acc.end(), 0.0);

  for (std::size_t r = 0; r < R; ++r) {
    const auto xi = simulate_ ? draws_.at(unit_index, r) : std::span<const double>{};
    if (L > 0) model_.latent_values(theta, socio, xi, ws.a);
    double ll = 0.0;
    if (score) {
      std::fill(ws.g.begin(), ws.g.end(), 0.0);
      std::fill(ws.da.begin(), ws.da.end(), 0.0);
    }

    for (std::size_t t = unit.task_begin; t < unit.task_end; ++t) {
      const auto& task = resp.tasks[t];
      const double* vf = ws.vfixed.data() + (t - unit.task_begin) * J;
      std::copy(vf, vf + J, ws.v.begin());
      for (const auto& term : util.terms) {
        if (term.source == TermSource::Latent) {
          ws.v[static_cast<std::size_t>(term.alternative)] +=
              theta[term.parameter] * ws.a[static_cast<std::size_t>(term.source_index)];
        }
      }
      ll += task_log_probability(ws.v, task, ws.p);
      if (score) {
        for (const auto& term : util.terms) {
          const double resid = (term.alternative == task.chosen ? 1.0 : 0.0) -
                               ws.p[static_cast<std::size_t>(term.alternative)];
          if (term.source == TermSource::Latent) {
            const auto l = static_cast<std::size_t>(term.source_index);
            ws.g[term.parameter] += resid * ws.a[l];
            ws.da[l] += resid * theta[term.parameter];
          } else {
            ws.g[term.parameter] += resid * util.term_value(term, task, socio, {});
          }
        }
      }
    }

    if (with_indicators) {
      const double w = unit.indicator_weight;
      const auto& inds = model_.indicators();
      for (std::size_t s = 0; s < inds.size(); ++s) {
        const auto& ind = inds[s];
        const auto l = static_cast<std::size_t>(ind.latent);
        const double index = theta[ind.intercept] + theta[ind.loading] * ws.a[l];
        const int category = resp.indicators[static_cast<std::size_t>(ind.column)];
        const auto tau_s = tau.subspan(s * X1, X1);
        const auto cell = ordered_probit_cell(tau_s, category, index);
        ll += w * cell.log_prob;
        if (score) {
          ws.g[ind.intercept] += w * cell.d_index;
          ws.g[ind.loading] += w * cell.d_index * ws.a[l];
          ws.da[l] += w * cell.d_index * theta[ind.loading];
          // tau_k = tau_1 + sum_{m=2..k} exp(u_m); exp(u_m) = tau_m - tau_{m-1}.
          const auto chain = [&](int k, double d) {
            if (k < 1 || static_cast<std::size_t>(k) > X1 || d == 0.0) return;
            ws.g[ind.thresholds[0]] += w * d;
            for (int m = 2; m <= k; ++m) {
              const auto mi = static_cast<std::size_t>(m - 1);
              ws.g[ind.thresholds[mi]] += w * d * (tau_s[mi] - tau_s[mi - 1]);
            }
          };
          chain(category - 1, cell.d_lower);
          chain(category, cell.d_upper);
        }
      }
    }

    if (score) {
      for (std::size_t l = 0; l < L; ++l) {
        const auto& c = model_.latents()[l];
        const double d = ws.da[l];
        ws.g[c.intercept] += d;
        ws.g[c.sigma] += d * (xi.empty() ? 0.0 : xi[l]);
        for (std::size_t k = 0; k < c.regressors.size(); ++k) {
          ws.g[c.coefficients[k]] += d * socio[static_cast<std::size_t>(c.regressors[k])];
        }
      }
    }

    // Streaming log-sum-exp over draws.
    if (ll > max_ll) {
      const double scale = std::exp(max_ll - ll);
      sum_w = sum_w * scale + 1.0;
      if (score) {
        for (std::size_t k = 0; k < P; ++k) ws.acc[k] = ws.acc[k] * scale + ws.g[k];
      }
      max_ll = ll;
    } else {
      const double w = std::exp(ll - max_ll);
      sum_w += w;
      if (score) {
        for (std::size_t k = 0; k < P; ++k) ws.acc[k] += w * ws.g[k];
      }
    }
  }

  if (score) {
    for (std::size_t k = 0; k < P; ++k) score[k] = ws.acc[k] / sum_w;
  }
  return max_ll + std::log(sum_w) - std::log(static_cast<double>(R));
}

namespace {

std::vector<double> all_thresholds(const CompiledModel& model, std::span<const double> theta) {
  const auto& inds = model.indicators();
  if (inds.empty()) return {};
  const auto X1 = inds.front().thresholds.size();
  std::vector<double> tau(inds.size() * X1);
  for (std::size_t s = 0; s < inds.size(); ++s) {
    model.thresholds(theta, inds[s], std::span<double>(tau).subspan(s * X1, X1));
  }
  return tau;
}

}  // namespace

void SimulatedLikelihood::unit_contributions(std::span<const double> theta, std::span<double> loglik,
                                             std::span<double> scores) const {
  if (theta.size() != num_params()) throw NumericError("parameter vector size mismatch");
  const auto tau = all_thresholds(model_, theta);
  const auto P = num_params();
  const bool want_scores = !scores.empty();
  const auto max_tasks = [&] {
    std::size_t m = 0;
    for (const auto& u : units_) m = std::max(m, u.task_end - u.task_begin);
    return m;
  }();
  parallel_for(units_.size(), threads_, [&](std::size_t i) {
    Workspace ws(model_.num_latents(), model_.num_alternatives(), max_tasks, P);
    loglik[i] = unit_loglik(theta, units_[i], i, tau, true, ws, want_scores ? scores.data() + i * P : nullptr);
  });
}

double SimulatedLikelihood::value(std::span<const double> theta) const {
  std::vector<double> ll(units_.size());
  unit_contributions(theta, ll, {});
  return pairwise_sum(ll);
}

double SimulatedLikelihood::value_and_gradient(std::span<const double> theta, std::span<double> gradient) const {
  const auto N = units_.size();
  const auto P = num_params();
  std::vector<double> ll(N), scores(N * P);
  unit_contributions(theta, ll, scores);
  std::vector<double> column(N);
  for (std::size_t k = 0; k < P; ++k) {
    for (std::size_t i = 0; i < N; ++i) column[i] = scores[i * P + k];
    gradient[k] = pairwise_sum(column);
  }
  return pairwise_sum(ll);
}

double SimulatedLikelihood::choice_component(std::span<const double> theta) const {
  const auto tau = all_thresholds(model_, theta);
  std::vector<double> ll(units_.size());
  std::size_t max_tasks = 0;
  for (const auto& u : units_) max_tasks = std::max(max_tasks, u.task_end - u.task_begin);
  parallel_for(units_.size(), threads_, [&](std::size_t i) {
    Workspace ws(model_.num_latents(), model_.num_alternatives(), max_tasks, num_params());
    ll[i] = unit_loglik(theta, units_[i], i, tau, false, ws, nullptr);
  });
  return pairwise_sum(ll);
}

double simulated_loglik(const ModelSpec& spec, const ParameterVector& params, const ChoiceDataset& ds,
                        const DrawPlan& plan) {
  const SimulatedLikelihood sl(spec, ds, plan, 1);
  std::vector<double> theta = spec.parameters.values();
  for (const auto& p : params.items()) {
    if (spec.parameters.contains(p.name)) theta[spec.parameters.index(p.name)] = p.value;
  }
  return sl.value(theta);
}

}  // namespace iclv
