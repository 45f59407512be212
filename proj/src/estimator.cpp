#include "iclv/estimator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "iclv/error.hpp"
#include "iclv/normal.hpp"
#include "iclv/optimizer.hpp"
#include "iclv/parallel.hpp"
#include "iclv/text.hpp"

namespace iclv {

FitStats fit_stats(double ll_final, double ll_null, std::size_t K, std::size_t N) {
  if (ll_null == 0.0) throw NumericError("fit_stats: null log-likelihood is zero");
  if (ll_null > 0.0) throw NumericError("fit_stats: null log-likelihood must be negative");
  FitStats s;
  s.rho2 = 1.0 - ll_final / ll_null;
  s.adj_rho2 = 1.0 - (ll_final - static_cast<double>(K)) / ll_null;
  s.bic = -2.0 * ll_final + static_cast<double>(K) * std::log(static_cast<double>(N));
  return s;
}

double null_loglik(const ChoiceDataset& ds) {
  std::vector<double> terms;
  for (const auto& r : ds.respondents) {
    for (const auto& t : r.tasks) {
      const auto avail = std::count_if(t.availability.begin(), t.availability.end(), [](char c) { return c != 0; });
      terms.push_back(-std::log(static_cast<double>(avail)));
    }
  }
  return pairwise_sum(terms);
}

ParameterVector starting_values(const ModelSpec& spec, const ChoiceDataset& ds) {
  ParameterVector params = spec.parameters;
  const auto J = ds.num_alternatives();
  const int base = ds.base_alternative();

  std::vector<double> counts(J, 0.0);
  for (const auto& r : ds.respondents) {
    for (const auto& t : r.tasks) counts[static_cast<std::size_t>(t.chosen)] += 1.0;
  }
  // ASC start: log share ratio against the base (0.5 added to empty cells).
  for (const auto& term : spec.utility.terms) {
    if (term.source != TermSource::Constant) continue;
    auto& p = params.at(term.parameter);
    if (p.user_start || p.fixed) continue;
    const auto j = static_cast<std::size_t>(term.alternative);
    p.value = std::log((counts[j] + 0.5) / (counts[static_cast<std::size_t>(base)] + 0.5));
  }

  // Thresholds from empirical marginals, scaled for the implied variance of
  // the latent response at the starting loading.
  const int X = spec.likert_categories;
  for (const auto& lv : spec.latents) {
    const double sigma = params.value(sigma_name(lv.name));
    for (int s : lv.indicators) {
      const auto& name = spec.indicator_names[static_cast<std::size_t>(s)];
      const double loading = params.value(loading_name(name));
      const double intercept = params.value(gamma_name(name));
      const double scale = std::sqrt(1.0 + loading * loading * sigma * sigma);
      std::vector<double> freq(static_cast<std::size_t>(X), 0.5);
      for (const auto& r : ds.respondents) freq[static_cast<std::size_t>(r.indicators[static_cast<std::size_t>(s)] - 1)] += 1.0;
      const double total = std::accumulate(freq.begin(), freq.end(), 0.0);
      std::vector<double> tau;
      double cum = 0.0;
      for (int k = 1; k < X; ++k) {
        cum += freq[static_cast<std::size_t>(k - 1)];
        double t = intercept + scale * inv_normal_cdf(std::clamp(cum / total, 1e-6, 1.0 - 1e-6));
        if (!tau.empty()) t = std::max(t, tau.back() + 1e-3);
        tau.push_back(t);
      }
      auto& first = params.at(threshold_name(name, 1));
      const bool touch_first = !first.user_start && !first.fixed;
      if (touch_first) first.value = tau[0];
      for (int k = 2; k < X; ++k) {
        auto& inc = params.at(threshold_name(name, k));
        if (inc.user_start || inc.fixed) continue;
        inc.value = std::log(tau[static_cast<std::size_t>(k - 1)] - tau[static_cast<std::size_t>(k - 2)]);
      }
    }
  }
  return params;
}

std::vector<std::string> fix_empty_categories(const ModelSpec& spec, const ChoiceDataset& ds, ParameterVector& params,
                                              std::vector<std::string>* redefined) {
  std::vector<std::string> notes;
  const int X = spec.likert_categories;
  constexpr double kFar = 8.0;  // threshold distance making a cell probability negligible
  for (const auto& lv : spec.latents) {
    for (int s : lv.indicators) {
      const auto& name = spec.indicator_names[static_cast<std::size_t>(s)];
      std::vector<int> count(static_cast<std::size_t>(X), 0);
      for (const auto& r : ds.respondents) ++count[static_cast<std::size_t>(r.indicators[static_cast<std::size_t>(s)] - 1)];
      for (int k = 1; k <= X; ++k) {
        if (count[static_cast<std::size_t>(k - 1)] > 0) continue;
        if (X < 3) throw DataError("indicator " + name + " has no responses in category " + std::to_string(k));
        std::string fixed;
        if (k == 1) {
          auto& base = params.at(threshold_name(name, 1));
          if (base.fixed) continue;
          const double second = base.value + std::exp(params.value(threshold_name(name, 2)));
          base.value = second - kFar;
          base.fixed = true;
          fixed = base.name;
          if (redefined) redefined->push_back(threshold_name(name, 2));
        } else {
          auto& inc = params.at(threshold_name(name, k == X ? X - 1 : k));
          if (inc.fixed) continue;
          inc.value = k == X ? std::log(kFar) : std::log(1e-6);
          inc.fixed = true;
          fixed = inc.name;
          if (redefined && k < X && k + 1 <= X - 1) redefined->push_back(threshold_name(name, k + 1));
        }
        notes.push_back("indicator " + name + " has no responses in category " + std::to_string(k) + "; " + fixed +
                        " fixed at " + text::format_double(params.value(fixed)));
      }
    }
  }
  return notes;
}

std::vector<double> numerical_hessian(const SimulatedLikelihood& sl, const std::vector<double>& theta,
                                      const std::vector<std::size_t>& free, double relative_step) {
  const auto K = free.size();
  const auto P = sl.num_params();
  std::vector<double> H(K * K);
  std::vector<double> x = theta, g_plus(P), g_minus(P);
  for (std::size_t i = 0; i < K; ++i) {
    const auto pi = free[i];
    const double h = relative_step * std::max(1.0, std::fabs(theta[pi]));
    x[pi] = theta[pi] + h;
    const double up = x[pi] - theta[pi];
    sl.value_and_gradient(x, g_plus);
    x[pi] = theta[pi] - h;
    const double down = theta[pi] - x[pi];
    sl.value_and_gradient(x, g_minus);
    x[pi] = theta[pi];
    for (std::size_t j = 0; j < K; ++j) H[j * K + i] = (g_plus[free[j]] - g_minus[free[j]]) / (up + down);
  }
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double avg = 0.5 * (H[i * K + j] + H[j * K + i]);
      H[i * K + j] = H[j * K + i] = avg;
    }
  }
  return H;
}

namespace {

// Inverse of the outer product of unit scores; empty when it is not
// positive definite.
std::vector<double> bhhh_inverse(const SimulatedLikelihood& sl, const std::vector<double>& theta,
                                 const std::vector<std::size_t>& free) {
  const auto N = sl.num_units();
  const auto P = sl.num_params();
  const auto K = static_cast<Eigen::Index>(free.size());
  std::vector<double> ll(N), scores(N * P);
  sl.unit_contributions(theta, ll, scores);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(K, K);
  Eigen::VectorXd s(K);
  for (std::size_t n = 0; n < N; ++n) {
    for (Eigen::Index i = 0; i < K; ++i) s[i] = scores[n * P + free[static_cast<std::size_t>(i)]];
    B.selfadjointView<Eigen::Lower>().rankUpdate(s);
  }
  B = B.selfadjointView<Eigen::Lower>();
  Eigen::LLT<Eigen::MatrixXd> llt(B);
  if (llt.info() != Eigen::Success) return {};
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(K, K));
  std::vector<double> out(static_cast<std::size_t>(K * K));
  for (Eigen::Index i = 0; i < K; ++i) {
    for (Eigen::Index j = 0; j < K; ++j) out[static_cast<std::size_t>(i * K + j)] = inv(i, j);
  }
  return out;
}

}  // namespace

EstimationResult estimate(const ModelSpec& spec, const ChoiceDataset& ds, const DrawPlan& plan,
                          const OptimizerOptions& options) {
  check_compatible(spec, ds);
  const SimulatedLikelihood sl(spec, ds, plan, options.threads);
  ParameterVector params = starting_values(spec, ds);
  std::vector<std::string> redefined;
  auto notes = fix_empty_categories(spec, ds, params, &redefined);
  const auto free = params.free_indices();
  const auto P = params.size();

  std::vector<double> full = params.values();
  std::vector<double> full_grad(P);
  const ValueAndGradient fg = [&](std::span<const double> x, std::span<double> grad) {
    for (std::size_t i = 0; i < free.size(); ++i) full[free[i]] = x[i];
    const double f = sl.value_and_gradient(full, full_grad);
    for (std::size_t i = 0; i < free.size(); ++i) grad[i] = full_grad[free[i]];
    return f;
  };

  EstimationResult res;
  res.model_name = spec.name;
  res.notes = std::move(notes);
  res.redefined_parameters = std::move(redefined);
  res.draws = plan.draws;
  BfgsOptions bo{options.max_iterations, options.gradient_tolerance, options.relative_tolerance, {}};
  bo.initial_inverse_hessian = bhhh_inverse(sl, full, free);
  const auto opt = maximize_bfgs(fg, params.free_values(), bo);
  res.ll_history = opt.history;
  res.ll_start = opt.history.empty() ? opt.value : opt.history.front();
  res.converged = opt.converged;
  res.iterations = opt.iterations;
  res.message = opt.message;
  res.gradient_norm = 0.0;
  for (double gi : opt.gradient) res.gradient_norm = std::max(res.gradient_norm, std::fabs(gi));

  const auto theta = params.expand(opt.x);
  params.set_values(theta);
  res.params = params;
  res.ll_joint = opt.value;
  res.ll_final = sl.choice_component(theta);
  res.ll_null = null_loglik(ds);
  res.n_free = free.size();
  res.n_respondents = ds.respondents.size();
  res.n_tasks = ds.num_tasks();
  res.n_indicator_responses = spec.has_latents() ? ds.respondents.size() * sl.model().indicators().size() : 0;
  res.n_observations = options.bic_observations == BicObservations::Tasks ? res.n_tasks
                                                                          : res.n_tasks + res.n_indicator_responses;
  const auto stats = fit_stats(res.ll_final, res.ll_null, res.n_free, res.n_observations);
  res.rho2 = stats.rho2;
  res.adj_rho2 = stats.adj_rho2;
  res.bic = stats.bic;

  const auto K = free.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  res.std_errors.assign(P, nan);
  res.t_stats.assign(P, nan);
  if (K == 0) return res;

  const auto Hv = numerical_hessian(sl, theta, free, options.hessian_step);
  Eigen::MatrixXd info(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = 0; j < K; ++j) info(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = -Hv[i * K + j];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
  const auto& evals = eig.eigenvalues();
  const double top = std::max(evals.cwiseAbs().maxCoeff(), 1e-300);
  std::vector<bool> flagged(K, false);
  for (Eigen::Index e = 0; e < evals.size(); ++e) {
    if (evals[e] > 1e-10 * top) continue;
    const auto v = eig.eigenvectors().col(e);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (std::fabs(v[i]) > 0.1) flagged[static_cast<std::size_t>(i)] = true;
    }
  }
  for (std::size_t i = 0; i < K; ++i) {
    if (flagged[i]) res.singular_parameters.push_back(params[free[i]].name);
  }
  if (!res.singular_parameters.empty()) {
    res.message += "; Hessian is singular or not negative definite";
    return res;
  }

  const Eigen::MatrixXd cov = eig.eigenvectors() * evals.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  for (std::size_t i = 0; i < K; ++i) {
    const double se = std::sqrt(cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
    res.std_errors[free[i]] = se;
    if (se > 0.0) res.t_stats[free[i]] = theta[free[i]] / se;
  }

  if (options.robust) {
    const auto N = sl.num_units();
    std::vector<double> ll(N), scores(N * P);
    sl.unit_contributions(theta, ll, scores);
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
    Eigen::VectorXd s(static_cast<Eigen::Index>(K));
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t i = 0; i < K; ++i) s[static_cast<Eigen::Index>(i)] = scores[n * P + free[i]];
      meat.noalias() += s * s.transpose();
    }
    const Eigen::MatrixXd sandwich = cov * meat * cov;
    res.robust_std_errors.assign(P, nan);
    for (std::size_t i = 0; i < K; ++i) {
      res.robust_std_errors[free[i]] = std::sqrt(sandwich(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
    }
  }
  return res;
}

}  // namespace iclv
