#include "iclv/latent_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "iclv/error.hpp"
#include "iclv/normal.hpp"

namespace iclv {

double structural_eval(const StructuralEquation& eq, std::span<const double> z, double std_draw) {
  if (eq.coefficients.size() != z.size()) {
    throw NumericError("structural_eval: " + std::to_string(eq.coefficients.size()) + " coefficients for " +
                       std::to_string(z.size()) + " regressors");
  }
  double a = eq.intercept;
  for (std::size_t k = 0; k < z.size(); ++k) a += eq.coefficients[k] * z[k];
  return a + eq.sigma * std_draw;
}

std::vector<double> structural_eval(std::span<const StructuralEquation> eqs, std::span<const double> z,
                                    std::span<const double> std_draws) {
  if (eqs.size() != std_draws.size()) throw NumericError("structural_eval: one draw per latent variable required");
  std::vector<double> a(eqs.size());
  for (std::size_t l = 0; l < eqs.size(); ++l) a[l] = structural_eval(eqs[l], z, std_draws[l]);
  return a;
}

std::vector<double> thresholds_from_increments(double first, std::span<const double> log_increments) {
  std::vector<double> tau{first};
  for (double u : log_increments) tau.push_back(tau.back() + std::exp(u));
  return tau;
}

namespace {

void check_monotone(std::span<const double> tau) {
  for (std::size_t k = 1; k < tau.size(); ++k) {
    if (!(tau[k] > tau[k - 1])) throw NumericError("ordered probit thresholds must be strictly increasing");
  }
}

}  // namespace

std::vector<double> ordered_probit_probs(const OrderedProbitIndicator& ind, double a) {
  check_monotone(ind.thresholds);
  const double index = ind.intercept + ind.loading * a;
  const auto X = ind.thresholds.size() + 1;
  std::vector<double> p(X);
  for (std::size_t c = 0; c < X; ++c) {
    const double lo = c == 0 ? -std::numeric_limits<double>::infinity() : ind.thresholds[c - 1] - index;
    const double hi = c + 1 == X ? std::numeric_limits<double>::infinity() : ind.thresholds[c] - index;
    p[c] = normal_interval(lo, hi);
  }
  return p;
}

CellProbability ordered_probit_cell(std::span<const double> thresholds, int category, double index) {
  const auto X = static_cast<int>(thresholds.size()) + 1;
  const bool has_lower = category > 1;
  const bool has_upper = category < X;
  const double lo = has_lower ? thresholds[static_cast<std::size_t>(category - 2)] - index
                              : -std::numeric_limits<double>::infinity();
  const double hi = has_upper ? thresholds[static_cast<std::size_t>(category - 1)] - index
                              : std::numeric_limits<double>::infinity();
  const double p = std::max(normal_interval(lo, hi), std::numeric_limits<double>::min());
  CellProbability out;
  out.log_prob = std::log(p);
  out.d_upper = has_upper ? normal_pdf(hi) / p : 0.0;
  out.d_lower = has_lower ? -normal_pdf(lo) / p : 0.0;
  out.d_index = -(out.d_upper + out.d_lower);
  return out;
}

double indicator_loglik(const MeasurementSpec& ms, std::span<const int> responses, std::span<const double> latents) {
  if (responses.size() != ms.indicators.size() || ms.latent_of.size() != ms.indicators.size()) {
    throw NumericError("indicator_loglik: dimension mismatch");
  }
  double ll = 0.0;
  for (std::size_t s = 0; s < ms.indicators.size(); ++s) {
    const auto& ind = ms.indicators[s];
    const int X = static_cast<int>(ind.thresholds.size()) + 1;
    if (responses[s] < 1 || responses[s] > X) {
      throw DataError("indicator response " + std::to_string(responses[s]) + " outside 1.." + std::to_string(X));
    }
    check_monotone(ind.thresholds);
    const double a = latents[static_cast<std::size_t>(ms.latent_of[s])];
    ll += ordered_probit_cell(ind.thresholds, responses[s], ind.intercept + ind.loading * a).log_prob;
  }
  return ll;
}

}  // namespace iclv
