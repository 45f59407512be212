#pragma once

#include <span>
#include <vector>

namespace iclv {

// a = intercept + coefficients . z + sigma * std_draw
struct StructuralEquation {
  double intercept = 0.0;
  std::vector<double> coefficients;  // aligned with the socio-demographic vector
  double sigma = 1.0;
};

double structural_eval(const StructuralEquation& eq, std::span<const double> z, double std_draw);
// One latent value per equation (a LatentDraw for one respondent).
std::vector<double> structural_eval(std::span<const StructuralEquation> eqs, std::span<const double> z,
                                    std::span<const double> std_draws);

// Ordered-probit indicator: I* = intercept + loading * a + eta, eta ~ N(0,1),
// cut by strictly increasing thresholds into thresholds.size() + 1 categories.
struct OrderedProbitIndicator {
  double intercept = 0.0;
  double loading = 1.0;
  std::vector<double> thresholds;
};

// tau_1 = first, tau_{k+1} = tau_k + exp(log_increments[k-1]).
std::vector<double> thresholds_from_increments(double first, std::span<const double> log_increments);

// Category probabilities (index 0 is category 1). Throws NumericError for
// non-increasing thresholds.
std::vector<double> ordered_probit_probs(const OrderedProbitIndicator& ind, double a);

// Probability of one category and the derivatives of its log with respect to
// the linear index (intercept + loading * a) and the two bounding thresholds.
struct CellProbability {
  double log_prob = 0.0;
  double d_index = 0.0;
  double d_lower = 0.0;  // wrt threshold below the category (0 for the first)
  double d_upper = 0.0;  // wrt threshold above the category (0 for the last)
};
CellProbability ordered_probit_cell(std::span<const double> thresholds, int category, double index);

struct MeasurementSpec {
  std::vector<OrderedProbitIndicator> indicators;
  std::vector<int> latent_of;  // latent variable measured by each indicator
};

// Sum over indicators of log P(observed category | latent draw). Responses are
// 1-based; throws DataError when out of range.
double indicator_loglik(const MeasurementSpec& ms, std::span<const int> responses, std::span<const double> latents);

}  // namespace iclv
