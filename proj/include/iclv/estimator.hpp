#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "iclv/dataset.hpp"
#include "iclv/likelihood.hpp"
#include "iclv/model_spec.hpp"
#include "iclv/parameters.hpp"

namespace iclv {

struct FitStats {
  double rho2 = 0.0;
  double adj_rho2 = 0.0;
  double bic = 0.0;
};

// rho2 = 1 - ll/ll0, adj = 1 - (ll - K)/ll0, bic = -2 ll + K ln N.
FitStats fit_stats(double ll_final, double ll_null, std::size_t K, std::size_t N);

// Equal-shares log-likelihood over available alternatives.
double null_loglik(const ChoiceDataset& ds);

struct EstimationResult {
  std::string model_name;
  ParameterVector params;
  std::vector<double> std_errors;         // NaN for fixed parameters
  std::vector<double> t_stats;            // NaN where undefined
  std::vector<double> robust_std_errors;  // empty unless requested
  double ll_start = 0.0;
  double ll_joint = 0.0;  // maximised objective (choices and indicators)
  double ll_final = 0.0;  // choice component at the optimum; rho2 and BIC use this
  double ll_null = 0.0;
  double rho2 = 0.0;
  double adj_rho2 = 0.0;
  double bic = 0.0;
  std::size_t n_free = 0;
  std::size_t n_observations = 0;  // BIC sample size
  std::size_t n_respondents = 0;
  std::size_t n_tasks = 0;
  std::size_t n_indicator_responses = 0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;  // max |gradient| over free parameters
  std::string message;
  std::vector<std::string> singular_parameters;
  std::vector<double> ll_history;
  std::vector<std::string> notes;  // data conditions that changed the free parameter set
  // Free parameters whose meaning changed because a neighbouring threshold was
  // fixed (e.g. the gap above an empty lowest category).
  std::vector<std::string> redefined_parameters;
  int draws = 0;
};

// Data-driven start values for every parameter without a user-supplied start.
ParameterVector starting_values(const ModelSpec& spec, const ChoiceDataset& ds);

// Thresholds bounding a Likert category that nobody chose are not
// identified. They are fixed so that the empty category has negligible
// probability; one note per fixing is returned. Free thresholds whose meaning
// changes as a result are appended to `redefined`.
std::vector<std::string> fix_empty_categories(const ModelSpec& spec, const ChoiceDataset& ds, ParameterVector& params,
                                              std::vector<std::string>* redefined = nullptr);

// Central differences of the analytic gradient over the free parameters.
std::vector<double> numerical_hessian(const SimulatedLikelihood& sl, const std::vector<double>& theta,
                                      const std::vector<std::size_t>& free, double relative_step);

EstimationResult estimate(const ModelSpec& spec, const ChoiceDataset& ds, const DrawPlan& plan,
                          const OptimizerOptions& options);
inline EstimationResult estimate(const ModelSpec& spec, const ChoiceDataset& ds) {
  return estimate(spec, ds, spec.draws, spec.optimizer);
}

}  // namespace iclv
