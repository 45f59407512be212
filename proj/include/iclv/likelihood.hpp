#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "iclv/choice_kernel.hpp"
#include "iclv/dataset.hpp"
#include "iclv/draws.hpp"
#include "iclv/latent_kernel.hpp"
#include "iclv/model_spec.hpp"

namespace iclv {

// ModelSpec with every parameter reference resolved to an index into the
// full parameter vector.
class CompiledModel {
 public:
  struct Latent {
    std::size_t intercept = 0;
    std::size_t sigma = 0;
    std::vector<int> regressors;
    std::vector<std::size_t> coefficients;
  };
  struct Indicator {
    int column = 0;
    int latent = 0;
    std::size_t intercept = 0;
    std::size_t loading = 0;
    std::vector<std::size_t> thresholds;  // base, then log increments
  };

  explicit CompiledModel(const ModelSpec& spec);

  std::size_t num_params() const { return num_params_; }
  std::size_t num_alternatives() const { return utility_.num_alternatives; }
  std::size_t num_latents() const { return latents_.size(); }
  const BoundUtility& utility() const { return utility_; }
  const std::vector<Latent>& latents() const { return latents_; }
  const std::vector<Indicator>& indicators() const { return indicators_; }

  void latent_values(std::span<const double> theta, std::span<const double> socio, std::span<const double> std_draw,
                     std::span<double> a) const;
  // Thresholds of one indicator plus exp(increment) terms used by the chain rule.
  void thresholds(std::span<const double> theta, const Indicator& ind, std::span<double> tau) const;
  StructuralEquation structural_equation(std::span<const double> theta, std::size_t latent,
                                         std::size_t num_socio) const;
  MeasurementSpec measurement(std::span<const double> theta) const;

 private:
  std::size_t num_params_ = 0;
  BoundUtility utility_;
  std::vector<Latent> latents_;
  std::vector<Indicator> indicators_;
};

// Joint simulated log-likelihood of choices and indicators:
//   sum_units ln[(1/R) sum_r prod_tasks P_choice(a_r) prod_indicators P_ind(a_r)]
// The integration unit is the respondent (panel) or a single task. Draws
// are addressed by unit index, and unit results are reduced pairwise in
// unit order, so values do not depend on the thread count.
class SimulatedLikelihood {
 public:
  SimulatedLikelihood(const ModelSpec& spec, const ChoiceDataset& ds, const DrawPlan& plan, int threads = 1);

  std::size_t num_params() const { return model_.num_params(); }
  std::size_t num_units() const { return units_.size(); }
  const CompiledModel& model() const { return model_; }
  const StandardDraws& draws() const { return draws_; }
  const ChoiceDataset& data() const { return *ds_; }

  double value(std::span<const double> theta) const;
  double value_and_gradient(std::span<const double> theta, std::span<double> gradient) const;
  // Per-unit log-likelihoods and (optionally) per-unit scores, unit-major.
  void unit_contributions(std::span<const double> theta, std::span<double> loglik, std::span<double> scores) const;
  // Choice part only: sum_units ln[(1/R) sum_r prod_tasks P_choice(a_r)].
  double choice_component(std::span<const double> theta) const;

 private:
  struct Unit {
    std::size_t respondent = 0;
    std::size_t task_begin = 0;
    std::size_t task_end = 0;
    double indicator_weight = 1.0;
  };
  struct Workspace;

  double unit_loglik(std::span<const double> theta, const Unit& unit, std::size_t unit_index,
                     std::span<const double> tau, bool with_indicators, Workspace& ws, double* score) const;

  CompiledModel model_;
  const ChoiceDataset* ds_;
  std::vector<Unit> units_;
  StandardDraws draws_;
  bool simulate_ = true;
  int threads_ = 1;
};

double simulated_loglik(const ModelSpec& spec, const ParameterVector& params, const ChoiceDataset& ds,
                        const DrawPlan& plan);

}  // namespace iclv
