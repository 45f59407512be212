#pragma once

#include <optional>
#include <string>
#include <vector>

#include "iclv/dataset.hpp"
#include "iclv/draws.hpp"
#include "iclv/estimator.hpp"
#include "iclv/model_spec.hpp"

namespace iclv {

enum class EffectMethod { Analytic, FiniteDifference };
enum class Averaging { SampleAverage, AtMeans };

std::string_view to_string(EffectMethod m);
std::string_view to_string(Averaging a);

struct EffectResult {
  std::string variable;
  std::string alternative;
  double marginal_effect = 0.0;
  std::optional<double> elasticity;  // absent for dummies
  bool dummy = false;
  EffectMethod method = EffectMethod::Analytic;
  Averaging averaging = Averaging::SampleAverage;
  std::size_t observations = 0;
};

struct EffectOptions {
  EffectMethod method = EffectMethod::Analytic;
  Averaging averaging = Averaging::SampleAverage;
  double relative_step = 1e-3;  // finite-difference perturbation of x (0.1%)
};

// Spec plus full parameter vector. Latent variables are integrated with the
// draw plan; each respondent uses its own block of draws.
struct FittedModel {
  ModelSpec spec;
  std::vector<double> theta;
  DrawPlan plan;
};

FittedModel fitted_model(const ModelSpec& spec, const EstimationResult& result, const DrawPlan& plan);

// Own-attribute point elasticity of the alternative's probability, averaged
// over tasks where the alternative is available. Throws SpecError for 0/1
// variables (use marginal_effect) and for variables absent from the
// alternative's utility.
EffectResult elasticity(const FittedModel& model, const ChoiceDataset& ds, const std::string& variable,
                        const std::string& alternative, const EffectOptions& options = {});

// Continuous variables: dP/dx. 0/1 variables: P(x=1) - P(x=0) with every
// other input held fixed. A socio-demographic variable acts through the
// utility and through the structural equations; a scenario attribute that is
// 0/1 (weather, purpose) is switched in every alternative.
EffectResult marginal_effect(const FittedModel& model, const ChoiceDataset& ds, const std::string& variable,
                             const std::string& alternative, const EffectOptions& options = {});

// Simulated choice probabilities of every task, respondent-major. Mainly for
// checks.
std::vector<std::vector<double>> simulated_probabilities(const FittedModel& model, const ChoiceDataset& ds);

// Every (variable, alternative) pair carrying a coefficient in the utility.
std::vector<EffectResult> effects_table(const FittedModel& model, const ChoiceDataset& ds, const EffectOptions& options = {});

std::string effects_to_csv(const std::vector<EffectResult>& effects);
std::string render_effects(const std::vector<EffectResult>& effects);

}  // namespace iclv
