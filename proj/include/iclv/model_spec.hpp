#pragma once

#include <string>
#include <vector>

#include "iclv/choice_kernel.hpp"
#include "iclv/dataset.hpp"
#include "iclv/draws.hpp"
#include "iclv/parameters.hpp"

namespace iclv {

struct LatentVariable {
  std::string name;
  std::vector<int> regressors;  // socio-demographic indices entering the structural equation
  std::vector<int> indicators;  // indicator indices measuring this latent
};

enum class BicObservations { Tasks, TasksAndIndicators };

struct OptimizerOptions {
  int max_iterations = 1000;
  double gradient_tolerance = 1e-5;  // max-norm of the gradient
  double relative_tolerance = 1e-9;  // relative log-likelihood improvement
  double hessian_step = 1e-4;        // relative central-difference step
  bool robust = false;               // sandwich standard errors
  int threads = 0;                   // 0 = ICLV_THREADS or hardware
  BicObservations bic_observations = BicObservations::Tasks;
};

// Full model description: utilities, latent structure, parameters with
// start values and fixings, draw plan and optimizer settings, and the data
// column map.
struct ModelSpec {
  std::string name = "model";
  std::vector<Alternative> alternatives;
  std::vector<std::string> attribute_names;
  std::vector<std::string> sociodemographic_names;
  std::vector<std::string> indicator_names;
  int likert_categories = 5;

  UtilitySpec utility;
  std::vector<LatentVariable> latents;
  ParameterVector parameters;

  DrawPlan draws;
  OptimizerOptions optimizer;

  std::string choices_file;
  std::string respondents_file;
  ColumnMap columns;

  bool has_latents() const { return !latents.empty(); }
  int alternative_index(std::string_view label) const;
  ColumnMap column_map() const;
};

// Parameter names generated for the latent block.
std::string zeta_name(const std::string& latent);
std::string sigma_name(const std::string& latent);
std::string structural_name(const std::string& latent, const std::string& regressor);
std::string gamma_name(const std::string& indicator);
std::string loading_name(const std::string& indicator);
std::string threshold_name(const std::string& indicator, int k);  // k = 1 .. categories-1

// Adds the structural and measurement parameters implied by `latents`
// (identification: zeta, gamma fixed at 0 and sigma fixed at 1 unless already
// declared) and validates the whole spec.
void finalize(ModelSpec& spec);

// Copy of `spec` with every latent term in the utility and every loading
// fixed to zero (the MNL-nested special case).
ModelSpec with_latents_switched_off(const ModelSpec& spec);

// Checks that a dataset carries the columns the spec refers to.
void check_compatible(const ModelSpec& spec, const ChoiceDataset& ds);

// Sectioned key-value model-spec format. Relative data paths are resolved
// against the spec file's directory.
ModelSpec parse_model_spec(const std::string& text, const std::string& base_dir = ".");
ModelSpec load_model_spec(const std::string& path);
std::string render_model_spec(const ModelSpec& spec);

}  // namespace iclv
