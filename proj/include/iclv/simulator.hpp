#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "iclv/dataset.hpp"
#include "iclv/design.hpp"
#include "iclv/draws.hpp"
#include "iclv/estimator.hpp"
#include "iclv/model_spec.hpp"
#include "iclv/parameters.hpp"

namespace iclv {

// Discrete marginal of one socio-demographic variable; probabilities are
// renormalised when sampled.
struct CategoricalMarginal {
  std::string name;
  std::vector<double> values;
  std::vector<double> probabilities;
};

// Sample characteristics: gender (male=1), age (under 36 = 1), education
// (high school or below = 1), income (under 5000 CNY = 1), weekly shared-bike
// days (1..7) and usual ride-time category (1..5).
std::vector<CategoricalMarginal> table3_marginals();

// Fills task.attributes (J x K) and availability for one design run.
using ScenarioMapper = std::function<void(const ScenarioSet&, std::size_t run, ChoiceTask&)>;

// Attribute columns of the seven-mode dataset.
std::vector<std::string> dbs_attribute_names();
// Seven-mode mapping of a table1_attributes() run. Columns follow
// dbs_attribute_names(): weather, commute, access_time, ride_time, cost.
void dbs_scenario(const ScenarioSet& design, std::size_t run, ChoiceTask& task);

struct TruthConfig {
  ModelSpec spec;
  ParameterVector truth;  // values for spec.parameters, matched by name
  std::size_t respondents = 551;
  std::size_t tasks_per_respondent = 4;
  std::vector<CategoricalMarginal> socio = table3_marginals();
  ScenarioSet design;
  ScenarioMapper scenario = dbs_scenario;
  std::uint64_t seed = 1;
};

// Full parameter vector of cfg.spec with truth values applied by name.
std::vector<double> truth_vector(const TruthConfig& cfg);
void validate(const TruthConfig& cfg);

ChoiceDataset simulate_dataset(const TruthConfig& cfg, int threads = 1);

struct ParameterRecovery {
  std::string name;
  double truth = 0.0;
  double mean_estimate = 0.0;
  double bias = 0.0;
  double rmse = 0.0;
  double coverage = 0.0;         // share of replications with |est - truth| <= 2 SE
  double sign_agreement = 0.0;   // share of replications with sign(est) == sign(truth)
  std::size_t replications = 0;  // successful replications contributing
};

struct RecoveryReport {
  std::vector<ParameterRecovery> parameters;  // free parameters only
  std::size_t replications = 0;
  std::size_t failures = 0;  // estimation threw, did not converge or had a singular Hessian
  std::size_t covered_pairs = 0;
  std::size_t total_pairs = 0;
  std::vector<std::string> failure_messages;
  double mean_coverage() const {
    return total_pairs ? static_cast<double>(covered_pairs) / static_cast<double>(total_pairs) : 0.0;
  }
};

using RecoveryProgress = std::function<void(std::size_t replication, const EstimationResult*, const std::string& error)>;

// Simulate and re-estimate `replications` times. Replication r uses the
// dataset seed derive_seed(cfg.seed, r).
RecoveryReport recovery_study(const TruthConfig& cfg, std::size_t replications, const DrawPlan& plan,
                              const OptimizerOptions& options, const RecoveryProgress& progress = {});

std::string render_recovery(const RecoveryReport& report);

// Seven-mode model with the utility terms of the published ICLV-MNL model.
// `latents` false gives the plain MNL with the same choice terms.
std::string table6_spec_text(bool latents);
ModelSpec table6_spec(bool latents);
// Published coefficients as truth; structural coefficients, loadings and
// thresholds are set so that the simulated indicators resemble the published
// item loadings and response distributions.
ParameterVector table6_truth(const ModelSpec& spec);
TruthConfig table6_truth_config(bool latents, std::uint64_t seed);

}  // namespace iclv
