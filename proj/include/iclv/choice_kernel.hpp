#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "iclv/dataset.hpp"
#include "iclv/parameters.hpp"

namespace iclv {

enum class TermSource { Constant, Attribute, Sociodemographic, Latent };

// One additive term of an alternative's systematic utility:
// parameter * (1 | attribute | socio-demographic | latent variable).
struct UtilityTerm {
  int alternative = 0;
  TermSource source = TermSource::Constant;
  int source_index = 0;
  std::string parameter;
};

struct UtilitySpec {
  std::size_t num_alternatives = 0;
  int base_alternative = 0;
  std::vector<UtilityTerm> terms;
};

// Checks the invariants (no ASC on the base, indices in range).
void validate(const UtilitySpec& spec, std::size_t num_attributes, std::size_t num_socio, std::size_t num_latents);

struct BoundTerm {
  int alternative = 0;
  TermSource source = TermSource::Constant;
  int source_index = 0;
  std::size_t parameter = 0;
};

// UtilitySpec with parameter names resolved to indices.
struct BoundUtility {
  std::size_t num_alternatives = 0;
  std::vector<BoundTerm> terms;

  double term_value(const BoundTerm& t, const ChoiceTask& task, std::span<const double> socio,
                    std::span<const double> latents) const {
    switch (t.source) {
      case TermSource::Constant: return 1.0;
      case TermSource::Attribute: return task.attribute(t.alternative, static_cast<std::size_t>(t.source_index));
      case TermSource::Sociodemographic: return socio[static_cast<std::size_t>(t.source_index)];
      case TermSource::Latent: return latents[static_cast<std::size_t>(t.source_index)];
    }
    return 0.0;
  }
};

// Throws SpecError for an unknown parameter id.
BoundUtility bind(const UtilitySpec& spec, const ParameterVector& params);

void systematic_utility(const BoundUtility& utility, std::span<const double> theta, const ChoiceTask& task,
                        std::span<const double> socio, std::span<const double> latents, std::span<double> v);
std::vector<double> systematic_utility(const UtilitySpec& spec, const ParameterVector& params, const ChoiceTask& task,
                                       std::span<const double> socio, std::span<const double> latents);

// Logit probabilities with max subtraction; unavailable alternatives get exactly
// zero. Throws NumericError when nothing is available.
void logit_probabilities(std::span<const double> v, std::span<const char> availability, std::span<double> p);
std::vector<double> logit_probabilities(std::span<const double> v, std::span<const char> availability);

// log P(chosen) for one task; `p` receives the probabilities.
double task_log_probability(std::span<const double> v, const ChoiceTask& task, std::span<double> p);

// Latents are given per respondent (outer index follows ds.respondents); an
// empty outer vector means "no latent variables".
double choice_loglik(const UtilitySpec& spec, const ParameterVector& params, const ChoiceDataset& ds,
                     const std::vector<std::vector<double>>& latents_per_respondent);
// Gradient with respect to every entry of `params` (fixed entries included).
std::vector<double> choice_loglik_gradient(const UtilitySpec& spec, const ParameterVector& params,
                                           const ChoiceDataset& ds,
                                           const std::vector<std::vector<double>>& latents_per_respondent);

}  // namespace iclv
