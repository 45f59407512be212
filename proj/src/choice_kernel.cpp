#include "iclv/choice_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "iclv/error.hpp"
#include "iclv/parallel.hpp"

namespace iclv {

void validate(const UtilitySpec& spec, std::size_t num_attributes, std::size_t num_socio, std::size_t num_latents) {
  for (const auto& t : spec.terms) {
    if (t.alternative < 0 || static_cast<std::size_t>(t.alternative) >= spec.num_alternatives) {
      throw SpecError("utility term '" + t.parameter + "' refers to an unknown alternative");
    }
    const auto idx = static_cast<std::size_t>(t.source_index);
    switch (t.source) {
      case TermSource::Constant:
        if (t.alternative == spec.base_alternative) {
          throw SpecError("base alternative cannot carry a constant ('" + t.parameter + "')");
        }
        break;
      case TermSource::Attribute:
        if (t.source_index < 0 || idx >= num_attributes) throw SpecError("utility term '" + t.parameter + "': unknown attribute");
        break;
      case TermSource::Sociodemographic:
        if (t.source_index < 0 || idx >= num_socio) {
          throw SpecError("utility term '" + t.parameter + "': unknown socio-demographic");
        }
        break;
      case TermSource::Latent:
        if (t.source_index < 0 || idx >= num_latents) throw SpecError("utility term '" + t.parameter + "': unknown latent");
        break;
    }
  }
}

BoundUtility bind(const UtilitySpec& spec, const ParameterVector& params) {
  BoundUtility out;
  out.num_alternatives = spec.num_alternatives;
  out.terms.reserve(spec.terms.size());
  for (const auto& t : spec.terms) {
    out.terms.push_back({t.alternative, t.source, t.source_index, params.index(t.parameter)});
  }
  return out;
}

void systematic_utility(const BoundUtility& utility, std::span<const double> theta, const ChoiceTask& task,
                        std::span<const double> socio, std::span<const double> latents, std::span<double> v) {
  std::fill(v.begin(), v.end(), 0.0);
  for (const auto& t : utility.terms) {
    v[static_cast<std::size_t>(t.alternative)] += theta[t.parameter] * utility.term_value(t, task, socio, latents);
  }
}

std::vector<double> systematic_utility(const UtilitySpec& spec, const ParameterVector& params, const ChoiceTask& task,
                                       std::span<const double> socio, std::span<const double> latents) {
  const auto bound = bind(spec, params);
  const auto theta = params.values();
  std::vector<double> v(spec.num_alternatives);
  systematic_utility(bound, theta, task, socio, latents, v);
  return v;
}

void logit_probabilities(std::span<const double> v, std::span<const char> availability, std::span<double> p) {
  double vmax = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (availability[j]) vmax = std::max(vmax, v[j]);
  }
  if (vmax == -std::numeric_limits<double>::infinity()) throw NumericError("no available alternative");
  double denom = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    p[j] = availability[j] ? std::exp(v[j] - vmax) : 0.0;
    denom += p[j];
  }
  for (auto& x : p) x /= denom;
}

std::vector<double> logit_probabilities(std::span<const double> v, std::span<const char> availability) {
  std::vector<double> p(v.size());
  logit_probabilities(v, availability, p);
  return p;
}

double task_log_probability(std::span<const double> v, const ChoiceTask& task, std::span<double> p) {
  double vmax = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (task.availability[j]) vmax = std::max(vmax, v[j]);
  }
  if (vmax == -std::numeric_limits<double>::infinity()) throw NumericError("no available alternative");
  double denom = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    p[j] = task.availability[j] ? std::exp(v[j] - vmax) : 0.0;
    denom += p[j];
  }
  for (auto& x : p) x /= denom;
  return v[static_cast<std::size_t>(task.chosen)] - vmax - std::log(denom);
}

namespace {

std::span<const double> latents_for(const std::vector<std::vector<double>>& latents, std::size_t n) {
  if (latents.empty()) return {};
  if (n >= latents.size()) throw DataError("latent values missing for a respondent");
  return latents[n];
}

}  // namespace

double choice_loglik(const UtilitySpec& spec, const ParameterVector& params, const ChoiceDataset& ds,
                     const std::vector<std::vector<double>>& latents_per_respondent) {
  const auto bound = bind(spec, params);
  const auto theta = params.values();
  const auto J = ds.num_alternatives();
  std::vector<double> v(J), p(J), per_task;
  per_task.reserve(ds.num_tasks());
  for (std::size_t n = 0; n < ds.respondents.size(); ++n) {
    const auto& r = ds.respondents[n];
    const auto latents = latents_for(latents_per_respondent, n);
    for (const auto& t : r.tasks) {
      systematic_utility(bound, theta, t, r.sociodemographics, latents, v);
      per_task.push_back(task_log_probability(v, t, p));
    }
  }
  return pairwise_sum(per_task);
}

std::vector<double> choice_loglik_gradient(const UtilitySpec& spec, const ParameterVector& params,
                                           const ChoiceDataset& ds,
                                           const std::vector<std::vector<double>>& latents_per_respondent) {
  const auto bound = bind(spec, params);
  const auto theta = params.values();
  const auto J = ds.num_alternatives();
  std::vector<double> v(J), p(J);
  // Score contributions are kept per task so the reduction order is fixed.
  std::vector<std::vector<double>> contributions(params.size());
  for (std::size_t n = 0; n < ds.respondents.size(); ++n) {
    const auto& r = ds.respondents[n];
    const auto latents = latents_for(latents_per_respondent, n);
    for (const auto& t : r.tasks) {
      systematic_utility(bound, theta, t, r.sociodemographics, latents, v);
      task_log_probability(v, t, p);
      std::vector<double> g(params.size(), 0.0);
      for (const auto& term : bound.terms) {
        const double x = bound.term_value(term, t, r.sociodemographics, latents);
        const auto j = static_cast<std::size_t>(term.alternative);
        g[term.parameter] += ((term.alternative == t.chosen ? 1.0 : 0.0) - p[j]) * x;
      }
      for (std::size_t k = 0; k < g.size(); ++k) contributions[k].push_back(g[k]);
    }
  }
  std::vector<double> grad(params.size());
  for (std::size_t k = 0; k < grad.size(); ++k) grad[k] = pairwise_sum(contributions[k]);
  return grad;
}

}  // namespace iclv
