#include "iclv/draws.hpp"

#include <algorithm>
#include <string>

#include "iclv/error.hpp"
#include "iclv/normal.hpp"

namespace iclv {

bool is_prime(int n) {
  if (n < 2) return false;
  for (int d = 2; d * d <= n; ++d) {
    if (n % d == 0) return false;
  }
  return true;
}

std::vector<int> first_primes(std::size_t count) {
  std::vector<int> out;
  for (int n = 2; out.size() < count; ++n) {
    if (is_prime(n)) out.push_back(n);
  }
  return out;
}

std::vector<double> halton_sequence(int base, std::size_t count, std::size_t skip) {
  if (!is_prime(base)) throw NumericError("halton_sequence: base " + std::to_string(base) + " is not prime");
  if (count < 1) throw NumericError("halton_sequence: count must be positive");
  std::vector<double> out(count);
  const double inv_base = 1.0 / base;
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t index = skip + i + 1;
    double f = inv_base;
    double value = 0.0;
    while (index > 0) {
      value += f * static_cast<double>(index % static_cast<std::size_t>(base));
      index /= static_cast<std::size_t>(base);
      f *= inv_base;
    }
    out[i] = value;
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

void validate(const DrawPlan& plan, std::size_t dimensions) {
  if (plan.draws < 1) throw NumericError("draw plan needs at least one draw");
  if (plan.sequence == DrawSequence::Halton && !plan.bases.empty()) {
    if (plan.bases.size() < dimensions) throw NumericError("draw plan lists fewer Halton bases than latent dimensions");
    for (std::size_t i = 0; i < plan.bases.size(); ++i) {
      if (!is_prime(plan.bases[i])) throw NumericError("Halton base " + std::to_string(plan.bases[i]) + " is not prime");
      for (std::size_t j = 0; j < i; ++j) {
        if (plan.bases[i] == plan.bases[j]) throw NumericError("Halton bases must be distinct");
      }
    }
  }
}

StandardDraws::StandardDraws(const DrawPlan& plan, std::size_t units, std::size_t dimensions)
    : units_(units), draws_(static_cast<std::size_t>(plan.draws)), dims_(dimensions) {
  validate(plan, dimensions);
  values_.assign(units_ * draws_ * dims_, 0.0);
  if (dims_ == 0 || units_ == 0) return;

  if (plan.sequence == DrawSequence::Halton) {
    const auto bases = plan.bases.empty() ? first_primes(dims_) : plan.bases;
    for (std::size_t d = 0; d < dims_; ++d) {
      // Consecutive blocks of the sequence are handed out by unit index.
      const auto seq = halton_sequence(bases[d], units_ * draws_, plan.skip);
      for (std::size_t i = 0; i < seq.size(); ++i) values_[i * dims_ + d] = inv_normal_cdf(seq[i]);
    }
    return;
  }

  for (std::size_t u = 0; u < units_; ++u) {
    std::mt19937_64 rng(derive_seed(plan.seed, u));
    for (std::size_t i = 0; i < draws_ * dims_; ++i) {
      values_[u * draws_ * dims_ + i] = inv_normal_cdf(uniform_open01(rng));
    }
  }
}

}  // namespace iclv
