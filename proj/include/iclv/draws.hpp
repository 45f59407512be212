#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace iclv {

bool is_prime(int n);
std::vector<int> first_primes(std::size_t count);

// Radical-inverse values for indices skip+1 .. skip+count.
std::vector<double> halton_sequence(int base, std::size_t count, std::size_t skip);

// Stateless seed derivation (splitmix64) so every stream is addressable by index.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// Uniform on the open interval (0,1) with 53-bit resolution.
inline double uniform_open01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

enum class DrawSequence { Halton, PseudoRandom };
enum class IntegrationUnit { Respondent, Task };

struct DrawPlan {
  int draws = 500;
  DrawSequence sequence = DrawSequence::Halton;
  std::size_t skip = 10;
  std::uint64_t seed = 1;
  std::vector<int> bases;  // empty: first primes, one per latent dimension
  IntegrationUnit unit = IntegrationUnit::Respondent;
};

void validate(const DrawPlan& plan, std::size_t dimensions);

// Standard-normal draws laid out as unit x draw x dimension. Draws for unit u
// depend only on (plan, u), never on how many units are evaluated or in
// which order.
class StandardDraws {
 public:
  StandardDraws() = default;
  StandardDraws(const DrawPlan& plan, std::size_t units, std::size_t dimensions);

  std::size_t units() const { return units_; }
  std::size_t draws() const { return draws_; }
  std::size_t dimensions() const { return dims_; }

  std::span<const double> at(std::size_t unit, std::size_t draw) const {
    return {values_.data() + (unit * draws_ + draw) * dims_, dims_};
  }

 private:
  std::size_t units_ = 0;
  std::size_t draws_ = 0;
  std::size_t dims_ = 0;
  std::vector<double> values_;
};

}  // namespace iclv
