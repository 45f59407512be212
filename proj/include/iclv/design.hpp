#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace iclv {

struct AttributeDef {
  std::string name;
  std::vector<double> levels;
  std::vector<std::string> labels;  // optional, one per level
};

struct ScenarioSet {
  std::vector<AttributeDef> attributes;
  std::vector<std::vector<int>> runs;    // R x A level indices
  std::vector<std::vector<int>> blocks;  // run indices per questionnaire; empty when unblocked

  std::size_t num_runs() const { return runs.size(); }
  double level_value(std::size_t run, std::size_t attribute) const {
    return attributes[attribute].levels[static_cast<std::size_t>(runs[run][attribute])];
  }
  int attribute_index(const std::string& name) const;
};

// Attribute levels of the bike-unavailability stated-preference survey.
std::vector<AttributeDef> table1_attributes();

void validate(const std::vector<AttributeDef>& attrs);
void validate(const ScenarioSet& design);

struct DesignOptions {
  std::size_t exhaustive_limit = 200000;  // max candidate subsets for exhaustive search
  int restarts = 20;                      // exchange-heuristic restarts
  int max_passes = 50;
};

// Lexicographic objective: level imbalance first, then the largest absolute
// correlation between effect-coded columns of different attributes.
ScenarioSet generate_design(const std::vector<AttributeDef>& attrs, std::size_t runs, std::uint64_t seed,
                            const DesignOptions& options = {});

// Independent uniform levels per cell.
ScenarioSet random_design(const std::vector<AttributeDef>& attrs, std::size_t runs, std::uint64_t seed);

struct DesignReport {
  std::vector<std::vector<int>> level_counts;  // per attribute, per level
  int imbalance = 0;                           // sum over attributes of (max count - min count)
  double max_abs_correlation = 0.0;
  double sum_sq_correlation = 0.0;
  double d_efficiency = 0.0;  // percent, effect-coded main effects with intercept
};

DesignReport orthogonality_report(const ScenarioSet& design);

// Effect-coded main-effect columns (sum-to-zero), L-1 per attribute.
std::vector<std::vector<double>> effect_columns(const ScenarioSet& design, std::vector<int>* owner = nullptr);

// Seeded partition of the runs into questionnaires of `block_size`, spreading
// each attribute's levels evenly across blocks.
void assign_blocks(ScenarioSet& design, std::size_t block_size, std::uint64_t seed);

std::string design_to_csv(const ScenarioSet& design);
std::string render_design_report(const ScenarioSet& design, const DesignReport& report);

}  // namespace iclv
