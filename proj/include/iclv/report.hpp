#pragma once

#include <string>
#include <vector>

#include "iclv/estimator.hpp"

namespace iclv {

// Sectioned text file: [summary] key = value lines, then [parameters] as CSV
// (name, role, value, fixed, std_error, t_stat, robust_std_error). Doubles
// are written in shortest round-trip form.
std::string results_to_text(const EstimationResult& r);
EstimationResult parse_results(const std::string& text);
void save_results(const EstimationResult& r, const std::string& path);
EstimationResult load_results(const std::string& path);

// Significance marks: *** |t| >= 2.576, ** >= 1.960, * >= 1.645.
std::string significance_stars(double t);

// Choice-model coefficients side by side (Coef., t-stat per model) followed by
// the model summary block. Parameters of the latent block are listed after
// the utility coefficients when `include_measurement` is set.
std::string render_estimation_table(const std::vector<EstimationResult>& results, bool include_measurement = false);
std::string estimation_csv(const EstimationResult& r);

}  // namespace iclv
