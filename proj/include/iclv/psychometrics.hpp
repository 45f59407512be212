#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iclv/dataset.hpp"

namespace iclv {

struct Scale {
  std::string name;
  std::vector<int> items;  // column indices into ItemBlock::data
};

struct ItemBlock {
  Eigen::MatrixXd data;  // N x S
  std::vector<std::string> names;
  std::vector<Scale> scales;
};

void validate(const ItemBlock& items);

// Indicator responses of a dataset. Scales come from `scales` (item names)
// when given.
ItemBlock item_block(const ChoiceDataset& ds,
                     const std::vector<std::pair<std::string, std::vector<std::string>>>& scales = {});

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& data);

// Sample variances with N - 1. Throws NumericError when the item sum has zero variance.
double cronbach_alpha(const ItemBlock& items, const std::vector<int>& scale);

struct KmoResult {
  double overall = 0.0;
  std::vector<double> per_item;
};

KmoResult kmo(const Eigen::MatrixXd& correlation);
inline KmoResult kmo(const ItemBlock& items) { return kmo(correlation_matrix(items.data)); }

struct EfaResult {
  Eigen::MatrixXd loadings;  // S x m, rotated
  std::vector<double> explained_variance;
  std::vector<double> communalities;
  std::vector<double> eigenvalues;  // of the correlation matrix, descending
};

// Principal components of the correlation matrix, varimax-rotated (Kaiser
// normalisation), factors ordered by explained variance, each factor's
// largest-magnitude loading made positive.
EfaResult efa(const Eigen::MatrixXd& correlation, int n_factors, bool rotate = true);
inline EfaResult efa(const ItemBlock& items, int n_factors, bool rotate = true) {
  return efa(correlation_matrix(items.data), n_factors, rotate);
}

Eigen::MatrixXd varimax(const Eigen::MatrixXd& loadings, bool normalize = true, int max_iterations = 1000,
                        double tolerance = 1e-10);

// Factor with the largest absolute loading for each item.
std::vector<int> dominant_factors(const EfaResult& result);

// True when every item of every scale loads dominantly on one factor and the
// scales use distinct factors.
bool matches_scales(const EfaResult& result, const std::vector<Scale>& scales);

struct PsychReport {
  EfaResult efa;
  std::vector<double> alphas;  // per scale
  KmoResult kmo;
};

PsychReport psych_report(const ItemBlock& items, int n_factors);
std::string render_psych_report(const ItemBlock& items, const PsychReport& report);
std::string psych_report_csv(const ItemBlock& items, const PsychReport& report);

}  // namespace iclv
