#include "iclv/psychometrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "iclv/error.hpp"
#include "iclv/text.hpp"

namespace iclv {

void validate(const ItemBlock& items) {
  if (items.data.rows() < 2 || items.data.cols() < 2) throw DataError("item block needs at least 2 rows and 2 items");
  if (!items.names.empty() && items.names.size() != static_cast<std::size_t>(items.data.cols()))
    throw DataError("item names do not match the item columns");
  if (!items.data.allFinite()) throw DataError("item block has missing or non-finite entries");
  for (const auto& s : items.scales)
    for (int i : s.items)
      if (i < 0 || i >= items.data.cols()) throw DataError("scale '" + s.name + "' refers to an unknown item");
}

ItemBlock item_block(const ChoiceDataset& ds, const std::vector<std::pair<std::string, std::vector<std::string>>>& scales) {
  ItemBlock b;
  const auto N = static_cast<Eigen::Index>(ds.respondents.size());
  const auto S = static_cast<Eigen::Index>(ds.indicator_names.size());
  b.data.resize(N, S);
  for (Eigen::Index n = 0; n < N; ++n) {
    const auto& r = ds.respondents[static_cast<std::size_t>(n)];
    if (static_cast<Eigen::Index>(r.indicators.size()) != S) throw DataError("respondent without indicator responses");
    for (Eigen::Index s = 0; s < S; ++s) b.data(n, s) = r.indicators[static_cast<std::size_t>(s)];
  }
  b.names = ds.indicator_names;
  for (const auto& [name, items] : scales) {
    Scale sc{name, {}};
    for (const auto& it : items) {
      int idx = ds.indicator_index(it);
      if (idx < 0) throw DataError("unknown indicator '" + it + "'");
      sc.items.push_back(idx);
    }
    b.scales.push_back(std::move(sc));
  }
  return b;
}

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& data) {
  if (data.rows() < 2) throw DataError("need at least 2 observations");
  Eigen::MatrixXd c = data.rowwise() - data.colwise().mean();
  Eigen::MatrixXd cov = (c.transpose() * c) / static_cast<double>(data.rows() - 1);
  Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
  for (Eigen::Index i = 0; i < sd.size(); ++i)
    if (!(sd(i) > 0.0)) throw NumericError("item " + std::to_string(i + 1) + " has zero variance");
  Eigen::MatrixXd r = sd.cwiseInverse().asDiagonal() * cov * sd.cwiseInverse().asDiagonal();
  r.diagonal().setOnes();
  return r;
}

double cronbach_alpha(const ItemBlock& items, const std::vector<int>& scale) {
  if (scale.size() < 2) throw DataError("a scale needs at least 2 items");
  const auto N = items.data.rows();
  if (N < 2) throw DataError("need at least 2 observations");
  const double denom = static_cast<double>(N - 1);
  auto variance = [&](const Eigen::VectorXd& x) { return (x.array() - x.mean()).square().sum() / denom; };
  Eigen::VectorXd total = Eigen::VectorXd::Zero(N);
  double item_var = 0.0;
  for (int i : scale) {
    if (i < 0 || i >= items.data.cols()) throw DataError("scale refers to an unknown item");
    Eigen::VectorXd col = items.data.col(i);
    item_var += variance(col);
    total += col;
  }
  const double total_var = variance(total);
  if (!(total_var > 0.0)) throw NumericError("zero total variance");
  const double k = static_cast<double>(scale.size());
  return k / (k - 1.0) * (1.0 - item_var / total_var);
}

KmoResult kmo(const Eigen::MatrixXd& r) {
  const auto S = r.rows();
  if (S < 2 || r.cols() != S) throw DataError("KMO needs a square correlation matrix with at least 2 items");
  double off = 0.0;
  for (Eigen::Index i = 0; i < S; ++i)
    for (Eigen::Index j = 0; j < S; ++j)
      if (i != j) off += r(i, j) * r(i, j);
  if (off == 0.0) throw NumericError("degenerate correlation structure");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r);
  if (es.eigenvalues().minCoeff() <= 1e-12 * std::max(1.0, es.eigenvalues().maxCoeff()))
    throw NumericError("singular correlation matrix");
  const Eigen::MatrixXd inv = r.inverse();

  KmoResult out;
  out.per_item.assign(static_cast<std::size_t>(S), 0.0);
  double r2_total = 0.0, q2_total = 0.0;
  for (Eigen::Index i = 0; i < S; ++i) {
    double r2 = 0.0, q2 = 0.0;
    for (Eigen::Index j = 0; j < S; ++j) {
      if (i == j) continue;
      const double q = -inv(i, j) / std::sqrt(inv(i, i) * inv(j, j));
      r2 += r(i, j) * r(i, j);
      q2 += q * q;
    }
    out.per_item[static_cast<std::size_t>(i)] = (r2 + q2) > 0.0 ? r2 / (r2 + q2) : 0.0;
    r2_total += r2;
    q2_total += q2;
  }
  out.overall = r2_total / (r2_total + q2_total);
  return out;
}

Eigen::MatrixXd varimax(const Eigen::MatrixXd& loadings, bool normalize, int max_iterations, double tolerance) {
  const auto p = loadings.rows();
  const auto m = loadings.cols();
  if (m < 2) return loadings;
  Eigen::VectorXd sc = Eigen::VectorXd::Ones(p);
  Eigen::MatrixXd x = loadings;
  if (normalize) {
    sc = x.rowwise().norm();
    for (Eigen::Index i = 0; i < p; ++i)
      if (sc(i) > 0.0) x.row(i) /= sc(i);
  }
  Eigen::MatrixXd T = Eigen::MatrixXd::Identity(m, m);
  double d = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::MatrixXd z = x * T;
    const Eigen::RowVectorXd colss = z.array().square().colwise().sum();
    const Eigen::MatrixXd target = z.array().cube().matrix() - z * (colss / static_cast<double>(p)).asDiagonal();
    const Eigen::MatrixXd B = x.transpose() * target;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeFullU | Eigen::ComputeFullV);
    T = svd.matrixU() * svd.matrixV().transpose();
    const double d_old = d;
    d = svd.singularValues().sum();
    if (d < d_old * (1.0 + tolerance)) break;
  }
  Eigen::MatrixXd out = x * T;
  if (normalize)
    for (Eigen::Index i = 0; i < p; ++i)
      if (sc(i) > 0.0) out.row(i) *= sc(i);
  return out;
}

EfaResult efa(const Eigen::MatrixXd& r, int n_factors, bool rotate) {
  const auto S = r.rows();
  if (r.cols() != S || S < 2) throw DataError("EFA needs a square correlation matrix with at least 2 items");
  if (n_factors < 1 || n_factors > S) throw DataError("number of factors must be between 1 and the number of items");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r);
  if (es.info() != Eigen::Success) throw NumericError("eigen-decomposition failed");
  if (es.eigenvalues().minCoeff() < -1e-8) throw NumericError("correlation matrix is not positive semidefinite");

  EfaResult out;
  for (Eigen::Index i = S - 1; i >= 0; --i) out.eigenvalues.push_back(es.eigenvalues()(i));
  Eigen::MatrixXd L(S, n_factors);
  for (int f = 0; f < n_factors; ++f) {
    const Eigen::Index col = S - 1 - f;  // eigenvalues ascend
    L.col(f) = es.eigenvectors().col(col) * std::sqrt(std::max(0.0, es.eigenvalues()(col)));
  }
  if (rotate) L = varimax(L);

  std::vector<int> order(static_cast<std::size_t>(n_factors));
  std::iota(order.begin(), order.end(), 0);
  const Eigen::RowVectorXd ss = L.array().square().colwise().sum();
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return ss(a) > ss(b); });
  out.loadings.resize(S, n_factors);
  for (int f = 0; f < n_factors; ++f) {
    Eigen::VectorXd c = L.col(order[static_cast<std::size_t>(f)]);
    Eigen::Index imax = 0;
    c.cwiseAbs().maxCoeff(&imax);
    if (c(imax) < 0.0) c = -c;
    out.loadings.col(f) = c;
    out.explained_variance.push_back(c.squaredNorm());
  }
  for (Eigen::Index i = 0; i < S; ++i) out.communalities.push_back(out.loadings.row(i).squaredNorm());
  return out;
}

std::vector<int> dominant_factors(const EfaResult& result) {
  std::vector<int> out;
  for (Eigen::Index i = 0; i < result.loadings.rows(); ++i) {
    Eigen::Index f = 0;
    result.loadings.row(i).cwiseAbs().maxCoeff(&f);
    out.push_back(static_cast<int>(f));
  }
  return out;
}

bool matches_scales(const EfaResult& result, const std::vector<Scale>& scales) {
  const auto dom = dominant_factors(result);
  std::vector<int> used;
  for (const auto& s : scales) {
    if (s.items.empty()) return false;
    const int f = dom[static_cast<std::size_t>(s.items.front())];
    for (int i : s.items)
      if (dom[static_cast<std::size_t>(i)] != f) return false;
    if (std::find(used.begin(), used.end(), f) != used.end()) return false;
    used.push_back(f);
  }
  return true;
}

PsychReport psych_report(const ItemBlock& items, int n_factors) {
  validate(items);
  PsychReport rep;
  const Eigen::MatrixXd r = correlation_matrix(items.data);
  rep.efa = efa(r, n_factors);
  for (const auto& s : items.scales) rep.alphas.push_back(cronbach_alpha(items, s.items));
  rep.kmo = kmo(r);
  return rep;
}

namespace {

std::string item_name(const ItemBlock& items, int i) {
  return items.names.empty() ? "item" + std::to_string(i + 1) : items.names[static_cast<std::size_t>(i)];
}

// Items in scale order, then any item outside every scale.
std::vector<std::pair<int, int>> item_order(const ItemBlock& items) {
  std::vector<std::pair<int, int>> out;  // (item, scale or -1)
  std::vector<char> seen(static_cast<std::size_t>(items.data.cols()), 0);
  for (std::size_t s = 0; s < items.scales.size(); ++s)
    for (int i : items.scales[s].items) {
      out.emplace_back(i, static_cast<int>(s));
      seen[static_cast<std::size_t>(i)] = 1;
    }
  for (int i = 0; i < items.data.cols(); ++i)
    if (!seen[static_cast<std::size_t>(i)]) out.emplace_back(i, -1);
  return out;
}

}  // namespace

std::string render_psych_report(const ItemBlock& items, const PsychReport& rep) {
  std::ostringstream os;
  const auto m = rep.efa.loadings.cols();
  char buf[64];
  os << "Scale                 Item      ";
  for (Eigen::Index f = 0; f < m; ++f) {
    std::snprintf(buf, sizeof buf, "  Factor%-3d", static_cast<int>(f + 1));
    os << buf;
  }
  os << "  Communality  Cronbach's alpha\n";
  int last_scale = -2;
  for (auto [i, s] : item_order(items)) {
    const std::string scale = s >= 0 ? items.scales[static_cast<std::size_t>(s)].name : "-";
    std::snprintf(buf, sizeof buf, "%-21s %-9s ", s != last_scale ? scale.c_str() : "", item_name(items, i).c_str());
    os << buf;
    for (Eigen::Index f = 0; f < m; ++f) {
      std::snprintf(buf, sizeof buf, "  %9.3f", rep.efa.loadings(i, f));
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "  %11.3f", rep.efa.communalities[static_cast<std::size_t>(i)]);
    os << buf;
    if (s >= 0 && s != last_scale) os << "  " << text::fixed(rep.alphas[static_cast<std::size_t>(s)], 3);
    os << '\n';
    last_scale = s;
  }
  os << "Explained variance   ";
  for (double v : rep.efa.explained_variance) os << ' ' << text::fixed(v, 3);
  os << "\nKMO " << text::fixed(rep.kmo.overall, 3) << '\n';
  return os.str();
}

std::string psych_report_csv(const ItemBlock& items, const PsychReport& rep) {
  std::ostringstream os;
  os << "scale,item";
  for (Eigen::Index f = 0; f < rep.efa.loadings.cols(); ++f) os << ",factor" << f + 1;
  os << ",communality,alpha,kmo_item\n";
  for (auto [i, s] : item_order(items)) {
    os << (s >= 0 ? items.scales[static_cast<std::size_t>(s)].name : std::string()) << ',' << item_name(items, i);
    for (Eigen::Index f = 0; f < rep.efa.loadings.cols(); ++f) os << ',' << text::format_double(rep.efa.loadings(i, f));
    os << ',' << text::format_double(rep.efa.communalities[static_cast<std::size_t>(i)]) << ','
       << (s >= 0 ? text::format_double(rep.alphas[static_cast<std::size_t>(s)]) : std::string()) << ','
       << text::format_double(rep.kmo.per_item[static_cast<std::size_t>(i)]) << '\n';
  }
  os << "overall,kmo";
  for (Eigen::Index f = 0; f < rep.efa.loadings.cols(); ++f) os << ',';
  os << ",,," << text::format_double(rep.kmo.overall) << '\n';
  return os.str();
}

}  // namespace iclv
