#include "iclv/design.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "iclv/error.hpp"
#include "iclv/text.hpp"

namespace iclv {

int ScenarioSet::attribute_index(const std::string& name) const {
  for (std::size_t a = 0; a < attributes.size(); ++a) {
    if (attributes[a].name == name) return static_cast<int>(a);
  }
  return -1;
}

std::vector<AttributeDef> table1_attributes() {
  return {
      {"weather", {1, 0}, {"rain", "sun"}},
      {"distance", {500, 1000, 1500, 2000}, {}},
      {"commute", {1, 0}, {"work_school", "leisure"}},
      {"bike_wait", {1, 3, 5}, {}},
      {"way_walk", {2, 4, 6}, {}},
      {"detour_walk", {2, 4, 6}, {}},
      {"bus_wait", {5, 10, 15}, {}},
      {"taxi_wait", {8, 15}, {}},
      {"ride_hailing_wait", {5, 10}, {}},
      {"bike_cost", {0, 1.5}, {"free", "1.5 CNY"}},
  };
}

void validate(const std::vector<AttributeDef>& attrs) {
  if (attrs.empty()) throw SpecError("design needs at least one attribute");
  std::set<std::string> names;
  for (const auto& a : attrs) {
    if (!names.insert(a.name).second) throw SpecError("duplicate attribute '" + a.name + "'");
    if (a.levels.size() < 2) throw SpecError("attribute '" + a.name + "' needs at least two levels");
    if (std::set<double>(a.levels.begin(), a.levels.end()).size() != a.levels.size()) {
      throw SpecError("attribute '" + a.name + "' has repeated levels");
    }
    if (!a.labels.empty() && a.labels.size() != a.levels.size()) {
      throw SpecError("attribute '" + a.name + "' has a label count different from its level count");
    }
  }
}

void validate(const ScenarioSet& design) {
  validate(design.attributes);
  for (const auto& run : design.runs) {
    if (run.size() != design.attributes.size()) throw SpecError("design run has the wrong number of attributes");
    for (std::size_t a = 0; a < run.size(); ++a) {
      if (run[a] < 0 || run[a] >= static_cast<int>(design.attributes[a].levels.size())) {
        throw SpecError("level index out of range for attribute '" + design.attributes[a].name + "'");
      }
    }
  }
  if (!design.blocks.empty()) {
    std::vector<int> seen(design.runs.size(), 0);
    for (const auto& b : design.blocks) {
      if (b.size() != design.blocks.front().size()) throw SpecError("blocks have unequal sizes");
      for (int r : b) {
        if (r < 0 || r >= static_cast<int>(seen.size()) || seen[static_cast<std::size_t>(r)]++) {
          throw SpecError("blocks do not partition the runs");
        }
      }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw SpecError("blocks do not partition the runs");
  }
}

std::vector<std::vector<double>> effect_columns(const ScenarioSet& design, std::vector<int>* owner) {
  std::vector<std::vector<double>> cols;
  if (owner) owner->clear();
  const auto R = design.runs.size();
  for (std::size_t a = 0; a < design.attributes.size(); ++a) {
    const int L = static_cast<int>(design.attributes[a].levels.size());
    for (int m = 0; m < L - 1; ++m) {
      std::vector<double> c(R);
      for (std::size_t r = 0; r < R; ++r) {
        const int l = design.runs[r][a];
        c[r] = l == m ? 1.0 : (l == L - 1 ? -1.0 : 0.0);
      }
      cols.push_back(std::move(c));
      if (owner) owner->push_back(static_cast<int>(a));
    }
  }
  return cols;
}

namespace {

struct Objective {
  int imbalance = 0;
  double max_abs = 0.0;
  double sum_sq = 0.0;
};

bool better(const Objective& a, const Objective& b) {
  if (a.imbalance != b.imbalance) return a.imbalance < b.imbalance;
  if (std::fabs(a.max_abs - b.max_abs) > 1e-12) return a.max_abs < b.max_abs;
  return a.sum_sq < b.sum_sq - 1e-12;
}

int imbalance_of(const ScenarioSet& d, std::vector<std::vector<int>>* counts_out = nullptr) {
  int total = 0;
  std::vector<std::vector<int>> counts;
  for (std::size_t a = 0; a < d.attributes.size(); ++a) {
    std::vector<int> c(d.attributes[a].levels.size(), 0);
    for (const auto& run : d.runs) ++c[static_cast<std::size_t>(run[a])];
    total += *std::max_element(c.begin(), c.end()) - *std::min_element(c.begin(), c.end());
    counts.push_back(std::move(c));
  }
  if (counts_out) *counts_out = std::move(counts);
  return total;
}

Objective correlation_objective(const ScenarioSet& d) {
  Objective obj;
  obj.imbalance = imbalance_of(d);
  std::vector<int> owner;
  auto cols = effect_columns(d, &owner);
  std::vector<double> norm(cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const double mean = std::accumulate(cols[i].begin(), cols[i].end(), 0.0) / static_cast<double>(cols[i].size());
    double ss = 0.0;
    for (double& x : cols[i]) {
      x -= mean;
      ss += x * x;
    }
    norm[i] = std::sqrt(ss);
  }
  for (std::size_t i = 0; i < cols.size(); ++i) {
    for (std::size_t j = i + 1; j < cols.size(); ++j) {
      if (owner[i] == owner[j] || norm[i] == 0.0 || norm[j] == 0.0) continue;
      const double r = std::inner_product(cols[i].begin(), cols[i].end(), cols[j].begin(), 0.0) / (norm[i] * norm[j]);
      obj.max_abs = std::max(obj.max_abs, std::min(1.0, std::fabs(r)));
      obj.sum_sq += r * r;
    }
  }
  return obj;
}

std::size_t full_factorial_size(const std::vector<AttributeDef>& attrs) {
  std::size_t n = 1;
  for (const auto& a : attrs) {
    n *= a.levels.size();
    if (n > 1000000) return n;
  }
  return n;
}

// Number of size-k subsets of n items, saturating at `cap`.
std::size_t binomial_capped(std::size_t n, std::size_t k, std::size_t cap) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
    if (c > static_cast<double>(cap)) return cap + 1;
  }
  return static_cast<std::size_t>(std::llround(c));
}

std::vector<std::vector<int>> full_factorial(const std::vector<AttributeDef>& attrs) {
  std::vector<std::vector<int>> rows{{}};
  for (const auto& a : attrs) {
    std::vector<std::vector<int>> next;
    for (const auto& r : rows) {
      for (int l = 0; l < static_cast<int>(a.levels.size()); ++l) {
        auto e = r;
        e.push_back(l);
        next.push_back(std::move(e));
      }
    }
    rows = std::move(next);
  }
  return rows;
}

ScenarioSet exhaustive_design(const std::vector<AttributeDef>& attrs, std::size_t runs) {
  const auto candidates = full_factorial(attrs);
  const auto F = candidates.size();
  std::vector<std::size_t> pick(runs);
  std::iota(pick.begin(), pick.end(), 0);
  ScenarioSet best, trial;
  best.attributes = trial.attributes = attrs;
  Objective best_obj;
  bool have = false;
  while (true) {
    trial.runs.clear();
    for (auto i : pick) trial.runs.push_back(candidates[i]);
    const auto obj = correlation_objective(trial);
    if (!have || better(obj, best_obj)) {
      best = trial;
      best_obj = obj;
      have = true;
    }
    // Next combination in lexicographic order.
    std::size_t i = runs;
    while (i > 0 && pick[i - 1] == F - runs + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < runs; ++j) pick[j] = pick[j - 1] + 1;
  }
  return best;
}

ScenarioSet exchange_design(const std::vector<AttributeDef>& attrs, std::size_t runs, std::uint64_t seed,
                            const DesignOptions& options) {
  std::mt19937_64 rng(seed);
  ScenarioSet best;
  Objective best_obj;
  bool have = false;
  for (int restart = 0; restart < std::max(1, options.restarts); ++restart) {
    ScenarioSet d;
    d.attributes = attrs;
    d.runs.assign(runs, std::vector<int>(attrs.size()));
    for (std::size_t a = 0; a < attrs.size(); ++a) {
      std::vector<int> col(runs);
      for (std::size_t r = 0; r < runs; ++r) col[r] = static_cast<int>(r % attrs[a].levels.size());
      std::shuffle(col.begin(), col.end(), rng);
      for (std::size_t r = 0; r < runs; ++r) d.runs[r][a] = col[r];
    }
    auto obj = correlation_objective(d);
    for (int pass = 0; pass < options.max_passes; ++pass) {
      bool improved = false;
      for (std::size_t a = 0; a < attrs.size(); ++a) {
        for (std::size_t i = 0; i < runs; ++i) {
          for (std::size_t j = i + 1; j < runs; ++j) {
            if (d.runs[i][a] == d.runs[j][a]) continue;
            std::swap(d.runs[i][a], d.runs[j][a]);
            const auto trial = correlation_objective(d);
            if (better(trial, obj)) {
              obj = trial;
              improved = true;
            } else {
              std::swap(d.runs[i][a], d.runs[j][a]);
            }
          }
        }
      }
      if (!improved) break;
    }
    if (!have || better(obj, best_obj)) {
      best = d;
      best_obj = obj;
      have = true;
    }
  }
  return best;
}

}  // namespace

ScenarioSet generate_design(const std::vector<AttributeDef>& attrs, std::size_t runs, std::uint64_t seed,
                            const DesignOptions& options) {
  validate(attrs);
  std::size_t max_levels = 0;
  for (const auto& a : attrs) max_levels = std::max(max_levels, a.levels.size());
  if (runs < max_levels) {
    throw SpecError("infeasible run count: " + std::to_string(runs) + " runs cannot show all " +
                    std::to_string(max_levels) + " levels");
  }
  if (runs < attrs.size() + 1) {
    throw SpecError("infeasible run count: " + std::to_string(runs) + " runs for " + std::to_string(attrs.size()) +
                    " attributes (need at least attributes + 1)");
  }
  const auto F = full_factorial_size(attrs);
  if (F <= 4096 && runs <= F && binomial_capped(F, runs, options.exhaustive_limit) <= options.exhaustive_limit) {
    return exhaustive_design(attrs, runs);
  }
  return exchange_design(attrs, runs, seed, options);
}

ScenarioSet random_design(const std::vector<AttributeDef>& attrs, std::size_t runs, std::uint64_t seed) {
  validate(attrs);
  std::mt19937_64 rng(seed);
  ScenarioSet d;
  d.attributes = attrs;
  d.runs.assign(runs, std::vector<int>(attrs.size()));
  for (auto& run : d.runs) {
    for (std::size_t a = 0; a < attrs.size(); ++a) {
      std::uniform_int_distribution<int> pick(0, static_cast<int>(attrs[a].levels.size()) - 1);
      run[a] = pick(rng);
    }
  }
  return d;
}

DesignReport orthogonality_report(const ScenarioSet& design) {
  validate(design);
  DesignReport rep;
  rep.imbalance = imbalance_of(design, &rep.level_counts);
  const auto obj = correlation_objective(design);
  rep.max_abs_correlation = obj.max_abs;
  rep.sum_sq_correlation = obj.sum_sq;

  const auto cols = effect_columns(design);
  const auto R = static_cast<Eigen::Index>(design.runs.size());
  const auto p = static_cast<Eigen::Index>(cols.size() + 1);
  Eigen::MatrixXd X(R, p);
  for (Eigen::Index r = 0; r < R; ++r) {
    X(r, 0) = 1.0;
    for (Eigen::Index c = 1; c < p; ++c) X(r, c) = cols[static_cast<std::size_t>(c - 1)][static_cast<std::size_t>(r)];
  }
  const Eigen::MatrixXd info = X.transpose() * X;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  double logdet = 0.0;
  bool singular = false;
  for (Eigen::Index i = 0; i < p; ++i) {
    const double d = ldlt.vectorD()(i);
    if (!(d > 1e-10)) singular = true;
    else logdet += std::log(d);
  }
  rep.d_efficiency = singular ? 0.0 : 100.0 * std::exp(logdet / static_cast<double>(p)) / static_cast<double>(R);
  return rep;
}

namespace {

double block_cost(const ScenarioSet& d, const std::vector<std::vector<int>>& blocks) {
  double cost = 0.0;
  for (const auto& b : blocks) {
    for (std::size_t a = 0; a < d.attributes.size(); ++a) {
      const auto L = d.attributes[a].levels.size();
      std::vector<int> c(L, 0);
      for (int r : b) ++c[static_cast<std::size_t>(d.runs[static_cast<std::size_t>(r)][a])];
      const double target = static_cast<double>(b.size()) / static_cast<double>(L);
      for (int x : c) cost += (x - target) * (x - target);
    }
  }
  return cost;
}

}  // namespace

void assign_blocks(ScenarioSet& design, std::size_t block_size, std::uint64_t seed) {
  const auto R = design.runs.size();
  if (block_size == 0 || R % block_size != 0) {
    throw SpecError("block size " + std::to_string(block_size) + " does not divide " + std::to_string(R) + " runs");
  }
  std::mt19937_64 rng(seed);
  std::vector<int> order(R);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto B = R / block_size;
  std::vector<std::vector<int>> blocks(B);
  for (std::size_t i = 0; i < R; ++i) blocks[i / block_size].push_back(order[i]);

  double cost = block_cost(design, blocks);
  for (bool improved = true; improved;) {
    improved = false;
    for (std::size_t b1 = 0; b1 < B; ++b1) {
      for (std::size_t b2 = b1 + 1; b2 < B; ++b2) {
        for (std::size_t i = 0; i < block_size; ++i) {
          for (std::size_t j = 0; j < block_size; ++j) {
            std::swap(blocks[b1][i], blocks[b2][j]);
            const double trial = block_cost(design, blocks);
            if (trial < cost - 1e-12) {
              cost = trial;
              improved = true;
            } else {
              std::swap(blocks[b1][i], blocks[b2][j]);
            }
          }
        }
      }
    }
  }
  for (auto& b : blocks) std::sort(b.begin(), b.end());
  design.blocks = std::move(blocks);
}

std::string design_to_csv(const ScenarioSet& design) {
  std::vector<int> block_of(design.runs.size(), 0);
  for (std::size_t b = 0; b < design.blocks.size(); ++b) {
    for (int r : design.blocks[b]) block_of[static_cast<std::size_t>(r)] = static_cast<int>(b + 1);
  }
  std::ostringstream os;
  os << "run,block";
  for (const auto& a : design.attributes) os << ',' << a.name;
  os << '\n';
  for (std::size_t r = 0; r < design.runs.size(); ++r) {
    os << r + 1 << ',' << block_of[r];
    for (std::size_t a = 0; a < design.attributes.size(); ++a) os << ',' << text::format_double(design.level_value(r, a));
    os << '\n';
  }
  return os.str();
}

std::string render_design_report(const ScenarioSet& design, const DesignReport& report) {
  std::ostringstream os;
  os << "runs: " << design.runs.size() << "\n";
  if (!design.blocks.empty()) {
    os << "blocks: " << design.blocks.size() << " x " << design.blocks.front().size() << "\n";
  }
  os << "level counts:\n";
  for (std::size_t a = 0; a < design.attributes.size(); ++a) {
    os << "  " << design.attributes[a].name << ":";
    for (std::size_t l = 0; l < report.level_counts[a].size(); ++l) {
      os << ' ' << text::format_double(design.attributes[a].levels[l]) << '=' << report.level_counts[a][l];
    }
    os << '\n';
  }
  os << "imbalance: " << report.imbalance << "\n";
  os << "max |correlation|: " << text::fixed(report.max_abs_correlation, 4) << "\n";
  os << "D-efficiency (%): " << text::fixed(report.d_efficiency, 2) << "\n";
  return os.str();
}

}  // namespace iclv
