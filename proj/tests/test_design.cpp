#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "iclv/design.hpp"
#include "iclv/error.hpp"

using namespace iclv;

namespace {

// Pearson correlation of two columns, computed directly.
double corr(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i] / n;
    mb += b[i] / n;
  }
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("two 2-level attributes in 4 runs give the full factorial") {
  const std::vector<AttributeDef> attrs = {{"a", {0, 1}, {}}, {"b", {0, 1}, {}}};
  const auto d = generate_design(attrs, 4, 1);
  auto runs = d.runs;
  std::sort(runs.begin(), runs.end());
  CHECK(runs == std::vector<std::vector<int>>{{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  CHECK(orthogonality_report(d).max_abs_correlation == doctest::Approx(0.0));
}

TEST_CASE("one 3-level attribute in 3 runs uses each level once") {
  const auto d = generate_design({{"a", {1, 2, 3}, {}}}, 3, 9);
  const auto rep = orthogonality_report(d);
  CHECK(rep.level_counts[0] == std::vector<int>{1, 1, 1});
}

TEST_CASE("32-run survey design: balanced levels and reported correlation") {
  const auto attrs = table1_attributes();
  std::vector<std::size_t> levels;
  for (const auto& a : attrs) levels.push_back(a.levels.size());
  CHECK(levels == std::vector<std::size_t>{2, 4, 2, 3, 3, 3, 3, 2, 2, 2});
  const auto d = generate_design(attrs, 32, 7);
  const auto rep = orthogonality_report(d);
  for (std::size_t a = 0; a < attrs.size(); ++a) {
    auto counts = rep.level_counts[a];
    int total = 0;
    for (int c : counts) total += c;
    CHECK(total == 32);
    std::sort(counts.begin(), counts.end());
    if (attrs[a].levels.size() == 3) CHECK(counts == std::vector<int>{10, 11, 11});
    CHECK(counts.back() - counts.front() <= 1);
  }
  CHECK(rep.max_abs_correlation >= 0.0);
  CHECK(rep.max_abs_correlation <= 1.0);
  CHECK(render_design_report(d, rep).find("max |correlation|") != std::string::npos);
}

TEST_CASE("report correlation agrees with a direct computation") {
  const auto d = random_design(table1_attributes(), 32, 3);
  std::vector<int> owner;
  const auto cols = effect_columns(d, &owner);
  double worst = 0.0;
  for (std::size_t i = 0; i < cols.size(); ++i)
    for (std::size_t j = i + 1; j < cols.size(); ++j)
      if (owner[i] != owner[j]) worst = std::max(worst, std::fabs(corr(cols[i], cols[j])));
  CHECK(orthogonality_report(d).max_abs_correlation == doctest::Approx(worst).epsilon(1e-12));
}

TEST_CASE("identical columns have correlation one") {
  ScenarioSet d;
  d.attributes = {{"a", {0, 1}, {}}, {"b", {0, 1}, {}}};
  d.runs = {{0, 0}, {1, 1}, {0, 0}, {1, 1}};
  CHECK(orthogonality_report(d).max_abs_correlation == doctest::Approx(1.0));
}

TEST_CASE("optimised design beats random designs") {
  const auto attrs = table1_attributes();
  const auto best = orthogonality_report(generate_design(attrs, 32, 7));
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto r = orthogonality_report(random_design(attrs, 32, 500 + s));
    CHECK(r.max_abs_correlation > best.max_abs_correlation);
    CHECK(r.imbalance >= best.imbalance);
  }
}

TEST_CASE("design generation is deterministic per seed") {
  const auto attrs = table1_attributes();
  CHECK(design_to_csv(generate_design(attrs, 32, 4)) == design_to_csv(generate_design(attrs, 32, 4)));
}

TEST_CASE("infeasible run counts are rejected") {
  const auto attrs = table1_attributes();
  CHECK_THROWS_AS(generate_design(attrs, 3, 1), SpecError);
  CHECK_THROWS_AS(generate_design(attrs, 10, 1), SpecError);
  CHECK_THROWS(validate(std::vector<AttributeDef>{{"a", {1}, {}}}));
  CHECK_THROWS(validate(std::vector<AttributeDef>{{"a", {1, 1}, {}}}));
}

TEST_CASE("blocking gives equal blocks covering every run once") {
  auto d = generate_design(table1_attributes(), 32, 7);
  assign_blocks(d, 4, 11);
  REQUIRE(d.blocks.size() == 8);
  std::vector<int> seen(32, 0);
  for (const auto& b : d.blocks) {
    CHECK(b.size() == 4);
    for (int r : b) ++seen[static_cast<std::size_t>(r)];
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
  CHECK_THROWS(assign_blocks(d, 5, 1));
}
