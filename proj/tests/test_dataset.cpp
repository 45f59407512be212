#include <fstream>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "iclv/dataset.hpp"
#include "iclv/error.hpp"

using namespace iclv;

namespace {

ColumnMap small_columns() {
  ColumnMap cols;
  cols.attributes = {"time", "cost"};
  cols.sociodemographics = {"male", "age"};
  cols.indicators = {"I1", "I2", "I3"};
  cols.base_alternative = "bus";
  return cols;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
}

}  // namespace

TEST_CASE("dataset round trip preserves every field") {
  testutil::TempDir dir;
  auto ds = testutil::small_dataset(2, 3, 5);
  ds.respondents[0].tasks[1].availability[1] = 0;
  if (ds.respondents[0].tasks[1].chosen == 1) ds.respondents[0].tasks[1].chosen = 0;
  ds.respondents[1].tasks[0].attributes[3] = 0.1 + 0.2;  // not exactly representable in short decimal
  save_dataset(ds, dir.file("c.csv"), dir.file("r.csv"));
  const auto back = load_dataset(dir.file("c.csv"), dir.file("r.csv"), small_columns());
  CHECK(back == ds);
}

TEST_CASE("chosen but unavailable alternative names respondent and task") {
  testutil::TempDir dir;
  write_file(dir.file("c.csv"),
             "respondent_id,task_id,alternative,available,chosen,time,cost\n"
             "1,1,car,1,0,10,1\n1,1,train,0,1,12,2\n1,1,bus,1,0,20,1\n");
  write_file(dir.file("r.csv"), "respondent_id,male,age,I1,I2,I3\n1,1,30,3,4,5\n");
  try {
    load_dataset(dir.file("c.csv"), dir.file("r.csv"), small_columns());
    FAIL("expected an error");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("respondent 1") != std::string::npos);
    CHECK(msg.find("task 1") != std::string::npos);
  }
}

TEST_CASE("Likert value outside the scale is rejected") {
  testutil::TempDir dir;
  write_file(dir.file("c.csv"),
             "respondent_id,task_id,alternative,available,chosen,time,cost\n"
             "1,1,car,1,1,10,1\n1,1,train,1,0,12,2\n1,1,bus,1,0,20,1\n");
  write_file(dir.file("r.csv"), "respondent_id,male,age,I1,I2,I3\n1,1,30,3,6,5\n");
  CHECK_THROWS_WITH_AS(load_dataset(dir.file("c.csv"), dir.file("r.csv"), small_columns()),
                       doctest::Contains("Likert out of range"), DataError);
}

TEST_CASE("missing column and non-finite attribute are rejected") {
  testutil::TempDir dir;
  write_file(dir.file("r.csv"), "respondent_id,male,age,I1,I2,I3\n1,1,30,3,4,5\n");
  write_file(dir.file("c.csv"),
             "respondent_id,task_id,alternative,available,chosen,time\n"
             "1,1,car,1,1,10\n1,1,train,1,0,12\n1,1,bus,1,0,20\n");
  CHECK_THROWS_WITH_AS(load_dataset(dir.file("c.csv"), dir.file("r.csv"), small_columns()),
                       doctest::Contains("missing column 'cost'"), DataError);
  write_file(dir.file("c.csv"),
             "respondent_id,task_id,alternative,available,chosen,time,cost\n"
             "1,1,car,1,1,10,inf\n1,1,train,1,0,12,2\n1,1,bus,1,0,20,1\n");
  CHECK_THROWS_AS(load_dataset(dir.file("c.csv"), dir.file("r.csv"), small_columns()), DataError);
}

TEST_CASE("validation accepts valid datasets and rejects duplicate ids") {
  auto ds = testutil::small_dataset(4, 2);
  CHECK_NOTHROW(validate(ds));
  ds.respondents[1].id = ds.respondents[0].id;
  for (auto& t : ds.respondents[1].tasks) t.respondent_id = ds.respondents[0].id;
  CHECK_THROWS_AS(validate(ds), DataError);
}

TEST_CASE("summarize: all-bus choices") {
  auto ds = testutil::small_dataset(10, 4);
  for (auto& r : ds.respondents)
    for (auto& t : r.tasks) t.chosen = 2;
  const auto s = summarize(ds);
  CHECK(s.choice_shares[2] == 1.0);
  CHECK(s.choice_shares[0] == 0.0);
  CHECK(s.choice_shares[1] == 0.0);
  CHECK(s.tasks == 40);
}

TEST_CASE("summarize: constant indicator has zero spread") {
  auto ds = testutil::small_dataset(10, 1);
  for (auto& r : ds.respondents) r.indicators[0] = 5;
  const auto s = summarize(ds);
  CHECK(s.indicators[0].mean == 5.0);
  CHECK(s.indicators[0].sd == 0.0);
  CHECK(s.indicators[0].category_percent[4] == doctest::Approx(100.0));
}

TEST_CASE("summarize: shares sum to one and ignore respondent order") {
  auto ds = testutil::small_dataset(50, 4, 3);
  const auto a = summarize(ds);
  double total = 0.0;
  for (double p : a.choice_shares) total += p;
  CHECK(std::fabs(total - 1.0) <= 1e-12);
  std::reverse(ds.respondents.begin(), ds.respondents.end());
  const auto b = summarize(ds);
  CHECK(a.choice_shares == b.choice_shares);
  for (std::size_t s = 0; s < a.indicators.size(); ++s) {
    CHECK(a.indicators[s].mean == doctest::Approx(b.indicators[s].mean).epsilon(1e-14));
    CHECK(a.indicators[s].category_percent == b.indicators[s].category_percent);
  }
}

TEST_CASE("summarize: indicator sampled from the SB1 distribution has mean near 4.48") {
  const double freq[] = {0.3, 1.17, 6.15, 34.38, 57.90};
  // Oracle: mean of the normalised cell distribution.
  double total = 0.0, m = 0.0;
  for (int k = 0; k < 5; ++k) {
    total += freq[k];
    m += (k + 1) * freq[k];
  }
  m /= total;
  CHECK(m == doctest::Approx(4.48).epsilon(0.002));

  auto ds = testutil::small_dataset(100000, 1, 8);
  std::mt19937_64 rng(17);
  std::discrete_distribution<int> cat(std::begin(freq), std::end(freq));
  for (auto& r : ds.respondents) r.indicators[0] = 1 + cat(rng);
  const auto s = summarize(ds);
  CHECK(std::fabs(s.indicators[0].mean - 4.48) <= 0.02);
  CHECK(std::fabs(s.indicators[0].mean - m) <= 0.01);
}

TEST_CASE("summarize rejects an empty dataset") {
  auto ds = testutil::small_dataset(0, 0);
  CHECK_THROWS_AS(summarize(ds), DataError);
}
