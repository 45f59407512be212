#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "iclv/dataset.hpp"
#include "iclv/model_spec.hpp"
#include "iclv/simulator.hpp"

namespace testutil {

// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("iclv_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

// Three alternatives (car, train, bus = base), one attribute `time`, socio
// `male`, `age`, indicators I1..I3 on a 5-point scale.
inline iclv::ChoiceDataset small_dataset(int respondents, int tasks, std::uint64_t seed = 1) {
  iclv::ChoiceDataset ds;
  ds.alternatives = {{0, "car", false}, {1, "train", false}, {2, "bus", true}};
  ds.attribute_names = {"time", "cost"};
  ds.sociodemographic_names = {"male", "age"};
  ds.indicator_names = {"I1", "I2", "I3"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < respondents; ++n) {
    iclv::Respondent r;
    r.id = n + 1;
    r.sociodemographics = {u(rng) < 0.5 ? 1.0 : 0.0, 20.0 + 40.0 * u(rng)};
    for (int s = 0; s < 3; ++s) r.indicators.push_back(1 + static_cast<int>(u(rng) * 5.0));
    for (int t = 0; t < tasks; ++t) {
      iclv::ChoiceTask task;
      task.respondent_id = r.id;
      task.task_id = t + 1;
      task.num_attributes = 2;
      for (int j = 0; j < 3; ++j) {
        task.attributes.push_back(10.0 + 30.0 * u(rng));
        task.attributes.push_back(1.0 + 4.0 * u(rng));
      }
      task.availability = {1, 1, 1};
      task.chosen = static_cast<int>(u(rng) * 3.0);
      r.tasks.push_back(task);
    }
    ds.respondents.push_back(r);
  }
  return ds;
}

// Spec over small_dataset(); `latent` adds one latent variable measured by
// I1..I3 and entering car and train.
inline std::string small_spec_text(bool latent) {
  std::string s =
      "[model]\nname = small\n\n[alternatives]\ncar\ntrain\nbus = base\n\n"
      "[data]\nattributes = time cost\nsociodemographics = male age\nindicators = I1 I2 I3\n";
  s +=
      "\n[utility]\nasc.car = car : asc\nasc.train = train : asc\n"
      "beta.time = car train bus : attr time\nbeta.cost = car train bus : attr cost\n"
      "beta.male.car = car : socio male\n";
  if (latent) s += "lambda.attitude = car train : latent attitude\n\n[latent attitude]\nindicators = I1 I2 I3\nregressors = male\n";
  s += "\n[draws]\ncount = 50\nsequence = halton\n";
  return s;
}

inline iclv::ModelSpec small_spec(bool latent) { return iclv::parse_model_spec(small_spec_text(latent)); }

// Simulation config for small_spec(): a 16-run time x cost full factorial,
// scaled per alternative so the generic coefficients are identified.
inline iclv::TruthConfig small_truth_config(bool latent, std::size_t respondents, std::uint64_t seed) {
  iclv::TruthConfig cfg;
  cfg.spec = small_spec(latent);
  cfg.respondents = respondents;
  cfg.tasks_per_respondent = 4;
  cfg.seed = seed;
  cfg.socio = {{"male", {1, 0}, {0.5, 0.5}}, {"age", {25, 40, 55}, {0.3, 0.4, 0.3}}};
  cfg.design.attributes = {{"time", {10, 20, 30, 40}, {}}, {"cost", {1, 2, 3, 4}, {}}};
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) cfg.design.runs.push_back({a, b});
  cfg.scenario = [](const iclv::ScenarioSet& d, std::size_t run, iclv::ChoiceTask& task) {
    const double time = d.level_value(run, 0), cost = d.level_value(run, 1);
    const double t_scale[] = {0.6, 0.8, 1.0}, c_scale[] = {2.0, 1.2, 0.5};
    const std::size_t shift = run % 3;
    task.num_attributes = 2;
    task.attributes.clear();
    for (std::size_t j = 0; j < 3; ++j) {
      task.attributes.push_back(time * t_scale[(j + shift) % 3]);
      task.attributes.push_back(cost * c_scale[j]);
    }
    task.availability = {1, 1, 1};
  };
  iclv::ParameterVector& t = cfg.truth;
  t.add("asc.car", iclv::ParamRole::Asc, 0.4);
  t.add("asc.train", iclv::ParamRole::Asc, -0.3);
  t.add("beta.time", iclv::ParamRole::UtilityCoefficient, -0.05);
  t.add("beta.cost", iclv::ParamRole::UtilityCoefficient, -0.4);
  t.add("beta.male.car", iclv::ParamRole::UtilityCoefficient, 0.5);
  if (latent) {
    t.add("lambda.attitude", iclv::ParamRole::LatentCoefficient, 0.6);
    t.add("beta.attitude.male", iclv::ParamRole::StructuralCoefficient, 0.5);
    for (const char* ind : {"I1", "I2", "I3"}) {
      t.add(iclv::loading_name(ind), iclv::ParamRole::MeasurementLoading, 0.9);
      t.add(iclv::threshold_name(ind, 1), iclv::ParamRole::ThresholdBase, -1.5);
      for (int k = 2; k <= 4; ++k) t.add(iclv::threshold_name(ind, k), iclv::ParamRole::ThresholdIncrement, -0.2);
    }
  }
  return cfg;
}

}  // namespace testutil
