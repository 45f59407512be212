#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace iclv {

enum class ParamRole {
  Asc,
  UtilityCoefficient,
  LatentCoefficient,     // lambda: latent variable in utility
  StructuralIntercept,   // zeta
  StructuralCoefficient, // beta on socio-demographics
  StructuralScale,       // sigma of the structural disturbance
  MeasurementIntercept,  // gamma
  MeasurementLoading,    // loading of an indicator on its latent
  ThresholdBase,         // first threshold
  ThresholdIncrement,    // log of the gap to the next threshold
};

std::string_view to_string(ParamRole role);

struct Parameter {
  std::string name;
  ParamRole role = ParamRole::UtilityCoefficient;
  double value = 0.0;
  bool fixed = false;
  bool user_start = false;  // start value supplied explicitly (not derived from data)
};

// Flat named parameter set. Indices are stable once added.
class ParameterVector {
 public:
  // Returns the index of `name`, adding it when new.
  std::size_t add(const std::string& name, ParamRole role, double value = 0.0, bool fixed = false);

  std::size_t size() const { return params_.size(); }
  bool contains(std::string_view name) const { return index_.count(std::string(name)) != 0; }
  // Throws SpecError("unknown parameter ...").
  std::size_t index(std::string_view name) const;

  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& at(std::string_view name) const { return params_[index(name)]; }
  Parameter& at(std::string_view name) { return params_[index(name)]; }
  double value(std::string_view name) const { return at(name).value; }
  void set(std::string_view name, double v) { at(name).value = v; }

  const std::vector<Parameter>& items() const { return params_; }
  std::vector<double> values() const;
  void set_values(std::span<const double> v);

  std::vector<std::size_t> free_indices() const;
  std::vector<double> free_values() const;
  // Scatter free values into a full-length vector that starts from the current values.
  std::vector<double> expand(std::span<const double> free) const;

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Plain "name = value" lines; '#' starts a comment.
ParameterVector read_parameter_file(const std::string& path);
std::vector<std::pair<std::string, double>> read_parameter_values(const std::string& path);
void write_parameter_file(const ParameterVector& params, const std::string& path);

}  // namespace iclv
