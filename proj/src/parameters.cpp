#include "iclv/parameters.hpp"

#include <fstream>

#include "iclv/error.hpp"
#include "iclv/text.hpp"

namespace iclv {

std::string_view to_string(ParamRole role) {
  switch (role) {
    case ParamRole::Asc: return "asc";
    case ParamRole::UtilityCoefficient: return "utility";
    case ParamRole::LatentCoefficient: return "lambda";
    case ParamRole::StructuralIntercept: return "zeta";
    case ParamRole::StructuralCoefficient: return "structural";
    case ParamRole::StructuralScale: return "sigma";
    case ParamRole::MeasurementIntercept: return "gamma";
    case ParamRole::MeasurementLoading: return "loading";
    case ParamRole::ThresholdBase: return "threshold";
    case ParamRole::ThresholdIncrement: return "threshold_increment";
  }
  return "unknown";
}

std::size_t ParameterVector::add(const std::string& name, ParamRole role, double value, bool fixed) {
  if (const auto it = index_.find(name); it != index_.end()) return it->second;
  params_.push_back({name, role, value, fixed, false});
  index_.emplace(name, params_.size() - 1);
  return params_.size() - 1;
}

std::size_t ParameterVector::index(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) throw SpecError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

std::vector<double> ParameterVector::values() const {
  std::vector<double> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

void ParameterVector::set_values(std::span<const double> v) {
  if (v.size() != params_.size()) throw NumericError("parameter vector size mismatch");
  for (std::size_t i = 0; i < v.size(); ++i) params_[i].value = v[i];
}

std::vector<std::size_t> ParameterVector::free_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i].fixed) out.push_back(i);
  }
  return out;
}

std::vector<double> ParameterVector::free_values() const {
  std::vector<double> out;
  for (const auto& p : params_) {
    if (!p.fixed) out.push_back(p.value);
  }
  return out;
}

std::vector<double> ParameterVector::expand(std::span<const double> free) const {
  auto full = values();
  std::size_t k = 0;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i].fixed) {
      if (k >= free.size()) throw NumericError("free parameter vector too short");
      full[i] = free[k++];
    }
  }
  if (k != free.size()) throw NumericError("free parameter vector too long");
  return full;
}

std::vector<std::pair<std::string, double>> read_parameter_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open parameter file " + path);
  std::vector<std::pair<std::string, double>> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = text::trim(line);
    if (body.empty() || body.front() == '[') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw SpecError(path + ": expected 'name = value'", line_no);
    const auto name = std::string(text::trim(body.substr(0, eq)));
    const auto rest = text::split_ws(body.substr(eq + 1));
    double v = 0.0;
    if (name.empty() || rest.empty() || !text::parse_double(rest[0], v)) {
      throw SpecError(path + ": bad value for '" + name + "'", line_no);
    }
    out.emplace_back(name, v);
  }
  return out;
}

ParameterVector read_parameter_file(const std::string& path) {
  ParameterVector params;
  for (const auto& [name, v] : read_parameter_values(path)) {
    params.add(name, ParamRole::UtilityCoefficient, v);
    params.set(name, v);
  }
  return params;
}

void write_parameter_file(const ParameterVector& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SpecError("cannot write " + path);
  for (const auto& p : params.items()) out << p.name << " = " << text::format_double(p.value) << '\n';
}

}  // namespace iclv
