#include "iclv/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "iclv/error.hpp"
#include "iclv/text.hpp"

namespace iclv {

namespace {

const ParamRole kRoles[] = {ParamRole::Asc,
                            ParamRole::UtilityCoefficient,
                            ParamRole::LatentCoefficient,
                            ParamRole::StructuralIntercept,
                            ParamRole::StructuralCoefficient,
                            ParamRole::StructuralScale,
                            ParamRole::MeasurementIntercept,
                            ParamRole::MeasurementLoading,
                            ParamRole::ThresholdBase,
                            ParamRole::ThresholdIncrement};

ParamRole role_from_string(const std::string& s, int line) {
  for (auto r : kRoles)
    if (to_string(r) == s) return r;
  throw SpecError("unknown parameter role '" + s + "'", line);
}

std::string fmt(double v) { return text::format_double(v); }

std::string join_list(const std::vector<std::string>& v) { return text::join(v, "; "); }

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (text::trim(s).empty()) return out;
  for (auto& part : text::split(s, ';')) out.push_back(part);
  return out;
}

}  // namespace

std::string results_to_text(const EstimationResult& r) {
  std::ostringstream os;
  os << "[summary]\n";
  os << "model = " << r.model_name << '\n';
  os << "converged = " << (r.converged ? "true" : "false") << '\n';
  os << "iterations = " << r.iterations << '\n';
  os << "message = " << r.message << '\n';
  os << "gradient_norm = " << fmt(r.gradient_norm) << '\n';
  os << "ll_start = " << fmt(r.ll_start) << '\n';
  os << "ll_joint = " << fmt(r.ll_joint) << '\n';
  os << "ll_final = " << fmt(r.ll_final) << '\n';
  os << "ll_null = " << fmt(r.ll_null) << '\n';
  os << "rho2 = " << fmt(r.rho2) << '\n';
  os << "adj_rho2 = " << fmt(r.adj_rho2) << '\n';
  os << "bic = " << fmt(r.bic) << '\n';
  os << "n_free = " << r.n_free << '\n';
  os << "n_observations = " << r.n_observations << '\n';
  os << "n_respondents = " << r.n_respondents << '\n';
  os << "n_tasks = " << r.n_tasks << '\n';
  os << "n_indicator_responses = " << r.n_indicator_responses << '\n';
  os << "draws = " << r.draws << '\n';
  os << "singular_parameters = " << join_list(r.singular_parameters) << '\n';
  os << "notes = " << join_list(r.notes) << '\n';
  os << "redefined_parameters = " << join_list(r.redefined_parameters) << '\n';
  std::vector<std::string> hist;
  for (double v : r.ll_history) hist.push_back(fmt(v));
  os << "ll_history = " << text::join(hist, " ") << '\n';
  os << "\n[parameters]\nname,role,value,fixed,std_error,t_stat,robust_std_error\n";
  for (std::size_t i = 0; i < r.params.size(); ++i) {
    const auto& p = r.params[i];
    const double nan = std::numeric_limits<double>::quiet_NaN();
    os << p.name << ',' << to_string(p.role) << ',' << fmt(p.value) << ',' << (p.fixed ? 1 : 0) << ','
       << fmt(i < r.std_errors.size() ? r.std_errors[i] : nan) << ','
       << fmt(i < r.t_stats.size() ? r.t_stats[i] : nan) << ','
       << (i < r.robust_std_errors.size() ? fmt(r.robust_std_errors[i]) : std::string()) << '\n';
  }
  return os.str();
}

EstimationResult parse_results(const std::string& text_in) {
  EstimationResult r;
  std::istringstream is(text_in);
  std::string line, section;
  int line_no = 0;
  bool header_seen = false;
  bool any_robust = false;
  std::vector<double> robust;
  auto num = [&](const std::string& v) {
    double d = 0.0;
    if (!text::parse_double(v, d)) throw SpecError("bad number '" + v + "'", line_no);
    return d;
  };
  auto count = [&](const std::string& v) { return static_cast<std::size_t>(num(v)); };
  while (std::getline(is, line)) {
    ++line_no;
    const auto t = std::string(text::trim(line));
    if (t.empty() || t.front() == '#') continue;
    if (t.front() == '[') {
      section = t;
      continue;
    }
    if (section == "[summary]") {
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw SpecError("expected key = value", line_no);
      const std::string key(text::trim(std::string_view(t).substr(0, eq)));
      const std::string val(text::trim(std::string_view(t).substr(eq + 1)));
      if (key == "model") r.model_name = val;
      else if (key == "converged") r.converged = val == "true";
      else if (key == "iterations") r.iterations = static_cast<int>(num(val));
      else if (key == "message") r.message = val;
      else if (key == "gradient_norm") r.gradient_norm = num(val);
      else if (key == "ll_start") r.ll_start = num(val);
      else if (key == "ll_joint") r.ll_joint = num(val);
      else if (key == "ll_final") r.ll_final = num(val);
      else if (key == "ll_null") r.ll_null = num(val);
      else if (key == "rho2") r.rho2 = num(val);
      else if (key == "adj_rho2") r.adj_rho2 = num(val);
      else if (key == "bic") r.bic = num(val);
      else if (key == "n_free") r.n_free = count(val);
      else if (key == "n_observations") r.n_observations = count(val);
      else if (key == "n_respondents") r.n_respondents = count(val);
      else if (key == "n_tasks") r.n_tasks = count(val);
      else if (key == "n_indicator_responses") r.n_indicator_responses = count(val);
      else if (key == "draws") r.draws = static_cast<int>(num(val));
      else if (key == "singular_parameters") r.singular_parameters = split_list(val);
      else if (key == "notes") r.notes = split_list(val);
      else if (key == "redefined_parameters") r.redefined_parameters = split_list(val);
      else if (key == "ll_history") {
        for (const auto& v : text::split_ws(val)) r.ll_history.push_back(num(v));
      } else throw SpecError("unknown key '" + key + "'", line_no);
    } else if (section == "[parameters]") {
      if (!header_seen) {
        header_seen = true;
        continue;
      }
      const auto f = text::split(t, ',');
      if (f.size() != 7) throw SpecError("expected 7 fields", line_no);
      r.params.add(f[0], role_from_string(f[1], line_no), num(f[2]), f[3] == "1");
      r.std_errors.push_back(num(f[4]));
      r.t_stats.push_back(num(f[5]));
      robust.push_back(f[6].empty() ? std::numeric_limits<double>::quiet_NaN() : num(f[6]));
      any_robust = any_robust || !f[6].empty();
    } else {
      throw SpecError("content outside a section", line_no);
    }
  }
  if (r.params.size() == 0) throw SpecError("results file has no parameters");
  if (any_robust) r.robust_std_errors = robust;
  return r;
}

void save_results(const EstimationResult& r, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << results_to_text(r);
}

EstimationResult load_results(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_results(ss.str());
}

std::string significance_stars(double t) {
  const double a = std::abs(t);
  if (!(a >= 1.645)) return "";
  if (a >= 2.576) return "***";
  if (a >= 1.960) return "**";
  return "*";
}

std::string render_estimation_table(const std::vector<EstimationResult>& results, bool include_measurement) {
  if (results.empty()) throw DataError("no results to report");
  struct Row {
    std::string name;
    ParamRole role;
  };
  std::vector<Row> rows;
  std::map<std::string, bool> seen;
  for (const auto& r : results)
    for (const auto& p : r.params.items())
      if (!seen[p.name]) {
        seen[p.name] = true;
        rows.push_back({p.name, p.role});
      }

  auto group_of = [](ParamRole role) {
    switch (role) {
      case ParamRole::Asc: return 0;
      case ParamRole::UtilityCoefficient: return 1;
      case ParamRole::LatentCoefficient: return 2;
      case ParamRole::StructuralIntercept:
      case ParamRole::StructuralCoefficient:
      case ParamRole::StructuralScale: return 3;
      default: return 4;
    }
  };
  const char* headings[] = {"Alternative-specific constants:", "Utility coefficients:", "Latent variables:",
                            "Structural equations:", "Measurement equations:"};

  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-40s", "Variables");
  os << buf;
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, " %24s", r.model_name.c_str());
    os << buf;
  }
  os << '\n';
  std::snprintf(buf, sizeof buf, "%-40s", "");
  os << buf;
  for (std::size_t m = 0; m < results.size(); ++m) {
    std::snprintf(buf, sizeof buf, " %14s %9s", "Coef.", "t-stat");
    os << buf;
  }
  os << '\n';

  const int last_group = include_measurement ? 4 : 2;
  for (int g = 0; g <= last_group; ++g) {
    bool printed_heading = false;
    for (const auto& row : rows) {
      if (group_of(row.role) != g) continue;
      bool free_somewhere = false;
      for (const auto& r : results)
        if (r.params.contains(row.name) && !r.params.at(row.name).fixed) free_somewhere = true;
      if (!free_somewhere) continue;
      if (!printed_heading) {
        os << headings[g] << '\n';
        printed_heading = true;
      }
      std::snprintf(buf, sizeof buf, "  %-38s", row.name.c_str());
      os << buf;
      for (const auto& r : results) {
        if (!r.params.contains(row.name) || r.params.at(row.name).fixed) {
          std::snprintf(buf, sizeof buf, " %14s %9s", "-", "-");
        } else {
          const auto i = r.params.index(row.name);
          const double t = i < r.t_stats.size() ? r.t_stats[i] : std::numeric_limits<double>::quiet_NaN();
          const std::string coef = text::fixed(r.params[i].value, 3) + significance_stars(t);
          std::snprintf(buf, sizeof buf, " %14s %9s", coef.c_str(), text::fixed(t, 2).c_str());
        }
        os << buf;
      }
      os << '\n';
    }
  }

  os << "Model summary:\n";
  auto summary = [&](const char* label, auto value) {
    std::snprintf(buf, sizeof buf, "  %-38s", label);
    os << buf;
    for (const auto& r : results) {
      std::snprintf(buf, sizeof buf, " %24s", value(r).c_str());
      os << buf;
    }
    os << '\n';
  };
  summary("Number of observations", [](const EstimationResult& r) { return std::to_string(r.n_observations); });
  summary("Rho-squared", [](const EstimationResult& r) { return text::fixed(r.rho2, 4); });
  summary("Adj.Rho-squared", [](const EstimationResult& r) { return text::fixed(r.adj_rho2, 4); });
  summary("BIC", [](const EstimationResult& r) { return text::fixed(r.bic, 2); });
  summary("LL(final)", [](const EstimationResult& r) { return text::fixed(r.ll_final, 2); });
  summary("LL(0)", [](const EstimationResult& r) { return text::fixed(r.ll_null, 2); });
  summary("Free parameters", [](const EstimationResult& r) { return std::to_string(r.n_free); });
  summary("Converged", [](const EstimationResult& r) { return std::string(r.converged ? "yes" : "no"); });
  os << "Note: *** significant at 0.01; ** at 0.05; * at 0.1.\n";
  return os.str();
}

std::string estimation_csv(const EstimationResult& r) {
  std::ostringstream os;
  os << "name,role,value,fixed,std_error,t_stat,robust_std_error\n";
  const std::string text = results_to_text(r);
  const auto pos = text.find("[parameters]\n");
  const auto body = text.substr(pos + 13);
  os << body.substr(body.find('\n') + 1);
  return os.str();
}

}  // namespace iclv
