#include "iclv/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "iclv/error.hpp"
#include "iclv/text.hpp"

namespace iclv {

namespace {

int index_of(const std::vector<std::string>& names, std::string_view name) {
  const auto it = std::find(names.begin(), names.end(), name);
  return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

std::string task_ref(int respondent, int task) {
  return "respondent " + std::to_string(respondent) + " task " + std::to_string(task);
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;

  int column(const std::string& name, const std::string& path) const {
    const int idx = index_of(header, name);
    if (idx < 0) throw DataError(path + ": missing column '" + name + "'");
    return idx;
  }
};

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  CsvTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto fields = text::split(line, ',');
    if (table.header.empty()) {
      if (!fields.empty() && fields[0].size() >= 3 && fields[0].compare(0, 3, "\xEF\xBB\xBF") == 0) {
        fields[0].erase(0, 3);
      }
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(table.header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_no);
  }
  if (table.header.empty()) throw DataError(path + ": empty file");
  return table;
}

std::vector<std::string> remaining_columns(const CsvTable& t, const std::vector<std::string>& used) {
  std::vector<std::string> out;
  for (const auto& h : t.header) {
    if (std::find(used.begin(), used.end(), h) == used.end()) out.push_back(h);
  }
  return out;
}

}  // namespace

std::size_t ChoiceDataset::num_tasks() const {
  std::size_t n = 0;
  for (const auto& r : respondents) n += r.tasks.size();
  return n;
}

int ChoiceDataset::base_alternative() const {
  for (const auto& a : alternatives) {
    if (a.is_base) return a.id;
  }
  return -1;
}

int ChoiceDataset::alternative_index(std::string_view label) const {
  for (const auto& a : alternatives) {
    if (a.label == label) return a.id;
  }
  return -1;
}

int ChoiceDataset::attribute_index(std::string_view name) const { return index_of(attribute_names, name); }
int ChoiceDataset::sociodemographic_index(std::string_view name) const {
  return index_of(sociodemographic_names, name);
}
int ChoiceDataset::indicator_index(std::string_view name) const { return index_of(indicator_names, name); }

bool operator==(const Alternative& a, const Alternative& b) {
  return a.id == b.id && a.label == b.label && a.is_base == b.is_base;
}

bool operator==(const ChoiceDataset& a, const ChoiceDataset& b) {
  return a.alternatives == b.alternatives && a.respondents == b.respondents &&
         a.attribute_names == b.attribute_names && a.sociodemographic_names == b.sociodemographic_names &&
         a.indicator_names == b.indicator_names && a.likert_categories == b.likert_categories;
}

std::vector<Alternative> dbs_alternatives() {
  const char* labels[] = {"wait_in_place", "pickup_on_way", "pickup_on_detour", "bus",
                          "taxi",          "ride_hailing",  "walk"};
  std::vector<Alternative> out;
  for (int i = 0; i < 7; ++i) out.push_back({i, labels[i], std::string_view(labels[i]) == "bus"});
  return out;
}

void validate(const ChoiceDataset& ds) {
  const auto J = ds.alternatives.size();
  if (J < 2) throw DataError("at least two alternatives are required");
  int bases = 0;
  for (std::size_t j = 0; j < J; ++j) {
    if (ds.alternatives[j].id != static_cast<int>(j)) throw DataError("alternative ids must be dense 0..J-1");
    bases += ds.alternatives[j].is_base ? 1 : 0;
  }
  if (bases != 1) throw DataError("exactly one alternative must be the base");
  if (ds.likert_categories < 2) throw DataError("Likert scale needs at least two categories");

  const auto K = ds.attribute_names.size();
  std::unordered_set<int> ids;
  for (const auto& r : ds.respondents) {
    if (!ids.insert(r.id).second) throw DataError("duplicate respondent id " + std::to_string(r.id));
    if (r.sociodemographics.size() != ds.sociodemographic_names.size()) {
      throw DataError("respondent " + std::to_string(r.id) + ": socio-demographic vector size mismatch");
    }
    for (double z : r.sociodemographics) {
      if (!std::isfinite(z)) throw DataError("respondent " + std::to_string(r.id) + ": non-finite socio-demographic");
    }
    if (r.indicators.size() != ds.indicator_names.size()) {
      throw DataError("respondent " + std::to_string(r.id) + ": indicator vector size mismatch");
    }
    for (std::size_t s = 0; s < r.indicators.size(); ++s) {
      if (r.indicators[s] < 1 || r.indicators[s] > ds.likert_categories) {
        throw DataError("respondent " + std::to_string(r.id) + " indicator " + ds.indicator_names[s] +
                        ": Likert out of range (" + std::to_string(r.indicators[s]) + ")");
      }
    }
    for (const auto& t : r.tasks) {
      const auto ref = task_ref(r.id, t.task_id);
      if (t.respondent_id != r.id) throw DataError(ref + ": task references another respondent");
      if (t.num_attributes != K || t.attributes.size() != J * K) throw DataError(ref + ": attribute matrix size mismatch");
      if (t.availability.size() != J) throw DataError(ref + ": availability size mismatch");
      for (double x : t.attributes) {
        if (!std::isfinite(x)) throw DataError(ref + ": non-finite attribute");
      }
      if (t.chosen < 0 || t.chosen >= static_cast<int>(J)) throw DataError(ref + ": chosen alternative out of range");
      if (!t.available(t.chosen)) {
        throw DataError(ref + ": chosen alternative '" + ds.alternatives[static_cast<std::size_t>(t.chosen)].label +
                        "' is not available");
      }
      const auto n_avail = std::count_if(t.availability.begin(), t.availability.end(), [](char c) { return c != 0; });
      if (n_avail < 2) throw DataError(ref + ": fewer than two available alternatives");
    }
  }
}

ChoiceDataset load_dataset(const std::string& choices_path, const std::string& respondents_path,
                           const ColumnMap& columns) {
  const auto choices = read_csv(choices_path);
  const int c_resp = choices.column(columns.respondent, choices_path);
  const int c_task = choices.column(columns.task, choices_path);
  const int c_alt = choices.column(columns.alternative, choices_path);
  const int c_avail = choices.column(columns.available, choices_path);
  const int c_chosen = choices.column(columns.chosen, choices_path);

  ChoiceDataset ds;
  ds.likert_categories = columns.likert_categories;
  ds.attribute_names = columns.attributes.empty()
                           ? remaining_columns(choices, {columns.respondent, columns.task, columns.alternative,
                                                         columns.available, columns.chosen})
                           : columns.attributes;
  std::vector<int> c_attr;
  for (const auto& name : ds.attribute_names) c_attr.push_back(choices.column(name, choices_path));

  std::vector<std::string> labels = columns.alternatives;
  const bool fixed_alternatives = !labels.empty();
  if (!fixed_alternatives) {
    for (const auto& row : choices.rows) {
      if (index_of(labels, row[static_cast<std::size_t>(c_alt)]) < 0) labels.push_back(row[static_cast<std::size_t>(c_alt)]);
    }
  }
  std::string base = columns.base_alternative;
  if (base.empty()) base = index_of(labels, "bus") >= 0 ? "bus" : (labels.empty() ? "" : labels.front());
  if (index_of(labels, base) < 0) throw DataError("base alternative '" + base + "' not among alternatives");
  for (std::size_t j = 0; j < labels.size(); ++j) {
    ds.alternatives.push_back({static_cast<int>(j), labels[j], labels[j] == base});
  }
  const auto J = labels.size();
  const auto K = ds.attribute_names.size();

  struct PendingTask {
    ChoiceTask task;
    int chosen_rows = 0;
  };
  std::vector<PendingTask> pending;
  std::map<std::pair<int, int>, std::size_t> task_slot;

  for (std::size_t i = 0; i < choices.rows.size(); ++i) {
    const auto& row = choices.rows[i];
    const auto where = choices_path + ":" + std::to_string(choices.line_numbers[i]) + ": ";
    int resp = 0, task = 0, avail = 0, chosen = 0;
    if (!text::parse_int(row[static_cast<std::size_t>(c_resp)], resp)) throw DataError(where + "bad respondent id");
    if (!text::parse_int(row[static_cast<std::size_t>(c_task)], task)) throw DataError(where + "bad task id");
    if (!text::parse_int(row[static_cast<std::size_t>(c_avail)], avail) || (avail != 0 && avail != 1)) {
      throw DataError(where + "availability must be 0 or 1");
    }
    if (!text::parse_int(row[static_cast<std::size_t>(c_chosen)], chosen) || (chosen != 0 && chosen != 1)) {
      throw DataError(where + "chosen must be 0 or 1");
    }
    const int alt = index_of(labels, row[static_cast<std::size_t>(c_alt)]);
    if (alt < 0) throw DataError(where + "unknown alternative '" + row[static_cast<std::size_t>(c_alt)] + "'");

    auto [it, inserted] = task_slot.try_emplace({resp, task}, pending.size());
    if (inserted) {
      PendingTask p;
      p.task.respondent_id = resp;
      p.task.task_id = task;
      p.task.num_attributes = K;
      p.task.attributes.assign(J * K, 0.0);
      p.task.availability.assign(J, 0);
      pending.push_back(std::move(p));
    }
    auto& p = pending[it->second];
    p.task.availability[static_cast<std::size_t>(alt)] = static_cast<char>(avail);
    for (std::size_t k = 0; k < K; ++k) {
      double x = 0.0;
      if (!text::parse_double(row[static_cast<std::size_t>(c_attr[k])], x)) {
        throw DataError(where + "bad value for attribute '" + ds.attribute_names[k] + "'");
      }
      if (!std::isfinite(x)) {
        throw DataError(task_ref(resp, task) + ": non-finite attribute '" + ds.attribute_names[k] + "'");
      }
      p.task.attribute(alt, k) = x;
    }
    if (chosen == 1) {
      ++p.chosen_rows;
      p.task.chosen = alt;
      if (avail == 0) {
        throw DataError(task_ref(resp, task) + ": chosen alternative '" + labels[static_cast<std::size_t>(alt)] +
                        "' is not available");
      }
    }
  }

  const auto people = read_csv(respondents_path);
  const int p_id = people.column(columns.respondent, respondents_path);
  ds.indicator_names = columns.indicators;
  ds.sociodemographic_names = columns.sociodemographics;
  if (ds.sociodemographic_names.empty()) {
    std::vector<std::string> used{columns.respondent};
    used.insert(used.end(), ds.indicator_names.begin(), ds.indicator_names.end());
    ds.sociodemographic_names = remaining_columns(people, used);
  }
  std::vector<int> c_socio, c_ind;
  for (const auto& name : ds.sociodemographic_names) c_socio.push_back(people.column(name, respondents_path));
  for (const auto& name : ds.indicator_names) c_ind.push_back(people.column(name, respondents_path));

  std::unordered_map<int, std::size_t> resp_slot;
  for (std::size_t i = 0; i < people.rows.size(); ++i) {
    const auto& row = people.rows[i];
    const auto where = respondents_path + ":" + std::to_string(people.line_numbers[i]) + ": ";
    Respondent r;
    if (!text::parse_int(row[static_cast<std::size_t>(p_id)], r.id)) throw DataError(where + "bad respondent id");
    for (std::size_t k = 0; k < c_socio.size(); ++k) {
      double z = 0.0;
      if (!text::parse_double(row[static_cast<std::size_t>(c_socio[k])], z) || !std::isfinite(z)) {
        throw DataError(where + "bad value for '" + ds.sociodemographic_names[k] + "'");
      }
      r.sociodemographics.push_back(z);
    }
    for (std::size_t s = 0; s < c_ind.size(); ++s) {
      int v = 0;
      const auto& field = row[static_cast<std::size_t>(c_ind[s])];
      if (field.empty()) {
        throw DataError("respondent " + std::to_string(r.id) + ": missing response for " + ds.indicator_names[s]);
      }
      if (!text::parse_int(field, v)) {
        throw DataError("respondent " + std::to_string(r.id) + " indicator " + ds.indicator_names[s] +
                        ": Likert value must be an integer");
      }
      if (v < 1 || v > ds.likert_categories) {
        throw DataError("respondent " + std::to_string(r.id) + " indicator " + ds.indicator_names[s] +
                        ": Likert out of range (" + std::to_string(v) + ")");
      }
      r.indicators.push_back(v);
    }
    if (!resp_slot.emplace(r.id, ds.respondents.size()).second) {
      throw DataError("duplicate respondent id " + std::to_string(r.id));
    }
    ds.respondents.push_back(std::move(r));
  }

  for (auto& p : pending) {
    const auto ref = task_ref(p.task.respondent_id, p.task.task_id);
    if (p.chosen_rows != 1) throw DataError(ref + ": expected exactly one chosen alternative");
    const auto it = resp_slot.find(p.task.respondent_id);
    if (it == resp_slot.end()) {
      throw DataError(ref + ": respondent missing from " + respondents_path);
    }
    ds.respondents[it->second].tasks.push_back(std::move(p.task));
  }

  validate(ds);
  return ds;
}

void save_dataset(const ChoiceDataset& ds, const std::string& choices_path, const std::string& respondents_path,
                  const ColumnMap& columns) {
  {
    std::ofstream out(choices_path);
    if (!out) throw DataError("cannot write " + choices_path);
    out << columns.respondent << ',' << columns.task << ',' << columns.alternative << ',' << columns.available << ','
        << columns.chosen;
    for (const auto& name : ds.attribute_names) out << ',' << name;
    out << '\n';
    for (const auto& r : ds.respondents) {
      for (const auto& t : r.tasks) {
        for (std::size_t j = 0; j < ds.alternatives.size(); ++j) {
          out << r.id << ',' << t.task_id << ',' << ds.alternatives[j].label << ','
              << (t.availability[j] ? 1 : 0) << ',' << (t.chosen == static_cast<int>(j) ? 1 : 0);
          for (std::size_t k = 0; k < t.num_attributes; ++k) {
            out << ',' << text::format_double(t.attribute(static_cast<int>(j), k));
          }
          out << '\n';
        }
      }
    }
  }
  std::ofstream out(respondents_path);
  if (!out) throw DataError("cannot write " + respondents_path);
  out << columns.respondent;
  for (const auto& name : ds.sociodemographic_names) out << ',' << name;
  for (const auto& name : ds.indicator_names) out << ',' << name;
  out << '\n';
  for (const auto& r : ds.respondents) {
    out << r.id;
    for (double z : r.sociodemographics) out << ',' << text::format_double(z);
    for (int v : r.indicators) out << ',' << v;
    out << '\n';
  }
}

namespace {

// Mean and sample standard deviation (N-1 denominator).
std::pair<double, double> mean_sd(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

}  // namespace

DatasetSummary summarize(const ChoiceDataset& ds) {
  if (ds.respondents.empty() || ds.num_tasks() == 0) throw DataError("cannot summarize an empty dataset");
  DatasetSummary s;
  s.respondents = ds.respondents.size();
  s.tasks = ds.num_tasks();
  s.indicator_responses = ds.respondents.size() * ds.indicator_names.size();
  for (const auto& a : ds.alternatives) s.alternative_labels.push_back(a.label);
  s.choice_counts.assign(ds.alternatives.size(), 0);
  for (const auto& r : ds.respondents) {
    for (const auto& t : r.tasks) ++s.choice_counts[static_cast<std::size_t>(t.chosen)];
  }
  for (auto c : s.choice_counts) s.choice_shares.push_back(static_cast<double>(c) / static_cast<double>(s.tasks));

  for (std::size_t k = 0; k < ds.sociodemographic_names.size(); ++k) {
    std::vector<double> xs;
    for (const auto& r : ds.respondents) xs.push_back(r.sociodemographics[k]);
    const auto [m, sd] = mean_sd(xs);
    s.sociodemographics.push_back({ds.sociodemographic_names[k], m, sd});
  }
  const auto C = static_cast<std::size_t>(ds.likert_categories);
  for (std::size_t k = 0; k < ds.indicator_names.size(); ++k) {
    IndicatorSummary ind;
    ind.name = ds.indicator_names[k];
    ind.category_percent.assign(C, 0.0);
    std::vector<double> xs;
    for (const auto& r : ds.respondents) {
      xs.push_back(r.indicators[k]);
      ind.category_percent[static_cast<std::size_t>(r.indicators[k] - 1)] += 1.0;
    }
    for (auto& p : ind.category_percent) p = 100.0 * p / static_cast<double>(ds.respondents.size());
    std::tie(ind.mean, ind.sd) = mean_sd(xs);
    s.indicators.push_back(std::move(ind));
  }
  return s;
}

std::string render_summary(const DatasetSummary& s) {
  std::ostringstream os;
  os << "Respondents: " << s.respondents << "\n";
  os << "Choice tasks: " << s.tasks << "\n";
  os << "Indicator responses: " << s.indicator_responses << "\n\n";
  os << "Mode shares\n";
  for (std::size_t j = 0; j < s.alternative_labels.size(); ++j) {
    os << "  " << s.alternative_labels[j] << "," << s.choice_counts[j] << "," << text::fixed(100.0 * s.choice_shares[j], 2)
       << "%\n";
  }
  if (!s.sociodemographics.empty()) {
    os << "\nSocio-demographics (mean, sd)\n";
    for (const auto& v : s.sociodemographics) {
      os << "  " << v.name << "," << text::fixed(v.mean, 4) << "," << text::fixed(v.sd, 4) << "\n";
    }
  }
  if (!s.indicators.empty()) {
    os << "\nIndicator distribution (%)";
    for (std::size_t c = 1; c <= (s.indicators.front().category_percent.size()); ++c) os << "," << c;
    os << ",Mean,Std.\n";
    for (const auto& ind : s.indicators) {
      os << "  " << ind.name;
      for (double p : ind.category_percent) os << "," << text::fixed(p, 2);
      os << "," << text::fixed(ind.mean, 2) << "," << text::fixed(ind.sd, 2) << "\n";
    }
  }
  return os.str();
}

}  // namespace iclv
