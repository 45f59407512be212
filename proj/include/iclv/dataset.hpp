#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace iclv {

struct Alternative {
  int id = 0;
  std::string label;
  bool is_base = false;
};

// One stated-preference scenario answered by a respondent. Attributes are
// stored row-major as J x K (alternative x attribute).
struct ChoiceTask {
  int respondent_id = 0;
  int task_id = 0;
  std::size_t num_attributes = 0;
  std::vector<double> attributes;
  std::vector<char> availability;
  int chosen = -1;

  double attribute(int alternative, std::size_t k) const {
    return attributes[static_cast<std::size_t>(alternative) * num_attributes + k];
  }
  double& attribute(int alternative, std::size_t k) {
    return attributes[static_cast<std::size_t>(alternative) * num_attributes + k];
  }
  bool available(int alternative) const { return availability[static_cast<std::size_t>(alternative)] != 0; }

  bool operator==(const ChoiceTask&) const = default;
};

struct Respondent {
  int id = 0;
  std::vector<double> sociodemographics;
  std::vector<int> indicators;  // Likert responses, 1..categories
  std::vector<ChoiceTask> tasks;

  bool operator==(const Respondent&) const = default;
};

struct ChoiceDataset {
  std::vector<Alternative> alternatives;
  std::vector<Respondent> respondents;
  std::vector<std::string> attribute_names;
  std::vector<std::string> sociodemographic_names;
  std::vector<std::string> indicator_names;
  int likert_categories = 5;

  std::size_t num_alternatives() const { return alternatives.size(); }
  std::size_t num_tasks() const;
  int base_alternative() const;
  // -1 when absent.
  int alternative_index(std::string_view label) const;
  int attribute_index(std::string_view name) const;
  int sociodemographic_index(std::string_view name) const;
  int indicator_index(std::string_view name) const;
};

bool operator==(const Alternative& a, const Alternative& b);
bool operator==(const ChoiceDataset& a, const ChoiceDataset& b);

// Throws DataError on the first violated invariant.
void validate(const ChoiceDataset& ds);

// Standard seven-mode alternative set with bus as the base.
std::vector<Alternative> dbs_alternatives();

// Maps dataset columns onto the schema. Empty name lists mean "take every
// remaining column of that file".
struct ColumnMap {
  std::string respondent = "respondent_id";
  std::string task = "task_id";
  std::string alternative = "alternative";
  std::string available = "available";
  std::string chosen = "chosen";
  std::vector<std::string> alternatives;  // ordered labels; empty = order of first appearance
  std::string base_alternative;           // empty = "bus" if present, else first
  std::vector<std::string> attributes;
  std::vector<std::string> sociodemographics;
  std::vector<std::string> indicators;
  int likert_categories = 5;
};

// Long-format choice file (one row per respondent x task x alternative) plus a
// wide respondent file (respondent id, socio-demographics, indicators).
ChoiceDataset load_dataset(const std::string& choices_path, const std::string& respondents_path,
                           const ColumnMap& columns);
void save_dataset(const ChoiceDataset& ds, const std::string& choices_path,
                  const std::string& respondents_path, const ColumnMap& columns = {});

struct IndicatorSummary {
  std::string name;
  std::vector<double> category_percent;
  double mean = 0.0;
  double sd = 0.0;
};

struct VariableSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
};

struct DatasetSummary {
  std::size_t respondents = 0;
  std::size_t tasks = 0;
  std::size_t indicator_responses = 0;
  std::vector<std::string> alternative_labels;
  std::vector<std::size_t> choice_counts;
  std::vector<double> choice_shares;
  std::vector<VariableSummary> sociodemographics;
  std::vector<IndicatorSummary> indicators;
};

DatasetSummary summarize(const ChoiceDataset& ds);
std::string render_summary(const DatasetSummary& summary);

}  // namespace iclv
