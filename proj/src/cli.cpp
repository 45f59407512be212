#include "iclv/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "iclv/dataset.hpp"
#include "iclv/design.hpp"
#include "iclv/effects.hpp"
#include "iclv/error.hpp"
#include "iclv/estimator.hpp"
#include "iclv/model_spec.hpp"
#include "iclv/psychometrics.hpp"
#include "iclv/report.hpp"
#include "iclv/simulator.hpp"
#include "iclv/text.hpp"

namespace iclv {

namespace {

namespace fs = std::filesystem;

void write_text(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << content;
}

struct Logger {
  std::ostream& err;
  bool quiet = false;
  void operator()(const std::string& msg) const {
    if (!quiet) err << "[iclv] " << msg << '\n';
  }
};

struct DrawOverrides {
  int draws = 0;
  std::string sequence;
  std::string unit;
  std::optional<std::uint64_t> seed;

  void add(CLI::App* app) {
    app->add_option("--draws", draws, "Draws per integration unit (overrides the spec)")->check(CLI::PositiveNumber);
    app->add_option("--sequence", sequence, "halton or pseudo")->check(CLI::IsMember({"halton", "pseudo"}));
    app->add_option("--unit", unit, "Integration unit: respondent or task")->check(CLI::IsMember({"respondent", "task"}));
    app->add_option("--seed", seed, "Draw seed (overrides the spec)");
  }
  void apply(DrawPlan& plan) const {
    if (draws > 0) plan.draws = draws;
    if (!sequence.empty()) plan.sequence = sequence == "halton" ? DrawSequence::Halton : DrawSequence::PseudoRandom;
    if (!unit.empty()) plan.unit = unit == "task" ? IntegrationUnit::Task : IntegrationUnit::Respondent;
    if (seed) plan.seed = *seed;
  }
};

ChoiceDataset load_spec_data(const ModelSpec& spec, const std::string& choices, const std::string& respondents) {
  const std::string c = choices.empty() ? spec.choices_file : choices;
  const std::string r = respondents.empty() ? spec.respondents_file : respondents;
  if (c.empty() || r.empty()) throw DataError("no data files given (spec [data] section or --choices/--respondents)");
  return load_dataset(c, r, spec.column_map());
}

std::vector<std::pair<std::string, std::vector<std::string>>> spec_scales(const ModelSpec& spec) {
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  for (const auto& lv : spec.latents) {
    std::vector<std::string> items;
    for (int s : lv.indicators) items.push_back(spec.indicator_names[static_cast<std::size_t>(s)]);
    out.emplace_back(lv.name, std::move(items));
  }
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Integrated choice and latent variable models: design, simulation, estimation and analysis", "iclv"};
  app.require_subcommand(1);
  int threads = 0;
  bool quiet = false;
  app.add_option("--threads", threads, "Worker threads (0 = ICLV_THREADS or all cores)")->check(CLI::NonNegativeNumber);
  app.add_flag("-q,--quiet", quiet, "Suppress log messages");

  // design
  auto* design = app.add_subcommand("design", "Generate the stated-preference scenario design");
  std::size_t runs = 32, block_size = 4;
  std::uint64_t design_seed = 7;
  std::string design_out, design_report_out;
  design->add_option("--runs", runs, "Number of scenarios")->check(CLI::PositiveNumber);
  design->add_option("--block-size", block_size, "Scenarios per questionnaire (0 = no blocking)");
  design->add_option("--seed", design_seed, "Search seed");
  design->add_option("-o,--out", design_out, "Design CSV (default: stdout)");
  design->add_option("--report", design_report_out, "Balance and correlation report");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Simulate a dataset from known parameters");
  std::string preset = "table6", sim_dir, sim_spec, sim_truth;
  std::uint64_t sim_seed = 1, sim_design_seed = 7;
  std::size_t respondents = 551, tasks = 4;
  simulate->add_option("--preset", preset, "table6 (ICLV) or table6-mnl")->check(CLI::IsMember({"table6", "table6-mnl"}));
  simulate->add_option("--spec", sim_spec, "Model spec replacing the preset's")->check(CLI::ExistingFile);
  simulate->add_option("--truth", sim_truth, "Parameter file overriding truth values by name")->check(CLI::ExistingFile);
  simulate->add_option("-o,--out-dir", sim_dir, "Output directory")->required();
  simulate->add_option("--seed", sim_seed, "Data seed");
  simulate->add_option("--design-seed", sim_design_seed, "Seed of the scenario design");
  simulate->add_option("--respondents", respondents, "Respondents")->check(CLI::PositiveNumber);
  simulate->add_option("--tasks", tasks, "Tasks per respondent")->check(CLI::PositiveNumber);

  // estimate
  auto* est = app.add_subcommand("estimate", "Estimate a model by maximum simulated likelihood");
  std::string est_spec, est_choices, est_resp, est_out, est_params_out, bic_n, est_format = "text";
  int max_iter = 0;
  bool robust = false;
  DrawOverrides est_draws;
  est->add_option("--spec", est_spec, "Model spec file")->required()->check(CLI::ExistingFile);
  est->add_option("--choices", est_choices, "Choice file (overrides the spec)")->check(CLI::ExistingFile);
  est->add_option("--respondents", est_resp, "Respondent file (overrides the spec)")->check(CLI::ExistingFile);
  est->add_option("-o,--out", est_out, "Results file")->required();
  est->add_option("--params-out", est_params_out, "Estimated parameters as name = value lines");
  est->add_option("--max-iterations", max_iter, "Iteration limit")->check(CLI::PositiveNumber);
  est->add_option("--bic-observations", bic_n, "tasks or tasks+indicators")
      ->check(CLI::IsMember({"tasks", "tasks+indicators"}));
  est->add_flag("--robust", robust, "Also compute sandwich standard errors");
  est->add_option("--format", est_format, "Table printed to stdout: text, csv or none")
      ->check(CLI::IsMember({"text", "csv", "none"}));
  est_draws.add(est);

  // effects
  auto* eff = app.add_subcommand("effects", "Marginal effects and elasticities of a fitted model");
  std::string eff_spec, eff_results, eff_choices, eff_resp, eff_var, eff_alt, eff_out, eff_format = "text";
  std::string eff_method = "analytic", eff_avg = "sample";
  DrawOverrides eff_draws;
  eff->add_option("--spec", eff_spec, "Model spec file")->required()->check(CLI::ExistingFile);
  eff->add_option("--results", eff_results, "Results file from estimate")->required()->check(CLI::ExistingFile);
  eff->add_option("--choices", eff_choices, "Choice file (overrides the spec)")->check(CLI::ExistingFile);
  eff->add_option("--respondents", eff_resp, "Respondent file (overrides the spec)")->check(CLI::ExistingFile);
  eff->add_option("--variable", eff_var, "Single variable (default: every variable in the utilities)");
  eff->add_option("--alternative", eff_alt, "Alternative for --variable");
  eff->add_option("--method", eff_method, "analytic or fd")->check(CLI::IsMember({"analytic", "fd"}));
  eff->add_option("--averaging", eff_avg, "sample or means")->check(CLI::IsMember({"sample", "means"}));
  eff->add_option("-o,--out", eff_out, "Output file (default: stdout)");
  eff->add_option("--format", eff_format, "text or csv")->check(CLI::IsMember({"text", "csv"}));
  eff_draws.add(eff);

  // psych
  auto* psy = app.add_subcommand("psych", "Cronbach's alpha, KMO and exploratory factor analysis");
  std::string psy_spec, psy_choices, psy_resp, psy_out, psy_format = "text";
  int factors = 0;
  psy->add_option("--spec", psy_spec, "Model spec file (indicators and scales)")->required()->check(CLI::ExistingFile);
  psy->add_option("--choices", psy_choices, "Choice file (overrides the spec)")->check(CLI::ExistingFile);
  psy->add_option("--respondents", psy_resp, "Respondent file (overrides the spec)")->check(CLI::ExistingFile);
  psy->add_option("--factors", factors, "Factors to extract (default: number of latent scales)");
  psy->add_option("-o,--out", psy_out, "Output file (default: stdout)");
  psy->add_option("--format", psy_format, "text or csv")->check(CLI::IsMember({"text", "csv"}));

  // report
  auto* rep = app.add_subcommand("report", "Render estimation results in the published table layout");
  std::vector<std::string> rep_results;
  std::string rep_out, rep_format = "text";
  bool rep_measurement = false;
  rep->add_option("results", rep_results, "Results files (one column block each)")->required()->check(CLI::ExistingFile);
  rep->add_flag("--measurement", rep_measurement, "Also list structural and measurement parameters");
  rep->add_option("-o,--out", rep_out, "Output file (default: stdout)");
  rep->add_option("--format", rep_format, "text or csv")->check(CLI::IsMember({"text", "csv"}));

  // summarize
  auto* sum = app.add_subcommand("summarize", "Choice shares, socio-demographics and indicator distributions");
  std::string sum_spec, sum_choices, sum_resp, sum_out;
  sum->add_option("--spec", sum_spec, "Model spec file")->required()->check(CLI::ExistingFile);
  sum->add_option("--choices", sum_choices, "Choice file (overrides the spec)")->check(CLI::ExistingFile);
  sum->add_option("--respondents", sum_resp, "Respondent file (overrides the spec)")->check(CLI::ExistingFile);
  sum->add_option("-o,--out", sum_out, "Output file (default: stdout)");

  std::vector<const char*> argv;
  argv.push_back("iclv");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  const Logger log{err, quiet};
  try {
    if (*design) {
      auto attrs = table1_attributes();
      log("searching a " + std::to_string(runs) + "-run design (seed " + std::to_string(design_seed) + ")");
      auto d = generate_design(attrs, runs, design_seed);
      if (block_size > 0) assign_blocks(d, block_size, design_seed);
      const auto r = orthogonality_report(d);
      log("max |correlation| " + text::fixed(r.max_abs_correlation, 4) + ", D-efficiency " +
          text::fixed(r.d_efficiency, 2));
      write_text(design_out, design_to_csv(d), out);
      if (!design_report_out.empty()) write_text(design_report_out, render_design_report(d, r), out);
      return kExitOk;
    }

    if (*simulate) {
      const bool latents = preset == "table6";
      TruthConfig cfg = table6_truth_config(latents, sim_design_seed);
      cfg.seed = sim_seed;
      cfg.respondents = respondents;
      cfg.tasks_per_respondent = tasks;
      if (!sim_spec.empty()) {
        cfg.spec = load_model_spec(sim_spec);
        cfg.truth = cfg.spec.parameters;
      }
      if (!sim_truth.empty()) {
        for (const auto& [name, v] : read_parameter_values(sim_truth)) {
          if (!cfg.truth.contains(name)) throw SpecError("truth file: unknown parameter '" + name + "'");
          cfg.truth.set(name, v);
        }
      }
      fs::create_directories(sim_dir);
      log("simulating " + std::to_string(respondents) + " respondents x " + std::to_string(tasks) + " tasks (seed " +
          std::to_string(sim_seed) + ")");
      const auto ds = simulate_dataset(cfg, threads);
      ModelSpec spec = cfg.spec;
      spec.choices_file = "choices.csv";
      spec.respondents_file = "respondents.csv";
      const fs::path dir(sim_dir);
      save_dataset(ds, (dir / "choices.csv").string(), (dir / "respondents.csv").string(), spec.column_map());
      write_text((dir / "spec.txt").string(), render_model_spec(spec), out);
      if (latents && sim_spec.empty()) {
        // Same data, plain MNL spec, for side-by-side estimation.
        ModelSpec mnl = table6_spec(false);
        mnl.choices_file = spec.choices_file;
        mnl.respondents_file = spec.respondents_file;
        mnl.indicator_names = spec.indicator_names;
        mnl.columns = spec.columns;
        write_text((dir / "spec_mnl.txt").string(), render_model_spec(mnl), out);
      }
      write_parameter_file(cfg.truth, (dir / "truth.txt").string());
      write_text((dir / "design.csv").string(), design_to_csv(cfg.design), out);
      log("wrote " + dir.string());
      return kExitOk;
    }

    if (*est) {
      ModelSpec spec = load_model_spec(est_spec);
      const auto ds = load_spec_data(spec, est_choices, est_resp);
      DrawPlan plan = spec.draws;
      est_draws.apply(plan);
      OptimizerOptions opt = spec.optimizer;
      opt.threads = threads;
      if (max_iter > 0) opt.max_iterations = max_iter;
      if (robust) opt.robust = true;
      if (!bic_n.empty())
        opt.bic_observations = bic_n == "tasks" ? BicObservations::Tasks : BicObservations::TasksAndIndicators;
      log("estimating " + spec.name + " on " + std::to_string(ds.num_tasks()) + " tasks" +
          (spec.has_latents() ? " with " + std::to_string(plan.draws) + " draws" : std::string()));
      const auto t0 = std::chrono::steady_clock::now();
      const auto res = estimate(spec, ds, plan, opt);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      log(res.message + " after " + std::to_string(res.iterations) + " iterations, " + text::fixed(secs, 1) + " s");
      for (const auto& n : res.notes) log("note: " + n);
      if (!res.singular_parameters.empty())
        log("singular directions involve: " + text::join(res.singular_parameters, ", "));
      save_results(res, est_out);
      if (!est_params_out.empty()) write_parameter_file(res.params, est_params_out);
      if (est_format == "text") out << render_estimation_table({res});
      else if (est_format == "csv") out << estimation_csv(res);
      return res.converged ? kExitOk : kExitNotConverged;
    }

    if (*eff) {
      ModelSpec spec = load_model_spec(eff_spec);
      const auto ds = load_spec_data(spec, eff_choices, eff_resp);
      const auto res = load_results(eff_results);
      DrawPlan plan = spec.draws;
      eff_draws.apply(plan);
      spec.optimizer.threads = threads;
      FittedModel fm = fitted_model(spec, res, plan);
      EffectOptions opt;
      opt.method = eff_method == "fd" ? EffectMethod::FiniteDifference : EffectMethod::Analytic;
      opt.averaging = eff_avg == "means" ? Averaging::AtMeans : Averaging::SampleAverage;
      std::vector<EffectResult> effects;
      if (!eff_var.empty()) {
        if (eff_alt.empty()) throw SpecError("--variable needs --alternative");
        bool dummy = true;
        try {
          effects.push_back(elasticity(fm, ds, eff_var, eff_alt, opt));
          dummy = false;
        } catch (const SpecError& e) {
          if (std::string(e.what()).find("0/1") == std::string::npos) throw;
        }
        if (dummy) effects.push_back(marginal_effect(fm, ds, eff_var, eff_alt, opt));
      } else {
        effects = effects_table(fm, ds, opt);
      }
      log("effects: " + std::string(to_string(opt.method)) + ", " + std::string(to_string(opt.averaging)));
      write_text(eff_out, eff_format == "csv" ? effects_to_csv(effects)
                                              : "Averaging: " + std::string(to_string(opt.averaging)) + "\n" +
                                                    render_effects(effects),
                 out);
      return kExitOk;
    }

    if (*psy) {
      ModelSpec spec = load_model_spec(psy_spec);
      const auto ds = load_spec_data(spec, psy_choices, psy_resp);
      const auto items = item_block(ds, spec_scales(spec));
      const int m = factors > 0 ? factors : static_cast<int>(std::max<std::size_t>(1, items.scales.size()));
      const auto r = psych_report(items, m);
      write_text(psy_out, psy_format == "csv" ? psych_report_csv(items, r) : render_psych_report(items, r), out);
      return kExitOk;
    }

    if (*rep) {
      std::vector<EstimationResult> results;
      for (const auto& p : rep_results) results.push_back(load_results(p));
      if (rep_format == "csv") {
        if (results.size() != 1) throw DataError("csv output takes one results file");
        write_text(rep_out, estimation_csv(results.front()), out);
      } else {
        write_text(rep_out, render_estimation_table(results, rep_measurement), out);
      }
      return kExitOk;
    }

    if (*sum) {
      ModelSpec spec = load_model_spec(sum_spec);
      const auto ds = load_spec_data(spec, sum_choices, sum_resp);
      write_text(sum_out, render_summary(summarize(ds)), out);
      return kExitOk;
    }
  } catch (const SpecError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace iclv
