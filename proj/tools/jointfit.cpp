// Command-line front end: simulate cohorts, fit joint longitudinal/event
// models, predict conditional survival, and compare models by
// time-dependent AUC. Every subcommand is a pure function of its inputs,
// flags, and seed. Exit codes: 0 success, 2 input/validation error,
// 3 numerical failure.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hjm/dataset.hpp"
#include "hjm/error.hpp"
#include "hjm/fit.hpp"
#include "hjm/predict.hpp"
#include "hjm/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw hjm::SchemaError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw hjm::ParseError(path + ": " + e.what());
  }
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw hjm::SchemaError("cannot write " + path);
  out << text;
}

void write_manifest(const std::string& dir, const std::string& command, const json& config,
                    std::uint64_t seed, double seconds) {
  json m;
  m["command"] = command;
  m["config"] = config;
  m["seed"] = seed;
  m["version"] = kVersion;
  m["wall_seconds"] = seconds;
  write_text(dir + "/manifest.json", m.dump(2));
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct DataFlags {
  std::string long_path, event_path;

  hjm::Dataset load(hjm::HierarchyMode mode) const {
    auto longitudinal = hjm::load_longitudinal(long_path);
    auto event = hjm::load_event(event_path);
    return hjm::build_dataset(longitudinal, event, mode);
  }
};

struct SpecFlags {
  std::string spec_path;
  std::string mode;
  std::vector<std::string> assoc;  // value or slope
  std::string summary;
  bool frailty = false;
  bool shared_re = false;

  hjm::ModelSpec resolve() const {
    hjm::ModelSpec spec = hjm::ModelSpec::from_json(read_json(spec_path));
    if (!mode.empty()) spec.mode = hjm::parse_hierarchy_mode(mode);
    if (!assoc.empty()) {
      const hjm::Summary s = summary.empty() ? hjm::Summary::kSum : hjm::parse_summary(summary);
      spec.association.clear();
      for (const auto& name : assoc) {
        const hjm::Functional f = hjm::parse_functional(name);
        if (f == hjm::Functional::kAuc)
          throw hjm::DomainError("only value and slope functionals are exposed on the CLI");
        spec.association.push_back({f, s});
      }
    } else if (!summary.empty()) {
      const hjm::Summary s = hjm::parse_summary(summary);
      for (auto& term : spec.association) term.summary = s;
    }
    if (frailty) spec.frailty = true;
    if (shared_re) spec.shared_re = true;
    spec.validate();
    return spec;
  }
};

int cmd_simulate(const std::string& design_path, const std::string& out, std::uint64_t seed) {
  Stopwatch clock;
  const json design_json = read_json(design_path);
  const hjm::SimulationDesign design = hjm::SimulationDesign::from_json(design_json);
  auto sim = hjm::simulate_dataset(design, seed);

  fs::create_directories(out);
  hjm::csv::write_file(out + "/longitudinal.csv", sim.data.export_longitudinal());
  hjm::csv::write_file(out + "/event.csv", sim.data.export_event());
  write_text(out + "/truth.json", sim.truth.dump(2));
  write_manifest(out, "simulate", design_json, seed, clock.seconds());

  int events = 0;
  for (const auto& p : sim.data.patients) events += p.status;
  std::printf("patients %d  clusters %d  observations %d  event fraction %.3f\n",
              sim.data.n_patients(), sim.data.total_clusters(), sim.data.total_obs(),
              static_cast<double>(events) / sim.data.n_patients());
  return 0;
}

int cmd_fit(const DataFlags& data_flags, const SpecFlags& spec_flags,
            const hjm::ChainConfig& chains, const std::string& out) {
  Stopwatch clock;
  const hjm::ModelSpec spec = spec_flags.resolve();
  const hjm::Dataset data = data_flags.load(spec.mode);
  const hjm::Design design = hjm::Design::build(data, spec);

  auto fit = hjm::fit_model(design, chains);
  fs::create_directories(out);
  hjm::save_fit(out, design, fit);

  json config;
  config["spec"] = spec.to_json();
  config["chains"] = chains.chains;
  config["warmup"] = chains.warmup;
  config["samples"] = chains.samples;
  config["longitudinal"] = data_flags.long_path;
  config["event"] = data_flags.event_path;
  write_manifest(out, "fit", config, chains.seed, clock.seconds());

  const json diag = read_json(out + "/diagnostics.json");
  std::printf("fit complete: %d draws, %d divergences, %.1fs\n",
              fit.draws.n_draws(), fit.draws.divergence_count(), clock.seconds());
  if (diag.value("divergence_warning", false))
    std::fprintf(stderr, "warning: divergence rate above 20%%; treat estimates with caution\n");
  return 0;
}

int cmd_predict(const DataFlags& data_flags, const std::string& fit_dir, double landmark,
                double horizon, const std::vector<std::string>& patients, std::uint64_t seed,
                const std::string& out) {
  Stopwatch clock;
  const hjm::LoadedFit fit = hjm::load_fit(fit_dir);
  const hjm::Dataset data = data_flags.load(fit.spec.mode);
  const hjm::LandmarkQuery query{landmark, horizon, patients};
  auto pred = hjm::conditional_survival(data, fit, query, seed);

  fs::create_directories(out);
  hjm::csv::write_file(out + "/predictions.csv", hjm::predictions_to_csv(pred));
  json config{{"fit", fit_dir}, {"landmark", landmark}, {"horizon", horizon}};
  write_manifest(out, "predict", config, seed, clock.seconds());
  std::printf("predicted %zu patients at landmark %g, horizon %g\n", pred.rows.size(), landmark,
              horizon);
  return 0;
}

int cmd_auc(const DataFlags& data_flags, const std::vector<std::string>& fit_dirs,
            double landmark, double horizon, std::uint64_t seed, const std::string& out) {
  Stopwatch clock;
  const hjm::LandmarkQuery query{landmark, horizon, {}};
  fs::create_directories(out);

  hjm::csv::Table comparison;
  comparison.header = {"model", "auc", "cases", "controls", "excluded"};
  json all = json::array();
  for (const auto& dir : fit_dirs) {
    const hjm::LoadedFit fit = hjm::load_fit(dir);
    const hjm::Dataset data = data_flags.load(fit.spec.mode);
    auto pred = hjm::conditional_survival(data, fit, query, seed);
    auto auc = hjm::time_dependent_auc(pred, data, query);
    json j = hjm::auc_to_json(auc, query);
    j["model"] = fs::path(dir).filename().string();
    all.push_back(j);
    comparison.rows.push_back({fs::path(dir).filename().string(), hjm::csv::format_real(auc.auc),
                               std::to_string(auc.cases), std::to_string(auc.controls),
                               std::to_string(auc.excluded)});
    std::printf("%s: auc %.4f (cases %d, controls %d, excluded %d)\n",
                fs::path(dir).filename().string().c_str(), auc.auc, auc.cases, auc.controls,
                auc.excluded);
  }
  write_text(out + "/auc.json", (all.size() == 1 ? all[0] : all).dump(2));
  if (all.size() > 1) hjm::csv::write_file(out + "/comparison.csv", comparison);
  json config{{"fits", fit_dirs}, {"landmark", landmark}, {"horizon", horizon}};
  write_manifest(out, "auc", config, seed, clock.seconds());
  return 0;
}

int cmd_summarize(const std::string& fit_dir) {
  std::ifstream in(fit_dir + "/summary.csv");
  if (!in) throw hjm::SchemaError("no summary.csv under " + fit_dir);
  std::string line;
  while (std::getline(in, line)) std::puts(line.c_str());
  const json diag = read_json(fit_dir + "/diagnostics.json");
  std::printf("\ndivergences: %d (rate %.4f), runtime %.1fs\n",
              diag.value("divergences", 0), diag.value("divergence_rate", 0.0),
              diag.value("runtime_seconds", 0.0));
  double worst_rhat = 0.0;
  for (const auto& p : diag.value("parameters", json::array()))
    if (p.contains("rhat") && p["rhat"].is_number())
      worst_rhat = std::max(worst_rhat, p["rhat"].get<double>());
  std::printf("largest split R-hat among population parameters: %.4f\n", worst_rhat);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint longitudinal and time-to-event modelling for multilevel data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic cohort from a design JSON");
  std::string design_path, out_dir;
  std::uint64_t seed = 1;
  sim->add_option("--design", design_path, "simulation design JSON")
      ->required()
      ->check(CLI::ExistingFile);
  sim->add_option("--out", out_dir, "output directory")->required();
  sim->add_option("--seed", seed, "random seed");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a joint model and write the posterior artifact");
  DataFlags data_flags;
  SpecFlags spec_flags;
  hjm::ChainConfig chains;
  fit->add_option("--long", data_flags.long_path, "longitudinal CSV")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--event", data_flags.event_path, "event CSV")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--spec", spec_flags.spec_path, "model specification JSON")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--chains", chains.chains, "number of chains");
  fit->add_option("--warmup", chains.warmup, "warmup iterations per chain");
  fit->add_option("--samples", chains.samples, "posterior draws per chain");
  fit->add_option("--seed", chains.seed, "random seed");
  fit->add_option("--mode", spec_flags.mode, "hierarchy: below, none, or above")
      ->check(CLI::IsMember({"below", "none", "above"}));
  fit->add_option("--assoc", spec_flags.assoc, "association functionals (value, slope)");
  fit->add_option("--summary", spec_flags.summary, "cluster summary (sum, average, max, min)");
  fit->add_flag("--frailty", spec_flags.frailty, "group-level frailty in the hazard");
  fit->add_flag("--shared-re", spec_flags.shared_re, "group-intercept association");
  fit->add_option("--out", out_dir, "output directory")->required();

  // predict
  auto* pred = app.add_subcommand("predict", "Conditional survival at a landmark/horizon pair");
  std::string fit_dir;
  double landmark = 0.0, horizon = 0.0;
  std::vector<std::string> patients;
  pred->add_option("--long", data_flags.long_path, "longitudinal CSV")
      ->required()
      ->check(CLI::ExistingFile);
  pred->add_option("--event", data_flags.event_path, "event CSV")
      ->required()
      ->check(CLI::ExistingFile);
  pred->add_option("--fit", fit_dir, "fit artifact directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  pred->add_option("--landmark", landmark, "landmark time")->required();
  pred->add_option("--horizon", horizon, "horizon time (> landmark)")->required();
  pred->add_option("--patients", patients, "restrict to these patient ids");
  pred->add_option("--seed", seed, "random seed");
  pred->add_option("--out", out_dir, "output directory")->required();

  // auc
  auto* auc = app.add_subcommand("auc", "Time-dependent AUC for one or more fitted models");
  std::vector<std::string> fit_dirs;
  auc->add_option("--long", data_flags.long_path, "longitudinal CSV")
      ->required()
      ->check(CLI::ExistingFile);
  auc->add_option("--event", data_flags.event_path, "event CSV")
      ->required()
      ->check(CLI::ExistingFile);
  auc->add_option("--fit", fit_dirs, "fit artifact directories (repeatable)")
      ->required()
      ->check(CLI::ExistingDirectory);
  auc->add_option("--landmark", landmark, "landmark time")->required();
  auc->add_option("--horizon", horizon, "horizon time (> landmark)")->required();
  auc->add_option("--seed", seed, "random seed");
  auc->add_option("--out", out_dir, "output directory")->required();

  // summarize
  auto* summ = app.add_subcommand("summarize", "Print the summary table of a fit artifact");
  summ->add_option("--fit", fit_dir, "fit artifact directory")
      ->required()
      ->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(design_path, out_dir, seed);
    if (fit->parsed()) return cmd_fit(data_flags, spec_flags, chains, out_dir);
    if (pred->parsed())
      return cmd_predict(data_flags, fit_dir, landmark, horizon, patients, seed, out_dir);
    if (auc->parsed()) return cmd_auc(data_flags, fit_dirs, landmark, horizon, seed, out_dir);
    if (summ->parsed()) return cmd_summarize(fit_dir);
  } catch (const hjm::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const hjm::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
