// alqr: run adaptive-LQR regret experiments, verify trial logs and run the
// built-in oracle suite.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "alqr/analyze.hpp"
#include "alqr/config.hpp"
#include "alqr/errors.hpp"
#include "alqr/harness.hpp"
#include "alqr/report.hpp"
#include "alqr/verify.hpp"

namespace fs = std::filesystem;
using alqr::Json;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

int report_error(const alqr::Error& e) {
  Json err{{"error", e.kind()}, {"message", e.what()}};
  if (const auto* ci = dynamic_cast<const alqr::ConfigInvalid*>(&e)) err["pointer"] = ci->pointer();
  std::cerr << err.dump() << '\n';
  return dynamic_cast<const alqr::ConfigInvalid*>(&e) ? kExitConfig : kExitFailure;
}

struct SimulateArgs {
  std::string config;
  std::string out;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> trials;
  std::optional<std::uint64_t> horizon;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
};

int simulate(const SimulateArgs& args) {
  Json j = alqr::load_json_file(args.config);
  for (const auto& o : args.overrides) alqr::apply_override(j, o);
  if (args.trials) j["trials"] = *args.trials;
  if (args.horizon) j["horizon"] = *args.horizon;
  if (args.seed) j["base_seed"] = *args.seed;
  const alqr::ExperimentConfig config = alqr::config_from_json(j);
  const alqr::Experiment experiment = alqr::Experiment::prepare(config);

  const fs::path out(args.out);
  alqr::RunOptions options;
  options.threads = args.threads;
  if (config.write_trial_logs) options.trial_log_dir = out / "trials";
  const alqr::ExperimentSummary summary = alqr::run_experiment(experiment, options);
  alqr::write_experiment_outputs(out, config, summary);

  std::cout << "trials: " << summary.trials.size() << " (failed " << summary.failed_trials
            << "), J* = " << summary.Jstar << '\n';
  if (summary.mean_slope) std::cout << "mean relative-regret slope: " << summary.mean_slope->slope << '\n';
  std::cout << "decomposition identity: " << (summary.decomposition_holds ? "holds" : "VIOLATED")
            << '\n';
  return summary.decomposition_holds && summary.failed_trials == 0 ? EXIT_SUCCESS : kExitFailure;
}

struct AnalyzeArgs {
  std::string dir;
  std::string config;
  std::vector<std::string> overrides;
  bool replay_noise = false;
};

int analyze(const AnalyzeArgs& args) {
  fs::path trials_dir = args.dir;
  fs::path config_path;
  if (fs::is_directory(trials_dir / "trials")) {
    config_path = trials_dir / "config.json";
    trials_dir /= "trials";
  } else {
    config_path = trials_dir.parent_path() / "config.json";
  }
  if (!args.config.empty()) config_path = args.config;

  Json j = alqr::load_json_file(config_path);
  for (const auto& o : args.overrides) alqr::apply_override(j, o);
  const alqr::Experiment experiment = alqr::Experiment::prepare(alqr::config_from_json(j));
  alqr::AnalysisOptions options;
  options.replay_noise = args.replay_noise;
  const alqr::AnalysisReport report = alqr::analyze_trial_logs(experiment, trials_dir, options);

  for (const auto& t : report.trials) {
    Json tj{{"trial", t.label},
            {"steps", t.steps},
            {"t_nocb", {{"step", t.t_nocb.step}, {"censored", t.t_nocb.censored}}},
            {"noise_event_holds", t.noise_event_holds},
            {"max_state_norm_ratio", t.max_state_norm_ratio},
            {"max_residual_ratio", t.max_residual_ratio},
            {"ok", t.problems.empty()}};
    if (t.t_stab) tj["t_stab"] = {{"step", t.t_stab->step}, {"censored", t.t_stab->censored}};
    if (t.decomposition) {
      tj["regret"] = t.decomposition->regret;
      tj["decomposition"] = {{"terms", t.decomposition->terms},
                             {"total", t.decomposition->total},
                             {"residual", t.decomposition->residual}};
    }
    std::cout << tj.dump() << '\n';
  }
  const auto problems = report.all_problems();
  for (const auto& p : problems) {
    std::cerr << Json{{"error", "AnalysisFailure"}, {"trial", p.trial}, {"row", p.row},
                      {"message", p.message}}
                     .dump()
              << '\n';
  }
  return problems.empty() ? EXIT_SUCCESS : kExitFailure;
}

struct GenPlantArgs {
  int n = 8;
  int m = 4;
  double rho = 0.95;
  std::uint64_t seed = 1;
  std::string out;
};

int gen_plant(const GenPlantArgs& args) {
  const alqr::PlantSpec plant = alqr::generate_stand_in_plant(args.n, args.m, args.rho, args.seed);
  const std::string text = alqr::plant_to_json(plant).dump(2) + "\n";
  if (args.out.empty()) {
    std::cout << text;
    return EXIT_SUCCESS;
  }
  std::ofstream out(args.out);
  if (!out || !(out << text)) throw alqr::IoError("cannot write " + args.out);
  return EXIT_SUCCESS;
}

int verify(const std::vector<std::string>& overrides) {
  Json j = Json::object();
  for (const auto& o : overrides) alqr::apply_override(j, o);
  alqr::VerifyOptions options;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "rtol" && it->is_number()) {
      options.dare.rtol = it->get<double>();
    } else if (it.key() == "max_iterations" && it->is_number_integer()) {
      options.dare.max_iterations = it->get<int>();
    } else {
      throw alqr::ConfigInvalid("/" + it.key(), "verify accepts rtol and max_iterations");
    }
  }
  const bool ok = alqr::print_oracle_table(std::cout, alqr::run_oracle_suite(options));
  return ok ? EXIT_SUCCESS : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive LQR with circuit-breaking: regret experiments and checks"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a seeded multi-trial experiment");
  sim_cmd->add_option("--config", sim.config, "Experiment config (JSON)")->required();
  sim_cmd->add_option("--out", sim.out, "Output directory")->required();
  sim_cmd->add_option("--set", sim.overrides, "Override key=value (dotted path), repeatable");
  sim_cmd->add_option("--trials", sim.trials, "Number of trials");
  sim_cmd->add_option("--horizon", sim.horizon, "Steps per trial");
  sim_cmd->add_option("--seed", sim.seed, "Base seed");
  sim_cmd->add_option("--threads", sim.threads, "Worker threads (capped by ALQR_THREADS)");

  AnalyzeArgs an;
  auto* an_cmd = app.add_subcommand("analyze", "Re-verify trial logs of a simulate run");
  an_cmd->add_option("dir", an.dir, "Run directory (or its trials/ subdirectory)")->required();
  an_cmd->add_option("--config", an.config, "Config to use instead of <run>/config.json");
  an_cmd->add_option("--set", an.overrides, "Override key=value, repeatable");
  an_cmd->add_flag("--replay-noise", an.replay_noise,
                   "Regenerate the seeded noise streams and compare");

  GenPlantArgs gp;
  auto* gp_cmd = app.add_subcommand("gen-plant", "Generate a stable, controllable stand-in plant");
  gp_cmd->add_option("--n", gp.n, "State dimension")->check(CLI::PositiveNumber);
  gp_cmd->add_option("--m", gp.m, "Input dimension")->check(CLI::PositiveNumber);
  gp_cmd->add_option("--rho", gp.rho, "Target spectral radius in (0, 1)");
  gp_cmd->add_option("--seed", gp.seed, "Generator seed");
  gp_cmd->add_option("--out", gp.out, "Write the plant JSON here instead of stdout");

  std::vector<std::string> verify_overrides;
  auto* ver_cmd = app.add_subcommand("verify", "Run the built-in oracle suite");
  ver_cmd->add_option("--set", verify_overrides, "Override rtol=... or max_iterations=...");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim_cmd) return simulate(sim);
    if (*an_cmd) return analyze(an);
    if (*gp_cmd) return gen_plant(gp);
    if (*ver_cmd) return verify(verify_overrides);
  } catch (const alqr::Error& e) {
    return report_error(e);
  } catch (const std::exception& e) {
    std::cerr << Json{{"error", "InternalError"}, {"message", e.what()}}.dump() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
