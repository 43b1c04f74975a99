#include "alqr/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include "alqr/errors.hpp"
#include "alqr/trial_io.hpp"

namespace alqr {
namespace {

void problem(TrialAnalysis& a, std::uint64_t row, std::string message) {
  a.problems.push_back({a.label, row, std::move(message)});
}

void replay_breaker(TrialAnalysis& a, const TrialRecord& record, const ControllerConfig& cfg) {
  std::uint64_t xi = 0;
  for (const auto& row : record.steps) {
    BreakerFlag expected = BreakerFlag::Inactive;
    if (xi == 0) {
      if (row.u_ce.norm() > cfg.threshold(row.k)) {
        expected = BreakerFlag::Triggered;
        xi = cfg.dwell(row.k);
      }
    } else {
      expected = BreakerFlag::Dwell;
      --xi;
    }
    if (row.breaker != expected) {
      problem(a, row.k,
              "breaker flag " + std::to_string(static_cast<int>(row.breaker)) +
                  " does not replay (expected " + std::to_string(static_cast<int>(expected)) + ")");
      return;
    }
    const bool cb_ok = is_active(expected) ? row.u_cb.isZero(0.0) : row.u_cb == row.u_ce;
    if (!cb_ok) {
      problem(a, row.k, "u_cb inconsistent with breaker state");
      return;
    }
  }
}

}  // namespace

TrialAnalysis analyze_trial(const Experiment& experiment, std::uint64_t index,
                            const std::string& label, const TrialRecord& record,
                            const std::optional<std::vector<GainRecord>>& gains,
                            const AnalysisOptions& options) {
  const PlantSpec& plant = experiment.plant;
  const auto& cfg = experiment.config;
  TrialAnalysis a;
  a.index = index;
  a.label = label;
  a.steps = record.horizon();
  if (record.n != plant.n() || record.m != plant.m()) {
    problem(a, 0, "log dimensions do not match the configured plant");
    return a;
  }
  if (record.steps.empty()) {
    problem(a, 0, "log has no rows");
    return a;
  }

  const std::uint64_t seed = trial_seed(cfg.base_seed, index);
  const auto& A = plant.sys().A;
  const auto& B = plant.sys().B;
  RegretLedger ledger(experiment.oracle.Jstar);
  DecompositionAccumulator decomposition(plant, experiment.oracle);
  auto checkpoint = experiment.checkpoints.begin();

  for (std::size_t i = 0; i < record.steps.size(); ++i) {
    const StepRecord& row = record.steps[i];
    const Vector u = row.u();
    const double recomputed = stage_cost(row.x, u, plant.cost());
    if (!(std::abs(recomputed - row.stage_cost) <=
          options.stage_cost_rtol * (1.0 + std::abs(recomputed)))) {
      problem(a, row.k,
              "stage_cost " + format_double(row.stage_cost) + " differs from recomputed " +
                  format_double(recomputed));
    }
    if (options.replay_noise) {
      const NoiseStream stream{seed, row.k};
      const Vector w = draw_process_noise_factored(stream, plant.noise_factor());
      const Vector u_pr = std::pow(static_cast<double>(row.k), ControllerConfig::kProbeExponent) *
                          draw_probe_noise(stream, plant.m());
      if (w != row.w) problem(a, row.k, "w does not match the seeded noise stream");
      if (u_pr != row.u_pr) problem(a, row.k, "u_pr does not match the seeded probe stream");
    }
    const Vector predicted = A * row.x + B * u + row.w;
    Vector next = predicted;
    if (i + 1 < record.steps.size()) {
      next = record.steps[i + 1].x;
      if (!((next - predicted).norm() <= options.dynamics_rtol * (1.0 + predicted.norm()))) {
        problem(a, record.steps[i + 1].k, "state does not follow the plant dynamics");
      }
    }
    ledger.accrue_stage_cost(row.stage_cost);
    decomposition.add(row.x, row.u_cb, row.u_pr, row.w);
    const bool last = i + 1 == record.steps.size();
    while (checkpoint != experiment.checkpoints.end() && *checkpoint < row.k) ++checkpoint;
    if (last || (checkpoint != experiment.checkpoints.end() && *checkpoint == row.k)) {
      const DecompositionReport rep = decomposition.report(next, ledger.regret());
      a.max_residual_ratio = std::max(a.max_residual_ratio, rep.residual / rep.tolerance());
      if (!rep.holds()) {
        problem(a, row.k,
                "decomposition residual " + format_double(rep.residual) + " exceeds " +
                    format_double(rep.tolerance()));
      }
      if (last) a.decomposition = rep;
    }
  }

  replay_breaker(a, record, cfg.controller);
  a.t_nocb = detect_t_nocb(record);
  a.noise_event_holds = check_noise_event(record, cfg.delta);
  a.max_state_norm_ratio = max_state_norm_ratio(record, cfg.delta);
  if (gains) {
    TrialRecord with_gains = record;
    with_gains.gains = *gains;
    a.t_stab = detect_t_stab(with_gains, experiment.oracle, plant, cfg.controller);
  }
  return a;
}

bool AnalysisReport::ok() const { return all_problems().empty(); }

std::vector<AnalysisProblem> AnalysisReport::all_problems() const {
  std::vector<AnalysisProblem> out = problems;
  for (const auto& t : trials) out.insert(out.end(), t.problems.begin(), t.problems.end());
  return out;
}

AnalysisReport analyze_trial_logs(const Experiment& experiment,
                                  const std::filesystem::path& trials_dir,
                                  const AnalysisOptions& options) {
  AnalysisReport report;
  if (!std::filesystem::is_directory(trials_dir)) {
    report.problems.push_back({trials_dir.string(), 0, "trial directory not found"});
    return report;
  }
  static const std::regex pattern(R"(trial_(\d+)\.csv)");
  std::vector<std::pair<std::uint64_t, std::filesystem::path>> files;
  for (const auto& entry : std::filesystem::directory_iterator(trials_dir)) {
    std::smatch match;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, match, pattern)) {
      files.emplace_back(std::stoull(match[1].str()), entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) report.problems.push_back({trials_dir.string(), 0, "no trial logs found"});

  for (const auto& [index, path] : files) {
    const std::string label = path.filename().string();
    try {
      const TrialRecord record = read_trial_csv(path);
      std::optional<std::vector<GainRecord>> gains;
      const auto gains_path = trials_dir / ("trial_" + std::to_string(index) + "_gains.csv");
      if (std::filesystem::exists(gains_path)) {
        gains = read_gains_csv(gains_path, record.n, record.m);
      }
      report.trials.push_back(analyze_trial(experiment, index, label, record, gains, options));
    } catch (const Error& e) {
      TrialAnalysis failed;
      failed.index = index;
      failed.label = label;
      failed.problems.push_back({label, 0, std::string(e.kind()) + ": " + e.what()});
      report.trials.push_back(std::move(failed));
    }
  }
  return report;
}

}  // namespace alqr
