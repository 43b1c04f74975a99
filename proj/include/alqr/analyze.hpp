#pragma once

// Post-hoc verification of trial logs: stage costs, breaker replay,
// dynamics consistency and the regret decomposition, recomputed from the CSV
// alone plus the run's plant.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "alqr/harness.hpp"

namespace alqr {

struct AnalysisProblem {
  std::string trial;      // file name or trial label
  std::uint64_t row = 0;  // 1-based data row; 0 for file-level problems
  std::string message;
};

struct TrialAnalysis {
  std::uint64_t index = 0;
  std::string label;
  std::uint64_t steps = 0;
  std::optional<DecompositionReport> decomposition;  // at the final step
  double max_residual_ratio = 0.0;                   // over checkpoints
  CensoredStep t_nocb;
  std::optional<CensoredStep> t_stab;  // needs the gains sidecar
  bool noise_event_holds = true;
  double max_state_norm_ratio = 0.0;
  std::vector<AnalysisProblem> problems;
};

struct AnalysisOptions {
  /// Regenerate w_k and v_k from the trial seed and compare bit-for-bit.
  bool replay_noise = false;
  double stage_cost_rtol = 1e-9;
  double dynamics_rtol = 1e-9;
};

/// Checks one parsed trial. `gains` enables T_stab.
TrialAnalysis analyze_trial(const Experiment& experiment, std::uint64_t index,
                            const std::string& label, const TrialRecord& record,
                            const std::optional<std::vector<GainRecord>>& gains,
                            const AnalysisOptions& options = {});

struct AnalysisReport {
  std::vector<TrialAnalysis> trials;
  std::vector<AnalysisProblem> problems;  // directory-level

  bool ok() const;
  std::vector<AnalysisProblem> all_problems() const;
};

/// Analyzes every trials/trial_<idx>.csv in `trials_dir`.
AnalysisReport analyze_trial_logs(const Experiment& experiment,
                                  const std::filesystem::path& trials_dir,
                                  const AnalysisOptions& options = {});

}  // namespace alqr
