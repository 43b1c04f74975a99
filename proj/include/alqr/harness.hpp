#pragma once

// Seeded multi-trial experiments: run the adaptive controller on a ground-truth
// plant, checkpoint regret and its decomposition, and aggregate statistics.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "alqr/control_math.hpp"
#include "alqr/controller.hpp"
#include "alqr/diagnostics.hpp"
#include "alqr/plant.hpp"
#include "alqr/regret.hpp"
#include "alqr/trial_record.hpp"

namespace alqr {

struct PlantGenerator {
  int n = 3;
  int m = 2;
  double target_rho = 0.9;
  std::uint64_t seed = 1;
};

using PlantSource = std::variant<PlantSpec, PlantGenerator>;

struct ExperimentConfig {
  PlantSource plant = PlantGenerator{};
  std::uint64_t horizon = 0;
  std::uint64_t trials = 0;
  std::uint64_t base_seed = 0;
  /// Geometric ratio between regret checkpoints (k_j = ceil(stride^j));
  /// 1 samples every step.
  double checkpoint_stride = 1.2;
  double delta = 0.05;
  SlopeWindow slope_window{1.0, 1.0};
  ControllerConfig controller;
  /// Re-estimate every step for the estimation monitor (control still
  /// follows the gain schedule).
  bool estimate_every_step = false;
  bool verbose_monitors = false;
  bool write_trial_logs = true;
};

/// Random dense A rescaled to spectral radius `target_rho`, B with unit
/// normal entries, W = Q = I_n, R = I_m. Uncontrollable draws are
/// regenerated with seed + 1 (up to 100 attempts, then GenerationFailed).
PlantSpec generate_stand_in_plant(int n, int m, double target_rho, std::uint64_t seed);

/// Generator settings of the n = 3, m = 2, rho(A) = 0.9 reference plant.
PlantGenerator reference_plant_generator();
PlantSpec reference_plant();

/// ceil(stride^j) for j = 0, 1, ... deduplicated, capped by and including T.
std::vector<std::uint64_t> geometric_checkpoints(std::uint64_t horizon, double stride);

std::uint64_t trial_seed(std::uint64_t base_seed, std::uint64_t trial_index);

/// Config resolved against its ground truth: plant plus oracle quantities.
struct Experiment {
  ExperimentConfig config;
  PlantSpec plant;
  RiccatiSolution oracle;
  LyapunovCertificate open_loop;
  std::vector<std::uint64_t> checkpoints;

  /// Throws ConfigInvalid for invariant violations.
  static Experiment prepare(ExperimentConfig config);
};

struct CheckpointSample {
  std::uint64_t k = 0;
  double regret = 0.0;
  double relative_regret = 0.0;  // R(k) / (k J*)
  double decomposition_residual = 0.0;
  double decomposition_tolerance = 0.0;
  double estimation_error = 0.0;  // |Theta_hat_k - Theta| with k-1 pairs
};

struct TrialResult {
  std::uint64_t index = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string failure;
  std::vector<CheckpointSample> samples;
  TrialDiagnostics diagnostics;
  DecompositionReport decomposition;  // at the last completed step
  bool decomposition_holds = true;    // at every checkpoint
  std::uint64_t gain_updates = 0;
  std::uint64_t dare_failures = 0;
  std::uint64_t uncontrollable_updates = 0;
  std::optional<TrialRecord> record;
};

/// Where a trial streams its log.
struct TrialSinks {
  bool keep_record = false;
  std::ostream* steps_csv = nullptr;
  std::ostream* gains_csv = nullptr;
};

/// Deterministic in (experiment, trial_index). DivergedState marks the trial
/// failed instead of propagating.
TrialResult run_trial(const Experiment& experiment, std::uint64_t trial_index,
                      const TrialSinks& sinks = {});

struct TrialSummary {
  std::uint64_t index = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string failure;
  double final_regret = 0.0;
  double final_relative_regret = 0.0;
  double max_residual_ratio = 0.0;  // max over checkpoints of residual / tolerance
  bool decomposition_holds = true;
  std::uint64_t gain_updates = 0;
  std::uint64_t dare_failures = 0;
  TrialDiagnostics diagnostics;
};

struct ExperimentSummary {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  double Jstar = 0.0;
  double rhoStar = 0.0;
  std::uint64_t horizon = 0;
  std::uint64_t base_seed = 0;
  std::vector<std::uint64_t> checkpoints;
  std::vector<double> worst;
  std::vector<double> median;
  std::vector<double> mean;
  /// Median over trials of |Theta_hat_k - Theta|^2 sqrt(k).
  std::vector<double> median_scaled_estimation_error;
  std::optional<SlopeEstimate> mean_slope;
  std::optional<SlopeEstimate> median_slope;
  std::string slope_error;
  Histogram tnocb_histogram;
  std::vector<TrialSummary> trials;
  std::uint64_t failed_trials = 0;
  std::optional<std::uint64_t> worst_trial;   // by final relative regret
  std::optional<std::uint64_t> median_trial;
  double noise_event_fraction = 0.0;
  double quiet_second_half_fraction = 0.0;  // T_nocb <= T/2
  bool decomposition_holds = true;
};

struct RunOptions {
  /// 0: ALQR_THREADS if set, else hardware concurrency.
  unsigned threads = 0;
  /// Permutation of trial indices to execute (testing hook); empty = 0..N-1.
  std::vector<std::uint64_t> execution_order;
  /// When set, trial_<idx>.csv and trial_<idx>_gains.csv are written here.
  std::optional<std::filesystem::path> trial_log_dir;
};

ExperimentSummary run_experiment(const Experiment& experiment, const RunOptions& options = {});

unsigned worker_count(unsigned requested);

}  // namespace alqr
