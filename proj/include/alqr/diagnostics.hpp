#pragma once

// Empirical measurements of the closed-loop quantities the analysis relies
// on: last circuit-break time, stabilization time, noise-regularity event,
// state-norm growth and the log-log slope of the relative average regret.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "alqr/control_math.hpp"
#include "alqr/controller.hpp"
#include "alqr/plant.hpp"
#include "alqr/trial_record.hpp"

namespace alqr {

/// A step index that is right-censored when its defining condition still
/// fails at the horizon (the value is then T + 1).
struct CensoredStep {
  std::uint64_t step = 1;
  bool censored = false;

  friend bool operator==(const CensoredStep&, const CensoredStep&) = default;
};

struct TrialDiagnostics {
  std::uint64_t steps = 0;
  CensoredStep t_nocb;
  CensoredStep t_stab;
  bool noise_event_holds = true;
  std::uint64_t first_noise_violation = 0;  // 0: none
  double max_state_norm_ratio = 0.0;        // max_k |x_k| / log(k / delta)
  std::uint64_t breaker_triggers = 0;
  std::uint64_t breaker_active_steps = 0;
  // Verbose monitors (unset unless enabled).
  std::optional<bool> cov_event_holds;
  std::optional<bool> cross_event_holds;
  std::optional<bool> est_event_holds;
};

/// Bound of the noise-regularity event at step k: 2 sqrt(n+1) sqrt(log(k/delta)).
double noise_event_bound(Eigen::Index n, std::uint64_t k, double delta);

/// Constants of the verbose monitors.
struct MonitorConstants {
  double C_x = 0.0;
  double C_cross = 0.0;
  double C_theta = 0.0;
  std::uint64_t k0 = 0;  // first step the estimation bound applies
};

MonitorConstants monitor_constants(const PlantSpec& truth, const RiccatiSolution& oracle,
                                   const LyapunovCertificate& open_loop, double delta);

/// Streaming monitor fed by the simulation loop; equivalent to the log scans
/// below without retaining the log.
class TrialMonitor {
 public:
  TrialMonitor(const PlantSpec& truth, const RiccatiSolution& oracle,
               const LyapunovCertificate& open_loop, ControllerConfig controller, double delta,
               bool verbose);

  /// Call whenever K_hat changes (and once for the initial zero gain).
  void observe_gain(const Matrix& K);
  void observe_step(std::uint64_t k, const Vector& x, const Vector& w, const Vector& v,
                    const Vector& u_cb, BreakerFlag flag);
  void observe_estimate(std::uint64_t k, double estimation_error);

  TrialDiagnostics finish() const;

 private:
  double power_margin(std::uint64_t t);

  Matrix A_, B_, P_;
  double rho_;
  double delta_;
  bool verbose_;
  ControllerConfig controller_;
  MonitorConstants constants_;
  std::map<std::uint64_t, double> power_margins_;
  double gain_margin_ = 0.0;

  TrialDiagnostics diag_;
  std::uint64_t last_active_ = 0;
  std::uint64_t last_unstable_ = 0;
  Matrix cov_sum_;
  double cross_sum_ = 0.0;
};

/// 1 + last step with breaker activity; 1 if the breaker never fired.
CensoredStep detect_t_nocb(const TrialRecord& trial);

/// Smallest T such that for all logged k >= T both
///   stability_margin(A + B K_hat_k, P*) < rho and
///   stability_margin(A^{t_k}, P*) < rho, rho = (1 + rho*) / 2.
CensoredStep detect_t_stab(const TrialRecord& trial, const RiccatiSolution& oracle,
                           const PlantSpec& truth, const ControllerConfig& controller = {});

/// max(|w_k|, |v_k|) <= noise_event_bound(n, k, delta) for every logged k.
/// Requires 0 < delta <= 1/2.
bool check_noise_event(const TrialRecord& trial, double delta);

double max_state_norm_ratio(const TrialRecord& trial, double delta);

struct CurvePoint {
  double T = 0.0;
  double value = 0.0;
};

struct SlopeWindow {
  double lo = 0.0;
  double hi = 0.0;
};

struct SlopeEstimate {
  double slope = 0.0;
  double intercept = 0.0;
  SlopeWindow window;
  double r_squared = 0.0;
  std::size_t points = 0;
  std::size_t excluded_nonpositive = 0;
};

/// Least-squares line through (ln T, ln value) for points with T in the
/// window; non-positive values are excluded and counted. Throws EmptyWindow
/// with fewer than two usable points.
SlopeEstimate fit_regret_slope(std::span<const CurvePoint> curve, SlopeWindow window);

/// Decade bins [10^j, 10^{j+1}) covering 1..max_value.
struct Histogram {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::uint64_t> counts;
};

Histogram log10_histogram(std::span<const std::uint64_t> values, std::uint64_t max_value);

}  // namespace alqr
