#pragma once

// Certainty-equivalent LQR with circuit-breaking and decaying probing noise.
//
// Each step k:
//   1. (on schedule) re-estimate [A B]; if the estimate is controllable and
//      its DARE converges use the certainty-equivalent gain, else K_hat = 0;
//   2. u_ce = K_hat x;
//   3. breaker idle: trip when |u_ce| > M_k = log(k), holding u_cb = 0 for
//      t_k = floor(log(k)) further steps; otherwise u_cb = u_ce;
//   4. u = u_cb + k^{-1/4} v_k.

#include <cstdint>
#include <numbers>
#include <optional>
#include <string>

#include "alqr/control_math.hpp"
#include "alqr/estimator.hpp"
#include "alqr/plant.hpp"

namespace alqr {

enum class GainSchedule { EveryStep, PowersOfTwo };

std::string to_string(GainSchedule schedule);
/// Accepts "every-step" and "powers-of-two"; throws InvalidArgument.
GainSchedule parse_gain_schedule(const std::string& text);

struct ControllerConfig {
  GainSchedule schedule = GainSchedule::PowersOfTwo;
  /// Base of the logarithm in M_k and t_k; e by default.
  double log_base = std::numbers::e;
  double rank_tolerance = kControllabilityTolerance;
  DareOptions dare;

  static constexpr double kProbeExponent = -0.25;

  double threshold(std::uint64_t k) const;  // M_k
  std::uint64_t dwell(std::uint64_t k) const;  // t_k
  bool update_due(std::uint64_t k) const;
};

/// Outcome of a scheduled gain update.
struct GainUpdateEvent {
  enum class Outcome { Updated, Uncontrollable, DareFailed };

  std::uint64_t k = 0;
  Outcome outcome = Outcome::Uncontrollable;
  int controllability_rank = 0;
  int estimate_rank = 0;
  ParameterEstimate estimate;  // the estimate the update was based on
  std::string detail;
};

std::string to_string(GainUpdateEvent::Outcome outcome);

struct ControllerState {
  std::uint64_t xi = 0;  // remaining dwell steps
  Matrix Khat;           // m x n gain in effect
  std::uint64_t last_update_step = 0;
  LeastSquaresEstimator estimator;
};

struct InputBreakdown {
  Vector u_ce;
  Vector u_cb;
  Vector u_pr;
  Vector v;  // raw probe draw, u_pr = k^{-1/4} v
  Vector u;
  bool breaker_active = false;
  bool breaker_triggered_now = false;
};

class CircuitBreakingController {
 public:
  CircuitBreakingController(Eigen::Index n, Eigen::Index m, CostWeights cost,
                            ControllerConfig config = {});
  /// Resume from an explicit state (used by tests and replays).
  CircuitBreakingController(ControllerState state, CostWeights cost, ControllerConfig config);

  /// Re-synthesizes K_hat when the schedule fires at step k; returns the
  /// update record, or nullopt on a schedule miss (state untouched).
  std::optional<GainUpdateEvent> update_gain(std::uint64_t k);

  /// Breaker logic and probing for step k at state x.
  InputBreakdown compute_input(std::uint64_t k, const Vector& x, const NoiseStream& stream);

  /// Feeds the realized transition (x_k, u_k) -> x_{k+1} to the estimator.
  void observe(const Vector& x, const Vector& u, const Vector& x_next);

  const ControllerState& state() const { return state_; }
  const ControllerConfig& config() const { return config_; }
  const Matrix& gain() const { return state_.Khat; }

 private:
  ControllerState state_;
  CostWeights cost_;
  ControllerConfig config_;
  Vector z_;  // scratch regressor
};

}  // namespace alqr
