#pragma once

// Per-step log of one closed-loop trial.

#include <cstdint>
#include <vector>

#include "alqr/control_math.hpp"
#include "alqr/controller.hpp"

namespace alqr {

/// Encoded in the trial CSV `breaker` column.
enum class BreakerFlag : int { Inactive = 0, Dwell = 1, Triggered = 2 };

inline bool is_active(BreakerFlag flag) { return flag != BreakerFlag::Inactive; }
BreakerFlag breaker_flag(const InputBreakdown& input);

struct StepRecord {
  std::uint64_t k = 0;
  Vector x;
  Vector u_ce;
  Vector u_cb;
  Vector u_pr;
  Vector w;
  Vector v;  // may be empty when reloaded from CSV; recovered as k^{1/4} u_pr
  BreakerFlag breaker = BreakerFlag::Inactive;
  double stage_cost = 0.0;

  Vector u() const { return u_cb + u_pr; }
  Vector probe_draw() const;
};

/// Gain in effect from step `k` on (until the next record).
struct GainRecord {
  std::uint64_t k = 0;
  Matrix K;
  GainUpdateEvent::Outcome outcome = GainUpdateEvent::Outcome::Uncontrollable;
  double estimation_error = 0.0;
};

struct TrialRecord {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  std::vector<StepRecord> steps;
  Vector final_state;  // x_{T+1}
  std::vector<GainRecord> gains;

  std::uint64_t horizon() const { return steps.size(); }
  /// K_hat in effect at step k (zero before the first update).
  Matrix gain_at(std::uint64_t k) const;
};

double stage_cost(const Vector& x, const Vector& u, const CostWeights& cost);

}  // namespace alqr
