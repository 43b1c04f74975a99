#pragma once

// Regret accounting and its seven-term decomposition.
//
// With u_k = K_k x_k + u_pr_k (K_k = K_hat_k unless the breaker is active, in
// which case 0) and s_k = B u_pr_k + w_k, the regret
//   R(T) = sum_k (x'Qx + u'Ru) - T J*
// splits exactly into
//   R1 = sum x'(K_k-K*)'(R+B'P*B)(K_k-K*)x        gain error
//   R2 = 2 sum u_pr' B'P*(A+BK_k)x                probe / state
//   R3 = 2 sum w' P*(A+BK_k)x                     noise / state
//   R4 = sum s'P*s - w'P*w                        probe energy
//   R5 = sum w'P*w - T J*                         noise energy
//   R6 = x_1'P*x_1 - x_{T+1}'P*x_{T+1}            boundary
//   R7 = sum 2 u_pr'R u_cb + u_pr'R u_pr          probe cost
// Because K_k x_k = u_cb_k, every term is computed from logged inputs only.

#include <array>
#include <cstdint>

#include "alqr/control_math.hpp"
#include "alqr/plant.hpp"
#include "alqr/summation.hpp"
#include "alqr/trial_record.hpp"

namespace alqr {

class RegretLedger {
 public:
  RegretLedger() = default;
  explicit RegretLedger(double Jstar) : Jstar_(Jstar) {}

  void accrue(const Vector& x, const Vector& u, const CostWeights& cost);
  void accrue_stage_cost(double cost);

  /// cumulative cost - T J*; requires at least one step.
  double regret() const;
  double cumulative_cost() const { return cost_.value(); }
  std::uint64_t steps() const { return steps_; }
  double Jstar() const { return Jstar_; }

 private:
  CompensatedSum cost_;
  std::uint64_t steps_ = 0;
  double Jstar_ = 0.0;
};

inline constexpr double kDecompositionRtol = 1e-6;

struct DecompositionReport {
  std::array<double, 7> terms{};  // R1..R7
  double total = 0.0;
  double regret = 0.0;
  double residual = 0.0;
  std::uint64_t steps = 0;

  double tolerance() const { return kDecompositionRtol * (1.0 + std::abs(regret)); }
  bool holds() const { return residual <= tolerance(); }
};

/// Streaming form of the decomposition, fed one step at a time.
class DecompositionAccumulator {
 public:
  DecompositionAccumulator(const PlantSpec& truth, const RiccatiSolution& oracle);

  void add(const Vector& x, const Vector& u_cb, const Vector& u_pr, const Vector& w);

  /// Report after the steps added so far; `x_next` is x_{T+1}.
  DecompositionReport report(const Vector& x_next, double regret) const;

 private:
  Matrix A_, B_, R_, P_, K_, G_, BtP_;
  double Jstar_;
  std::array<CompensatedSum, 5> sums_;  // R1, R2, R3, R4, R5 (without -T J*)
  CompensatedSum r7_;
  std::uint64_t steps_ = 0;
  double x1_energy_ = 0.0;
};

/// Decomposition of a completed trial log against its own regret. Throws
/// IncompleteLog when rows lack fields or x_{T+1} is missing.
DecompositionReport decompose(const TrialRecord& trial, const RiccatiSolution& oracle,
                              const PlantSpec& truth);

/// Regret recomputed from the logged stage costs.
double trial_regret(const TrialRecord& trial, double Jstar);

}  // namespace alqr
