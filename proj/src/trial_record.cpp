#include "alqr/trial_record.hpp"

#include <algorithm>
#include <cmath>

namespace alqr {

BreakerFlag breaker_flag(const InputBreakdown& input) {
  if (input.breaker_triggered_now) return BreakerFlag::Triggered;
  return input.breaker_active ? BreakerFlag::Dwell : BreakerFlag::Inactive;
}

Vector StepRecord::probe_draw() const {
  if (v.size() == u_pr.size()) return v;
  return std::pow(static_cast<double>(k), 0.25) * u_pr;
}

Matrix TrialRecord::gain_at(std::uint64_t k) const {
  auto it = std::upper_bound(gains.begin(), gains.end(), k,
                             [](std::uint64_t step, const GainRecord& g) { return step < g.k; });
  if (it == gains.begin()) return Matrix::Zero(m, n);
  return std::prev(it)->K;
}

double stage_cost(const Vector& x, const Vector& u, const CostWeights& cost) {
  return x.dot(cost.Q * x) + u.dot(cost.R * u);
}

}  // namespace alqr
