#include "alqr/controller.hpp"

#include <bit>
#include <cmath>
#include <numbers>

#include "alqr/errors.hpp"

namespace alqr {

std::string to_string(GainSchedule schedule) {
  return schedule == GainSchedule::EveryStep ? "every-step" : "powers-of-two";
}

GainSchedule parse_gain_schedule(const std::string& text) {
  if (text == "every-step") return GainSchedule::EveryStep;
  if (text == "powers-of-two") return GainSchedule::PowersOfTwo;
  throw InvalidArgument("unknown gain schedule '" + text + "'");
}

std::string to_string(GainUpdateEvent::Outcome outcome) {
  switch (outcome) {
    case GainUpdateEvent::Outcome::Updated: return "updated";
    case GainUpdateEvent::Outcome::Uncontrollable: return "uncontrollable";
    case GainUpdateEvent::Outcome::DareFailed: return "dare-failed";
  }
  return "unknown";
}

double ControllerConfig::threshold(std::uint64_t k) const {
  const double ln_k = std::log(static_cast<double>(k));
  return log_base == std::numbers::e ? ln_k : ln_k / std::log(log_base);
}

std::uint64_t ControllerConfig::dwell(std::uint64_t k) const {
  const double t = std::floor(threshold(k));
  return t > 0.0 ? static_cast<std::uint64_t>(t) : 0;
}

bool ControllerConfig::update_due(std::uint64_t k) const {
  if (schedule == GainSchedule::EveryStep) return true;
  return k >= 2 && std::has_single_bit(k);
}

CircuitBreakingController::CircuitBreakingController(Eigen::Index n, Eigen::Index m,
                                                     CostWeights cost, ControllerConfig config)
    : CircuitBreakingController(
          ControllerState{0, Matrix::Zero(m, n), 0, LeastSquaresEstimator(n, m)}, std::move(cost),
          std::move(config)) {}

CircuitBreakingController::CircuitBreakingController(ControllerState state, CostWeights cost,
                                                     ControllerConfig config)
    : state_(std::move(state)), cost_(std::move(cost)), config_(std::move(config)) {
  const auto n = state_.estimator.n();
  const auto m = state_.estimator.m();
  if (state_.Khat.rows() != m || state_.Khat.cols() != n) {
    throw InvalidArgument("controller gain does not match estimator dimensions");
  }
  if (cost_.Q.rows() != n || cost_.R.rows() != m) {
    throw InvalidArgument("controller cost weights do not match dimensions");
  }
  if (!(config_.log_base > 1.0)) throw InvalidArgument("log_base must exceed 1");
  z_.resize(n + m);
}

std::optional<GainUpdateEvent> CircuitBreakingController::update_gain(std::uint64_t k) {
  if (k < 1) throw InvalidArgument("step index is 1-based");
  if (!config_.update_due(k)) return std::nullopt;

  const auto n = state_.estimator.n();
  const auto m = state_.estimator.m();
  GainUpdateEvent event;
  event.k = k;
  state_.last_update_step = k;

  event.estimate = state_.estimator.estimate();
  const ParameterEstimate& est = event.estimate;
  event.estimate_rank = est.rank;
  if (!est.Theta.allFinite()) {
    state_.Khat = Matrix::Zero(m, n);
    event.outcome = GainUpdateEvent::Outcome::Uncontrollable;
    event.detail = "non-finite estimate";
    return event;
  }
  const SystemMatrices estimated = est.system();
  event.controllability_rank = controllability_rank(estimated, config_.rank_tolerance);
  if (event.controllability_rank < n) {
    state_.Khat = Matrix::Zero(m, n);
    event.outcome = GainUpdateEvent::Outcome::Uncontrollable;
    return event;
  }
  try {
    // W does not enter K*; identity keeps J* well defined.
    const RiccatiSolution sol =
        solve_dare(estimated, cost_, Matrix::Identity(n, n), config_.dare);
    state_.Khat = sol.Kstar;
    event.outcome = GainUpdateEvent::Outcome::Updated;
  } catch (const Error& e) {
    state_.Khat = Matrix::Zero(m, n);
    event.outcome = GainUpdateEvent::Outcome::DareFailed;
    event.detail = e.what();
  }
  return event;
}

InputBreakdown CircuitBreakingController::compute_input(std::uint64_t k, const Vector& x,
                                                        const NoiseStream& stream) {
  if (k < 1) throw InvalidArgument("step index is 1-based");
  const auto m = state_.Khat.rows();
  InputBreakdown out;
  out.u_ce = state_.Khat * x;
  if (state_.xi == 0) {
    if (out.u_ce.norm() > config_.threshold(k)) {
      state_.xi = config_.dwell(k);
      out.u_cb = Vector::Zero(m);
      out.breaker_active = true;
      out.breaker_triggered_now = true;
    } else {
      out.u_cb = out.u_ce;
    }
  } else {
    out.u_cb = Vector::Zero(m);
    out.breaker_active = true;
    --state_.xi;
  }
  out.v = draw_probe_noise(stream, m);
  out.u_pr = std::pow(static_cast<double>(k), ControllerConfig::kProbeExponent) * out.v;
  out.u = out.u_cb + out.u_pr;
  return out;
}

void CircuitBreakingController::observe(const Vector& x, const Vector& u, const Vector& x_next) {
  const auto n = x.size();
  z_.head(n) = x;
  z_.tail(u.size()) = u;
  state_.estimator.absorb(z_, x_next);
}

}  // namespace alqr
