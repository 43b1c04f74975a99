#include "alqr/plant.hpp"

#include <cmath>
#include <random>
#include <string>

#include "alqr/errors.hpp"

namespace alqr {

PlantSpec::PlantSpec(SystemMatrices sys, Matrix W, CostWeights cost)
    : sys_(std::move(sys)), W_(std::move(W)), cost_(std::move(cost)) {
  const auto n = sys_.n();
  if (W_.rows() != n || W_.cols() != n) throw InvalidArgument("W must be n x n");
  if (cost_.Q.rows() != n) throw InvalidArgument("Q must be n x n");
  if (cost_.R.rows() != sys_.m()) throw InvalidArgument("R must be m x m");
  if (!W_.allFinite() || !is_symmetric(W_)) throw InvalidArgument("W must be finite and symmetric");
  Eigen::LLT<Matrix> llt(0.5 * (W_ + W_.transpose()));
  if (llt.info() != Eigen::Success || min_symmetric_eigenvalue(W_) <= kDefiniteTolerance) {
    throw InvalidArgument("W is not positive definite");
  }
  W_factor_ = llt.matrixL();
  const double radius = spectral_radius(sys_.A);
  if (!(radius < 1.0)) {
    throw UnstableMatrix("plant must be open-loop stable, rho(A) = " + std::to_string(radius));
  }
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

CounterEngine::CounterEngine(std::uint64_t seed, std::uint64_t counter, NoiseLane lane)
    : state_(mix64(mix64(seed) ^ mix64(counter ^ (static_cast<std::uint64_t>(lane) << 56)))) {}

CounterEngine::result_type CounterEngine::operator()() {
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Vector standard_normal(const NoiseStream& stream, NoiseLane lane, Eigen::Index dim) {
  CounterEngine engine(stream.seed, stream.counter, lane);
  std::normal_distribution<double> normal;
  Vector g(dim);
  for (Eigen::Index i = 0; i < dim; ++i) g(i) = normal(engine);
  return g;
}

Vector draw_process_noise_factored(const NoiseStream& stream, const Matrix& factor) {
  return factor.triangularView<Eigen::Lower>() *
         standard_normal(stream, NoiseLane::Process, factor.rows());
}

Vector draw_process_noise(const NoiseStream& stream, const Matrix& W) {
  Eigen::LLT<Matrix> llt(W);
  if (llt.info() != Eigen::Success) throw InvalidArgument("W is not positive definite");
  return draw_process_noise_factored(stream, llt.matrixL());
}

Vector draw_probe_noise(const NoiseStream& stream, Eigen::Index m) {
  return standard_normal(stream, NoiseLane::Probe, m);
}

PlantState initial_state(const PlantSpec& spec) { return PlantState{1, Vector::Zero(spec.n())}; }

PlantState step(const PlantState& state, const Vector& u, const Vector& w, const PlantSpec& spec) {
  const auto& sys = spec.sys();
  if (state.x.size() != sys.n() || u.size() != sys.m() || w.size() != sys.n()) {
    throw InvalidArgument("step: dimension mismatch");
  }
  PlantState next{state.k + 1, sys.A * state.x + sys.B * u + w};
  const double norm = next.x.norm();
  if (!std::isfinite(norm) || norm > kDivergenceGuard) {
    throw DivergedState("state norm " + std::to_string(norm) + " exceeded guard at step " +
                        std::to_string(next.k));
  }
  return next;
}

}  // namespace alqr
