#pragma once

// Ground-truth linear-Gaussian plant x_{k+1} = A x_k + B u_k + w_k with
// counter-based, reproducible noise streams.

#include <cstdint>
#include <limits>

#include "alqr/control_math.hpp"

namespace alqr {

/// System, noise covariance and cost weights of the true plant.
class PlantSpec {
 public:
  PlantSpec() = default;
  /// Validates dimensions, rho(A) < 1 and W > 0; throws InvalidArgument or
  /// UnstableMatrix.
  PlantSpec(SystemMatrices sys, Matrix W, CostWeights cost);

  const SystemMatrices& sys() const { return sys_; }
  const Matrix& W() const { return W_; }
  const CostWeights& cost() const { return cost_; }
  /// Lower Cholesky factor L of W (W = L L').
  const Matrix& noise_factor() const { return W_factor_; }

  Eigen::Index n() const { return sys_.n(); }
  Eigen::Index m() const { return sys_.m(); }

 private:
  SystemMatrices sys_;
  Matrix W_;
  CostWeights cost_;
  Matrix W_factor_;
};

enum class NoiseLane : std::uint64_t { Process = 0x77, Probe = 0x76 };  // 'w', 'v'

/// Position in a trial's noise sequence. Draws are a pure function of
/// (seed, counter, lane): no generator state is shared between steps.
struct NoiseStream {
  std::uint64_t seed = 0;
  std::uint64_t counter = 1;
};

/// UniformRandomBitGenerator keyed by (seed, counter, lane); a SplitMix64
/// sequence started from a hash of the key.
class CounterEngine {
 public:
  using result_type = std::uint64_t;

  CounterEngine(std::uint64_t seed, std::uint64_t counter, NoiseLane lane);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

 private:
  std::uint64_t state_;
};

/// SplitMix64 finalizer; also used to derive per-trial seeds.
std::uint64_t mix64(std::uint64_t x);

/// Standard-normal vector of length `dim` for the given stream position/lane.
Vector standard_normal(const NoiseStream& stream, NoiseLane lane, Eigen::Index dim);

/// w ~ N(0, W): L g with W = L L'.
Vector draw_process_noise(const NoiseStream& stream, const Matrix& W);
/// Same draw with a precomputed Cholesky factor.
Vector draw_process_noise_factored(const NoiseStream& stream, const Matrix& factor);
/// v ~ N(0, I_m) from the probe lane.
Vector draw_probe_noise(const NoiseStream& stream, Eigen::Index m);

struct PlantState {
  std::uint64_t k = 1;
  Vector x;
};

inline constexpr double kDivergenceGuard = 1e12;

/// x' = A x + B u + w, k' = k + 1. Throws DivergedState if the new state is
/// non-finite or its norm exceeds kDivergenceGuard.
PlantState step(const PlantState& state, const Vector& u, const Vector& w, const PlantSpec& spec);

/// x_1 = 0.
PlantState initial_state(const PlantSpec& spec);

}  // namespace alqr
