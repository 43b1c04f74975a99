#pragma once

// Online ordinary least squares for Theta = [A B] from pairs (z_t, x_{t+1}),
// z_t = [x_t; u_t], kept as sufficient statistics.

#include <cstdint>

#include "alqr/control_math.hpp"

namespace alqr {

struct ParameterEstimate {
  Matrix Theta;  // n x (n+m): [A_hat B_hat]
  int rank = 0;  // numerical rank of the Gram matrix used in the solve

  Matrix A_hat() const { return Theta.leftCols(Theta.rows()); }
  Matrix B_hat() const { return Theta.rightCols(Theta.cols() - Theta.rows()); }
  SystemMatrices system() const { return SystemMatrices(A_hat(), B_hat()); }
};

class LeastSquaresEstimator {
 public:
  static constexpr double kPinvTolerance = 1e-10;

  LeastSquaresEstimator() = default;
  LeastSquaresEstimator(Eigen::Index n, Eigen::Index m);

  /// V += z z', S += x_next z'.
  void absorb(const Vector& z, const Vector& x_next);

  /// Theta = S V^+, with V^+ from an eigen-decomposition of the symmetric
  /// Gram matrix truncated at 1e-10 * sigma_max (minimum-norm solution).
  ParameterEstimate estimate() const;

  const Matrix& gram() const { return V_; }
  const Matrix& cross_moment() const { return S_; }
  std::uint64_t count() const { return count_; }
  Eigen::Index n() const { return S_.rows(); }
  Eigen::Index m() const { return S_.cols() - S_.rows(); }

 private:
  Matrix V_;
  Matrix S_;
  std::uint64_t count_ = 0;
};

/// Pseudoinverse of a symmetric positive semidefinite matrix with relative
/// singular-value truncation. Returns the numerical rank through `rank`.
Matrix symmetric_pseudoinverse(const Matrix& V, double rel_tol, int* rank = nullptr);

/// Spectral norm of Theta_hat - [A B].
double estimation_error(const ParameterEstimate& est, const SystemMatrices& truth);

}  // namespace alqr
