#pragma once

// Exact LQR mathematics shared by the ground-truth oracle and the adaptive
// controller: discrete Lyapunov / Riccati solvers, gain synthesis,
// controllability and closed-loop contraction margins.

#include <Eigen/Dense>

namespace alqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Plant dynamics x+ = A x + B u (+ noise).
struct SystemMatrices {
  Matrix A;  // n x n
  Matrix B;  // n x m

  SystemMatrices() = default;
  /// Throws InvalidArgument on shape mismatch or non-finite entries.
  SystemMatrices(Matrix a, Matrix b);

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return B.cols(); }
};

/// Stage-cost weights x'Qx + u'Ru. Both must be symmetric positive definite.
struct CostWeights {
  Matrix Q;
  Matrix R;

  CostWeights() = default;
  CostWeights(Matrix q, Matrix r);
};

struct LyapunovCertificate {
  Matrix P0;
  double rho0 = 0.0;
};

struct RiccatiSolution {
  Matrix Pstar;
  Matrix Kstar;
  double rhoStar = 0.0;
  double Jstar = 0.0;
  int iterations = 0;
};

struct LyapunovOptions {
  double rtol = 1e-13;
  int max_iterations = 200;
};

struct DareOptions {
  double rtol = 1e-12;
  int max_iterations = 100000;
  double condition_cap = 1e12;
};

inline constexpr double kSymmetryTolerance = 1e-9;
inline constexpr double kDefiniteTolerance = 1e-12;
inline constexpr double kMarginInflation = 1e-9;
inline constexpr double kControllabilityTolerance = 1e-10;

/// Solves A' P A - P + Q = 0 for stable A. rho0 is the smallest contraction
/// factor of A in the P-norm, inflated by (1 + 1e-9) and clamped into (0, 1).
/// Throws UnstableMatrix if rho(A) >= 1, NonConvergence if the series does
/// not settle within the iteration cap.
LyapunovCertificate solve_discrete_lyapunov(const Matrix& A, const Matrix& Q,
                                            const LyapunovOptions& options = {});

/// Stabilizing solution of the discrete algebraic Riccati equation by
/// fixed-point iteration of the Riccati map from P = Q. W is the process-noise
/// covariance used for J* = tr(W P*).
RiccatiSolution solve_dare(const SystemMatrices& sys, const CostWeights& cost,
                           const Matrix& W, const DareOptions& options = {});

/// K = -(R + B'PB)^{-1} B'PA. Throws IllConditioned when R + B'PB has
/// condition number above `condition_cap`.
Matrix synthesize_gain(const Matrix& A, const Matrix& B, const Matrix& P, const Matrix& R,
                       double condition_cap = DareOptions{}.condition_cap);

/// Numerical rank of [B, AB, ..., A^{n-1}B]; singular values at or below
/// n * rel_tol * sigma_max are discarded.
int controllability_rank(const SystemMatrices& sys,
                         double rel_tol = kControllabilityTolerance);

double spectral_radius(const Matrix& M);

/// Smallest rho with M' P M <= rho P (largest eigenvalue of
/// P^{-1/2} M' P M P^{-1/2}). P must be positive definite.
double stability_margin(const Matrix& M, const Matrix& P);

// Residuals used by the self-checks and tests.
double dare_residual(const SystemMatrices& sys, const CostWeights& cost, const Matrix& P);
double closed_loop_lyapunov_residual(const SystemMatrices& sys, const CostWeights& cost,
                                     const RiccatiSolution& sol);
double lyapunov_residual(const Matrix& A, const Matrix& Q, const Matrix& P);

/// Left-hand side of the gain-perturbation identity:
/// Q + K'RK + (A+BK)' P* (A+BK) - P*.
Matrix gain_perturbation_lhs(const SystemMatrices& sys, const CostWeights& cost,
                             const Matrix& Pstar, const Matrix& K);

bool is_symmetric(const Matrix& M, double tol = kSymmetryTolerance);
double min_symmetric_eigenvalue(const Matrix& M);

}  // namespace alqr
