#include "alqr/control_math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "alqr/errors.hpp"

namespace alqr {
namespace {

Matrix symmetrized(const Matrix& M) { return 0.5 * (M + M.transpose()); }

void require_square(const Matrix& M, const char* name) {
  if (M.rows() != M.cols() || M.rows() == 0) {
    throw InvalidArgument(std::string(name) + " must be a non-empty square matrix");
  }
}

void require_finite(const Matrix& M, const char* name) {
  if (!M.allFinite()) throw InvalidArgument(std::string(name) + " has non-finite entries");
}

void require_spd(const Matrix& M, const char* name) {
  require_square(M, name);
  require_finite(M, name);
  if (!is_symmetric(M)) throw InvalidArgument(std::string(name) + " is not symmetric");
  if (min_symmetric_eigenvalue(M) <= kDefiniteTolerance) {
    throw InvalidArgument(std::string(name) + " is not positive definite");
  }
}

// Inflate a contraction factor so the strict inequality holds numerically,
// keeping it inside (0, 1).
double inflate_margin(double rho) {
  const double inflated = rho * (1.0 + kMarginInflation);
  return std::clamp(inflated, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

}  // namespace

SystemMatrices::SystemMatrices(Matrix a, Matrix b) : A(std::move(a)), B(std::move(b)) {
  require_square(A, "A");
  if (B.rows() != A.rows() || B.cols() == 0) {
    throw InvalidArgument("B must have as many rows as A and at least one column");
  }
  require_finite(A, "A");
  require_finite(B, "B");
}

CostWeights::CostWeights(Matrix q, Matrix r) : Q(std::move(q)), R(std::move(r)) {
  require_spd(Q, "Q");
  require_spd(R, "R");
}

bool is_symmetric(const Matrix& M, double tol) {
  if (M.rows() != M.cols()) return false;
  return (M - M.transpose()).norm() <= tol * std::max(1.0, M.norm());
}

double min_symmetric_eigenvalue(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(M), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

double spectral_radius(const Matrix& M) {
  require_square(M, "M");
  if (M.rows() == 1) return std::abs(M(0, 0));
  Eigen::EigenSolver<Matrix> eig(M, /*computeEigenvectors=*/false);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

double stability_margin(const Matrix& M, const Matrix& P) {
  require_square(M, "M");
  if (P.rows() != M.rows() || P.cols() != M.cols()) {
    throw InvalidArgument("stability_margin: P must match M");
  }
  Eigen::LLT<Matrix> llt(symmetrized(P));
  if (llt.info() != Eigen::Success) {
    throw InvalidArgument("stability_margin: P is not positive definite");
  }
  const Matrix L = llt.matrixL();
  // C = L^{-1} M'PM L^{-T}, similar to P^{-1/2} M'PM P^{-1/2}.
  Matrix C = L.triangularView<Eigen::Lower>().solve(M.transpose() * P * M);
  C = L.triangularView<Eigen::Lower>().solve(C.transpose()).transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(C), Eigen::EigenvaluesOnly);
  return std::max(0.0, eig.eigenvalues().maxCoeff());
}

double lyapunov_residual(const Matrix& A, const Matrix& Q, const Matrix& P) {
  return (A.transpose() * P * A - P + Q).norm();
}

LyapunovCertificate solve_discrete_lyapunov(const Matrix& A, const Matrix& Q,
                                            const LyapunovOptions& options) {
  require_square(A, "A");
  require_finite(A, "A");
  require_spd(Q, "Q");
  if (Q.rows() != A.rows()) throw InvalidArgument("Q must match A");

  const double radius = spectral_radius(A);
  if (!(radius < 1.0 - 1e-12)) {
    throw UnstableMatrix("spectral radius " + std::to_string(radius) + " >= 1");
  }

  // Squared Smith iteration: P_{j+1} = P_j + A_j' P_j A_j, A_{j+1} = A_j^2,
  // which sums the series sum_i (A')^i Q A^i in doubling blocks.
  Matrix P = symmetrized(Q);
  Matrix Aj = A;
  bool converged = false;
  for (int it = 0; it < options.max_iterations; ++it) {
    const Matrix increment = Aj.transpose() * P * Aj;
    P = symmetrized(P + increment);
    if (!P.allFinite()) break;
    if (increment.norm() <= options.rtol * P.norm()) {
      converged = true;
      break;
    }
    Aj = Aj * Aj;
  }
  if (!converged) throw NonConvergence("Lyapunov series did not converge");

  LyapunovCertificate cert;
  cert.rho0 = inflate_margin(stability_margin(A, P));
  cert.P0 = std::move(P);
  return cert;
}

Matrix synthesize_gain(const Matrix& A, const Matrix& B, const Matrix& P, const Matrix& R,
                       double condition_cap) {
  const Matrix BtP = B.transpose() * P;
  const Matrix S = symmetrized(R + BtP * B);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(S, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > condition_cap) {
    throw IllConditioned("R + B'PB is singular or ill-conditioned");
  }
  return -S.llt().solve(BtP * A);
}

RiccatiSolution solve_dare(const SystemMatrices& sys, const CostWeights& cost, const Matrix& W,
                           const DareOptions& options) {
  const Matrix& A = sys.A;
  const Matrix& B = sys.B;
  const Matrix& Q = cost.Q;
  const Matrix& R = cost.R;
  if (Q.rows() != sys.n() || R.rows() != sys.m()) {
    throw InvalidArgument("cost weights do not match system dimensions");
  }
  if (W.rows() != sys.n() || W.cols() != sys.n()) {
    throw InvalidArgument("W does not match system dimensions");
  }

  Matrix P = symmetrized(Q);
  bool converged = false;
  int it = 0;
  while (it < options.max_iterations) {
    ++it;
    const Matrix PA = P * A;
    const Matrix BtPA = B.transpose() * PA;
    const Matrix S = R + B.transpose() * P * B;
    Eigen::LLT<Matrix> llt(symmetrized(S));
    if (llt.info() != Eigen::Success) break;
    Matrix next = A.transpose() * PA - BtPA.transpose() * llt.solve(BtPA) + Q;
    next = symmetrized(next);
    if (!next.allFinite()) break;
    const double step = (next - P).stableNorm();
    const double scale = next.stableNorm();
    if (!std::isfinite(step) || !std::isfinite(scale)) break;
    P = std::move(next);
    if (step <= options.rtol * scale) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NonConvergence("Riccati iteration did not converge in " + std::to_string(it) +
                         " iterations");
  }

  RiccatiSolution sol;
  sol.Kstar = synthesize_gain(A, B, P, R, options.condition_cap);
  sol.rhoStar = inflate_margin(stability_margin(A + B * sol.Kstar, P));
  sol.Jstar = (W * P).trace();
  sol.iterations = it;
  sol.Pstar = std::move(P);
  return sol;
}

int controllability_rank(const SystemMatrices& sys, double rel_tol) {
  const Eigen::Index n = sys.n();
  const Eigen::Index m = sys.m();
  Matrix C(n, n * m);
  Matrix block = sys.B;
  for (Eigen::Index i = 0; i < n; ++i) {
    C.middleCols(i * m, m) = block;
    block = sys.A * block;
  }
  Eigen::JacobiSVD<Matrix> svd(C);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || !(sv(0) > 0.0)) return 0;
  const double threshold = static_cast<double>(n) * rel_tol * sv(0);
  return static_cast<int>((sv.array() > threshold).count());
}

double dare_residual(const SystemMatrices& sys, const CostWeights& cost, const Matrix& P) {
  const Matrix& A = sys.A;
  const Matrix& B = sys.B;
  const Matrix BtPA = B.transpose() * P * A;
  const Matrix S = cost.R + B.transpose() * P * B;
  const Matrix rhs = A.transpose() * P * A - BtPA.transpose() * S.ldlt().solve(BtPA) + cost.Q;
  return (P - rhs).norm();
}

double closed_loop_lyapunov_residual(const SystemMatrices& sys, const CostWeights& cost,
                                     const RiccatiSolution& sol) {
  const Matrix Acl = sys.A + sys.B * sol.Kstar;
  return (Acl.transpose() * sol.Pstar * Acl - sol.Pstar + cost.Q +
          sol.Kstar.transpose() * cost.R * sol.Kstar)
      .norm();
}

Matrix gain_perturbation_lhs(const SystemMatrices& sys, const CostWeights& cost,
                             const Matrix& Pstar, const Matrix& K) {
  const Matrix Acl = sys.A + sys.B * K;
  return cost.Q + K.transpose() * cost.R * K + Acl.transpose() * Pstar * Acl - Pstar;
}

}  // namespace alqr
