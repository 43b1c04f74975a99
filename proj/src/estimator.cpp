#include "alqr/estimator.hpp"

#include "alqr/errors.hpp"

namespace alqr {

LeastSquaresEstimator::LeastSquaresEstimator(Eigen::Index n, Eigen::Index m)
    : V_(Matrix::Zero(n + m, n + m)), S_(Matrix::Zero(n, n + m)) {
  if (n < 1 || m < 1) throw InvalidArgument("estimator dimensions must be positive");
}

void LeastSquaresEstimator::absorb(const Vector& z, const Vector& x_next) {
  if (z.size() != V_.rows() || x_next.size() != S_.rows()) {
    throw InvalidArgument("absorb: dimension mismatch");
  }
  V_.noalias() += z * z.transpose();
  S_.noalias() += x_next * z.transpose();
  ++count_;
}

Matrix symmetric_pseudoinverse(const Matrix& V, double rel_tol, int* rank) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (V + V.transpose()));
  const Vector& values = eig.eigenvalues();
  const double sigma_max = values.cwiseAbs().maxCoeff();
  Vector inverted = Vector::Zero(values.size());
  int r = 0;
  if (sigma_max > 0.0) {
    const double threshold = rel_tol * sigma_max;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      if (std::abs(values(i)) > threshold) {
        inverted(i) = 1.0 / values(i);
        ++r;
      }
    }
  }
  if (rank) *rank = r;
  const Matrix& U = eig.eigenvectors();
  return U * inverted.asDiagonal() * U.transpose();
}

ParameterEstimate LeastSquaresEstimator::estimate() const {
  ParameterEstimate est;
  est.Theta = S_ * symmetric_pseudoinverse(V_, kPinvTolerance, &est.rank);
  return est;
}

double estimation_error(const ParameterEstimate& est, const SystemMatrices& truth) {
  Matrix Theta(truth.n(), truth.n() + truth.m());
  Theta << truth.A, truth.B;
  if (est.Theta.rows() != Theta.rows() || est.Theta.cols() != Theta.cols()) {
    throw InvalidArgument("estimation_error: dimension mismatch");
  }
  const Matrix diff = est.Theta - Theta;
  Eigen::JacobiSVD<Matrix> svd(diff);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

}  // namespace alqr
