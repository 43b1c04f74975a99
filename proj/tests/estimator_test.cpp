#include "alqr/estimator.hpp"

#include <gtest/gtest.h>

#include <algorithm>

#include "alqr/harness.hpp"
#include "test_support.hpp"

namespace alqr {
namespace {

using testing::scalar;

Vector unit(Eigen::Index dim, Eigen::Index i) { return Vector::Unit(dim, i); }

TEST(EstimatorTest, EmptyEstimatorGivesZero) {
  const LeastSquaresEstimator est(2, 1);
  const auto e = est.estimate();
  EXPECT_EQ(e.rank, 0);
  EXPECT_TRUE(e.Theta.isZero(0.0));
  EXPECT_EQ(e.Theta.rows(), 2);
  EXPECT_EQ(e.Theta.cols(), 3);
  EXPECT_EQ(est.count(), 0u);
}

TEST(EstimatorTest, SingleAbsorb) {
  LeastSquaresEstimator est(2, 1);
  est.absorb(unit(3, 0), unit(2, 0));
  Matrix V = Matrix::Zero(3, 3);
  V(0, 0) = 1.0;
  Matrix S = Matrix::Zero(2, 3);
  S(0, 0) = 1.0;
  EXPECT_EQ(est.gram(), V);
  EXPECT_EQ(est.cross_moment(), S);
  EXPECT_EQ(est.count(), 1u);
}

TEST(EstimatorTest, RepeatedAbsorbCounts) {
  LeastSquaresEstimator est(1, 1);
  for (int k = 1; k <= 37; ++k) est.absorb(unit(2, 0), unit(1, 0));
  EXPECT_EQ(est.gram()(0, 0), 37.0);
  EXPECT_EQ(est.count(), 37u);
}

TEST(EstimatorTest, AbsorbCommutesAndTracksTrace) {
  std::mt19937_64 rng(4);
  const Vector z1 = testing::random_matrix(rng, 5, 1);
  const Vector z2 = testing::random_matrix(rng, 5, 1);
  const Vector x1 = testing::random_matrix(rng, 3, 1);
  const Vector x2 = testing::random_matrix(rng, 3, 1);
  LeastSquaresEstimator a(3, 2);
  LeastSquaresEstimator b(3, 2);
  a.absorb(z1, x1);
  a.absorb(z2, x2);
  b.absorb(z2, x2);
  b.absorb(z1, x1);
  EXPECT_TRUE(a.gram().isApprox(b.gram(), 1e-15));
  EXPECT_TRUE(a.cross_moment().isApprox(b.cross_moment(), 1e-15));
  EXPECT_NEAR(a.gram().trace(), z1.squaredNorm() + z2.squaredNorm(), 1e-12);
  EXPECT_TRUE(a.gram().isApprox(a.gram().transpose()));
}

TEST(EstimatorTest, NoiselessScalarInterpolation) {
  const double a = 0.5;
  const double b = 1.0;
  LeastSquaresEstimator est(1, 1);
  double x = 0.0;
  const double inputs[] = {1.0, -2.0, 0.5, 3.0, -1.0, 0.25, 2.0, -0.75, 1.5, -3.0};
  for (double u : inputs) {
    const double x_next = a * x + b * u;
    Vector z(2);
    z << x, u;
    est.absorb(z, Vector::Constant(1, x_next));
    x = x_next;
  }
  const auto e = est.estimate();
  EXPECT_EQ(e.rank, 2);
  EXPECT_NEAR(e.A_hat()(0, 0), 0.5, 1e-10);
  EXPECT_NEAR(e.B_hat()(0, 0), 1.0, 1e-10);
}

// Any noiseless trajectory whose Gram matrix reaches full rank is recovered.
TEST(EstimatorTest, ExactRecoveryOnRandomSystems) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 6;
    const int m = 1 + trial % 3;
    const auto sys = testing::random_controllable_system(rng, n, m, 0.9);
    LeastSquaresEstimator est(n, m);
    Vector x = testing::random_matrix(rng, n, 1);
    for (int k = 0; k < 3 * (n + m); ++k) {
      const Vector u = testing::random_matrix(rng, m, 1);
      const Vector x_next = sys.A * x + sys.B * u;
      Vector z(n + m);
      z << x, u;
      est.absorb(z, x_next);
      x = x_next;
    }
    const auto e = est.estimate();
    ASSERT_EQ(e.rank, n + m);
    EXPECT_LE(estimation_error(e, sys), 1e-8) << "n=" << n << " m=" << m;
  }
}

TEST(EstimatorTest, MinimumNormWhenRankDeficient) {
  std::mt19937_64 rng(21);
  const auto sys = testing::random_controllable_system(rng, 3, 2, 0.8);
  LeastSquaresEstimator est(3, 2);
  // Regressors confined to a 2-dimensional subspace of R^5.
  const Matrix basis = testing::random_matrix(rng, 5, 2);
  for (int k = 0; k < 20; ++k) {
    const Vector z = basis * testing::random_matrix(rng, 2, 1);
    est.absorb(z, sys.A * z.head(3) + sys.B * z.tail(2));
  }
  const auto e = est.estimate();
  EXPECT_EQ(e.rank, 2);
  const Matrix Vpinv = symmetric_pseudoinverse(est.gram(), LeastSquaresEstimator::kPinvTolerance);
  const Matrix outside = Matrix::Identity(5, 5) - est.gram() * Vpinv;
  EXPECT_LE((e.Theta * outside).cwiseAbs().maxCoeff(), 1e-8);
  // Still exact on the data span.
  Matrix truth(3, 5);
  truth << sys.A, sys.B;
  EXPECT_LE(((e.Theta - truth) * basis).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(EstimatorTest, PseudoinverseRankAndIdentities) {
  int rank = -1;
  EXPECT_TRUE(symmetric_pseudoinverse(Matrix::Zero(3, 3), 1e-10, &rank).isZero(0.0));
  EXPECT_EQ(rank, 0);
  Matrix V = Matrix::Zero(3, 3);
  V(0, 0) = 4.0;
  V(1, 1) = 2.0;
  const Matrix P = symmetric_pseudoinverse(V, 1e-10, &rank);
  EXPECT_EQ(rank, 2);
  EXPECT_NEAR(P(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(P(1, 1), 0.5, 1e-15);
  EXPECT_EQ(P(2, 2), 0.0);
}

TEST(EstimationErrorTest, Examples) {
  std::mt19937_64 rng(3);
  const auto sys = testing::random_controllable_system(rng, 3, 2, 0.9);
  ParameterEstimate est;
  est.Theta.resize(3, 5);
  est.Theta << sys.A, sys.B;
  EXPECT_EQ(estimation_error(est, sys), 0.0);
  est.Theta(0, 0) += 0.125;
  EXPECT_NEAR(estimation_error(est, sys), 0.125, 1e-15);
}

Experiment estimation_experiment(PlantSource plant, std::uint64_t horizon, std::uint64_t trials) {
  ExperimentConfig cfg;
  cfg.plant = std::move(plant);
  cfg.horizon = horizon;
  cfg.trials = trials;
  cfg.base_seed = 91;
  cfg.checkpoint_stride = 10.0;  // exact decades
  cfg.slope_window = {1.0, static_cast<double>(horizon)};
  cfg.write_trial_logs = false;
  return Experiment::prepare(cfg);
}

double error_at(const TrialResult& r, std::uint64_t k) {
  for (const auto& s : r.samples) {
    if (s.k == k) return s.estimation_error;
  }
  ADD_FAILURE() << "no checkpoint at " << k;
  return 0.0;
}

TEST(EstimatorConvergenceTest, NoisyScalarPlantUnderAlgorithm) {
  const PlantSpec plant(SystemMatrices(scalar(0.5), scalar(1.0)), scalar(1.0),
                        CostWeights(scalar(1.0), scalar(1.0)));
  const auto exp = estimation_experiment(plant, 100'000, 1);
  const auto r = run_trial(exp, 0);
  ASSERT_FALSE(r.failed) << r.failure;
  EXPECT_LE(error_at(r, 100'000), 0.05);
}

TEST(EstimatorConvergenceTest, MedianErrorDecreasesOnReferencePlant) {
  const auto exp = estimation_experiment(reference_plant_generator(), 100'000, 20);
  std::vector<double> e3, e4, e5;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto r = run_trial(exp, i);
    ASSERT_FALSE(r.failed) << r.failure;
    e3.push_back(error_at(r, 1'000));
    e4.push_back(error_at(r, 10'000));
    e5.push_back(error_at(r, 100'000));
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  };
  EXPECT_GE(median(e3), median(e4));
  EXPECT_GE(median(e4), median(e5));
}

}  // namespace
}  // namespace alqr
