#include "alqr/verify.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <ostream>
#include <random>

#include "alqr/errors.hpp"
#include "alqr/estimator.hpp"
#include "alqr/harness.hpp"

namespace alqr {
namespace {

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

OracleCheck guarded(const std::string& name, const std::function<OracleCheck()>& body) {
  try {
    OracleCheck c = body();
    c.name = name;
    return c;
  } catch (const std::exception& e) {
    return {name, false, std::string("threw: ") + e.what()};
  }
}

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

}  // namespace

std::vector<OracleCheck> run_oracle_suite(const VerifyOptions& options) {
  std::vector<OracleCheck> out;

  // p^2 - 0.25 p - 1 = 0 for a = 0.5, b = q = r = 1.
  const double p_exact = (0.25 + std::sqrt(0.0625 + 4.0)) / 2.0;
  const double k_exact = -0.5 * p_exact / (1.0 + p_exact);
  const SystemMatrices scalar_sys(scalar(0.5), scalar(1.0));
  const CostWeights scalar_cost(scalar(1.0), scalar(1.0));

  out.push_back(guarded("scalar DARE root", [&] {
    const auto sol = solve_dare(scalar_sys, scalar_cost, scalar(1.0), options.dare);
    const double dp = std::abs(sol.Pstar(0, 0) - p_exact);
    const double dk = std::abs(sol.Kstar(0, 0) - k_exact);
    return OracleCheck{{}, dp <= 1e-10 && dk <= 1e-10, "|dp|=" + sci(dp) + " |dK|=" + sci(dk)};
  }));

  out.push_back(guarded("scalar DARE residual", [&] {
    const auto sol = solve_dare(scalar_sys, scalar_cost, scalar(1.0), options.dare);
    const double res = dare_residual(scalar_sys, scalar_cost, sol.Pstar);
    const double tol = 1e-9 * (1.0 + sol.Pstar.norm());
    return OracleCheck{{}, res <= tol, "residual=" + sci(res)};
  }));

  out.push_back(guarded("stand-in 8x4 DARE residual", [&] {
    const PlantSpec plant = generate_stand_in_plant(8, 4, 0.95, 7);
    const auto sol = solve_dare(plant.sys(), plant.cost(), plant.W(), options.dare);
    const double res = dare_residual(plant.sys(), plant.cost(), sol.Pstar);
    const double lyap = closed_loop_lyapunov_residual(plant.sys(), plant.cost(), sol);
    const double scale = 1.0 + sol.Pstar.norm();
    return OracleCheck{{},
                       res <= 1e-9 * scale && lyap <= 1e-8 * scale && sol.rhoStar < 1.0,
                       "residual=" + sci(res) + " lyapunov=" + sci(lyap)};
  }));

  out.push_back(guarded("scalar Lyapunov closed form", [&] {
    const auto cert = solve_discrete_lyapunov(scalar(0.5), scalar(1.0));
    const double err = std::abs(cert.P0(0, 0) - 4.0 / 3.0);
    return OracleCheck{{}, err <= 1e-12, "|dp0|=" + sci(err)};
  }));

  out.push_back(guarded("zero-dynamics Lyapunov", [&] {
    const auto cert = solve_discrete_lyapunov(Matrix::Zero(3, 3), Matrix::Identity(3, 3));
    const double err = (cert.P0 - Matrix::Identity(3, 3)).norm();
    return OracleCheck{{}, err <= 1e-14 && cert.rho0 < 1e-9, "|P0-I|=" + sci(err)};
  }));

  out.push_back(guarded("gain perturbation identity", [&] {
    const PlantSpec plant = reference_plant();
    const auto sol = solve_dare(plant.sys(), plant.cost(), plant.W(), options.dare);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal;
    const Matrix G = plant.cost().R + plant.sys().B.transpose() * sol.Pstar * plant.sys().B;
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      Matrix dK(plant.m(), plant.n());
      for (Eigen::Index i = 0; i < dK.size(); ++i) dK.data()[i] = normal(rng);
      const Matrix lhs = gain_perturbation_lhs(plant.sys(), plant.cost(), sol.Pstar, sol.Kstar + dK);
      const Matrix rhs = dK.transpose() * G * dK;
      worst = std::max(worst, (lhs - rhs).norm() / (1.0 + rhs.norm()));
    }
    return OracleCheck{{}, worst <= 1e-8, "max rel err=" + sci(worst)};
  }));

  out.push_back(guarded("noiseless OLS recovery", [&] {
    const PlantSpec plant = reference_plant();
    LeastSquaresEstimator est(plant.n(), plant.m());
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal;
    Vector x = Vector::Zero(plant.n());
    for (int k = 0; k < 20; ++k) {
      Vector u(plant.m());
      for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = normal(rng);
      const Vector next = plant.sys().A * x + plant.sys().B * u;
      Vector z(plant.n() + plant.m());
      z << x, u;
      est.absorb(z, next);
      x = next;
    }
    const double err = estimation_error(est.estimate(), plant.sys());
    return OracleCheck{{}, err <= 1e-8, "error=" + sci(err)};
  }));

  out.push_back(guarded("decomposition identity (T=2000)", [&] {
    ExperimentConfig cfg;
    cfg.plant = reference_plant_generator();
    cfg.horizon = 2000;
    cfg.trials = 1;
    cfg.base_seed = 17;
    cfg.slope_window = {10.0, 2000.0};
    cfg.controller.dare = options.dare;
    const Experiment exp = Experiment::prepare(cfg);
    const TrialResult r = run_trial(exp, 0);
    double worst = 0.0;
    for (const auto& s : r.samples) {
      worst = std::max(worst, s.decomposition_residual / s.decomposition_tolerance);
    }
    return OracleCheck{{}, !r.failed && r.decomposition_holds,
                       "max residual/tol=" + sci(worst)};
  }));

  return out;
}

bool print_oracle_table(std::ostream& os, const std::vector<OracleCheck>& checks) {
  bool all = true;
  for (const auto& c : checks) {
    os << std::left << std::setw(34) << c.name << (c.passed ? "PASS  " : "FAIL  ") << c.detail
       << '\n';
    all = all && c.passed;
  }
  os << (all ? "all oracles passed" : "oracle failures detected") << '\n';
  return all;
}

}  // namespace alqr
