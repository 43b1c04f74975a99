#include "alqr/diagnostics.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "alqr/errors.hpp"
#include "alqr/harness.hpp"
#include "test_support.hpp"

namespace alqr {
namespace {

using testing::scalar;

TrialRecord quiet_record(std::uint64_t T, Eigen::Index n = 1, Eigen::Index m = 1) {
  TrialRecord rec{n, m, {}, Vector::Zero(n), {}};
  for (std::uint64_t k = 1; k <= T; ++k) {
    StepRecord r;
    r.k = k;
    r.x = Vector::Zero(n);
    r.u_ce = r.u_cb = r.u_pr = r.v = Vector::Zero(m);
    r.w = Vector::Zero(n);
    rec.steps.push_back(r);
  }
  return rec;
}

TEST(TNocbTest, NoTriggers) {
  EXPECT_EQ(detect_t_nocb(quiet_record(100)), (CensoredStep{1, false}));
}

TEST(TNocbTest, TriggerWithDwell) {
  auto rec = quiet_record(100);
  // floor(ln 50) = 3 dwell steps after the trigger.
  rec.steps[49].breaker = BreakerFlag::Triggered;
  for (std::uint64_t k = 51; k <= 53; ++k) rec.steps[k - 1].breaker = BreakerFlag::Dwell;
  EXPECT_EQ(detect_t_nocb(rec), (CensoredStep{54, false}));
}

TEST(TNocbTest, TriggerAtHorizonIsCensored) {
  auto rec = quiet_record(10);
  rec.steps[9].breaker = BreakerFlag::Triggered;
  EXPECT_EQ(detect_t_nocb(rec), (CensoredStep{11, true}));
}

struct ScalarCase {
  PlantSpec plant;
  RiccatiSolution oracle;
};

ScalarCase scalar_case(double a) {
  ScalarCase c{PlantSpec(SystemMatrices(scalar(a), scalar(1.0)), scalar(1.0),
                         CostWeights(scalar(1.0), scalar(1.0))),
               {}};
  c.oracle = solve_dare(c.plant.sys(), c.plant.cost(), c.plant.W());
  return c;
}

TEST(TStabTest, ScalarHalfPlant) {
  const auto c = scalar_case(0.5);
  const double rho = 0.5 * (1.0 + c.oracle.rhoStar);
  // a^{2 floor(ln k)} < rho first holds (and keeps holding) at k = 3.
  ASSERT_GE(1.0, rho);
  ASSERT_LT(0.25, rho);
  auto rec = quiet_record(50);
  EXPECT_EQ(detect_t_stab(rec, c.oracle, c.plant), (CensoredStep{3, false}));
  rec.gains.push_back({1, c.oracle.Kstar, GainUpdateEvent::Outcome::Updated, 0.0});
  EXPECT_EQ(detect_t_stab(rec, c.oracle, c.plant), (CensoredStep{3, false}));
  // An over-aggressive gain (a + bK = -1.5) until step 20.
  rec.gains.front().K = scalar(-2.0);
  rec.gains.push_back({20, c.oracle.Kstar, GainUpdateEvent::Outcome::Updated, 0.0});
  EXPECT_EQ(detect_t_stab(rec, c.oracle, c.plant), (CensoredStep{20, false}));
}

TEST(TStabTest, OpenLoopMarginTooLarge) {
  const auto c = scalar_case(0.9);
  const double rho = 0.5 * (1.0 + c.oracle.rhoStar);
  ASSERT_GE(0.81, rho);
  auto rec = quiet_record(60);
  EXPECT_EQ(detect_t_stab(rec, c.oracle, c.plant), (CensoredStep{61, true}));
  // First k where 0.81^{floor(ln k)} < rho, by direct evaluation.
  std::uint64_t power_ok = 1;
  for (std::uint64_t k = 1; k <= 60; ++k) {
    if (!(std::pow(0.81, std::floor(std::log(static_cast<double>(k)))) < rho)) power_ok = k + 1;
  }
  ASSERT_LT(power_ok, 40u);
  rec.gains.push_back({40, c.oracle.Kstar, GainUpdateEvent::Outcome::Updated, 0.0});
  EXPECT_EQ(detect_t_stab(rec, c.oracle, c.plant), (CensoredStep{40, false}));
  rec.gains.front().k = 4;
  EXPECT_EQ(detect_t_stab(rec, c.oracle, c.plant), (CensoredStep{power_ok, false}));
}

TEST(NoiseEventTest, Examples) {
  auto rec = quiet_record(20, 2, 1);
  EXPECT_TRUE(check_noise_event(rec, 0.05));
  const double bound = 2.0 * std::sqrt(3.0) * std::sqrt(std::log(1.0 / 0.05));
  EXPECT_NEAR(noise_event_bound(2, 1, 0.05), bound, 1e-15);
  rec.steps[0].w << bound * 1.0001, 0.0;
  EXPECT_FALSE(check_noise_event(rec, 0.05));
  rec.steps[0].w << bound * 0.9999, 0.0;
  EXPECT_TRUE(check_noise_event(rec, 0.05));
  rec.steps[5].v << 100.0;
  rec.steps[5].u_pr << 100.0 * std::pow(6.0, -0.25);
  EXPECT_FALSE(check_noise_event(rec, 0.05));
  EXPECT_THROW(check_noise_event(rec, 0.6), InvalidArgument);
  EXPECT_THROW(check_noise_event(rec, 0.0), InvalidArgument);
}

TEST(NoiseEventTest, ProbeDrawRecoveredFromScaledProbe) {
  auto rec = quiet_record(20);
  rec.steps[15].v.resize(0);  // as reloaded from CSV
  rec.steps[15].u_pr << 3.0 * std::pow(16.0, -0.25);
  EXPECT_NEAR(rec.steps[15].probe_draw()(0), 3.0, 1e-15);
}

TEST(StateNormRatioTest, Examples) {
  auto rec = quiet_record(10, 2, 1);
  EXPECT_EQ(max_state_norm_ratio(rec, 0.05), 0.0);
  rec.steps[4].x << 3.0, 4.0;
  EXPECT_NEAR(max_state_norm_ratio(rec, 0.05), 5.0 / std::log(5.0 / 0.05), 1e-15);
}

std::vector<CurvePoint> curve(auto f) {
  std::vector<CurvePoint> pts;
  for (double T = 1.0; T <= 1e5; T *= 1.2) pts.push_back({std::ceil(T), f(std::ceil(T))});
  return pts;
}

TEST(SlopeTest, InverseSquareRoot) {
  const auto pts = curve([](double T) { return 3.7 / std::sqrt(T); });
  const auto est = fit_regret_slope(pts, {1e3, 1e5});
  EXPECT_NEAR(est.slope, -0.5, 1e-12);
  EXPECT_NEAR(est.intercept, std::log(3.7), 1e-10);
  EXPECT_NEAR(est.r_squared, 1.0, 1e-12);
  EXPECT_EQ(est.excluded_nonpositive, 0u);
}

TEST(SlopeTest, ConstantCurve) {
  const auto pts = curve([](double) { return 0.2; });
  EXPECT_NEAR(fit_regret_slope(pts, {1.0, 1e5}).slope, 0.0, 1e-14);
}

TEST(SlopeTest, NonPositivePointsExcluded) {
  auto pts = curve([](double T) { return 1.0 / T; });
  pts[3].value = -0.5;
  pts[4].value = 0.0;
  const auto est = fit_regret_slope(pts, {1.0, 1e5});
  EXPECT_EQ(est.excluded_nonpositive, 2u);
  EXPECT_EQ(est.points, pts.size() - 2);
  EXPECT_NEAR(est.slope, -1.0, 1e-12);
}

TEST(SlopeTest, EmptyWindow) {
  const auto pts = curve([](double T) { return 1.0 / T; });
  EXPECT_THROW(fit_regret_slope(pts, {2e5, 3e5}), EmptyWindow);
  const std::vector<CurvePoint> one{{10.0, 1.0}, {20.0, -1.0}};
  EXPECT_THROW(fit_regret_slope(one, {1.0, 100.0}), EmptyWindow);
}

TEST(HistogramTest, DecadeBins) {
  const std::vector<std::uint64_t> values{1, 5, 10, 99, 100, 1000};
  const auto h = log10_histogram(values, 1000);
  ASSERT_EQ(h.counts.size(), 4u);
  EXPECT_EQ(h.counts, (std::vector<std::uint64_t>{2, 2, 1, 1}));
  EXPECT_EQ(h.lower.front(), 1.0);
  EXPECT_EQ(h.upper.back(), 10000.0);
}

TEST(MonitorConstantsTest, EstimationConstants) {
  const PlantSpec plant = reference_plant();
  const auto oracle = solve_dare(plant.sys(), plant.cost(), plant.W());
  const auto open = solve_discrete_lyapunov(plant.sys().A, plant.cost().Q);
  const auto c = monitor_constants(plant, oracle, open, 0.05);
  EXPECT_NEAR(c.C_theta, (3200.0 * 3.0 / 9.0) * (5.0 * 3.0 / 2.0 + 2.0), 1e-9);
  EXPECT_EQ(c.k0, static_cast<std::uint64_t>(std::ceil(600.0 * 5.0 * std::log(20.0) + 5400.0)));
  EXPECT_GT(c.C_x, 0.0);
  EXPECT_GT(c.C_cross, 0.0);
}

// The in-loop monitor and the log scans must agree on every trial.
TEST(TrialMonitorTest, AgreesWithLogScans) {
  ExperimentConfig cfg;
  cfg.plant = reference_plant_generator();
  cfg.horizon = 20'000;
  cfg.trials = 6;
  cfg.base_seed = 12;
  cfg.slope_window = {1.0, 20'000.0};
  cfg.verbose_monitors = true;
  const auto exp = Experiment::prepare(cfg);
  for (std::uint64_t i = 0; i < cfg.trials; ++i) {
    const auto r = run_trial(exp, i, {.keep_record = true});
    const auto& rec = *r.record;
    const auto& d = r.diagnostics;
    EXPECT_EQ(d.steps, cfg.horizon);
    EXPECT_EQ(d.t_nocb, detect_t_nocb(rec));
    EXPECT_EQ(d.t_stab, detect_t_stab(rec, exp.oracle, exp.plant, cfg.controller));
    EXPECT_EQ(d.noise_event_holds, check_noise_event(rec, cfg.delta));
    EXPECT_NEAR(d.max_state_norm_ratio, max_state_norm_ratio(rec, cfg.delta), 1e-12);
    EXPECT_LE(d.t_nocb.step, cfg.horizon + 1);
    EXPECT_TRUE(d.cov_event_holds.has_value());
    EXPECT_TRUE(d.cross_event_holds.has_value());
    EXPECT_TRUE(d.est_event_holds.has_value());
  }
}

}  // namespace
}  // namespace alqr
