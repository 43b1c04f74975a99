#include "alqr/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "alqr/errors.hpp"

namespace alqr {
namespace {

double spectral_norm(const Matrix& M) {
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues()(0);
}

Matrix matrix_power(const Matrix& A, std::uint64_t t) {
  Matrix result = Matrix::Identity(A.rows(), A.cols());
  for (std::uint64_t i = 0; i < t; ++i) result = result * A;
  return result;
}

void require_delta(double delta) {
  if (!(delta > 0.0 && delta <= 0.5)) throw InvalidArgument("delta must lie in (0, 1/2]");
}

}  // namespace

double noise_event_bound(Eigen::Index n, std::uint64_t k, double delta) {
  return 2.0 * std::sqrt(static_cast<double>(n) + 1.0) *
         std::sqrt(std::log(static_cast<double>(k) / delta));
}

MonitorConstants monitor_constants(const PlantSpec& truth, const RiccatiSolution& oracle,
                                   const LyapunovCertificate& open_loop, double delta) {
  const double n = static_cast<double>(truth.n());
  const double m = static_cast<double>(truth.m());
  const double normB = spectral_norm(truth.sys().B);
  const double normA = spectral_norm(truth.sys().A);
  const double normP0 = spectral_norm(open_loop.P0);
  const double normP0inv = spectral_norm(open_loop.P0.inverse());
  MonitorConstants c;
  c.C_x = (normB + 1.0) * (2.0 * std::sqrt(n + 1.0) + 1.0) * normP0 * normP0inv /
          (1.0 - std::sqrt(open_loop.rho0));
  c.C_cross = 4.0 * std::sqrt(n + 1.0) * spectral_norm(oracle.Pstar) * (normA * c.C_x + normB);
  c.C_theta = (3200.0 * n / 9.0) * (5.0 * n / 2.0 + 2.0);
  c.k0 = static_cast<std::uint64_t>(std::ceil(600.0 * (m + n) * std::log(1.0 / delta) + 5400.0));
  return c;
}

TrialMonitor::TrialMonitor(const PlantSpec& truth, const RiccatiSolution& oracle,
                           const LyapunovCertificate& open_loop, ControllerConfig controller,
                           double delta, bool verbose)
    : A_(truth.sys().A),
      B_(truth.sys().B),
      P_(oracle.Pstar),
      rho_(0.5 * (1.0 + oracle.rhoStar)),
      delta_(delta),
      verbose_(verbose),
      controller_(std::move(controller)),
      constants_(monitor_constants(truth, oracle, open_loop, delta)) {
  require_delta(delta);
  gain_margin_ = stability_margin(A_, P_);
  if (verbose_) {
    cov_sum_ = Matrix::Zero(A_.rows(), A_.rows());
    diag_.cov_event_holds = true;
    diag_.cross_event_holds = true;
    diag_.est_event_holds = true;
  }
}

double TrialMonitor::power_margin(std::uint64_t t) {
  auto it = power_margins_.find(t);
  if (it == power_margins_.end()) {
    it = power_margins_.emplace(t, stability_margin(matrix_power(A_, t), P_)).first;
  }
  return it->second;
}

void TrialMonitor::observe_gain(const Matrix& K) {
  gain_margin_ = stability_margin(A_ + B_ * K, P_);
}

void TrialMonitor::observe_step(std::uint64_t k, const Vector& x, const Vector& w,
                                const Vector& v, const Vector& u_cb, BreakerFlag flag) {
  diag_.steps = k;
  if (is_active(flag)) {
    last_active_ = k;
    ++diag_.breaker_active_steps;
    if (flag == BreakerFlag::Triggered) ++diag_.breaker_triggers;
  }
  if (!(gain_margin_ < rho_) || !(power_margin(controller_.dwell(k)) < rho_)) last_unstable_ = k;

  const double bound = noise_event_bound(A_.rows(), k, delta_);
  if (diag_.noise_event_holds && std::max(w.norm(), v.norm()) > bound) {
    diag_.noise_event_holds = false;
    diag_.first_noise_violation = k;
  }
  const double log_term = std::log(static_cast<double>(k) / delta_);
  diag_.max_state_norm_ratio = std::max(diag_.max_state_norm_ratio, x.norm() / log_term);

  if (verbose_) {
    const double kd = static_cast<double>(k);
    const double n = static_cast<double>(A_.rows());
    cov_sum_.noalias() += w * w.transpose();
    cov_sum_ -= Matrix::Identity(A_.rows(), A_.rows());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov_sum_, Eigen::EigenvaluesOnly);
    const double cov_norm = eig.eigenvalues().cwiseAbs().maxCoeff();
    if (cov_norm > 7.0 * n * std::sqrt(kd) * std::log(8.0 * n * n * kd / delta_)) {
      diag_.cov_event_holds = false;
    }
    cross_sum_ += w.dot(P_ * (A_ * x + B_ * u_cb));
    if (std::abs(cross_sum_) > constants_.C_cross * std::sqrt(kd) * log_term * log_term) {
      diag_.cross_event_holds = false;
    }
  }
}

void TrialMonitor::observe_estimate(std::uint64_t k, double estimation_error) {
  if (!verbose_ || k < constants_.k0) return;
  const double kd = static_cast<double>(k);
  const double bound = constants_.C_theta * std::log(kd / delta_) / std::sqrt(kd);
  if (estimation_error * estimation_error > bound) diag_.est_event_holds = false;
}

TrialDiagnostics TrialMonitor::finish() const {
  TrialDiagnostics d = diag_;
  d.t_nocb = {last_active_ + 1, last_active_ != 0 && last_active_ == d.steps};
  d.t_stab = {last_unstable_ + 1, last_unstable_ != 0 && last_unstable_ == d.steps};
  return d;
}

CensoredStep detect_t_nocb(const TrialRecord& trial) {
  std::uint64_t last = 0;
  for (const auto& row : trial.steps) {
    if (is_active(row.breaker)) last = row.k;
  }
  return {last + 1, last != 0 && last == trial.horizon()};
}

CensoredStep detect_t_stab(const TrialRecord& trial, const RiccatiSolution& oracle,
                           const PlantSpec& truth, const ControllerConfig& controller) {
  const double rho = 0.5 * (1.0 + oracle.rhoStar);
  const Matrix& A = truth.sys().A;
  const Matrix& B = truth.sys().B;
  std::map<std::uint64_t, bool> power_ok;
  std::uint64_t last_bad = 0;
  std::size_t next_gain = 0;
  bool gain_ok = stability_margin(A, oracle.Pstar) < rho;
  for (const auto& row : trial.steps) {
    while (next_gain < trial.gains.size() && trial.gains[next_gain].k <= row.k) {
      gain_ok = stability_margin(A + B * trial.gains[next_gain].K, oracle.Pstar) < rho;
      ++next_gain;
    }
    const std::uint64_t t = controller.dwell(row.k);
    auto it = power_ok.find(t);
    if (it == power_ok.end()) {
      it = power_ok.emplace(t, stability_margin(matrix_power(A, t), oracle.Pstar) < rho).first;
    }
    if (!gain_ok || !it->second) last_bad = row.k;
  }
  return {last_bad + 1, last_bad != 0 && last_bad == trial.horizon()};
}

bool check_noise_event(const TrialRecord& trial, double delta) {
  require_delta(delta);
  for (const auto& row : trial.steps) {
    const double bound = noise_event_bound(trial.n, row.k, delta);
    if (std::max(row.w.norm(), row.probe_draw().norm()) > bound) return false;
  }
  return true;
}

double max_state_norm_ratio(const TrialRecord& trial, double delta) {
  require_delta(delta);
  double ratio = 0.0;
  for (const auto& row : trial.steps) {
    ratio = std::max(ratio, row.x.norm() / std::log(static_cast<double>(row.k) / delta));
  }
  return ratio;
}

SlopeEstimate fit_regret_slope(std::span<const CurvePoint> curve, SlopeWindow window) {
  SlopeEstimate est;
  est.window = window;
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& p : curve) {
    if (p.T < window.lo || p.T > window.hi) continue;
    if (!(p.value > 0.0)) {
      ++est.excluded_nonpositive;
      continue;
    }
    xs.push_back(std::log(p.T));
    ys.push_back(std::log(p.value));
  }
  est.points = xs.size();
  if (xs.size() < 2) throw EmptyWindow("fewer than two positive points in slope window");
  const double count = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= count;
  my /= count;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw EmptyWindow("slope window holds a single abscissa");
  est.slope = sxy / sxx;
  est.intercept = my - est.slope * mx;
  est.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return est;
}

Histogram log10_histogram(std::span<const std::uint64_t> values, std::uint64_t max_value) {
  Histogram h;
  const std::uint64_t top = std::max<std::uint64_t>(max_value, 1);
  double lower = 1.0;
  while (lower <= static_cast<double>(top)) {
    h.lower.push_back(lower);
    h.upper.push_back(lower * 10.0);
    h.counts.push_back(0);
    lower *= 10.0;
  }
  for (std::uint64_t v : values) {
    const double x = static_cast<double>(std::max<std::uint64_t>(v, 1));
    std::size_t bin = 0;
    while (bin + 1 < h.lower.size() && x >= h.lower[bin + 1]) ++bin;
    ++h.counts[bin];
  }
  return h;
}

}  // namespace alqr
