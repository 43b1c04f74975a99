#include "alqr/regret.hpp"

#include <string>

#include "alqr/errors.hpp"

namespace alqr {

void RegretLedger::accrue(const Vector& x, const Vector& u, const CostWeights& cost) {
  accrue_stage_cost(stage_cost(x, u, cost));
}

void RegretLedger::accrue_stage_cost(double cost) {
  cost_ += cost;
  ++steps_;
}

double RegretLedger::regret() const {
  if (steps_ == 0) throw InvalidArgument("regret of an empty ledger");
  return cost_.value() - static_cast<double>(steps_) * Jstar_;
}

DecompositionAccumulator::DecompositionAccumulator(const PlantSpec& truth,
                                                   const RiccatiSolution& oracle)
    : A_(truth.sys().A),
      B_(truth.sys().B),
      R_(truth.cost().R),
      P_(oracle.Pstar),
      K_(oracle.Kstar),
      Jstar_(oracle.Jstar) {
  G_ = R_ + B_.transpose() * P_ * B_;
  BtP_ = B_.transpose() * P_;
}

void DecompositionAccumulator::add(const Vector& x, const Vector& u_cb, const Vector& u_pr,
                                   const Vector& w) {
  if (steps_ == 0) x1_energy_ = x.dot(P_ * x);
  const Vector gain_error = u_cb - K_ * x;           // (K_k - K*) x
  const Vector next_mean = A_ * x + B_ * u_cb;       // (A + B K_k) x
  const Vector P_next_mean = P_ * next_mean;
  const Vector s = B_ * u_pr + w;
  const double wPw = w.dot(P_ * w);
  sums_[0] += gain_error.dot(G_ * gain_error);
  sums_[1] += 2.0 * u_pr.dot(BtP_ * next_mean);
  sums_[2] += 2.0 * w.dot(P_next_mean);
  sums_[3] += s.dot(P_ * s) - wPw;
  sums_[4] += wPw;
  const Vector R_upr = R_ * u_pr;
  r7_ += 2.0 * R_upr.dot(u_cb) + R_upr.dot(u_pr);
  ++steps_;
}

DecompositionReport DecompositionAccumulator::report(const Vector& x_next, double regret) const {
  DecompositionReport rep;
  rep.steps = steps_;
  for (int i = 0; i < 4; ++i) rep.terms[i] = sums_[i].value();
  rep.terms[4] = sums_[4].value() - static_cast<double>(steps_) * Jstar_;
  rep.terms[5] = x1_energy_ - x_next.dot(P_ * x_next);
  rep.terms[6] = r7_.value();
  CompensatedSum total;
  for (double t : rep.terms) total += t;
  rep.total = total.value();
  rep.regret = regret;
  rep.residual = std::abs(rep.total - regret);
  return rep;
}

namespace {

void require_row(const StepRecord& row, Eigen::Index n, Eigen::Index m) {
  if (row.x.size() != n || row.u_cb.size() != m || row.u_pr.size() != m || row.w.size() != n ||
      row.u_ce.size() != m) {
    throw IncompleteLog("row k=" + std::to_string(row.k) + " is missing fields");
  }
}

}  // namespace

double trial_regret(const TrialRecord& trial, double Jstar) {
  RegretLedger ledger(Jstar);
  for (const auto& row : trial.steps) ledger.accrue_stage_cost(row.stage_cost);
  return ledger.regret();
}

DecompositionReport decompose(const TrialRecord& trial, const RiccatiSolution& oracle,
                              const PlantSpec& truth) {
  if (trial.steps.empty()) throw IncompleteLog("trial has no steps");
  if (trial.final_state.size() != truth.n()) throw IncompleteLog("x_{T+1} missing from log");
  DecompositionAccumulator acc(truth, oracle);
  for (const auto& row : trial.steps) {
    require_row(row, truth.n(), truth.m());
    acc.add(row.x, row.u_cb, row.u_pr, row.w);
  }
  return acc.report(trial.final_state, trial_regret(trial, oracle.Jstar));
}

}  // namespace alqr
