#include "alqr/report.hpp"

#include <fstream>
#include <ostream>

#include "alqr/errors.hpp"
#include "alqr/trial_io.hpp"

namespace alqr {
namespace {

Json censored_to_json(const CensoredStep& s) {
  return Json{{"step", s.step}, {"censored", s.censored}};
}

template <class Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  writer(out);
  if (!out.flush()) throw IoError("failed writing " + path.string());
}

}  // namespace

Json diagnostics_to_json(const TrialDiagnostics& d) {
  Json j{{"steps", d.steps},
         {"t_nocb", censored_to_json(d.t_nocb)},
         {"t_stab", censored_to_json(d.t_stab)},
         {"noise_event_holds", d.noise_event_holds},
         {"first_noise_violation", d.first_noise_violation},
         {"max_state_norm_ratio", d.max_state_norm_ratio},
         {"breaker_triggers", d.breaker_triggers},
         {"breaker_active_steps", d.breaker_active_steps}};
  if (d.cov_event_holds) j["cov_event_holds"] = *d.cov_event_holds;
  if (d.cross_event_holds) j["cross_event_holds"] = *d.cross_event_holds;
  if (d.est_event_holds) j["est_event_holds"] = *d.est_event_holds;
  return j;
}

Json slope_to_json(const SlopeEstimate& s) {
  return Json{{"slope", s.slope},
              {"intercept", s.intercept},
              {"window", {s.window.lo, s.window.hi}},
              {"r_squared", s.r_squared},
              {"points", s.points},
              {"excluded_nonpositive", s.excluded_nonpositive}};
}

Json summary_to_json(const ExperimentSummary& s) {
  Json j;
  j["n"] = s.n;
  j["m"] = s.m;
  j["Jstar"] = s.Jstar;
  j["rhoStar"] = s.rhoStar;
  j["horizon"] = s.horizon;
  j["base_seed"] = s.base_seed;
  j["trial_count"] = s.trials.size();
  j["failed_trials"] = s.failed_trials;
  j["decomposition_holds"] = s.decomposition_holds;
  j["noise_event_fraction"] = s.noise_event_fraction;
  j["quiet_second_half_fraction"] = s.quiet_second_half_fraction;
  j["slope"] = s.mean_slope ? Json(s.mean_slope->slope) : Json(nullptr);
  j["mean_slope"] = s.mean_slope ? slope_to_json(*s.mean_slope) : Json(nullptr);
  j["median_slope"] = s.median_slope ? slope_to_json(*s.median_slope) : Json(nullptr);
  if (!s.slope_error.empty()) j["slope_error"] = s.slope_error;
  j["worst_trial"] = s.worst_trial ? Json(*s.worst_trial) : Json(nullptr);
  j["median_trial"] = s.median_trial ? Json(*s.median_trial) : Json(nullptr);
  j["curves"] = {{"k", s.checkpoints},
                 {"worst", s.worst},
                 {"median", s.median},
                 {"mean", s.mean},
                 {"median_scaled_estimation_error", s.median_scaled_estimation_error}};
  j["tnocb_histogram"] = {{"lower", s.tnocb_histogram.lower},
                          {"upper", s.tnocb_histogram.upper},
                          {"counts", s.tnocb_histogram.counts}};
  Json trials = Json::array();
  for (const auto& t : s.trials) {
    Json tj{{"index", t.index},
            {"seed", t.seed},
            {"failed", t.failed},
            {"final_regret", t.final_regret},
            {"final_relative_regret", t.final_relative_regret},
            {"max_residual_ratio", t.max_residual_ratio},
            {"decomposition_holds", t.decomposition_holds},
            {"gain_updates", t.gain_updates},
            {"dare_failures", t.dare_failures},
            {"diagnostics", diagnostics_to_json(t.diagnostics)}};
    if (t.failed) tj["failure"] = t.failure;
    trials.push_back(std::move(tj));
  }
  j["trials"] = std::move(trials);
  return j;
}

void write_curves_csv(std::ostream& os, const ExperimentSummary& s) {
  os << "k,worst,median,mean,median_scaled_estimation_error\n";
  for (std::size_t i = 0; i < s.worst.size(); ++i) {
    os << s.checkpoints[i] << ',' << format_double(s.worst[i]) << ','
       << format_double(s.median[i]) << ',' << format_double(s.mean[i]) << ','
       << format_double(s.median_scaled_estimation_error[i]) << '\n';
  }
}

void write_tnocb_histogram_csv(std::ostream& os, const ExperimentSummary& s) {
  os << "bin_lower,bin_upper,count\n";
  const auto& h = s.tnocb_histogram;
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    os << format_double(h.lower[i]) << ',' << format_double(h.upper[i]) << ',' << h.counts[i]
       << '\n';
  }
}

void write_diagnostics_csv(std::ostream& os, const ExperimentSummary& s) {
  os << "trial,seed,failed,t_nocb,t_nocb_censored,t_stab,t_stab_censored,noise_event_holds,"
        "max_state_norm_ratio,breaker_triggers,breaker_active_steps,final_regret,"
        "final_relative_regret,max_residual_ratio,gain_updates,dare_failures\n";
  for (const auto& t : s.trials) {
    const auto& d = t.diagnostics;
    os << t.index << ',' << t.seed << ',' << t.failed << ',' << d.t_nocb.step << ','
       << d.t_nocb.censored << ',' << d.t_stab.step << ',' << d.t_stab.censored << ','
       << d.noise_event_holds << ',' << format_double(d.max_state_norm_ratio) << ','
       << d.breaker_triggers << ',' << d.breaker_active_steps << ','
       << format_double(t.final_regret) << ',' << format_double(t.final_relative_regret) << ','
       << format_double(t.max_residual_ratio) << ',' << t.gain_updates << ',' << t.dare_failures
       << '\n';
  }
}

void write_experiment_outputs(const std::filesystem::path& dir, const ExperimentConfig& config,
                              const ExperimentSummary& summary) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "summary.json",
             [&](std::ostream& os) { os << summary_to_json(summary).dump(2) << '\n'; });
  write_file(dir / "curves.csv", [&](std::ostream& os) { write_curves_csv(os, summary); });
  write_file(dir / "tnocb_hist.csv",
             [&](std::ostream& os) { write_tnocb_histogram_csv(os, summary); });
  write_file(dir / "diagnostics.csv",
             [&](std::ostream& os) { write_diagnostics_csv(os, summary); });
  write_file(dir / "config.json",
             [&](std::ostream& os) { os << config_to_json(config).dump(2) << '\n'; });
}

}  // namespace alqr
