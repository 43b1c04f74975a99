#include "alqr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "alqr/errors.hpp"
#include "alqr/trial_io.hpp"

namespace alqr {
namespace {

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

PlantSpec generate_stand_in_plant(int n, int m, double target_rho, std::uint64_t seed) {
  if (n < 1 || m < 1) throw InvalidArgument("plant dimensions must be positive");
  if (!(target_rho > 0.0 && target_rho < 1.0)) {
    throw InvalidArgument("target spectral radius must lie in (0, 1)");
  }
  constexpr int kMaxAttempts = 100;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(attempt));
    std::normal_distribution<double> normal;
    Matrix A(n, n);
    Matrix B(n, m);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) A(i, j) = normal(rng);
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) B(i, j) = normal(rng);
    }
    const double radius = spectral_radius(A);
    if (!(radius > 1e-8)) continue;
    A *= target_rho / radius;
    SystemMatrices sys(std::move(A), std::move(B));
    if (controllability_rank(sys) < n) continue;
    return PlantSpec(std::move(sys), Matrix::Identity(n, n),
                     CostWeights(Matrix::Identity(n, n), Matrix::Identity(m, m)));
  }
  throw GenerationFailed("no controllable plant after " + std::to_string(kMaxAttempts) +
                         " attempts");
}

PlantGenerator reference_plant_generator() { return PlantGenerator{3, 2, 0.9, 1}; }

PlantSpec reference_plant() {
  const auto g = reference_plant_generator();
  return generate_stand_in_plant(g.n, g.m, g.target_rho, g.seed);
}

std::vector<std::uint64_t> geometric_checkpoints(std::uint64_t horizon, double stride) {
  if (horizon < 1) throw InvalidArgument("horizon must be at least 1");
  if (!(stride >= 1.0)) throw InvalidArgument("checkpoint stride must be at least 1");
  std::vector<std::uint64_t> out;
  if (stride == 1.0) {
    out.resize(horizon);
    std::iota(out.begin(), out.end(), std::uint64_t{1});
    return out;
  }
  for (int j = 0;; ++j) {
    const double value = std::ceil(std::pow(stride, j));
    if (value >= static_cast<double>(horizon)) break;
    const auto k = static_cast<std::uint64_t>(value);
    if (out.empty() || out.back() != k) out.push_back(k);
  }
  out.push_back(horizon);
  return out;
}

std::uint64_t trial_seed(std::uint64_t base_seed, std::uint64_t trial_index) {
  return base_seed ^ mix64(trial_index);
}

Experiment Experiment::prepare(ExperimentConfig config) {
  if (config.horizon < 1) throw ConfigInvalid("/horizon", "must be at least 1");
  if (config.trials < 1) throw ConfigInvalid("/trials", "must be at least 1");
  if (!(config.checkpoint_stride >= 1.0)) {
    throw ConfigInvalid("/checkpoint_stride", "must be at least 1");
  }
  if (!(config.delta > 0.0 && config.delta <= 0.5)) {
    throw ConfigInvalid("/delta", "must lie in (0, 1/2]");
  }
  if (!(config.slope_window.lo >= 1.0 && config.slope_window.hi >= config.slope_window.lo)) {
    throw ConfigInvalid("/slope_window", "must be [lo, hi] with 1 <= lo <= hi");
  }
  if (!(config.controller.log_base > 1.0)) {
    throw ConfigInvalid("/controller/log_base", "must exceed 1");
  }

  Experiment exp;
  if (const auto* gen = std::get_if<PlantGenerator>(&config.plant)) {
    if (gen->n < 1) throw ConfigInvalid("/plant/generator/n", "must be at least 1");
    if (gen->m < 1) throw ConfigInvalid("/plant/generator/m", "must be at least 1");
    if (!(gen->target_rho > 0.0 && gen->target_rho < 1.0)) {
      throw ConfigInvalid("/plant/generator/target_rho", "must lie in (0, 1)");
    }
    try {
      exp.plant = generate_stand_in_plant(gen->n, gen->m, gen->target_rho, gen->seed);
    } catch (const GenerationFailed& e) {
      throw ConfigInvalid("/plant/generator", e.what());
    }
  } else {
    exp.plant = std::get<PlantSpec>(config.plant);
  }
  try {
    exp.oracle = solve_dare(exp.plant.sys(), exp.plant.cost(), exp.plant.W());
    exp.open_loop = solve_discrete_lyapunov(exp.plant.sys().A, exp.plant.cost().Q);
  } catch (const Error& e) {
    throw ConfigInvalid("/plant", e.what());
  }
  exp.checkpoints = geometric_checkpoints(config.horizon, config.checkpoint_stride);
  exp.config = std::move(config);
  return exp;
}

TrialResult run_trial(const Experiment& experiment, std::uint64_t trial_index,
                      const TrialSinks& sinks) {
  const auto& cfg = experiment.config;
  const PlantSpec& plant = experiment.plant;
  const auto n = plant.n();
  const auto m = plant.m();
  const double Jstar = experiment.oracle.Jstar;

  TrialResult result;
  result.index = trial_index;
  result.seed = trial_seed(cfg.base_seed, trial_index);
  if (sinks.keep_record) {
    result.record.emplace();
    result.record->n = n;
    result.record->m = m;
    result.record->steps.reserve(cfg.horizon);
  }
  if (sinks.steps_csv) *sinks.steps_csv << steps_csv_header(n, m) << '\n';
  if (sinks.gains_csv) *sinks.gains_csv << gains_csv_header(n, m) << '\n';

  CircuitBreakingController controller(n, m, plant.cost(), cfg.controller);
  RegretLedger ledger(Jstar);
  DecompositionAccumulator decomposition(plant, experiment.oracle);
  TrialMonitor monitor(plant, experiment.oracle, experiment.open_loop, cfg.controller, cfg.delta,
                       cfg.verbose_monitors);
  monitor.observe_gain(controller.gain());

  PlantState state = initial_state(plant);
  NoiseStream stream{result.seed, 1};
  auto next_checkpoint = experiment.checkpoints.begin();

  try {
    for (std::uint64_t k = 1; k <= cfg.horizon; ++k) {
      stream.counter = k;
      if (auto event = controller.update_gain(k)) {
        ++result.gain_updates;
        if (event->outcome == GainUpdateEvent::Outcome::DareFailed) ++result.dare_failures;
        if (event->outcome == GainUpdateEvent::Outcome::Uncontrollable) {
          ++result.uncontrollable_updates;
        }
        monitor.observe_gain(controller.gain());
        if (sinks.gains_csv || sinks.keep_record) {
          GainRecord g{k, controller.gain(), event->outcome,
                       estimation_error(event->estimate, plant.sys())};
          if (sinks.gains_csv) write_gain_row(*sinks.gains_csv, g);
          if (sinks.keep_record) result.record->gains.push_back(std::move(g));
        }
        if (!cfg.estimate_every_step) {
          monitor.observe_estimate(k, estimation_error(event->estimate, plant.sys()));
        }
      }
      if (cfg.estimate_every_step) {
        monitor.observe_estimate(
            k, estimation_error(controller.state().estimator.estimate(), plant.sys()));
      }
      const bool at_checkpoint =
          next_checkpoint != experiment.checkpoints.end() && *next_checkpoint == k;
      double checkpoint_estimation_error = 0.0;
      if (at_checkpoint) {
        checkpoint_estimation_error =
            estimation_error(controller.state().estimator.estimate(), plant.sys());
      }

      InputBreakdown input = controller.compute_input(k, state.x, stream);
      const Vector w = draw_process_noise_factored(stream, plant.noise_factor());
      const double cost = stage_cost(state.x, input.u, plant.cost());
      const BreakerFlag flag = breaker_flag(input);

      ledger.accrue_stage_cost(cost);
      decomposition.add(state.x, input.u_cb, input.u_pr, w);
      monitor.observe_step(k, state.x, w, input.v, input.u_cb, flag);
      if (sinks.steps_csv) {
        write_step_row(*sinks.steps_csv, k, state.x, input.u_ce, input.u_cb, input.u_pr, w, flag,
                       cost);
      }

      PlantState next = step(state, input.u, w, plant);
      controller.observe(state.x, input.u, next.x);

      if (sinks.keep_record) {
        result.record->steps.push_back(StepRecord{k, state.x, std::move(input.u_ce),
                                                  std::move(input.u_cb), std::move(input.u_pr),
                                                  w, std::move(input.v), flag, cost});
      }
      if (at_checkpoint) {
        const double regret = ledger.regret();
        const DecompositionReport rep = decomposition.report(next.x, regret);
        result.samples.push_back({k, regret, regret / (static_cast<double>(k) * Jstar),
                                  rep.residual, rep.tolerance(), checkpoint_estimation_error});
        if (!rep.holds()) result.decomposition_holds = false;
        ++next_checkpoint;
      }
      state = std::move(next);
    }
  } catch (const DivergedState& e) {
    result.failed = true;
    result.failure = e.what();
  }

  if (sinks.keep_record) result.record->final_state = result.failed ? Vector() : state.x;
  if (ledger.steps() > 0) {
    result.decomposition = decomposition.report(state.x, ledger.regret());
  }
  result.diagnostics = monitor.finish();
  return result;
}

unsigned worker_count(unsigned requested) {
  unsigned count = requested > 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ALQR_THREADS")) {
    char* end = nullptr;
    const unsigned long cap = std::strtoul(env, &end, 10);
    if (end != env && cap > 0) count = std::min<unsigned>(count, static_cast<unsigned>(cap));
  }
  return std::max(1u, count);
}

ExperimentSummary run_experiment(const Experiment& experiment, const RunOptions& options) {
  const auto& cfg = experiment.config;
  std::vector<std::uint64_t> order = options.execution_order;
  if (order.empty()) {
    order.resize(cfg.trials);
    std::iota(order.begin(), order.end(), std::uint64_t{0});
  }
  {
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::uint64_t i = 0; i < sorted.size(); ++i) {
      if (sorted[i] != i || sorted.size() != cfg.trials) {
        throw InvalidArgument("execution order must be a permutation of the trial indices");
      }
    }
  }
  if (options.trial_log_dir) std::filesystem::create_directories(*options.trial_log_dir);

  std::vector<TrialResult> results(cfg.trials);
  std::atomic<std::size_t> cursor{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      const std::size_t slot = cursor.fetch_add(1);
      if (slot >= order.size()) return;
      const std::uint64_t idx = order[slot];
      try {
        TrialSinks sinks;
        std::ofstream steps;
        std::ofstream gains;
        if (options.trial_log_dir) {
          const auto stem = "trial_" + std::to_string(idx);
          steps.open(*options.trial_log_dir / (stem + ".csv"));
          gains.open(*options.trial_log_dir / (stem + "_gains.csv"));
          if (!steps || !gains) throw IoError("cannot write trial logs for trial " + stem);
          sinks.steps_csv = &steps;
          sinks.gains_csv = &gains;
        }
        results[idx] = run_trial(experiment, idx, sinks);
        if (steps.is_open() && !steps.flush()) throw IoError("failed writing trial log");
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  {
    const unsigned threads =
        std::min<unsigned>(worker_count(options.threads), static_cast<unsigned>(order.size()));
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  if (first_error) std::rethrow_exception(first_error);

  ExperimentSummary s;
  s.n = experiment.plant.n();
  s.m = experiment.plant.m();
  s.Jstar = experiment.oracle.Jstar;
  s.rhoStar = experiment.oracle.rhoStar;
  s.horizon = cfg.horizon;
  s.base_seed = cfg.base_seed;
  s.checkpoints = experiment.checkpoints;

  std::vector<const TrialResult*> ok;
  std::uint64_t noise_ok = 0;
  std::uint64_t quiet = 0;
  std::vector<std::uint64_t> tnocb;
  for (const auto& r : results) {
    TrialSummary t;
    t.index = r.index;
    t.seed = r.seed;
    t.failed = r.failed;
    t.failure = r.failure;
    t.decomposition_holds = r.decomposition_holds;
    t.gain_updates = r.gain_updates;
    t.dare_failures = r.dare_failures;
    t.diagnostics = r.diagnostics;
    for (const auto& sample : r.samples) {
      t.max_residual_ratio =
          std::max(t.max_residual_ratio, sample.decomposition_residual / sample.decomposition_tolerance);
    }
    if (!r.samples.empty()) {
      t.final_regret = r.samples.back().regret;
      t.final_relative_regret = r.samples.back().relative_regret;
    }
    s.trials.push_back(t);
    if (r.failed) {
      ++s.failed_trials;
      continue;
    }
    if (!r.decomposition_holds) s.decomposition_holds = false;
    ok.push_back(&r);
    if (r.diagnostics.noise_event_holds) ++noise_ok;
    if (r.diagnostics.t_nocb.step - 1 <= cfg.horizon / 2) ++quiet;
    tnocb.push_back(r.diagnostics.t_nocb.step);
  }

  if (!ok.empty()) {
    const std::size_t points = experiment.checkpoints.size();
    std::vector<double> column(ok.size());
    std::vector<double> scaled(ok.size());
    for (std::size_t c = 0; c < points; ++c) {
      const double k = static_cast<double>(experiment.checkpoints[c]);
      for (std::size_t i = 0; i < ok.size(); ++i) {
        const auto& sample = ok[i]->samples[c];
        column[i] = sample.relative_regret;
        scaled[i] = sample.estimation_error * sample.estimation_error * std::sqrt(k);
      }
      s.worst.push_back(*std::max_element(column.begin(), column.end()));
      s.median.push_back(median_of(column));
      s.mean.push_back(std::accumulate(column.begin(), column.end(), 0.0) /
                       static_cast<double>(column.size()));
      s.median_scaled_estimation_error.push_back(median_of(scaled));
    }

    auto fit = [&](const std::vector<double>& values) {
      std::vector<CurvePoint> curve;
      for (std::size_t c = 0; c < points; ++c) {
        curve.push_back({static_cast<double>(experiment.checkpoints[c]), values[c]});
      }
      return fit_regret_slope(curve, cfg.slope_window);
    };
    try {
      s.mean_slope = fit(s.mean);
      s.median_slope = fit(s.median);
    } catch (const EmptyWindow& e) {
      s.slope_error = e.what();
    }

    std::vector<const TrialResult*> by_final = ok;
    std::stable_sort(by_final.begin(), by_final.end(), [](const auto* a, const auto* b) {
      return a->samples.back().relative_regret < b->samples.back().relative_regret;
    });
    s.worst_trial = by_final.back()->index;
    s.median_trial = by_final[(by_final.size() - 1) / 2]->index;
    s.noise_event_fraction = static_cast<double>(noise_ok) / static_cast<double>(ok.size());
    s.quiet_second_half_fraction = static_cast<double>(quiet) / static_cast<double>(ok.size());
  }
  s.tnocb_histogram = log10_histogram(tnocb, cfg.horizon + 1);
  return s;
}

}  // namespace alqr
