#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "alqr/analyze.hpp"
#include "alqr/config.hpp"
#include "alqr/errors.hpp"
#include "alqr/trial_io.hpp"
#include "test_support.hpp"

namespace alqr {
namespace {

namespace fs = std::filesystem;

Json minimal_config() {
  return Json::parse(R"({
    "plant": {"A": [[0.5]], "B": [[1.0]], "W": [[1.0]], "Q": [[1.0]], "R": [[1.0]]},
    "horizon": 100, "trials": 1, "base_seed": 7,
    "checkpoint_stride": 1.2, "delta": 0.05, "slope_window": [10, 100]
  })");
}

std::string pointer_of(const Json& j) {
  try {
    Experiment::prepare(config_from_json(j));
  } catch (const ConfigInvalid& e) {
    return e.pointer();
  }
  return "<accepted>";
}

fs::path scratch_dir(const std::string& name) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  const fs::path dir = fs::temp_directory_path() /
                       ("alqr_" + name + "_" + info->name() + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(ConfigTest, MinimalConfigParses) {
  const auto cfg = config_from_json(minimal_config());
  EXPECT_EQ(cfg.horizon, 100u);
  EXPECT_EQ(cfg.trials, 1u);
  EXPECT_EQ(cfg.controller.schedule, GainSchedule::PowersOfTwo);
  const auto& plant = std::get<PlantSpec>(cfg.plant);
  EXPECT_EQ(plant.sys().A(0, 0), 0.5);
  EXPECT_TRUE(cfg.write_trial_logs);
}

TEST(ConfigTest, ErrorsNameTheField) {
  Json j = minimal_config();
  j["horizon"] = 0;
  EXPECT_EQ(pointer_of(j), "/horizon");
  j = minimal_config();
  j.erase("delta");
  EXPECT_EQ(pointer_of(j), "/delta");
  j = minimal_config();
  j["bogus"] = 1;
  EXPECT_EQ(pointer_of(j), "/bogus");
  j = minimal_config();
  j["plant"]["A"] = Json::parse("[[0.5, 0.1], [0.2]]");
  EXPECT_EQ(pointer_of(j).rfind("/plant/A", 0), 0u) << pointer_of(j);
  j = minimal_config();
  j["plant"]["A"] = Json::parse("[[1.5]]");
  EXPECT_EQ(pointer_of(j).rfind("/plant", 0), 0u);
  j = minimal_config();
  j["controller"] = {{"schedule", "hourly"}};
  EXPECT_EQ(pointer_of(j), "/controller/schedule");
  j = minimal_config();
  j["trials"] = -3;
  EXPECT_EQ(pointer_of(j), "/trials");
  j = minimal_config();
  j["slope_window"] = {10};
  EXPECT_EQ(pointer_of(j), "/slope_window");
  j = minimal_config();
  j["horizon"] = "long";
  EXPECT_EQ(pointer_of(j), "/horizon");
}

TEST(ConfigTest, GeneratorAndControllerRoundTrip) {
  Json j = minimal_config();
  j["plant"] = {{"generator", {{"n", 4}, {"m", 2}, {"target_rho", 0.8}, {"seed", 9}}}};
  j["controller"] = Json::parse(
      R"({"schedule": "every-step", "log_base": 10, "rank_tolerance": 1e-9,
          "dare": {"rtol": 1e-11, "max_iterations": 500, "condition_cap": 1e10}})");
  j["verbose_monitors"] = true;
  const auto cfg = config_from_json(j);
  EXPECT_EQ(cfg.controller.schedule, GainSchedule::EveryStep);
  EXPECT_EQ(cfg.controller.log_base, 10.0);
  EXPECT_EQ(cfg.controller.dare.max_iterations, 500);
  const Json dumped = config_to_json(cfg);
  EXPECT_EQ(config_to_json(config_from_json(dumped)), dumped);
}

TEST(ConfigTest, ExplicitPlantRoundTrip) {
  const PlantSpec p = generate_stand_in_plant(3, 2, 0.9, 4);
  const PlantSpec back = plant_from_json(plant_to_json(p));
  EXPECT_EQ(back.sys().A, p.sys().A);
  EXPECT_EQ(back.sys().B, p.sys().B);
  EXPECT_EQ(back.W(), p.W());
  const Json dumped = config_to_json(config_from_json(minimal_config()));
  EXPECT_EQ(config_to_json(config_from_json(dumped)), dumped);
}

TEST(ConfigTest, NaturalLogBaseSerializesAsE) {
  EXPECT_EQ(controller_to_json(ControllerConfig{})["log_base"], "e");
}

TEST(OverrideTest, DottedPaths) {
  Json j = minimal_config();
  apply_override(j, "horizon=250");
  apply_override(j, "controller.schedule=every-step");
  apply_override(j, "slope_window=[1,250]");
  EXPECT_EQ(j["horizon"], 250);
  EXPECT_EQ(j["controller"]["schedule"], "every-step");
  const auto cfg = config_from_json(j);
  EXPECT_EQ(cfg.horizon, 250u);
  EXPECT_EQ(cfg.controller.schedule, GainSchedule::EveryStep);
  EXPECT_EQ(cfg.slope_window.hi, 250.0);
  EXPECT_THROW(apply_override(j, "no-equals-sign"), ConfigInvalid);
  EXPECT_THROW(apply_override(j, "horizon.deeper=1"), ConfigInvalid);
}

TEST(LoadJsonTest, Failures) {
  const fs::path dir = scratch_dir("load");
  EXPECT_THROW(load_json_file(dir / "missing.json"), IoError);
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW(load_json_file(dir / "bad.json"), ConfigInvalid);
  fs::remove_all(dir);
}

TEST(TrialCsvTest, HeaderLayout) {
  EXPECT_EQ(steps_csv_header(1, 1), "k,x_1,u_ce_1,u_cb_1,u_pr_1,w_1,breaker,stage_cost");
  EXPECT_EQ(steps_csv_header(2, 1), "k,x_1,x_2,u_ce_1,u_cb_1,u_pr_1,w_1,w_2,breaker,stage_cost");
  EXPECT_EQ(gains_csv_header(2, 1), "k,outcome,estimation_error,K_1_1,K_1_2");
}

TEST(TrialCsvTest, ShortestRoundTripFormatting) {
  for (double v : {0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

// Writing a trial and reading it back reproduces every logged field.
TEST(TrialCsvTest, RoundTripIsExact) {
  ExperimentConfig cfg = config_from_json(minimal_config());
  cfg.plant = reference_plant_generator();
  cfg.horizon = 800;
  const auto exp = Experiment::prepare(cfg);
  const auto r = run_trial(exp, 0, {.keep_record = true});
  const fs::path dir = scratch_dir("roundtrip");
  {
    std::ofstream out(dir / "trial_0.csv");
    write_trial_csv(out, *r.record);
    std::ofstream gains(dir / "trial_0_gains.csv");
    gains << gains_csv_header(3, 2) << '\n';
    for (const auto& g : r.record->gains) write_gain_row(gains, g);
  }
  const TrialRecord back = read_trial_csv(dir / "trial_0.csv");
  ASSERT_EQ(back.n, 3);
  ASSERT_EQ(back.m, 2);
  ASSERT_EQ(back.steps.size(), r.record->steps.size());
  for (std::size_t i = 0; i < back.steps.size(); ++i) {
    const auto& a = back.steps[i];
    const auto& b = r.record->steps[i];
    ASSERT_EQ(a.k, b.k);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.u_ce, b.u_ce);
    EXPECT_EQ(a.u_cb, b.u_cb);
    EXPECT_EQ(a.u_pr, b.u_pr);
    EXPECT_EQ(a.w, b.w);
    EXPECT_EQ(a.breaker, b.breaker);
    EXPECT_EQ(a.stage_cost, b.stage_cost);
    EXPECT_LE((a.probe_draw() - b.v).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + b.v.norm()));
  }
  const auto gains = read_gains_csv(dir / "trial_0_gains.csv", 3, 2);
  ASSERT_EQ(gains.size(), r.record->gains.size());
  for (std::size_t i = 0; i < gains.size(); ++i) {
    EXPECT_EQ(gains[i].k, r.record->gains[i].k);
    EXPECT_EQ(gains[i].K, r.record->gains[i].K);
    EXPECT_EQ(gains[i].outcome, r.record->gains[i].outcome);
  }
  fs::remove_all(dir);
}

TEST(TrialCsvTest, MalformedRowsNameTheLine) {
  const fs::path dir = scratch_dir("malformed");
  {
    std::ofstream out(dir / "trial_0.csv");
    out << steps_csv_header(1, 1) << '\n'
        << "1,0,0,0,0.5,0.1,0,0.25\n"
        << "2,0.6,0,0,0.4,abc,0,0.52\n";
  }
  try {
    read_trial_csv(dir / "trial_0.csv");
    FAIL() << "expected IncompleteLog";
  } catch (const IncompleteLog& e) {
    EXPECT_NE(std::string(e.what()).find("trial_0.csv:3"), std::string::npos) << e.what();
  }
  {
    std::ofstream out(dir / "trial_1.csv");
    out << steps_csv_header(1, 1) << '\n' << "1,0,0,0,0.5\n";
  }
  EXPECT_THROW(read_trial_csv(dir / "trial_1.csv"), IncompleteLog);
  fs::remove_all(dir);
}

class AnalyzeTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = scratch_dir("analyze");
    ExperimentConfig cfg = config_from_json(minimal_config());
    cfg.plant = reference_plant_generator();
    cfg.horizon = 3'000;
    cfg.trials = 3;
    exp_ = Experiment::prepare(cfg);
    run_experiment(exp_, {.threads = 2, .execution_order = {}, .trial_log_dir = dir_ / "trials"});
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path dir_;
  Experiment exp_;
};

TEST_F(AnalyzeTest, FreshLogsVerify) {
  AnalysisOptions opts;
  opts.replay_noise = true;
  const auto report = analyze_trial_logs(exp_, dir_ / "trials", opts);
  EXPECT_TRUE(report.ok());
  ASSERT_EQ(report.trials.size(), 3u);
  for (const auto& t : report.trials) {
    EXPECT_EQ(t.steps, 3'000u);
    ASSERT_TRUE(t.decomposition);
    EXPECT_TRUE(t.decomposition->holds());
    EXPECT_TRUE(t.t_stab.has_value());
    const auto direct = run_trial(exp_, t.index);
    EXPECT_EQ(t.t_nocb, direct.diagnostics.t_nocb);
    EXPECT_EQ(*t.t_stab, direct.diagnostics.t_stab);
    EXPECT_NEAR(t.decomposition->regret, direct.samples.back().regret,
                1e-9 * (1.0 + std::abs(t.decomposition->regret)));
  }
}

TEST_F(AnalyzeTest, CorruptedStageCostIsLocated) {
  const fs::path file = dir_ / "trials" / "trial_1.csv";
  std::vector<std::string> lines;
  {
    std::ifstream in(file);
    for (std::string line; std::getline(in, line);) lines.push_back(line);
  }
  // Data row 42 is line 43; stage_cost is the last column.
  std::string& line = lines[42];
  line = line.substr(0, line.rfind(',') + 1) + "12345.5";
  {
    std::ofstream out(file);
    for (const auto& l : lines) out << l << '\n';
  }
  const auto report = analyze_trial_logs(exp_, dir_ / "trials");
  EXPECT_FALSE(report.ok());
  const auto problems = report.all_problems();
  ASSERT_FALSE(problems.empty());
  EXPECT_NE(problems.front().trial.find("trial_1"), std::string::npos);
  EXPECT_EQ(problems.front().row, 42u);
}

TEST_F(AnalyzeTest, TamperedNoiseDetectedOnlyByReplay) {
  const auto rec = read_trial_csv(dir_ / "trials" / "trial_0.csv");
  TrialRecord tampered = rec;
  // Shift w_1 and x_2 consistently: the log stays self-consistent.
  tampered.steps[0].w(0) += 0.5;
  tampered.steps[1].x(0) += 0.5;
  tampered.steps[1].stage_cost = stage_cost(tampered.steps[1].x, tampered.steps[1].u(),
                                            exp_.plant.cost());
  AnalysisOptions replay;
  replay.replay_noise = true;
  EXPECT_FALSE(analyze_trial(exp_, 0, "t", tampered, std::nullopt, replay).problems.empty());
}

TEST(AnalyzeSingleStepTest, HandBuiltLogVerifies) {
  Json j = minimal_config();
  j["horizon"] = 1;
  j["slope_window"] = {1, 1};
  const auto exp = Experiment::prepare(config_from_json(j));
  // x_1 = 0, K_hat = 0, u_1 = u_pr = v_1, a single step of stage cost u^2.
  TrialRecord rec{1, 1, {}, Vector(), {}};
  StepRecord row;
  row.k = 1;
  row.x = Vector::Zero(1);
  row.u_ce = row.u_cb = Vector::Zero(1);
  row.u_pr = Vector::Constant(1, 0.75);
  row.w = Vector::Constant(1, -0.4);
  row.stage_cost = 0.5625;
  rec.steps.push_back(row);
  const auto a = analyze_trial(exp, 0, "hand", rec, std::nullopt);
  EXPECT_TRUE(a.problems.empty()) << (a.problems.empty() ? "" : a.problems.front().message);
  ASSERT_TRUE(a.decomposition);
  EXPECT_NEAR(a.decomposition->regret, 0.5625 - exp.oracle.Jstar, 1e-12);
  EXPECT_TRUE(a.decomposition->holds());
}

}  // namespace
}  // namespace alqr
