#include "alqr/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "alqr/errors.hpp"

namespace alqr {
namespace {

const Json& require(const Json& obj, const std::string& key, const std::string& pointer) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigInvalid(pointer + "/" + key, "required field is missing");
  return *it;
}

void reject_unknown(const Json& obj, const std::set<std::string>& allowed,
                    const std::string& pointer) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigInvalid(pointer + "/" + it.key(), "unknown field");
  }
}

void require_object(const Json& j, const std::string& pointer) {
  if (!j.is_object()) throw ConfigInvalid(pointer.empty() ? "/" : pointer, "must be an object");
}

std::uint64_t as_count(const Json& j, const std::string& pointer) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    const auto v = j.get<std::int64_t>();
    if (v < 0) throw ConfigInvalid(pointer, "must be non-negative");
    return static_cast<std::uint64_t>(v);
  }
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (v >= 0.0 && v == std::floor(v) && v < 1.8e19) return static_cast<std::uint64_t>(v);
  }
  throw ConfigInvalid(pointer, "must be a non-negative integer");
}

double as_number(const Json& j, const std::string& pointer) {
  if (!j.is_number()) throw ConfigInvalid(pointer, "must be a number");
  return j.get<double>();
}

bool as_bool(const Json& j, const std::string& pointer) {
  if (!j.is_boolean()) throw ConfigInvalid(pointer, "must be a boolean");
  return j.get<bool>();
}

}  // namespace

Json matrix_to_json(const Matrix& M) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, const std::string& pointer) {
  if (!j.is_array() || j.empty()) throw ConfigInvalid(pointer, "must be a non-empty array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    const auto row_ptr = pointer + "/" + std::to_string(i);
    if (!j[i].is_array() || j[i].empty()) throw ConfigInvalid(row_ptr, "must be a non-empty array");
    if (i == 0) cols = j[i].size();
    if (j[i].size() != cols) throw ConfigInvalid(row_ptr, "ragged matrix row");
  }
  Matrix M(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t c = 0; c < cols; ++c) {
      M(i, c) = as_number(j[i][c], pointer + "/" + std::to_string(i) + "/" + std::to_string(c));
    }
  }
  return M;
}

Json plant_to_json(const PlantSpec& plant) {
  return Json{{"A", matrix_to_json(plant.sys().A)}, {"B", matrix_to_json(plant.sys().B)},
              {"W", matrix_to_json(plant.W())},     {"Q", matrix_to_json(plant.cost().Q)},
              {"R", matrix_to_json(plant.cost().R)}};
}

PlantSpec plant_from_json(const Json& j, const std::string& pointer) {
  require_object(j, pointer);
  reject_unknown(j, {"A", "B", "W", "Q", "R"}, pointer);
  Matrix A = matrix_from_json(require(j, "A", pointer), pointer + "/A");
  Matrix B = matrix_from_json(require(j, "B", pointer), pointer + "/B");
  Matrix W = matrix_from_json(require(j, "W", pointer), pointer + "/W");
  Matrix Q = matrix_from_json(require(j, "Q", pointer), pointer + "/Q");
  Matrix R = matrix_from_json(require(j, "R", pointer), pointer + "/R");
  SystemMatrices sys;
  try {
    sys = SystemMatrices(std::move(A), std::move(B));
  } catch (const Error& e) {
    throw ConfigInvalid(pointer + "/A", e.what());
  }
  CostWeights cost;
  try {
    cost = CostWeights(std::move(Q), std::move(R));
  } catch (const Error& e) {
    throw ConfigInvalid(pointer + "/Q", e.what());
  }
  try {
    return PlantSpec(std::move(sys), std::move(W), std::move(cost));
  } catch (const Error& e) {
    throw ConfigInvalid(pointer, e.what());
  }
}

Json controller_to_json(const ControllerConfig& config) {
  Json base = config.log_base == std::numbers::e ? Json("e") : Json(config.log_base);
  return Json{{"schedule", to_string(config.schedule)},
              {"log_base", base},
              {"rank_tolerance", config.rank_tolerance},
              {"dare",
               {{"rtol", config.dare.rtol},
                {"max_iterations", config.dare.max_iterations},
                {"condition_cap", config.dare.condition_cap}}}};
}

ControllerConfig controller_from_json(const Json& j, const std::string& pointer) {
  require_object(j, pointer);
  reject_unknown(j, {"schedule", "log_base", "rank_tolerance", "dare"}, pointer);
  ControllerConfig c;
  if (j.contains("schedule")) {
    const auto& s = j["schedule"];
    if (!s.is_string()) throw ConfigInvalid(pointer + "/schedule", "must be a string");
    try {
      c.schedule = parse_gain_schedule(s.get<std::string>());
    } catch (const InvalidArgument& e) {
      throw ConfigInvalid(pointer + "/schedule", e.what());
    }
  }
  if (j.contains("log_base")) {
    const auto& b = j["log_base"];
    if (b.is_string() && b.get<std::string>() == "e") {
      c.log_base = std::numbers::e;
    } else {
      c.log_base = as_number(b, pointer + "/log_base");
      if (!(c.log_base > 1.0)) throw ConfigInvalid(pointer + "/log_base", "must exceed 1");
    }
  }
  if (j.contains("rank_tolerance")) {
    c.rank_tolerance = as_number(j["rank_tolerance"], pointer + "/rank_tolerance");
    if (!(c.rank_tolerance > 0.0)) throw ConfigInvalid(pointer + "/rank_tolerance", "must be positive");
  }
  if (j.contains("dare")) {
    const auto& d = j["dare"];
    const auto dp = pointer + "/dare";
    require_object(d, dp);
    reject_unknown(d, {"rtol", "max_iterations", "condition_cap"}, dp);
    if (d.contains("rtol")) c.dare.rtol = as_number(d["rtol"], dp + "/rtol");
    if (d.contains("max_iterations")) {
      c.dare.max_iterations = static_cast<int>(as_count(d["max_iterations"], dp + "/max_iterations"));
    }
    if (d.contains("condition_cap")) c.dare.condition_cap = as_number(d["condition_cap"], dp + "/condition_cap");
  }
  return c;
}

ExperimentConfig config_from_json(const Json& j) {
  require_object(j, "");
  reject_unknown(j,
                 {"plant", "horizon", "trials", "base_seed", "checkpoint_stride", "delta",
                  "slope_window", "controller", "estimate_every_step", "verbose_monitors",
                  "write_trial_logs"},
                 "");
  ExperimentConfig c;
  const Json& plant = require(j, "plant", "");
  require_object(plant, "/plant");
  if (plant.contains("generator")) {
    reject_unknown(plant, {"generator"}, "/plant");
    const Json& g = plant["generator"];
    const std::string gp = "/plant/generator";
    require_object(g, gp);
    reject_unknown(g, {"n", "m", "target_rho", "seed"}, gp);
    PlantGenerator gen;
    gen.n = static_cast<int>(as_count(require(g, "n", gp), gp + "/n"));
    gen.m = static_cast<int>(as_count(require(g, "m", gp), gp + "/m"));
    gen.target_rho = as_number(require(g, "target_rho", gp), gp + "/target_rho");
    gen.seed = as_count(require(g, "seed", gp), gp + "/seed");
    c.plant = gen;
  } else {
    c.plant = plant_from_json(plant, "/plant");
  }
  c.horizon = as_count(require(j, "horizon", ""), "/horizon");
  c.trials = as_count(require(j, "trials", ""), "/trials");
  c.base_seed = as_count(require(j, "base_seed", ""), "/base_seed");
  c.checkpoint_stride = as_number(require(j, "checkpoint_stride", ""), "/checkpoint_stride");
  c.delta = as_number(require(j, "delta", ""), "/delta");
  const Json& window = require(j, "slope_window", "");
  if (!window.is_array() || window.size() != 2) {
    throw ConfigInvalid("/slope_window", "must be a two-element array [lo, hi]");
  }
  c.slope_window = {as_number(window[0], "/slope_window/0"), as_number(window[1], "/slope_window/1")};
  if (j.contains("controller")) c.controller = controller_from_json(j["controller"]);
  if (j.contains("estimate_every_step")) {
    c.estimate_every_step = as_bool(j["estimate_every_step"], "/estimate_every_step");
  }
  if (j.contains("verbose_monitors")) {
    c.verbose_monitors = as_bool(j["verbose_monitors"], "/verbose_monitors");
  }
  if (j.contains("write_trial_logs")) {
    c.write_trial_logs = as_bool(j["write_trial_logs"], "/write_trial_logs");
  }
  return c;
}

Json config_to_json(const ExperimentConfig& config) {
  Json j;
  if (const auto* gen = std::get_if<PlantGenerator>(&config.plant)) {
    j["plant"] = {{"generator",
                   {{"n", gen->n}, {"m", gen->m}, {"target_rho", gen->target_rho}, {"seed", gen->seed}}}};
  } else {
    j["plant"] = plant_to_json(std::get<PlantSpec>(config.plant));
  }
  j["horizon"] = config.horizon;
  j["trials"] = config.trials;
  j["base_seed"] = config.base_seed;
  j["checkpoint_stride"] = config.checkpoint_stride;
  j["delta"] = config.delta;
  j["slope_window"] = {config.slope_window.lo, config.slope_window.hi};
  j["controller"] = controller_to_json(config.controller);
  j["estimate_every_step"] = config.estimate_every_step;
  j["verbose_monitors"] = config.verbose_monitors;
  j["write_trial_logs"] = config.write_trial_logs;
  return j;
}

void apply_override(Json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigInvalid("", "override '" + assignment + "' is not of the form key=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = text;

  Json* node = &j;
  std::string pointer;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigInvalid(pointer, "empty key in override '" + path + "'");
    pointer += "/" + key;
    if (!node->is_object()) throw ConfigInvalid(pointer, "override parent is not an object");
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = Json::object();
    start = dot + 1;
  }
}

Json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Json j = Json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ConfigInvalid("", path.string() + " is not valid JSON");
  return j;
}

}  // namespace alqr
