#include "alqr/trial_io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include "alqr/errors.hpp"

namespace alqr {
namespace {

void append_names(std::string& out, const std::string& prefix, Eigen::Index count) {
  for (Eigen::Index i = 1; i <= count; ++i) out += "," + prefix + std::to_string(i);
}

void write_vector(std::ostream& os, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) os << ',' << format_double(v(i));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& cell, const std::string& where) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || cell.empty()) {
    throw IncompleteLog(where + ": cannot parse '" + cell + "' as a number");
  }
  return value;
}

std::uint64_t parse_index(const std::string& cell, const std::string& where) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
    throw IncompleteLog(where + ": cannot parse '" + cell + "' as a step index");
  }
  return value;
}

Vector take(const std::vector<std::string>& cells, std::size_t& pos, Eigen::Index count,
            const std::string& where) {
  Vector v(count);
  for (Eigen::Index i = 0; i < count; ++i) v(i) = parse_double(cells[pos++], where);
  return v;
}

}  // namespace

std::string format_double(double value) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

std::string steps_csv_header(Eigen::Index n, Eigen::Index m) {
  std::string h = "k";
  append_names(h, "x_", n);
  append_names(h, "u_ce_", m);
  append_names(h, "u_cb_", m);
  append_names(h, "u_pr_", m);
  append_names(h, "w_", n);
  h += ",breaker,stage_cost";
  return h;
}

std::string gains_csv_header(Eigen::Index n, Eigen::Index m) {
  std::string h = "k,outcome,estimation_error";
  for (Eigen::Index i = 1; i <= m; ++i) {
    for (Eigen::Index j = 1; j <= n; ++j) h += ",K_" + std::to_string(i) + "_" + std::to_string(j);
  }
  return h;
}

void write_step_row(std::ostream& os, std::uint64_t k, const Vector& x, const Vector& u_ce,
                    const Vector& u_cb, const Vector& u_pr, const Vector& w, BreakerFlag breaker,
                    double stage_cost) {
  os << k;
  write_vector(os, x);
  write_vector(os, u_ce);
  write_vector(os, u_cb);
  write_vector(os, u_pr);
  write_vector(os, w);
  os << ',' << static_cast<int>(breaker) << ',' << format_double(stage_cost) << '\n';
}

void write_step_row(std::ostream& os, const StepRecord& row) {
  write_step_row(os, row.k, row.x, row.u_ce, row.u_cb, row.u_pr, row.w, row.breaker,
                 row.stage_cost);
}

void write_gain_row(std::ostream& os, const GainRecord& gain) {
  os << gain.k << ',' << to_string(gain.outcome) << ',' << format_double(gain.estimation_error);
  for (Eigen::Index i = 0; i < gain.K.rows(); ++i) {
    for (Eigen::Index j = 0; j < gain.K.cols(); ++j) os << ',' << format_double(gain.K(i, j));
  }
  os << '\n';
}

void write_trial_csv(std::ostream& os, const TrialRecord& trial) {
  os << steps_csv_header(trial.n, trial.m) << '\n';
  for (const auto& row : trial.steps) write_step_row(os, row);
}

std::string parse_outcome_name(const std::string& text, GainUpdateEvent::Outcome* outcome) {
  using O = GainUpdateEvent::Outcome;
  for (O o : {O::Updated, O::Uncontrollable, O::DareFailed}) {
    if (to_string(o) == text) {
      *outcome = o;
      return {};
    }
  }
  return "unknown outcome '" + text + "'";
}

TrialRecord read_trial_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IncompleteLog(path.string() + ": empty file");
  const auto header = split_csv(line);

  TrialRecord trial;
  for (const auto& name : header) {
    if (name.rfind("x_", 0) == 0) ++trial.n;
    if (name.rfind("u_ce_", 0) == 0) ++trial.m;
  }
  if (trial.n == 0 || trial.m == 0 || line != steps_csv_header(trial.n, trial.m)) {
    throw IncompleteLog(path.string() + ":1: unexpected header");
  }
  const std::size_t columns = header.size();
  std::uint64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where =
        path.string() + ":" + std::to_string(line_no) + " (row " + std::to_string(line_no - 1) + ")";
    const auto cells = split_csv(line);
    if (cells.size() != columns) {
      throw IncompleteLog(where + ": expected " + std::to_string(columns) + " columns, got " +
                          std::to_string(cells.size()));
    }
    StepRecord row;
    std::size_t pos = 0;
    row.k = parse_index(cells[pos++], where);
    row.x = take(cells, pos, trial.n, where);
    row.u_ce = take(cells, pos, trial.m, where);
    row.u_cb = take(cells, pos, trial.m, where);
    row.u_pr = take(cells, pos, trial.m, where);
    row.w = take(cells, pos, trial.n, where);
    const auto flag = parse_index(cells[pos++], where);
    if (flag > 2) throw IncompleteLog(where + ": breaker flag must be 0, 1 or 2");
    row.breaker = static_cast<BreakerFlag>(flag);
    row.stage_cost = parse_double(cells[pos++], where);
    if (row.k != trial.steps.size() + 1) {
      throw IncompleteLog(where + ": step index " + std::to_string(row.k) + " out of sequence");
    }
    trial.steps.push_back(std::move(row));
  }
  return trial;
}

std::vector<GainRecord> read_gains_csv(const std::filesystem::path& path, Eigen::Index n,
                                       Eigen::Index m) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != gains_csv_header(n, m)) {
    throw IncompleteLog(path.string() + ":1: unexpected header");
  }
  std::vector<GainRecord> gains;
  std::uint64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const auto cells = split_csv(line);
    if (cells.size() != static_cast<std::size_t>(3 + n * m)) {
      throw IncompleteLog(where + ": wrong column count");
    }
    GainRecord g;
    g.k = parse_index(cells[0], where);
    if (auto err = parse_outcome_name(cells[1], &g.outcome); !err.empty()) {
      throw IncompleteLog(where + ": " + err);
    }
    g.estimation_error = parse_double(cells[2], where);
    g.K.resize(m, n);
    std::size_t pos = 3;
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) g.K(i, j) = parse_double(cells[pos++], where);
    }
    gains.push_back(std::move(g));
  }
  return gains;
}

}  // namespace alqr
