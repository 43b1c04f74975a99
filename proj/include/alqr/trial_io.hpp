#pragma once

// Trial log CSV format.
//
//   k,x_1..x_n,u_ce_1..u_ce_m,u_cb_1..u_cb_m,u_pr_1..u_pr_m,w_1..w_n,breaker,stage_cost
//
// one row per step, doubles in shortest round-trip form. The gain sidecar
// holds one row per scheduled update:
//
//   k,outcome,estimation_error,K_1_1..K_m_n   (K row-major)

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "alqr/trial_record.hpp"

namespace alqr {

std::string format_double(double value);

std::string steps_csv_header(Eigen::Index n, Eigen::Index m);
std::string gains_csv_header(Eigen::Index n, Eigen::Index m);

void write_step_row(std::ostream& os, std::uint64_t k, const Vector& x, const Vector& u_ce,
                    const Vector& u_cb, const Vector& u_pr, const Vector& w, BreakerFlag breaker,
                    double stage_cost);
void write_step_row(std::ostream& os, const StepRecord& row);
void write_gain_row(std::ostream& os, const GainRecord& gain);

/// Writes header and rows of a complete record.
void write_trial_csv(std::ostream& os, const TrialRecord& trial);

/// Parses a trial CSV; n and m are inferred from the header. Throws
/// IncompleteLog naming the file and line of the first malformed row.
/// `final_state` is left empty (it is not part of the format).
TrialRecord read_trial_csv(const std::filesystem::path& path);

std::vector<GainRecord> read_gains_csv(const std::filesystem::path& path, Eigen::Index n,
                                       Eigen::Index m);

std::string parse_outcome_name(const std::string& text, GainUpdateEvent::Outcome* outcome);

}  // namespace alqr
