#pragma once

// Experiment output files: summary.json, curves.csv, tnocb_hist.csv,
// diagnostics.csv and the resolved config.json.

#include <filesystem>
#include <iosfwd>

#include "alqr/config.hpp"
#include "alqr/harness.hpp"

namespace alqr {

Json diagnostics_to_json(const TrialDiagnostics& d);
Json slope_to_json(const SlopeEstimate& s);
Json summary_to_json(const ExperimentSummary& summary);

void write_curves_csv(std::ostream& os, const ExperimentSummary& summary);
void write_tnocb_histogram_csv(std::ostream& os, const ExperimentSummary& summary);
void write_diagnostics_csv(std::ostream& os, const ExperimentSummary& summary);

/// Writes every report file into `dir` (created if needed). Throws IoError.
void write_experiment_outputs(const std::filesystem::path& dir, const ExperimentConfig& config,
                              const ExperimentSummary& summary);

}  // namespace alqr
