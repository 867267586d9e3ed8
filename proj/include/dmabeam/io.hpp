// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#pragma once

#include <string>
#include <vector>

#include "dmabeam/em_model.hpp"
#include "dmabeam/metrics.hpp"
#include "dmabeam/oracle.hpp"
#include "dmabeam/orchestrator.hpp"

namespace dmabeam::io {

// All emitters write numbers with 17 significant digits so parse-back is
// exact and repeated runs produce byte-identical files. Parsing accepts
// anything std JSON allows; emission is hand-formatted for determinism.

// 17-significant-digit rendering shared by every writer.
std::string format_double(double value);

// Scenario files: JSON object with geometry, thresholds, and either a
// synthetic-model recipe or a matrix-file reference. Unknown keys are
// rejected by name; omitted optional fields take documented defaults.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario_text(const std::string& text, const std::string& origin);
void save_scenario(const Scenario& scenario, const std::string& path);
std::string render_scenario(const Scenario& scenario);

// Solver configuration, same conventions.
AlgorithmConfig load_config(const std::string& path);
AlgorithmConfig parse_config_text(const std::string& text, const std::string& origin);

// Trace emission: schema line, one record per line, terminal summary line.
// Wall-clock fields stay in memory; emitted bytes depend only on the inputs.
std::string render_trace(const RunResult& result);
void emit_trace(const RunResult& result, const std::string& path);

struct ParsedTrace {
    std::string schema;
    std::vector<IterationRecord> records; // wall_time_seconds left at zero
    std::string termination;
    bool feasible = false;
    double final_p_tot = 0.0;
    double final_bound = 0.0;
};

ParsedTrace parse_trace(const std::string& path);

// Final-point summary with the beamformer and susceptances, for reloading.
std::string render_result(const RunResult& result, const Scenario& scenario);
void write_result(const RunResult& result, const Scenario& scenario, const std::string& path);

// Just enough of a result file to resample or compare runs.
struct ParsedResult {
    std::string termination;
    bool feasible = false;
    double objective = 0.0;
    double bound = 0.0;
    Eigen::VectorXd susceptance;
    Beamformer beamformer;
};
ParsedResult parse_result(const std::string& path);

// Angular sampling grid. Theta spans [theta_lo, theta_hi] inclusively with
// n_theta points; phi spans [phi_lo, phi_hi) with n_phi points (the default
// full circle avoids duplicating phi = 0 at 2*pi). Single-point axes sit at
// their lower edge.
struct GridSpec {
    int n_theta = 0;
    int n_phi = 0;
    double theta_lo = 0.0;
    double theta_hi = 1.5707963267948966;
    double phi_lo = 0.0;
    double phi_hi = 6.283185307179586;
};

// "<nTheta>x<nPhi>" with default angle ranges.
GridSpec parse_grid(const std::string& text);

// CSV with header "theta,phi,gain", theta-major ordering, exact metrics at
// the supplied operating point.
std::string render_beampattern(const Scenario& scenario, const Beamformer& B,
                               const GridSpec& grid);
void export_beampattern(const Scenario& scenario, const Beamformer& B, const GridSpec& grid,
                        const std::string& path);

// Oracle suite output, one structured record per line.
std::string render_oracle_reports(const std::vector<oracle::OracleReport>& reports,
                                  const std::vector<oracle::MutationOutcome>& mutations);

// Small file helpers shared by the CLI.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

} // namespace dmabeam::io
