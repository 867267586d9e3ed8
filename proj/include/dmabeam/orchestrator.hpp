// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmabeam/analog.hpp"
#include "dmabeam/em_model.hpp"
#include "dmabeam/metrics.hpp"

namespace dmabeam {

struct AlgorithmConfig {
    int max_outer_iters = 50;
    int analog_steps_per_outer = 5; // 0 degenerates to a single digital solve
    double objective_tolerance = 1e-4;
    double rank_one_threshold = 1e-6;
    int randomization_samples = 1000;
    double trust_rho = 0.1;
    double trust_rho_max = 0.5;
    int max_shrinks = 8;
    std::uint64_t seed = 0;
    SurrogateMode surrogate = SurrogateMode::ConvexRestriction;

    void validate() const; // throws ValidationError naming the bad field
};

enum class Stage { Digital, Analog };

// One stage outcome, with every metric recomputed exactly at the recorded
// operating point. Wall time is an in-memory diagnostic; serialized traces
// leave it out so byte-identical reruns stay possible.
struct IterationRecord {
    int outer = 0;
    Stage stage = Stage::Digital;
    double p_tot = 0.0;
    Eigen::VectorXd per_direction;
    Eigen::VectorXd per_user_sinr;
    double p_t = 0.0;
    double bound = 0.0;
    bool accepted = false;
    double wall_time_seconds = 0.0;
};

enum class Termination {
    Converged,
    MaxIterations,
    NoProgress,
    DigitalInfeasible,
    DigitalStalled,
    AnomalyDigitalInfeasible,
    AnomalyBoundViolation,
};

struct RunResult {
    Beamformer B;
    AnalogState state;
    std::vector<IterationRecord> trace;
    Termination termination = Termination::NoProgress;
    bool feasible = false;
    std::string infeasibility_detail;
    double final_p_tot = 0.0;
    double final_bound = 0.0;
    ConstraintReport final_report;
};

// Alternate the lifted digital solve and the susceptance trust-region loop,
// starting from y = 0, until the outer improvement drops below tolerance,
// the budget runs out, or neither stage makes progress. Digital infeasibility
// on the first outer iteration aborts with the solver's attribution; after a
// feasible iterate it is reported as an anomaly instead.
RunResult run_alternating(const Scenario& scenario, const AlgorithmConfig& config);

enum class Convergence { Converged, NotConverged, Anomaly };

// Converged iff the last full outer iteration improved the exact objective
// by less than tol (relative) AND the recorded upper bound certifies the
// value; any record exceeding its bound is an anomaly, never convergence.
Convergence convergence_check(const std::vector<IterationRecord>& trace, double tol);

std::string to_string(Stage stage);
std::string to_string(Termination termination);
std::string to_string(Convergence convergence);

} // namespace dmabeam
