// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#pragma once

#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dmabeam/em_model.hpp"
#include "dmabeam/metrics.hpp"
#include "dmabeam/qcqp.hpp"

namespace dmabeam {

// State of the tunable-susceptance iteration. The optimization variable is
// the imaginary part y of the port self-admittance diagonal; the resistive
// part stays pinned at its common value. States are value types: every
// update produces a fresh state, nothing is modified in place.
struct AnalogState {
    Eigen::VectorXd y;          // current susceptances, length L
    Eigen::MatrixXcd yss_tilde; // Y_ss + Re{Y_s}
    Eigen::MatrixXcd yhat;      // exact inverse of (yss_tilde + i diag(y))
    double trust_radius = 0.1;  // dimensionless step budget, in (0, 1)
    int iteration = 0;
};

AnalogState make_analog_state(const Scenario& scenario, const Eigen::VectorXd& y,
                              double trust_radius);

// Coefficients of the susceptance subproblem for a fixed digital beamformer:
// every term is a real quadratic form in the step z once the tuned inverse is
// replaced by its first-order series around the current state.
struct QcqpData {
    double e_t = 0.0;            // objective constant (direction average)
    Eigen::VectorXcd w_t;        // objective linear coefficients
    Eigen::MatrixXcd q_t;        // objective quadratic coefficients
    std::vector<double> e_d;     // per-direction gain at z = 0
    std::vector<Eigen::VectorXcd> w_d;
    std::vector<Eigen::MatrixXcd> q_d;
    std::vector<double> l_m;     // per-user interference margin at z = 0
    std::vector<Eigen::VectorXcd> s_m;
    std::vector<Eigen::MatrixXcd> f_m;
    std::vector<Eigen::MatrixXcd> e_mat; // per-user channel-side kernel E_m
    Eigen::VectorXcd j;          // radiated-power linear coefficients
    double p_t_budget = 0.0;     // right-hand side of the linearized power row
    double z_bound = 0.0;        // per-coordinate trust bound rho / ||yhat||
};

QcqpData assemble_qcqp_data(const AnalogState& state, const Scenario& scenario,
                            const Beamformer& B);

// rho / ||yhat||_2, the per-coordinate bound that keeps the series expansion
// of the tuned inverse accurate.
double trust_region_bound(const AnalogState& state);

// First-order series for the tuned inverse after a step z.
// Requires ||diag(z) yhat|| < 1; throws TrustRegionError otherwise.
Eigen::MatrixXcd neumann_inverse(const AnalogState& state, const Eigen::VectorXd& z);

// Objective value of the truncated subproblem at step z.
double truncated_objective(const QcqpData& data, const Eigen::VectorXd& z);

enum class SurrogateMode {
    // Drop the (nonnegative) objective quadratic and clip indefinite
    // constraint curvature to its PSD part: a convex restriction whose
    // feasible set sits inside the truncated one.
    ConvexRestriction,
    // Solve the subproblem with its quadratics as stated, via a short
    // convex-concave iteration; local, used for comparison runs.
    AsPrinted,
};

struct AnalogOptions {
    SurrogateMode mode = SurrogateMode::ConvexRestriction;
    qcqp::Options solver;
    int ccp_rounds = 5;          // only used by SurrogateMode::AsPrinted
    double zero_step_tolerance = 1e-6;
};

// Solve the susceptance subproblem around the current state. Throws
// FeasibilityLostError when the current point itself violates the
// linearized constraints beyond tolerance.
Eigen::VectorXd solve_analog_step(const QcqpData& data, const Scenario& scenario,
                                  const AnalogOptions& options = {});

struct StepResult {
    Eigen::VectorXd z;
    bool accepted = false;
    double exact_objective_before = 0.0;
    double exact_objective_after = 0.0;
    ConstraintReport exact_constraint_report;
    int shrink_count = 0;
};

struct AcceptOptions {
    double rho_growth = 1.5;
    double rho_max = 0.5;
    int max_shrinks = 8;
    double constraint_tolerance = 1e-6;
};

// Re-solves the subproblem after the trust radius shrinks; when absent the
// previous candidate is clamped into the smaller box instead.
using StepResolver = std::function<Eigen::VectorXd(const AnalogState&)>;

struct StepOutcome {
    StepResult result;
    AnalogState state;
};

// Try the candidate step against the exact metrics: accept when the exact
// average gain strictly improves and every design constraint holds within
// tolerance; otherwise halve the trust radius and retry, up to max_shrinks.
// Acceptance recomputes the tuned inverse by exact factorization.
StepOutcome accept_or_shrink(const AnalogState& state, const Eigen::VectorXd& z,
                             const Scenario& scenario, const Beamformer& B,
                             const AcceptOptions& options = {},
                             const StepResolver& resolve = {});

} // namespace dmabeam
