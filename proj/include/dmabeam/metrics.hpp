// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#pragma once

#include <Eigen/Dense>

#include "dmabeam/em_model.hpp"

namespace dmabeam {

// Digital beamformer: N x (M+N); the first M columns carry the user streams,
// the trailing N columns are sensing-only.
struct Beamformer {
    Eigen::MatrixXcd B;

    static Beamformer zero(int num_rf_ports, int num_users) {
        Beamformer b;
        b.B = Eigen::MatrixXcd::Zero(num_rf_ports, num_users + num_rf_ports);
        return b;
    }
};

// Channel quantities derived from the admittances at the current y_s:
//   y_tilde = (y_s + y_ss)^-1
//   y_rs_eff = (y_r + y_rr)^-1 y_rs
//   h = y_rs_eff * y_tilde * y_st, row m serving user m
struct EffectiveChannelSet {
    Eigen::MatrixXcd h;        // M x N
    Eigen::MatrixXcd y_rs_eff; // M x L
    Eigen::MatrixXcd y_tilde;  // L x L
};

EffectiveChannelSet effective_channels(const Scenario& scenario);

// gamma_m = |h_m b_m|^2 / (||h_m B||^2 - |h_m b_m|^2 + sigma^2), user index
// 0-based. The denominator is >= sigma^2 by construction.
double sinr(const Scenario& scenario, const EffectiveChannelSet& channels, const Beamformer& B,
            int m);

// P(theta, phi) = a^T y_tilde y_st B B^H y_st^H y_tilde^H a*, a real
// nonnegative quadratic form. The overloads taking channels reuse a computed
// y_tilde; the scenario-only overloads factor it on the fly.
double beampattern_gain(const Scenario& scenario, const Beamformer& B, double theta, double phi);
double beampattern_gain(const Scenario& scenario, const EffectiveChannelSet& channels,
                        const Beamformer& B, double theta, double phi);

// Mean of beampattern_gain over the scenario directions.
double total_beampattern(const Scenario& scenario, const Beamformer& B);
double total_beampattern(const Scenario& scenario, const EffectiveChannelSet& channels,
                         const Beamformer& B);

// P_t = 0.5 * Re tr{(y_tt - y_st^T y_tilde y_st) B B^H}.
double radiated_power(const Scenario& scenario, const Beamformer& B);
double radiated_power(const Scenario& scenario, const EffectiveChannelSet& channels,
                      const Beamformer& B);

// ||y_tilde^H|| * ||y_tilde|| * ||y_st B B^H y_st^H|| * L * min{L, M, N},
// always >= total_beampattern for the same inputs.
double objective_upper_bound(const Scenario& scenario, const Beamformer& B);

// Evidence that the objective stays bounded for this model and beamformer.
struct BoundednessCertificate {
    // |Re tr{y_tt B B^H}| and its structural tolerance 1e-10*||y_tt||*||B||_F^2.
    double re_trace_residual = 0.0;
    double re_trace_tolerance = 0.0;
    bool re_trace_ok = false;

    // ||g_t|| with g_t = -y_st B B^H y_st^T, which equals ||y_st B B^H y_st^H||
    // when y_st is purely imaginary.
    double gram_norm_transposed = 0.0;
    double gram_norm_adjoint = 0.0;
    double gram_norm_rel_err = 0.0;
    bool gram_norm_ok = false;

    // tr{(y_tilde + y_tilde^H) g_t} against 4*p_max (the power constraint in
    // trace form; equals 4*radiated_power when the y_tt trace vanishes).
    double power_trace = 0.0;
    double power_budget = 0.0;
    bool power_ok = false;

    // Diagnostics for the bound's printed min{L,M,N} factor next to the
    // rank-motivated min{L,N} alternative, and the 1/sigma_min value behind
    // the inverse-norm step.
    double bound_min_lmn = 0.0;
    double bound_min_ln = 0.0;
    double y_tilde_norm = 0.0;
    double inv_sigma_min = 0.0;
};

BoundednessCertificate boundedness_certificate(const Scenario& scenario, const Beamformer& B);

// Exact-metric feasibility of the original constraint set at B: lower and
// upper beampattern bounds, SINR floors, and the power budget. Violations are
// normalized by max(1, |bound|) so one tolerance covers all families.
struct ConstraintEntry {
    std::string label;
    double violation = 0.0; // 0 when satisfied
};

struct ConstraintReport {
    std::vector<ConstraintEntry> entries;
    double max_violation = 0.0;
    std::string worst_label;

    bool within(double tol) const { return max_violation <= tol; }
    std::string describe() const;
};

ConstraintReport p1_constraint_report(const Scenario& scenario,
                                      const EffectiveChannelSet& channels, const Beamformer& B);

} // namespace dmabeam
