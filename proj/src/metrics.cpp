// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#include "dmabeam/metrics.hpp"

#include <cmath>

#include "dmabeam/errors.hpp"

namespace dmabeam {

namespace {

void check_beamformer(const Scenario& scenario, const Beamformer& B) {
    const int np = scenario.num_rf_ports();
    const int cols = scenario.num_users() + np;
    if (B.B.rows() != np || B.B.cols() != cols)
        throw ValidationError("beamformer: expected " + std::to_string(np) + "x" +
                              std::to_string(cols) + ", got " + std::to_string(B.B.rows()) + "x" +
                              std::to_string(B.B.cols()));
    if (!B.B.allFinite()) throw ValidationError("beamformer: non-finite entries");
}

// Quadratic forms below are real up to rounding; anything bigger than a
// relative 1e-10 imaginary residue means the inputs broke a structural
// assumption, which should surface rather than be discarded.
double real_part_checked(Cplx value, const char* what) {
    double tol = 1e-10 * rel_scale(std::abs(value));
    if (std::abs(value.imag()) > tol)
        throw ValidationError(std::string(what) + ": imaginary residue " +
                              std::to_string(value.imag()) + " exceeds tolerance");
    return value.real();
}

} // namespace

EffectiveChannelSet effective_channels(const Scenario& scenario) {
    EffectiveChannelSet ch;
    ch.y_tilde = checked_inverse(scenario.admittances.y_s + scenario.admittances.y_ss,
                                 "y_s + y_ss");
    Eigen::MatrixXcd recv_inv =
        checked_inverse(scenario.admittances.y_r + scenario.admittances.y_rr, "y_r + y_rr");
    ch.y_rs_eff = recv_inv * scenario.admittances.y_rs;
    ch.h = ch.y_rs_eff * ch.y_tilde * scenario.admittances.y_st;
    return ch;
}

double sinr(const Scenario& scenario, const EffectiveChannelSet& channels, const Beamformer& B,
            int m) {
    check_beamformer(scenario, B);
    if (m < 0 || m >= scenario.num_users())
        throw ValidationError("sinr: user index out of range");
    Eigen::RowVectorXcd hm = channels.h.row(m);
    Eigen::RowVectorXcd hB = hm * B.B;
    double total = hB.squaredNorm();
    double signal = std::norm(hB(m));
    double denom = total - signal + scenario.noise_power;
    return signal / denom;
}

double beampattern_gain(const Scenario& scenario, const EffectiveChannelSet& channels,
                        const Beamformer& B, double theta, double phi) {
    check_beamformer(scenario, B);
    SteeringVector a = steering_vector(scenario.geometry, theta, phi);
    // a^T y_tilde y_st B is a row vector; the quadratic form is its squared
    // norm, so nonnegativity is structural.
    Eigen::RowVectorXcd row =
        a.entries.transpose() * channels.y_tilde * scenario.admittances.y_st * B.B;
    return row.squaredNorm();
}

double beampattern_gain(const Scenario& scenario, const Beamformer& B, double theta, double phi) {
    return beampattern_gain(scenario, effective_channels(scenario), B, theta, phi);
}

double total_beampattern(const Scenario& scenario, const EffectiveChannelSet& channels,
                         const Beamformer& B) {
    double sum = 0.0;
    for (const auto& d : scenario.directions)
        sum += beampattern_gain(scenario, channels, B, d.theta, d.phi);
    return sum / static_cast<double>(scenario.num_directions());
}

double total_beampattern(const Scenario& scenario, const Beamformer& B) {
    return total_beampattern(scenario, effective_channels(scenario), B);
}

double radiated_power(const Scenario& scenario, const EffectiveChannelSet& channels,
                      const Beamformer& B) {
    check_beamformer(scenario, B);
    const auto& adm = scenario.admittances;
    Eigen::MatrixXcd gram = B.B * B.B.adjoint();
    Cplx tr = ((adm.y_tt - adm.y_st.transpose() * channels.y_tilde * adm.y_st) * gram).trace();
    return 0.5 * tr.real();
}

double radiated_power(const Scenario& scenario, const Beamformer& B) {
    return radiated_power(scenario, effective_channels(scenario), B);
}

double objective_upper_bound(const Scenario& scenario, const Beamformer& B) {
    check_beamformer(scenario, B);
    EffectiveChannelSet ch = effective_channels(scenario);
    Eigen::MatrixXcd gram =
        scenario.admittances.y_st * B.B * B.B.adjoint() * scenario.admittances.y_st.adjoint();
    double nrm = spectral_norm(ch.y_tilde);
    double el = static_cast<double>(scenario.num_elements());
    double min_lmn = static_cast<double>(std::min(
        {scenario.num_elements(), scenario.num_users(), scenario.num_rf_ports()}));
    return spectral_norm(ch.y_tilde.adjoint()) * nrm * spectral_norm(gram) * el * min_lmn;
}

BoundednessCertificate boundedness_certificate(const Scenario& scenario, const Beamformer& B) {
    check_beamformer(scenario, B);
    const auto& adm = scenario.admittances;
    EffectiveChannelSet ch = effective_channels(scenario);
    Eigen::MatrixXcd gram = B.B * B.B.adjoint();

    BoundednessCertificate cert;
    cert.re_trace_residual = std::abs((adm.y_tt * gram).trace().real());
    cert.re_trace_tolerance = 1e-10 * spectral_norm(adm.y_tt) * gram.trace().real();
    cert.re_trace_ok = cert.re_trace_residual <= cert.re_trace_tolerance;

    Eigen::MatrixXcd g_t = -adm.y_st * gram * adm.y_st.transpose();
    Eigen::MatrixXcd g_h = adm.y_st * gram * adm.y_st.adjoint();
    cert.gram_norm_transposed = spectral_norm(g_t);
    cert.gram_norm_adjoint = spectral_norm(g_h);
    cert.gram_norm_rel_err = std::abs(cert.gram_norm_transposed - cert.gram_norm_adjoint) /
                             rel_scale(cert.gram_norm_adjoint);
    cert.gram_norm_ok = cert.gram_norm_rel_err <= 1e-10;

    cert.power_trace =
        real_part_checked(((ch.y_tilde + ch.y_tilde.adjoint()) * g_t).trace(), "power trace");
    cert.power_budget = 4.0 * scenario.p_max;
    cert.power_ok = cert.power_trace <= cert.power_budget + 1e-9 * rel_scale(cert.power_budget);

    double el = static_cast<double>(scenario.num_elements());
    double nrm2 = spectral_norm(ch.y_tilde.adjoint()) * spectral_norm(ch.y_tilde);
    double gram_bound = nrm2 * cert.gram_norm_adjoint * el;
    cert.bound_min_lmn = gram_bound * std::min({scenario.num_elements(), scenario.num_users(),
                                                scenario.num_rf_ports()});
    cert.bound_min_ln = gram_bound * std::min(scenario.num_elements(), scenario.num_rf_ports());
    cert.y_tilde_norm = spectral_norm(ch.y_tilde);
    cert.inv_sigma_min = 1.0 / min_singular_value(adm.y_s + adm.y_ss);
    return cert;
}

std::string ConstraintReport::describe() const {
    std::string out;
    for (const auto& e : entries) {
        if (e.violation <= 0.0) continue;
        if (!out.empty()) out += "; ";
        out += e.label + " violated by " + std::to_string(e.violation);
    }
    return out.empty() ? "all constraints satisfied" : out;
}

ConstraintReport p1_constraint_report(const Scenario& scenario,
                                      const EffectiveChannelSet& channels, const Beamformer& B) {
    ConstraintReport report;
    auto add = [&report](const std::string& label, double violation) {
        violation = std::max(0.0, violation);
        report.entries.push_back({label, violation});
        if (violation >= report.max_violation && violation > 0.0) {
            report.max_violation = violation;
            report.worst_label = label;
        }
    };

    for (int d = 0; d < scenario.num_directions(); ++d) {
        double gain = beampattern_gain(scenario, channels, B, scenario.directions[d].theta,
                                       scenario.directions[d].phi);
        add("beampattern-low[" + std::to_string(d) + "]",
            (scenario.beta_lo(d) - gain) / rel_scale(scenario.beta_lo(d)));
        if (std::isfinite(scenario.beta_max))
            add("beampattern-high[" + std::to_string(d) + "]",
                (gain - scenario.beta_max) / rel_scale(scenario.beta_max));
    }
    for (int m = 0; m < scenario.num_users(); ++m) {
        double g = sinr(scenario, channels, B, m);
        add("sinr[" + std::to_string(m) + "]",
            (scenario.gamma_min(m) - g) / rel_scale(scenario.gamma_min(m)));
    }
    add("power", (radiated_power(scenario, channels, B) - scenario.p_max) /
                     rel_scale(scenario.p_max));
    return report;
}

} // namespace dmabeam
