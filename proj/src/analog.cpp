// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#include "dmabeam/analog.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dmabeam/errors.hpp"
#include "dmabeam/linalg.hpp"

namespace dmabeam {
namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

constexpr Cplx kI{0.0, 1.0};

MatrixXcd with_susceptance(const MatrixXcd& yss_tilde, const VectorXd& y) {
    MatrixXcd a = yss_tilde;
    for (Eigen::Index l = 0; l < y.size(); ++l) a(l, l) += kI * y(l);
    return a;
}

void check_state(const AnalogState& state) {
    const auto L = state.y.size();
    if (state.yss_tilde.rows() != L || state.yss_tilde.cols() != L ||
        state.yhat.rows() != L || state.yhat.cols() != L)
        throw ValidationError("analog state: matrix sizes do not match y");
    if (!(state.trust_radius > 0.0) || !(state.trust_radius < 1.0))
        throw ValidationError("analog state: trust radius must lie in (0, 1)");
    const MatrixXcd a = with_susceptance(state.yss_tilde, state.y);
    const double scale = std::max(1.0, state.yhat.norm() * a.norm() / std::sqrt(double(L)));
    const double residual = (state.yhat * a - MatrixXcd::Identity(L, L)).norm() / std::sqrt(double(L));
    if (residual > 1e-9 * scale) {
        std::ostringstream msg;
        msg << "analog state: stored inverse is stale, residual " << residual;
        throw ConditioningError(msg.str());
    }
}

} // namespace

AnalogState make_analog_state(const Scenario& scenario, const VectorXd& y,
                              double trust_radius) {
    const auto L = scenario.num_elements();
    if (y.size() != L) throw ValidationError("analog state: y length must equal element count");
    if (!(trust_radius > 0.0) || !(trust_radius < 1.0))
        throw ValidationError("analog state: trust radius must lie in (0, 1)");
    AnalogState state;
    state.y = y;
    state.yss_tilde = scenario.admittances.y_ss +
                      scenario.r0 * MatrixXcd::Identity(L, L);
    state.yhat = checked_inverse(with_susceptance(state.yss_tilde, y), "y_s + y_ss");
    state.trust_radius = trust_radius;
    state.iteration = 0;
    return state;
}

double trust_region_bound(const AnalogState& state) {
    const double norm = spectral_norm(state.yhat);
    if (!(norm > 0.0)) throw ValidationError("analog state: zero inverse norm");
    return state.trust_radius / norm;
}

MatrixXcd neumann_inverse(const AnalogState& state, const VectorXd& z) {
    if (z.size() != state.y.size())
        throw ValidationError("neumann_inverse: step length must equal element count");
    const MatrixXcd scaled = z.cast<Cplx>().asDiagonal() * state.yhat;
    const double contraction = spectral_norm(scaled);
    if (!(contraction < 1.0)) {
        std::ostringstream msg;
        msg << "step leaves the series convergence region: ||diag(z) yhat|| = " << contraction;
        throw TrustRegionError(msg.str());
    }
    return state.yhat - kI * (state.yhat * scaled);
}

QcqpData assemble_qcqp_data(const AnalogState& state, const Scenario& scenario,
                            const Beamformer& B) {
    check_state(state);
    const auto L = scenario.num_elements();
    const auto N = scenario.num_rf_ports();
    const auto M = scenario.num_users();
    const auto D = scenario.num_directions();
    if (state.y.size() != L)
        throw ValidationError("assemble_qcqp_data: state dimension does not match scenario");
    if (B.B.rows() != N || B.B.cols() != M + N)
        throw ValidationError("assemble_qcqp_data: beamformer must be N x (M+N)");

    const auto& adm = scenario.admittances;
    const MatrixXcd& yhat = state.yhat;
    const MatrixXcd gram = B.B * B.B.adjoint();       // N x N
    const MatrixXcd feed = yhat * adm.y_st * B.B;     // L x (M+N)
    const MatrixXcd ghat = feed * feed.adjoint();     // Hermitian PSD, L x L
    const MatrixXcd y_rs_eff =
        checked_inverse(adm.y_r + adm.y_rr, "y_r + y_rr") * adm.y_rs; // M x L

    QcqpData data;
    data.e_d.resize(D);
    data.w_d.resize(D);
    data.q_d.resize(D);
    data.w_t = VectorXcd::Zero(L);
    data.q_t = MatrixXcd::Zero(L, L);
    for (int d = 0; d < D; ++d) {
        const auto& dir = scenario.directions[static_cast<std::size_t>(d)];
        const VectorXcd a = steering_vector(scenario.geometry, dir.theta, dir.phi).entries;
        const VectorXcd v = a.conjugate();
        const MatrixXcd omega = v * v.adjoint(); // Hermitian rank one
        data.e_d[static_cast<std::size_t>(d)] = (a.transpose() * feed).squaredNorm();
        const MatrixXcd sandwich = yhat.adjoint() * omega;
        data.w_d[static_cast<std::size_t>(d)] = (kI * sandwich * ghat).diagonal();
        data.q_d[static_cast<std::size_t>(d)] =
            ghat.cwiseProduct((sandwich * yhat).transpose());
        data.e_t += data.e_d[static_cast<std::size_t>(d)];
        data.w_t += data.w_d[static_cast<std::size_t>(d)];
        data.q_t += data.q_d[static_cast<std::size_t>(d)];
    }
    data.e_t /= D;
    data.w_t /= double(D);
    data.q_t /= double(D);

    data.l_m.resize(M);
    data.s_m.resize(M);
    data.f_m.resize(M);
    data.e_mat.resize(M);
    for (int m = 0; m < M; ++m) {
        const VectorXcd b_m = B.B.col(m);
        const double gamma = scenario.gamma_min(m);
        const MatrixXcd kernel = gram - (1.0 + 1.0 / gamma) * (b_m * b_m.adjoint());
        const MatrixXcd e_mat = adm.y_st * kernel * adm.y_st.adjoint();
        const MatrixXcd core = yhat * e_mat * yhat.adjoint(); // Hermitian
        const Eigen::RowVectorXcd row = y_rs_eff.row(m);
        const MatrixXcd psi = row.adjoint() * row;
        data.e_mat[static_cast<std::size_t>(m)] = e_mat;
        data.l_m[static_cast<std::size_t>(m)] = (row * core * row.adjoint())(0, 0).real();
        const MatrixXcd sandwich = yhat.adjoint() * psi;
        data.s_m[static_cast<std::size_t>(m)] = (kI * sandwich * core).diagonal();
        data.f_m[static_cast<std::size_t>(m)] = core.cwiseProduct((sandwich * yhat).transpose());
    }

    const MatrixXcd fed = adm.y_st * B.B;                 // L x (M+N)
    const MatrixXcd fed_conj = adm.y_st * B.B.conjugate();
    data.j = (kI * (yhat * fed) * fed_conj.transpose() * yhat).diagonal();
    const double tx_trace = (adm.y_tt * gram).trace().real();
    const double tuned_trace = ((yhat * fed).cwiseProduct(fed_conj)).sum().real();
    data.p_t_budget = 2.0 * scenario.p_max - tx_trace + tuned_trace;
    data.z_bound = trust_region_bound(state);
    return data;
}

double truncated_objective(const QcqpData& data, const VectorXd& z) {
    return data.e_t + 2.0 * data.w_t.real().dot(z) +
           z.dot(data.q_t.real().selfadjointView<Eigen::Lower>() * z);
}

namespace {

struct RowScale {
    qcqp::QuadConstraint constraint;
    double scale = 1.0; // normalization for violation reporting at z = 0
};

// Constraint rows shared by both surrogate modes; `linearize_at` is the
// convex-concave expansion point (zero vector for the convex restriction,
// which also drops the lower-bound quadratic entirely).
std::vector<RowScale> build_rows(const QcqpData& data, const Scenario& scenario,
                                 SurrogateMode mode, const VectorXd& z_k) {
    const auto L = data.j.size();
    const auto D = static_cast<int>(data.e_d.size());
    const auto M = static_cast<int>(data.l_m.size());
    std::vector<RowScale> rows;

    for (int d = 0; d < D; ++d) {
        const auto di = static_cast<std::size_t>(d);
        const MatrixXd q_re = 0.5 * (data.q_d[di].real() + data.q_d[di].real().transpose());
        const VectorXd w2 = 2.0 * data.w_d[di].real();
        if (std::isfinite(scenario.beta_max)) {
            RowScale row;
            row.constraint.p = psd_clip(q_re);
            row.constraint.q = w2;
            row.constraint.r = data.e_d[di] - scenario.beta_max;
            row.constraint.label = "beampattern-high[" + std::to_string(d) + "]";
            row.scale = rel_scale(scenario.beta_max);
            rows.push_back(std::move(row));
        }
        RowScale low;
        if (mode == SurrogateMode::AsPrinted) {
            // Tangent minorant of the (convex) gain quadratic at z_k keeps
            // the row affine yet inside the stated feasible set.
            low.constraint.q = -w2 - 2.0 * (q_re * z_k);
            low.constraint.r = scenario.beta_lo(d) - data.e_d[di] + z_k.dot(q_re * z_k);
        } else {
            low.constraint.q = -w2;
            low.constraint.r = scenario.beta_lo(d) - data.e_d[di];
        }
        low.constraint.label = "beampattern-low[" + std::to_string(d) + "]";
        low.scale = rel_scale(scenario.beta_lo(d));
        rows.push_back(std::move(low));
    }

    for (int m = 0; m < M; ++m) {
        const auto mi = static_cast<std::size_t>(m);
        const MatrixXd f_re = 0.5 * (data.f_m[mi].real() + data.f_m[mi].real().transpose());
        RowScale row;
        if (mode == SurrogateMode::AsPrinted) {
            const MatrixXd f_plus = psd_clip(f_re);
            const MatrixXd f_minus = psd_clip(-f_re);
            row.constraint.p = f_plus;
            row.constraint.q = 2.0 * data.s_m[mi].real() - 2.0 * (f_minus * z_k);
            row.constraint.r = data.l_m[mi] + scenario.noise_power + z_k.dot(f_minus * z_k);
        } else {
            row.constraint.p = psd_clip(f_re);
            row.constraint.q = 2.0 * data.s_m[mi].real();
            row.constraint.r = data.l_m[mi] + scenario.noise_power;
        }
        row.constraint.label = "sinr[" + std::to_string(m) + "]";
        row.scale = rel_scale(data.l_m[mi]);
        rows.push_back(std::move(row));
    }

    {
        RowScale row;
        row.constraint.q = 2.0 * data.j.real();
        row.constraint.r = -2.0 * data.p_t_budget;
        row.constraint.label = "power";
        row.scale = rel_scale(2.0 * data.p_t_budget);
        rows.push_back(std::move(row));
    }

    (void)L;
    return rows;
}

// Violation of the z = 0 point, normalized per row. The rows' constants are
// exactly "current value minus bound", so this is a pure lookup.
std::pair<double, std::string> origin_violation(const std::vector<RowScale>& rows) {
    double worst = 0.0;
    std::string label;
    for (const auto& row : rows) {
        const double v = std::max(0.0, row.constraint.r) / row.scale;
        if (v > worst) {
            worst = v;
            label = row.constraint.label;
        }
    }
    return {worst, label};
}

VectorXd solve_rows(const QcqpData& data, const Scenario& scenario,
                    const AnalogOptions& options, SurrogateMode mode,
                    const VectorXd& z_k, const VectorXd& cost) {
    const auto L = data.j.size();
    auto rows = build_rows(data, scenario, mode, z_k);
    qcqp::Problem pb;
    pb.cost = cost;
    pb.box = VectorXd::Constant(L, data.z_bound);
    pb.constraints.reserve(rows.size());
    for (auto& row : rows) pb.constraints.push_back(std::move(row.constraint));
    const qcqp::Solution sol = qcqp::minimize(pb, options.solver);
    if (sol.status == qcqp::Status::Optimal) return sol.z;
    if (sol.status == qcqp::Status::NoInterior) {
        auto [worst, label] = origin_violation(build_rows(data, scenario, mode, z_k));
        if (worst <= options.zero_step_tolerance) return VectorXd::Zero(L);
        std::ostringstream msg;
        msg << "current point violates linearized constraint " << label << " by " << worst;
        throw FeasibilityLostError(msg.str());
    }
    // Numerical trouble: keep the iterate only if it is essentially feasible;
    // exact-metric acceptance screens it again either way.
    if (sol.max_violation <= options.zero_step_tolerance) return sol.z;
    return VectorXd::Zero(L);
}

} // namespace

VectorXd solve_analog_step(const QcqpData& data, const Scenario& scenario,
                           const AnalogOptions& options) {
    const auto L = data.j.size();
    if (scenario.num_elements() != L)
        throw ValidationError("solve_analog_step: data and scenario disagree on element count");
    if (!(data.z_bound > 0.0))
        throw ValidationError("solve_analog_step: nonpositive trust bound");

    if (options.mode == SurrogateMode::ConvexRestriction) {
        const VectorXd cost = -2.0 * data.w_t.real();
        return solve_rows(data, scenario, options, options.mode, VectorXd::Zero(L), cost);
    }

    // As-printed objective via convex-concave rounds: each round maximizes a
    // tangent minorant of the quadratic gain around the previous iterate.
    const MatrixXd q_t_re = 0.5 * (data.q_t.real() + data.q_t.real().transpose());
    VectorXd z_k = VectorXd::Zero(L);
    for (int round = 0; round < std::max(1, options.ccp_rounds); ++round) {
        const VectorXd cost = -2.0 * data.w_t.real() - 2.0 * (q_t_re * z_k);
        const VectorXd z_next = solve_rows(data, scenario, options, options.mode, z_k, cost);
        const double move = (z_next - z_k).cwiseAbs().maxCoeff();
        z_k = z_next;
        if (move <= 1e-9 * std::max(1.0, data.z_bound)) break;
    }
    return z_k;
}

StepOutcome accept_or_shrink(const AnalogState& state, const VectorXd& z,
                             const Scenario& scenario, const Beamformer& B,
                             const AcceptOptions& options, const StepResolver& resolve) {
    check_state(state);
    const double bound0 = trust_region_bound(state);
    if (z.size() != state.y.size())
        throw ValidationError("accept_or_shrink: step length must equal element count");
    if (z.cwiseAbs().maxCoeff() > bound0 * (1.0 + 1e-9))
        throw TrustRegionError("accept_or_shrink: candidate exceeds the trust bound");

    const Scenario scen_now = scenario_with_susceptance(scenario, state.y);
    const EffectiveChannelSet ch_now = effective_channels(scen_now);
    const double before = total_beampattern(scen_now, ch_now, B);

    StepOutcome out;
    out.result.exact_objective_before = before;
    out.result.exact_objective_after = before;

    double rho = state.trust_radius;
    VectorXd candidate = z;
    int shrinks = 0;
    while (true) {
        bool usable = true;
        double after = before;
        ConstraintReport report;
        try {
            const VectorXd y_new = state.y + candidate;
            const Scenario scen_new = scenario_with_susceptance(scenario, y_new);
            const EffectiveChannelSet ch_new = effective_channels(scen_new);
            report = p1_constraint_report(scen_new, ch_new, B);
            after = total_beampattern(scen_new, ch_new, B);
        } catch (const ConditioningError&) {
            usable = false; // candidate walked onto a singular operating point
        }
        if (usable && after > before && report.within(options.constraint_tolerance)) {
            out.result.z = candidate;
            out.result.accepted = true;
            out.result.exact_objective_after = after;
            out.result.exact_constraint_report = report;
            out.result.shrink_count = shrinks;
            const double grown = std::min(rho * options.rho_growth, options.rho_max);
            out.state = make_analog_state(scenario, state.y + candidate, grown);
            out.state.iteration = state.iteration + 1;
            return out;
        }
        out.result.z = candidate;
        out.result.exact_objective_after = after;
        out.result.exact_constraint_report = report;
        out.result.shrink_count = shrinks;
        if (shrinks >= options.max_shrinks) break;
        ++shrinks;
        rho *= 0.5;
        AnalogState trial = state;
        trial.trust_radius = rho;
        const double bound = trust_region_bound(trial);
        const VectorXd previous = candidate;
        if (resolve) {
            candidate = resolve(trial);
            if (candidate.size() != state.y.size())
                throw ValidationError("accept_or_shrink: resolver returned a wrong-sized step");
        }
        candidate = candidate.cwiseMax(-bound).cwiseMin(bound);
        // Identical candidates can only fail identically; stop retrying.
        if (!resolve && (candidate - previous).cwiseAbs().maxCoeff() == 0.0) break;
    }

    out.result.accepted = false;
    out.result.shrink_count = shrinks;
    out.state = state;
    out.state.trust_radius = rho;
    return out;
}

} // namespace dmabeam
