// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#include "dmabeam/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "dmabeam/analog.hpp"
#include "dmabeam/digital.hpp"
#include "dmabeam/em_model.hpp"
#include "dmabeam/metrics.hpp"
#include "dmabeam/rng.hpp"

// Side conventions used throughout this file: "assembled" values come from
// the production assembly routines (or a local defective mirror when a
// mutation is active); "direct" values are computed here from first
// principles with plain Eigen inverses and explicit summation loops. The two
// sides never share dmabeam helpers.

namespace dmabeam::oracle {
namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using Cplx = std::complex<double>;

constexpr Cplx kI{0.0, 1.0};
constexpr double kPi = 3.14159265358979323846;

struct Trial {
    Scenario scenario;
    Beamformer B;
    VectorXd y_state;
};

Trial make_trial(std::uint64_t seed, int index, Mutation mutation) {
    const int grid[3][2] = {{2, 2}, {4, 2}, {4, 4}};
    const int n_choices[3] = {1, 2, 4};
    const int m_choices[3] = {1, 2, 3};
    const int d_choices[3] = {1, 2, 4};
    const int rows = grid[index % 3][0];
    const int cols = grid[index % 3][1];
    const int N = n_choices[(index / 3) % 3];
    const int M = m_choices[(index / 9) % 3];
    const int D = d_choices[(index / 27) % 3];

    Rng rng = Rng(seed).stream(static_cast<std::uint64_t>(index) + 1);
    Trial trial;
    trial.scenario.geometry = ArrayGeometry::uniform_planar(rows, cols, 0.5, N, M);
    trial.scenario.r0 = 0.1;
    trial.scenario.admittances =
        build_synthetic_admittances(trial.scenario.geometry, rng.next_u64(), 0.2, 0.1);
    trial.scenario.directions.resize(static_cast<std::size_t>(D));
    for (auto& dir : trial.scenario.directions) {
        dir.theta = rng.uniform(0.05, 1.5);
        dir.phi = rng.uniform(0.0, 2.0 * kPi);
    }
    trial.scenario.beta_lo = VectorXd::Zero(D);
    trial.scenario.gamma_min = VectorXd::Ones(M);
    trial.scenario.noise_power = 0.01;
    trial.scenario.p_max = 10.0;
    trial.B.B = 0.5 * rng.complex_normal_matrix(N, M + N);
    const int L = trial.scenario.num_elements();
    trial.y_state = rng.uniform_vector(L, -0.5, 0.5);
    if (mutation == Mutation::FeedSusceptanceMadeReal) {
        // Defective model: the feed self-admittance loses its factor i and
        // becomes real, so its trace against the beamformer Gram is no
        // longer purely imaginary.
        MatrixXcd y_tt = trial.scenario.admittances.y_tt;
        for (Eigen::Index k = 0; k < y_tt.rows(); ++k)
            y_tt(k, k) = Cplx(y_tt(k, k).imag(), 0.0);
        trial.scenario.admittances.y_tt = y_tt;
    }
    return trial;
}

// ---- direct-side evaluators (no production helpers) ----

VectorXcd direct_steering(const ArrayGeometry& geometry, double theta, double phi) {
    const auto L = geometry.positions.rows();
    VectorXcd a(L);
    for (Eigen::Index l = 0; l < L; ++l) {
        const double phase = 2.0 * kPi *
                             (geometry.positions(l, 0) * std::sin(theta) * std::cos(phi) +
                              geometry.positions(l, 1) * std::sin(theta) * std::sin(phi) +
                              geometry.positions(l, 2) * std::cos(theta));
        a(l) = std::exp(kI * phase);
    }
    return a;
}

// Mean beampattern over the scenario directions for an arbitrary surface
// inverse (exact or truncated), entry by entry.
double direct_mean_gain(const Scenario& scen, const MatrixXcd& surface_inverse,
                        const Beamformer& B) {
    const MatrixXcd response = surface_inverse * scen.admittances.y_st * B.B;
    double total = 0.0;
    for (const auto& dir : scen.directions) {
        const VectorXcd a = direct_steering(scen.geometry, dir.theta, dir.phi);
        double gain = 0.0;
        for (Eigen::Index k = 0; k < response.cols(); ++k) {
            Cplx entry = 0.0;
            for (Eigen::Index l = 0; l < response.rows(); ++l) entry += a(l) * response(l, k);
            gain += std::norm(entry);
        }
        total += gain;
    }
    return total / static_cast<double>(scen.directions.size());
}

double direct_gain_one_direction(const Scenario& scen, const MatrixXcd& surface_inverse,
                                 const Beamformer& B, int d) {
    const MatrixXcd response = surface_inverse * scen.admittances.y_st * B.B;
    const auto& dir = scen.directions[static_cast<std::size_t>(d)];
    const VectorXcd a = direct_steering(scen.geometry, dir.theta, dir.phi);
    double gain = 0.0;
    for (Eigen::Index k = 0; k < response.cols(); ++k) {
        Cplx entry = 0.0;
        for (Eigen::Index l = 0; l < response.rows(); ++l) entry += a(l) * response(l, k);
        gain += std::norm(entry);
    }
    return gain;
}

MatrixXcd direct_surface_inverse(const Scenario& scen) {
    return (scen.admittances.y_s + scen.admittances.y_ss).inverse();
}

MatrixXcd direct_receive_rows(const Scenario& scen) {
    return (scen.admittances.y_r + scen.admittances.y_rr).inverse() * scen.admittances.y_rs;
}

double rel_err(double got, double want, double floor_scale = 1.0) {
    const double scale = std::max({floor_scale, std::abs(want)});
    return std::abs(got - want) / scale;
}

struct Aggregate {
    double worst = 0.0;
    void note(double err) { worst = std::max(worst, err); }
};

// ---- defective mirror of the susceptance-step assembly ----
// Reproduces the production formulas with one planted slip; exists solely so
// the checks below can be shown to fail when the algebra is wrong.

QcqpData mirrored_qcqp(const AnalogState& state, const Scenario& scen, const Beamformer& B,
                       Mutation mutation) {
    const auto& adm = scen.admittances;
    const MatrixXcd& yhat = state.yhat;
    const int D = scen.num_directions();
    const int M = scen.num_users();
    const MatrixXcd gram = B.B * B.B.adjoint();
    const MatrixXcd feed = yhat * adm.y_st * B.B;
    const MatrixXcd ghat = feed * feed.adjoint();
    const Cplx lin = mutation == Mutation::NeumannSeriesPlusSign ? -kI : kI;

    QcqpData data;
    data.w_t = VectorXcd::Zero(yhat.rows());
    data.q_t = MatrixXcd::Zero(yhat.rows(), yhat.cols());
    data.e_d.resize(static_cast<std::size_t>(D));
    data.w_d.resize(static_cast<std::size_t>(D));
    data.q_d.resize(static_cast<std::size_t>(D));
    for (int d = 0; d < D; ++d) {
        const auto di = static_cast<std::size_t>(d);
        const auto& dir = scen.directions[di];
        VectorXcd a = direct_steering(scen.geometry, dir.theta, dir.phi);
        VectorXcd v = mutation == Mutation::SteeringConjugateDropped ? a : a.conjugate();
        const MatrixXcd omega = v * v.adjoint();
        data.e_d[di] = ((a.transpose() * feed).cwiseAbs2()).sum();
        const MatrixXcd sandwich = yhat.adjoint() * omega;
        data.w_d[di] = (lin * sandwich * ghat).diagonal();
        const MatrixXcd factor = sandwich * yhat;
        data.q_d[di] = mutation == Mutation::HadamardTransposeDropped
                           ? ghat.cwiseProduct(factor).eval()
                           : ghat.cwiseProduct(factor.transpose()).eval();
        data.e_t += data.e_d[di];
        data.w_t += data.w_d[di];
        data.q_t += data.q_d[di];
    }
    data.e_t /= D;
    data.w_t /= double(D);
    data.q_t /= double(D);

    const MatrixXcd rx = direct_receive_rows(scen);
    data.l_m.resize(static_cast<std::size_t>(M));
    data.s_m.resize(static_cast<std::size_t>(M));
    data.f_m.resize(static_cast<std::size_t>(M));
    data.e_mat.resize(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) {
        const auto mi = static_cast<std::size_t>(m);
        const VectorXcd b_m = B.B.col(m);
        const double sign = mutation == Mutation::SinrKernelSignFlip ? -1.0 : 1.0;
        const MatrixXcd kernel =
            gram - (1.0 + sign / scen.gamma_min(m)) * (b_m * b_m.adjoint());
        const MatrixXcd e_mat = adm.y_st * kernel * adm.y_st.adjoint();
        const MatrixXcd core = yhat * e_mat * yhat.adjoint();
        const Eigen::RowVectorXcd row = rx.row(m);
        const MatrixXcd psi = row.adjoint() * row;
        data.e_mat[mi] = e_mat;
        data.l_m[mi] = (row * core * row.adjoint())(0, 0).real();
        const MatrixXcd sandwich = yhat.adjoint() * psi;
        data.s_m[mi] = (lin * sandwich * core).diagonal();
        data.f_m[mi] = core.cwiseProduct((sandwich * yhat).transpose());
    }

    const MatrixXcd fed = adm.y_st * B.B;
    const MatrixXcd fed_conj = adm.y_st * B.B.conjugate();
    data.j = (lin * (yhat * fed) * fed_conj.transpose() * yhat).diagonal();
    const double tx_trace = (adm.y_tt * gram).trace().real();
    const double tuned_trace = ((yhat * fed).cwiseProduct(fed_conj)).sum().real();
    const double budget_sign = mutation == Mutation::PowerBudgetSignFlip ? -1.0 : 1.0;
    data.p_t_budget = 2.0 * scen.p_max - tx_trace + budget_sign * tuned_trace;
    data.z_bound = trust_region_bound(state);
    return data;
}

} // namespace

std::string to_string(Mutation mutation) {
    switch (mutation) {
        case Mutation::None: return "none";
        case Mutation::HadamardTransposeDropped: return "hadamard-transpose-dropped";
        case Mutation::SinrKernelSignFlip: return "sinr-kernel-sign-flip";
        case Mutation::NeumannSeriesPlusSign: return "series-correction-sign-flip";
        case Mutation::SteeringConjugateDropped: return "steering-conjugate-dropped";
        case Mutation::PowerBudgetSignFlip: return "power-budget-sign-flip";
        case Mutation::FeedSusceptanceMadeReal: return "feed-susceptance-made-real";
    }
    return "unknown";
}

OracleReport check_lifting_identity(int trials, std::uint64_t seed, Mutation mutation) {
    OracleReport report{"lifting-objective", 0.0, trials, 1e-10, false, 0};
    Aggregate agg;
    for (int t = 0; t < trials; ++t) {
        const Trial trial = make_trial(seed, t, mutation);
        const Scenario& scen = trial.scenario;

        MatrixXcd a0;
        if (mutation == Mutation::SteeringConjugateDropped) {
            // Defective mirror of the lifted-objective assembly.
            const MatrixXcd y_tilde = direct_surface_inverse(scen);
            const MatrixXcd left = scen.admittances.y_st.adjoint() * y_tilde.adjoint();
            MatrixXcd omega_sum =
                MatrixXcd::Zero(scen.num_elements(), scen.num_elements());
            for (const auto& dir : scen.directions) {
                const VectorXcd a = direct_steering(scen.geometry, dir.theta, dir.phi);
                omega_sum += a * a.adjoint(); // slip: a instead of conj(a)
            }
            a0 = left * (omega_sum / double(scen.num_directions())) * left.adjoint();
        } else {
            a0 = assemble_sdp_data(scen, effective_channels(scen)).a0;
        }

        double lifted = 0.0;
        for (Eigen::Index k = 0; k < trial.B.B.cols(); ++k) {
            const VectorXcd b = trial.B.B.col(k);
            lifted += (b.adjoint() * a0 * b)(0, 0).real();
        }
        const double direct = direct_mean_gain(scen, direct_surface_inverse(scen), trial.B);
        agg.note(rel_err(lifted, direct));
    }
    report.max_rel_error = agg.worst;
    report.passed = agg.worst <= report.tolerance;
    return report;
}

OracleReport check_sinr_chain(int trials, std::uint64_t seed, Mutation mutation) {
    OracleReport report{"sinr-reformulation", 0.0, trials, 1e-9, false, 0};
    Aggregate agg;
    for (int t = 0; t < trials; ++t) {
        const Trial trial = make_trial(seed, t, mutation);
        const Scenario& scen = trial.scenario;
        const SdpData data = assemble_sdp_data(scen, effective_channels(scen));

        const MatrixXcd h = direct_receive_rows(scen) * direct_surface_inverse(scen) *
                            scen.admittances.y_st; // M x N, first principles
        for (int m = 0; m < scen.num_users(); ++m) {
            const auto mi = static_cast<std::size_t>(m);
            // Direct SINR for user m.
            Cplx desired = 0.0;
            for (Eigen::Index n = 0; n < h.cols(); ++n) desired += h(m, n) * trial.B.B(n, m);
            const double num = std::norm(desired);
            double interference = 0.0;
            for (Eigen::Index k = 0; k < trial.B.B.cols(); ++k) {
                if (k == m) continue;
                Cplx rcv = 0.0;
                for (Eigen::Index n = 0; n < h.cols(); ++n) rcv += h(m, n) * trial.B.B(n, k);
                interference += std::norm(rcv);
            }
            const double denominator = interference + scen.noise_power;
            const double gamma = num / denominator;
            if (!(gamma > 1e-12)) continue;

            for (const double factor : {0.5, 1.0, 2.0}) {
                const double threshold = factor * gamma;
                // Assembled lifted row at this threshold.
                double row = scen.noise_power;
                for (Eigen::Index k = 0; k < trial.B.B.cols(); ++k) {
                    const VectorXcd b = trial.B.B.col(k);
                    const double quad = (b.adjoint() * data.ym[mi] * b)(0, 0).real();
                    row += (k == m) ? -quad / threshold : quad;
                }
                const double expected = denominator * (1.0 - gamma / threshold);
                agg.note(rel_err(row, expected, denominator));
                // The sign must flip exactly at the SINR boundary.
                if (factor > 1.0 && !(row > 0.0)) agg.note(1.0);
                if (factor < 1.0 && !(row < 0.0)) agg.note(1.0);
            }
        }
    }
    report.max_rel_error = agg.worst;
    report.passed = agg.worst <= report.tolerance;
    return report;
}

OracleReport check_neumann_chain(int trials, std::uint64_t seed, Mutation mutation) {
    OracleReport report{"series-substitution", 0.0, trials, 1e-9, false, 0};
    Aggregate agg;
    for (int t = 0; t < trials; ++t) {
        const Trial trial = make_trial(seed, t, mutation);
        const Scenario scen = scenario_with_susceptance(trial.scenario, trial.y_state);
        const AnalogState state = make_analog_state(scen, trial.y_state, 0.1);
        const QcqpData data = mutation == Mutation::None
                                  ? assemble_qcqp_data(state, scen, trial.B)
                                  : mirrored_qcqp(state, scen, trial.B, mutation);

        Rng rng = Rng(seed ^ 0x5eedULL).stream(static_cast<std::uint64_t>(t) + 1);
        const VectorXd z =
            rng.uniform_vector(scen.num_elements(), -0.5 * data.z_bound, 0.5 * data.z_bound);

        // Direct truncated inverse, from the definition.
        const MatrixXcd a_mat = scen.admittances.y_s + scen.admittances.y_ss;
        const MatrixXcd yhat_direct = a_mat.inverse();
        MatrixXcd scaled = yhat_direct; // diag(z) * yhat
        for (Eigen::Index r = 0; r < scaled.rows(); ++r) scaled.row(r) *= z(r);
        const MatrixXcd truncated = yhat_direct - kI * (yhat_direct * scaled);

        // (a) gain quadratic form per direction.
        for (int d = 0; d < scen.num_directions(); ++d) {
            const auto di = static_cast<std::size_t>(d);
            const double assembled = data.e_d[di] + 2.0 * data.w_d[di].real().dot(z) +
                                     z.dot(data.q_d[di].real() * z);
            const double direct = direct_gain_one_direction(scen, truncated, trial.B, d);
            agg.note(rel_err(assembled, direct));
        }

        // (b) user margin quadratic form.
        const MatrixXcd rx = direct_receive_rows(scen);
        for (int m = 0; m < scen.num_users(); ++m) {
            const auto mi = static_cast<std::size_t>(m);
            const double assembled = data.l_m[mi] + 2.0 * data.s_m[mi].real().dot(z) +
                                     z.dot(data.f_m[mi].real() * z) + scen.noise_power;
            const Eigen::RowVectorXcd hm =
                rx.row(m) * truncated * scen.admittances.y_st;
            double total = 0.0;
            Cplx desired = 0.0;
            for (Eigen::Index k = 0; k < trial.B.B.cols(); ++k) {
                Cplx rcv = 0.0;
                for (Eigen::Index n = 0; n < hm.cols(); ++n) rcv += hm(n) * trial.B.B(n, k);
                total += std::norm(rcv);
                if (k == m) desired = rcv;
            }
            const double direct = total -
                                  (1.0 + 1.0 / scen.gamma_min(m)) * std::norm(desired) +
                                  scen.noise_power;
            agg.note(rel_err(assembled, direct, scen.noise_power));
        }

        // (c) power margin: budget row vs four times the headroom under the
        // truncated radiated power.
        const MatrixXcd gram = trial.B.B * trial.B.B.adjoint();
        const double p_trunc =
            0.5 * ((scen.admittances.y_tt -
                    scen.admittances.y_st.transpose() * truncated * scen.admittances.y_st) *
                   gram)
                      .trace()
                      .real();
        const double assembled_margin = 2.0 * data.p_t_budget - 2.0 * data.j.real().dot(z);
        const double direct_margin = 4.0 * (scen.p_max - p_trunc);
        agg.note(rel_err(assembled_margin, direct_margin));
    }
    report.max_rel_error = agg.worst;
    report.passed = agg.worst <= report.tolerance;
    return report;
}

OracleReport check_hadamard_trace_identity(int trials, std::uint64_t seed, Mutation mutation) {
    OracleReport report{"hadamard-trace", 0.0, trials, 1e-11, false, 0};
    Aggregate agg;
    const int sizes[3] = {4, 8, 16};
    for (int t = 0; t < trials; ++t) {
        Rng rng = Rng(seed ^ 0x4adaULL).stream(static_cast<std::uint64_t>(t) + 1);
        const int L = sizes[t % 3];
        const MatrixXcd a = rng.complex_normal_matrix(L, L);
        const MatrixXcd c = rng.complex_normal_matrix(L, L);
        const VectorXd z = rng.uniform_vector(L, -1.0, 1.0);

        Cplx lhs = 0.0;
        // tr{diag(z) A diag(z) C} expanded entrywise.
        for (int p = 0; p < L; ++p)
            for (int q = 0; q < L; ++q) lhs += z(p) * a(p, q) * z(q) * c(q, p);

        const MatrixXcd hadamard = mutation == Mutation::HadamardTransposeDropped
                                       ? a.cwiseProduct(c).eval()
                                       : a.cwiseProduct(c.transpose()).eval();
        const Cplx rhs = (z.cast<Cplx>().transpose() * hadamard * z.cast<Cplx>())(0, 0);
        agg.note(std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
    }
    report.max_rel_error = agg.worst;
    report.passed = agg.worst <= report.tolerance;
    return report;
}

OracleReport check_boundedness_chain(int trials, std::uint64_t seed, Mutation mutation) {
    OracleReport report{"objective-bound", 0.0, trials, 1e-10, false, 0};
    Aggregate agg;
    for (int t = 0; t < trials; ++t) {
        const Trial trial = make_trial(seed, t, mutation);
        const Scenario& scen = trial.scenario;
        const int L = scen.num_elements();

        // Direct bound: operator norms via Eigen's SVD, no dmabeam helpers.
        const MatrixXcd y_tilde = direct_surface_inverse(scen);
        const MatrixXcd gain_kernel = scen.admittances.y_st * trial.B.B * trial.B.B.adjoint() *
                                      scen.admittances.y_st.adjoint();
        const double norm_y = Eigen::JacobiSVD<MatrixXcd>(y_tilde).singularValues()(0);
        const double norm_yh =
            Eigen::JacobiSVD<MatrixXcd>(y_tilde.adjoint()).singularValues()(0);
        const double norm_kernel =
            Eigen::JacobiSVD<MatrixXcd>(gain_kernel).singularValues()(0);
        const int lmn = std::min(L, std::min(scen.num_users(), scen.num_rf_ports()));
        const double direct_bound = norm_yh * norm_y * norm_kernel * L * lmn;

        // Production bound must agree, and must dominate the exact gain.
        const double assembled_bound = objective_upper_bound(scen, trial.B);
        agg.note(rel_err(assembled_bound, direct_bound));
        const double p_tot = direct_mean_gain(scen, y_tilde, trial.B);
        if (direct_bound > 0.0)
            agg.note(std::max(0.0, (p_tot - direct_bound) / direct_bound));

        // Feed trace purely imaginary.
        const Cplx feed_trace =
            (scen.admittances.y_tt * (trial.B.B * trial.B.B.adjoint())).trace();
        agg.note(std::abs(feed_trace.real()) / std::max(1.0, std::abs(feed_trace)));

        // Averaged steering outer product has norm at most L.
        MatrixXcd omega_t = MatrixXcd::Zero(L, L);
        for (const auto& dir : scen.directions) {
            const VectorXcd a = direct_steering(scen.geometry, dir.theta, dir.phi);
            const VectorXcd v = a.conjugate();
            omega_t += v * v.adjoint();
        }
        omega_t /= double(scen.num_directions());
        const double omega_norm = Eigen::JacobiSVD<MatrixXcd>(omega_t).singularValues()(0);
        agg.note(std::max(0.0, (omega_norm - L) / double(L)));

        // Trace-dominates-norm step: measured, flagged when violated.
        const MatrixXcd sym_product = (y_tilde + y_tilde.adjoint()) * gain_kernel;
        const double trace = sym_product.trace().real();
        const double norm_product =
            Eigen::JacobiSVD<MatrixXcd>(sym_product).singularValues()(0);
        if (trace < 0.0 || norm_product > trace * (1.0 + 1e-9) + 1e-12) ++report.flagged;
    }
    report.max_rel_error = agg.worst;
    report.passed = agg.worst <= report.tolerance;
    return report;
}

std::vector<OracleReport> run_all_oracles(int trials, std::uint64_t seed) {
    return {
        check_lifting_identity(trials, seed),
        check_sinr_chain(trials, seed),
        check_neumann_chain(trials, seed),
        check_hadamard_trace_identity(trials, seed),
        check_boundedness_chain(trials, seed),
    };
}

std::vector<MutationOutcome> mutation_sensitivity(int trials, std::uint64_t seed) {
    const Mutation all[] = {
        Mutation::HadamardTransposeDropped, Mutation::SinrKernelSignFlip,
        Mutation::NeumannSeriesPlusSign,    Mutation::SteeringConjugateDropped,
        Mutation::PowerBudgetSignFlip,      Mutation::FeedSusceptanceMadeReal,
    };
    std::vector<MutationOutcome> outcomes;
    for (const Mutation mutation : all) {
        MutationOutcome outcome;
        outcome.mutation = mutation;
        const OracleReport reports[] = {
            check_lifting_identity(trials, seed, mutation),
            check_sinr_chain(trials, seed, mutation),
            check_neumann_chain(trials, seed, mutation),
            check_hadamard_trace_identity(trials, seed, mutation),
            check_boundedness_chain(trials, seed, mutation),
        };
        for (const auto& r : reports)
            if (!r.passed) outcome.tripped.push_back(r.identity);
        outcome.detected = !outcome.tripped.empty();
        outcomes.push_back(std::move(outcome));
    }
    return outcomes;
}

} // namespace dmabeam::oracle
