// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#include "dmabeam/digital.hpp"

#include <cmath>

#include "dmabeam/errors.hpp"
#include "dmabeam/rng.hpp"

namespace dmabeam {

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;

// Half the embedding of the Hermitian part; the 1/2 makes real trace inner
// products equal the complex ones.
MatrixXd half_embedding(const MatrixXcd& h) {
    return 0.5 * hermitian_embedding(hermitian_part(h));
}

} // namespace

SdpData assemble_sdp_data(const Scenario& scenario, const EffectiveChannelSet& channels) {
    const auto& y_st = scenario.admittances.y_st;
    const MatrixXcd& yt = channels.y_tilde;
    const MatrixXcd left = y_st.adjoint() * yt.adjoint();

    SdpData data;
    const int nd = scenario.num_directions();
    data.omega.reserve(nd);
    data.ad.reserve(nd);
    MatrixXcd omega_sum = MatrixXcd::Zero(scenario.num_elements(), scenario.num_elements());
    for (const auto& dir : scenario.directions) {
        SteeringVector a = steering_vector(scenario.geometry, dir.theta, dir.phi);
        MatrixXcd omega = a.entries.conjugate() * a.entries.transpose();
        omega_sum += omega;
        data.ad.push_back(left * omega * yt * y_st);
        data.omega.push_back(std::move(omega));
    }
    data.a0 = (1.0 / nd) * left * omega_sum * yt * y_st;

    const int nu = scenario.num_users();
    data.psi.reserve(nu);
    data.ym.reserve(nu);
    for (int m = 0; m < nu; ++m) {
        Eigen::RowVectorXcd row = channels.y_rs_eff.row(m);
        MatrixXcd psi = row.adjoint() * row;
        data.ym.push_back(left * psi * yt * y_st);
        data.psi.push_back(std::move(psi));
    }

    data.ap = 0.5 * (scenario.admittances.y_tt - y_st.transpose() * yt * y_st);
    return data;
}

Eigen::MatrixXd hermitian_embedding(const Eigen::MatrixXcd& h) {
    if (h.rows() != h.cols()) throw ValidationError("hermitian_embedding: matrix must be square");
    double dev = (h - h.adjoint()).cwiseAbs().maxCoeff();
    double scale = rel_scale(h.cwiseAbs().maxCoeff());
    if (dev > 1e-10 * scale)
        throw ValidationError("hermitian_embedding: input is not Hermitian (deviation " +
                              std::to_string(dev) + ")");
    const Eigen::Index n = h.rows();
    MatrixXd e(2 * n, 2 * n);
    e.topLeftCorner(n, n) = h.real();
    e.topRightCorner(n, n) = -h.imag();
    e.bottomLeftCorner(n, n) = h.imag();
    e.bottomRightCorner(n, n) = h.real();
    // Exact symmetry for downstream solvers; the Hermitian check above keeps
    // this a rounding-level correction.
    return 0.5 * (e + e.transpose());
}

DigitalSolution solve_digital_sdp(const SdpData& data, const Scenario& scenario,
                                  const sdp::SdpBackend& backend) {
    const int np = scenario.num_rf_ports();
    const int nu = scenario.num_users();
    const int nd = scenario.num_directions();
    const int nb = nu + np;

    sdp::Problem problem;
    problem.block_dims.assign(nb, 2 * np);

    auto broadcast = [&](const MatrixXd& coeff) {
        sdp::BlockMatrix bm;
        bm.blocks.assign(nb, coeff);
        return bm;
    };

    problem.objective = broadcast(half_embedding(data.a0));

    for (int d = 0; d < nd; ++d) {
        MatrixXd coeff = half_embedding(data.ad[d]);
        if (std::isfinite(scenario.beta_max)) {
            sdp::Constraint hi;
            hi.coeff = broadcast(coeff);
            hi.sense = sdp::Sense::LessEqual;
            hi.rhs = scenario.beta_max;
            hi.label = "beampattern-high[" + std::to_string(d) + "]";
            hi.family = sdp::Family::BeampatternHigh;
            problem.constraints.push_back(std::move(hi));
        }
        sdp::Constraint lo;
        lo.coeff = broadcast(coeff);
        lo.sense = sdp::Sense::GreaterEqual;
        lo.rhs = scenario.beta_lo(d);
        lo.label = "beampattern-low[" + std::to_string(d) + "]";
        lo.family = sdp::Family::BeampatternLow;
        problem.constraints.push_back(std::move(lo));
    }

    for (int m = 0; m < nu; ++m) {
        MatrixXd coeff = half_embedding(data.ym[m]);
        sdp::Constraint con;
        con.coeff = sdp::BlockMatrix::zeros(problem.block_dims);
        for (int i = 0; i < nb; ++i)
            con.coeff.blocks[i] = i == m ? (-1.0 / scenario.gamma_min(m)) * coeff : coeff;
        con.sense = sdp::Sense::LessEqual;
        con.rhs = -scenario.noise_power;
        con.label = "sinr[" + std::to_string(m) + "]";
        con.family = sdp::Family::Sinr;
        problem.constraints.push_back(std::move(con));
    }

    {
        sdp::Constraint con;
        con.coeff = broadcast(half_embedding(data.ap));
        con.sense = sdp::Sense::LessEqual;
        con.rhs = scenario.p_max;
        con.label = "power";
        con.family = sdp::Family::Power;
        problem.constraints.push_back(std::move(con));
    }

    sdp::Solution sol = backend.solve(problem);

    DigitalSolution out;
    out.status = sol.status;
    out.most_violated_label = sol.most_violated_label;
    out.most_violated_family = sol.most_violated_family;
    if (sol.status != sdp::Status::Optimal) return out;

    // Real optimum -> complex lifted blocks. Averaging with J X J^T projects
    // onto the image of the embedding without changing objective or
    // constraint values, then the complex parts read off blockwise.
    MatrixXd j = MatrixXd::Zero(2 * np, 2 * np);
    j.topRightCorner(np, np) = -MatrixXd::Identity(np, np);
    j.bottomLeftCorner(np, np) = MatrixXd::Identity(np, np);
    out.lifted.reserve(nb);
    for (int i = 0; i < nb; ++i) {
        MatrixXd xs = 0.5 * (sol.x[i] + j * sol.x[i] * j.transpose());
        MatrixXd p = 0.5 * (xs.topLeftCorner(np, np) + xs.bottomRightCorner(np, np));
        MatrixXd q = 0.5 * (xs.bottomLeftCorner(np, np) - xs.topRightCorner(np, np));
        MatrixXcd lifted = p.cast<Cplx>() + Cplx(0, 1) * q.cast<Cplx>();
        out.lifted.push_back(hermitian_part(lifted));
    }

    double obj = 0.0;
    for (const auto& lifted : out.lifted) obj += (data.a0 * lifted).trace().real();
    out.objective_lifted = obj;
    return out;
}

void extract_rank_one(DigitalSolution& solution, const SdpData& data, const Scenario& scenario,
                      int num_samples, std::uint64_t seed, double rank_one_threshold) {
    if (solution.status != sdp::Status::Optimal)
        throw ValidationError("extract_rank_one: requires an optimal lifted solution");
    const int np = scenario.num_rf_ports();
    const int nb = scenario.num_users() + np;
    if (static_cast<int>(solution.lifted.size()) != nb)
        throw ValidationError("extract_rank_one: lifted block count mismatch");

    EffectiveChannelSet channels = effective_channels(scenario);

    // Principal eigenpairs; kept both as the direct recovery and as the
    // randomization fallback.
    Beamformer principal = Beamformer::zero(np, scenario.num_users());
    std::vector<Eigen::SelfAdjointEigenSolver<MatrixXcd>> eigs(nb);
    solution.rank_gap.assign(nb, 0.0);
    bool all_rank_one = true;
    for (int i = 0; i < nb; ++i) {
        eigs[i].compute(solution.lifted[i]);
        const auto& ev = eigs[i].eigenvalues();
        double lam1 = ev(np - 1);
        double lam2 = np > 1 ? std::max(0.0, ev(np - 2)) : 0.0;
        if (lam1 > 0.0) {
            solution.rank_gap[i] = np > 1 ? lam2 / lam1 : 0.0;
            VectorXcd v = eigs[i].eigenvectors().col(np - 1);
            Eigen::Index imax;
            v.cwiseAbs().maxCoeff(&imax);
            Cplx ph = v(imax) / std::abs(v(imax));
            principal.B.col(i) = std::sqrt(lam1) * (v / ph);
        }
        if (solution.rank_gap[i] > rank_one_threshold) all_rank_one = false;
    }

    auto evaluate = [&](const Beamformer& cand) {
        ConstraintReport rep = p1_constraint_report(scenario, channels, cand);
        double ptot = total_beampattern(scenario, channels, cand);
        return std::pair<ConstraintReport, double>(std::move(rep), ptot);
    };

    auto [principal_report, principal_ptot] = evaluate(principal);

    if (all_rank_one) {
        solution.B = principal;
        solution.objective_recovered = principal_ptot;
        solution.recovered_feasible = principal_report.within(1e-6);
        solution.constraint_report = principal_report.describe();
        solution.randomization_feasible_fraction = solution.recovered_feasible ? 1.0 : 0.0;
        return;
    }

    // Gaussian randomization: candidates drawn from the lifted covariances,
    // screened by the exact metrics, best feasible total beampattern wins.
    std::vector<MatrixXcd> sqrt_cov(nb);
    for (int i = 0; i < nb; ++i) {
        Eigen::VectorXd ev = eigs[i].eigenvalues().cwiseMax(0.0);
        sqrt_cov[i] = eigs[i].eigenvectors() * ev.cwiseSqrt().asDiagonal() *
                      eigs[i].eigenvectors().adjoint();
    }

    Rng root(seed);
    bool have_best = principal_report.within(1e-6);
    Beamformer best = principal;
    double best_ptot = have_best ? principal_ptot : 0.0;
    int feasible_count = 0;
    for (int k = 0; k < num_samples; ++k) {
        Rng stream = root.stream(static_cast<std::uint64_t>(k));
        Beamformer cand = Beamformer::zero(np, scenario.num_users());
        for (int i = 0; i < nb; ++i) {
            VectorXcd xi(np);
            for (int r = 0; r < np; ++r) xi(r) = stream.complex_normal();
            cand.B.col(i) = sqrt_cov[i] * xi;
        }
        auto [rep, ptot] = evaluate(cand);
        if (rep.within(1e-6)) {
            ++feasible_count;
            if (!have_best || ptot > best_ptot) {
                have_best = true;
                best = cand;
                best_ptot = ptot;
            }
        }
    }
    solution.randomization_feasible_fraction =
        num_samples > 0 ? static_cast<double>(feasible_count) / num_samples : 0.0;

    if (have_best) {
        solution.B = best;
        solution.objective_recovered = best_ptot;
        solution.recovered_feasible = true;
        solution.constraint_report = "all constraints satisfied";
    } else {
        solution.B = principal;
        solution.objective_recovered = principal_ptot;
        solution.recovered_feasible = false;
        solution.constraint_report = principal_report.describe();
    }
}

} // namespace dmabeam
