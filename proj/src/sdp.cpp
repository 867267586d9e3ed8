// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#include "dmabeam/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dmabeam/errors.hpp"

namespace dmabeam::sdp {

BlockMatrix BlockMatrix::zeros(const std::vector<int>& dims) {
    BlockMatrix m;
    m.blocks.reserve(dims.size());
    for (int d : dims) m.blocks.push_back(Eigen::MatrixXd::Zero(d, d));
    return m;
}

double BlockMatrix::inner(const BlockMatrix& other) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < blocks.size(); ++i)
        sum += (blocks[i].array() * other.blocks[i].array()).sum();
    return sum;
}

double BlockMatrix::frobenius_norm() const {
    double sum = 0.0;
    for (const auto& b : blocks) sum += b.squaredNorm();
    return std::sqrt(sum);
}

const char* to_string(Status status) {
    switch (status) {
        case Status::Optimal: return "optimal";
        case Status::Infeasible: return "infeasible";
        case Status::NumericalTrouble: return "numerical-trouble";
    }
    return "unknown";
}

const char* to_string(Family family) {
    switch (family) {
        case Family::BeampatternLow: return "beampattern-low";
        case Family::BeampatternHigh: return "beampattern-high";
        case Family::Sinr: return "sinr";
        case Family::Power: return "power";
        case Family::Other: return "other";
    }
    return "unknown";
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

using Blocks = std::vector<MatrixXd>;

// Equality-form data: min <C,X> s.t. <A_k,X> = b_k, X >= 0 blockwise.
// Rows are normalized; slack blocks are appended 1x1 blocks.
struct StdProblem {
    std::vector<int> dims;
    std::vector<Blocks> a;
    VectorXd b;
    Blocks c;
    int num_var_blocks = 0;              // leading blocks that map back to the caller
    std::vector<Sense> row_sense;        // original sense per row
    std::vector<double> row_scale;       // divisor applied to each row
};

Blocks zero_blocks(const std::vector<int>& dims) {
    Blocks b;
    b.reserve(dims.size());
    for (int d : dims) b.push_back(MatrixXd::Zero(d, d));
    return b;
}

double inner(const Blocks& x, const Blocks& y) {
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) sum += (x[i].array() * y[i].array()).sum();
    return sum;
}

double frob(const Blocks& x) {
    double sum = 0.0;
    for (const auto& b : x) sum += b.squaredNorm();
    return std::sqrt(sum);
}

StdProblem standardize(const Problem& problem) {
    const int p = static_cast<int>(problem.constraints.size());
    StdProblem sp;
    sp.num_var_blocks = static_cast<int>(problem.block_dims.size());
    sp.dims = problem.block_dims;
    int slack_offset = sp.num_var_blocks;
    std::vector<int> slack_block(p, -1);
    for (int k = 0; k < p; ++k) {
        if (problem.constraints[k].sense != Sense::Equal) {
            slack_block[k] = slack_offset++;
            sp.dims.push_back(1);
        }
    }

    sp.b.resize(p);
    sp.row_sense.resize(p);
    sp.row_scale.resize(p);
    for (int k = 0; k < p; ++k) {
        const Constraint& con = problem.constraints[k];
        Blocks row = zero_blocks(sp.dims);
        for (int i = 0; i < sp.num_var_blocks; ++i) row[i] = con.coeff.blocks[i];
        double scale = 0.0;
        for (int i = 0; i < sp.num_var_blocks; ++i) scale += row[i].squaredNorm();
        scale = std::max(1e-8, std::sqrt(scale));
        for (int i = 0; i < sp.num_var_blocks; ++i) row[i] /= scale;
        if (slack_block[k] >= 0)
            row[slack_block[k]](0, 0) = con.sense == Sense::LessEqual ? 1.0 : -1.0;
        sp.a.push_back(std::move(row));
        sp.b(k) = con.rhs / scale;
        sp.row_sense[k] = con.sense;
        sp.row_scale[k] = scale;
    }

    sp.c = zero_blocks(sp.dims);
    double obj_scale = std::max(1.0, problem.objective.frobenius_norm());
    // Internal form minimizes, the interface maximizes.
    for (int i = 0; i < sp.num_var_blocks; ++i)
        sp.c[i] = -problem.objective.blocks[i] / obj_scale;
    return sp;
}

// Relaxation used for feasibility classification: one shared slack t >= 0
// absorbs every row's violation in its infeasible direction; minimize t.
StdProblem make_phase1(const StdProblem& base) {
    StdProblem ph = base;
    ph.dims.push_back(1);
    int t_block = static_cast<int>(ph.dims.size()) - 1;
    for (std::size_t k = 0; k < ph.a.size(); ++k) {
        ph.a[k].push_back(MatrixXd::Zero(1, 1));
        if (ph.row_sense[k] == Sense::Equal)
            throw ValidationError("sdp phase-1: equality rows are not supported");
        ph.a[k][t_block](0, 0) = ph.row_sense[k] == Sense::LessEqual ? -1.0 : 1.0;
    }
    ph.c = zero_blocks(ph.dims);
    ph.c[t_block](0, 0) = 1.0;
    return ph;
}

struct InnerResult {
    bool usable = false;     // best residual below the acceptance threshold
    bool converged = false;  // best residual below the target tolerance
    double best_phi = std::numeric_limits<double>::infinity();
    Blocks x;
    VectorXd y;
    double primal_objective = 0.0;
    int iterations = 0;
};

// Largest alpha with S + alpha * dS >= 0, via the eigenvalues of
// S^-1/2 dS S^-1/2. Returns a large sentinel when dS points inward.
double max_step(const MatrixXd& s, const MatrixXd& ds) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(s);
    VectorXd ev = es.eigenvalues().cwiseMax(1e-300);
    MatrixXd isqrt =
        es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es2(isqrt * ds * isqrt, Eigen::EigenvaluesOnly);
    double lam = es2.eigenvalues()(0);
    if (lam >= -1e-13) return 1e30;
    return -1.0 / lam;
}

double max_step_all(const Blocks& s, const Blocks& ds) {
    double alpha = 1e30;
    for (std::size_t i = 0; i < s.size(); ++i) alpha = std::min(alpha, max_step(s[i], ds[i]));
    return alpha;
}

InnerResult ipm_minimize(const StdProblem& sp, const Options& opts) {
    const int p = static_cast<int>(sp.b.size());
    const int nblocks = static_cast<int>(sp.dims.size());
    int n_total = 0;
    for (int d : sp.dims) n_total += d;

    double b_inf = p > 0 ? sp.b.cwiseAbs().maxCoeff() : 0.0;
    double c_frob = frob(sp.c);

    double eta = std::max(10.0, 2.0 * std::max(b_inf, c_frob));
    Blocks x = zero_blocks(sp.dims), z = zero_blocks(sp.dims);
    for (int i = 0; i < nblocks; ++i) {
        x[i] = eta * MatrixXd::Identity(sp.dims[i], sp.dims[i]);
        z[i] = eta * MatrixXd::Identity(sp.dims[i], sp.dims[i]);
    }
    VectorXd y = VectorXd::Zero(p);

    InnerResult best;
    best.y = y;
    best.x = x;

    Blocks rd = zero_blocks(sp.dims);
    std::vector<Blocks> w(p);

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        VectorXd rp(p);
        for (int k = 0; k < p; ++k) rp(k) = sp.b(k) - inner(sp.a[k], x);
        for (int i = 0; i < nblocks; ++i) {
            rd[i] = sp.c[i] - z[i];
            for (int k = 0; k < p; ++k) rd[i] -= y(k) * sp.a[k][i];
        }
        double mu = inner(x, z) / n_total;
        double pobj = inner(sp.c, x);
        double dobj = sp.b.dot(y);
        double pinf = (p > 0 ? rp.cwiseAbs().maxCoeff() : 0.0) / (1.0 + b_inf);
        double dinf = frob(rd) / (1.0 + c_frob);
        double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
        double phi = std::max({pinf, dinf, gap});

        if (phi < best.best_phi) {
            best.best_phi = phi;
            best.x = x;
            best.y = y;
            best.primal_objective = pobj;
            best.iterations = iter;
        }
        if (phi <= opts.tolerance) break;

        // Z^-1 per block; Z stays PD by line-search construction, so a failed
        // factorization means the iterate has degenerated.
        Blocks zinv(nblocks);
        bool z_ok = true;
        for (int i = 0; i < nblocks; ++i) {
            Eigen::LLT<MatrixXd> llt(z[i]);
            if (llt.info() != Eigen::Success) {
                z_ok = false;
                break;
            }
            zinv[i] = llt.solve(MatrixXd::Identity(sp.dims[i], sp.dims[i]));
        }
        if (!z_ok) break;

        // Schur complement G_kl = tr(A_k X A_l Z^-1), symmetric positive
        // definite for independent rows.
        for (int l = 0; l < p; ++l) {
            w[l].resize(nblocks);
            for (int i = 0; i < nblocks; ++i) w[l][i] = x[i] * sp.a[l][i] * zinv[i];
        }
        MatrixXd g(p, p);
        for (int k = 0; k < p; ++k)
            for (int l = 0; l < p; ++l) g(k, l) = inner(sp.a[k], w[l]);
        g = 0.5 * (g + g.transpose());
        g.diagonal().array() += 1e-13 * (1.0 + g.diagonal().cwiseAbs().maxCoeff());
        Eigen::LDLT<MatrixXd> gf(g);
        if (gf.info() != Eigen::Success) break;

        Blocks xrz(nblocks);
        for (int i = 0; i < nblocks; ++i) xrz[i] = x[i] * rd[i] * zinv[i];
        VectorXd a_xrz(p), a_zinv(p);
        for (int k = 0; k < p; ++k) {
            a_xrz(k) = inner(sp.a[k], xrz);
            a_zinv(k) = inner(sp.a[k], zinv);
        }

        // Predictor (affine scaling direction).
        VectorXd dy_a = gf.solve(sp.b + a_xrz);
        Blocks dz_a(nblocks), dx_a(nblocks);
        for (int i = 0; i < nblocks; ++i) {
            dz_a[i] = rd[i];
            for (int k = 0; k < p; ++k) dz_a[i] -= dy_a(k) * sp.a[k][i];
            MatrixXd t = -x[i] - x[i] * dz_a[i] * zinv[i];
            dx_a[i] = 0.5 * (t + t.transpose());
        }
        double ap_a = std::min(1.0, opts.step_fraction * max_step_all(x, dx_a));
        double ad_a = std::min(1.0, opts.step_fraction * max_step_all(z, dz_a));
        double mu_aff = 0.0;
        for (int i = 0; i < nblocks; ++i)
            mu_aff += ((x[i] + ap_a * dx_a[i]).array() * (z[i] + ad_a * dz_a[i]).array()).sum();
        mu_aff /= n_total;
        double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 1e-8, 1.0);

        // Corrector with the Mehrotra second-order term.
        VectorXd rhs = sp.b - sigma * mu * a_zinv + a_xrz;
        Blocks corr(nblocks);
        for (int i = 0; i < nblocks; ++i) corr[i] = dx_a[i] * dz_a[i] * zinv[i];
        for (int k = 0; k < p; ++k) rhs(k) += inner(sp.a[k], corr);
        VectorXd dy = gf.solve(rhs);
        Blocks dz(nblocks), dx(nblocks);
        for (int i = 0; i < nblocks; ++i) {
            dz[i] = rd[i];
            for (int k = 0; k < p; ++k) dz[i] -= dy(k) * sp.a[k][i];
            MatrixXd t = sigma * mu * zinv[i] - x[i] - x[i] * dz[i] * zinv[i] - corr[i];
            dx[i] = 0.5 * (t + t.transpose());
        }
        double ap = std::min(1.0, opts.step_fraction * max_step_all(x, dx));
        double ad = std::min(1.0, opts.step_fraction * max_step_all(z, dz));
        if (ap < 1e-10 && ad < 1e-10) break;

        for (int i = 0; i < nblocks; ++i) {
            x[i] += ap * dx[i];
            z[i] += ad * dz[i];
        }
        y += ad * dy;
    }

    best.converged = best.best_phi <= opts.tolerance;
    best.usable = best.best_phi <= opts.accept_tolerance;
    return best;
}

// Violation of original row k at blocks x (normalized row units).
double row_violation(const StdProblem& sp, const Blocks& x, int k) {
    double lhs = 0.0;
    for (int i = 0; i < sp.num_var_blocks; ++i)
        lhs += (sp.a[k][i].array() * x[i].array()).sum();
    double diff = lhs - sp.b(k);
    switch (sp.row_sense[k]) {
        case Sense::LessEqual: return std::max(0.0, diff);
        case Sense::GreaterEqual: return std::max(0.0, -diff);
        case Sense::Equal: return std::abs(diff);
    }
    return 0.0;
}

} // namespace

Solution InteriorPointBackend::solve(const Problem& problem) const {
    for (const auto& con : problem.constraints) {
        if (con.coeff.blocks.size() != problem.block_dims.size())
            throw ValidationError("sdp: constraint block count mismatch");
    }
    if (problem.objective.blocks.size() != problem.block_dims.size())
        throw ValidationError("sdp: objective block count mismatch");

    StdProblem sp = standardize(problem);
    Solution sol;

    // Phase 1: minimize the worst violation; classifies feasibility and
    // names the dominant violated family when the answer is "infeasible".
    StdProblem ph1 = make_phase1(sp);
    InnerResult r1 = ipm_minimize(ph1, options_);
    if (!r1.usable) {
        sol.status = Status::NumericalTrouble;
        return sol;
    }
    double t_star = r1.x.back()(0, 0);
    if (t_star > options_.feasibility_gap) {
        sol.status = Status::Infeasible;
        sol.infeasibility_gap = t_star;
        double worst = -1.0;
        for (std::size_t k = 0; k < sp.a.size(); ++k) {
            double v = row_violation(sp, r1.x, static_cast<int>(k));
            if (v > worst) {
                worst = v;
                sol.most_violated_label = problem.constraints[k].label;
                sol.most_violated_family = problem.constraints[k].family;
            }
        }
        sol.max_residual = worst;
        sol.iterations = r1.iterations;
        return sol;
    }

    InnerResult r2 = ipm_minimize(sp, options_);
    if (!r2.usable) {
        sol.status = Status::NumericalTrouble;
        return sol;
    }

    sol.status = Status::Optimal;
    sol.x.assign(r2.x.begin(), r2.x.begin() + sp.num_var_blocks);
    for (auto& b : sol.x) b = 0.5 * (b + b.transpose()).eval();
    BlockMatrix xbm;
    xbm.blocks = sol.x;
    sol.objective = problem.objective.inner(xbm);
    double worst = 0.0;
    for (std::size_t k = 0; k < sp.a.size(); ++k)
        worst = std::max(worst, row_violation(sp, r2.x, static_cast<int>(k)));
    sol.max_residual = worst;
    sol.iterations = r2.iterations;
    return sol;
}

} // namespace dmabeam::sdp
