// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#include "dmabeam/qcqp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dmabeam::qcqp {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

bool has_quadratic(const QuadConstraint& c) { return c.p.size() > 0; }

double constraint_value(const QuadConstraint& c, const VectorXd& z) {
    double v = c.q.dot(z) + c.r;
    if (has_quadratic(c)) v += z.dot(c.p * z);
    return v;
}

VectorXd constraint_gradient(const QuadConstraint& c, const VectorXd& z) {
    VectorXd g = c.q;
    if (has_quadratic(c)) g += 2.0 * (c.p * z);
    return g;
}

struct BarrierEval {
    double value = 0.0;
    VectorXd gradient;
    MatrixXd hessian;
    bool interior = false;
};

// Barrier for the constraint set plus the box, evaluated at z. When
// `with_curvature` is false only value/interior are filled in (line search).
BarrierEval eval_barrier(const Problem& pb, const VectorXd& z, bool with_curvature) {
    const auto n = z.size();
    BarrierEval out;
    out.interior = true;
    if (with_curvature) {
        out.gradient = VectorXd::Zero(n);
        out.hessian = MatrixXd::Zero(n, n);
    }
    for (const auto& c : pb.constraints) {
        const double slack = -constraint_value(c, z);
        if (!(slack > 0.0)) {
            out.interior = false;
            return out;
        }
        out.value -= std::log(slack);
        if (with_curvature) {
            VectorXd g = constraint_gradient(c, z);
            out.gradient += g / slack;
            out.hessian += g * g.transpose() / (slack * slack);
            if (has_quadratic(c)) out.hessian += (2.0 / slack) * c.p;
        }
    }
    for (Eigen::Index l = 0; l < n; ++l) {
        const double lo = pb.box(l) + z(l);
        const double hi = pb.box(l) - z(l);
        if (!(lo > 0.0) || !(hi > 0.0)) {
            out.interior = false;
            return out;
        }
        out.value -= std::log(lo) + std::log(hi);
        if (with_curvature) {
            out.gradient(l) += 1.0 / hi - 1.0 / lo;
            out.hessian(l, l) += 1.0 / (hi * hi) + 1.0 / (lo * lo);
        }
    }
    return out;
}

// Minimize t * cost^T z + barrier(z) from a strictly interior start. Returns
// false when Newton stalls without reaching the decrement target.
bool center(const Problem& pb, double t, VectorXd& z, const Options& opt) {
    for (int it = 0; it < opt.max_newton; ++it) {
        BarrierEval be = eval_barrier(pb, z, true);
        if (!be.interior) return false;
        VectorXd grad = t * pb.cost + be.gradient;
        MatrixXd hess = be.hessian;
        // Tiny Tikhonov term so flat directions (pure LP rows) stay solvable.
        const double reg = 1e-12 * std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
        hess.diagonal().array() += reg;
        Eigen::LDLT<MatrixXd> ldlt(hess);
        if (ldlt.info() != Eigen::Success) return false;
        VectorXd dz = -ldlt.solve(grad);
        const double decrement = -grad.dot(dz);
        if (!(decrement > 0.0)) {
            // Ascent or numerically zero direction: treat as centered.
            return decrement > -1e-9;
        }
        if (0.5 * decrement < 1e-12 * std::max(1.0, std::abs(t))) return true;

        const double phi0 = t * pb.cost.dot(z) + be.value;
        double alpha = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls) {
            VectorXd trial = z + alpha * dz;
            BarrierEval te = eval_barrier(pb, trial, false);
            if (te.interior) {
                const double phi = t * pb.cost.dot(trial) + te.value;
                if (phi <= phi0 - 1e-4 * alpha * decrement) {
                    z = trial;
                    moved = true;
                    break;
                }
            }
            alpha *= 0.6;
        }
        if (!moved) return true; // step vanished; accept the current center
    }
    return true;
}

double worst_violation(const Problem& pb, const VectorXd& z) {
    double worst = 0.0;
    for (const auto& c : pb.constraints) worst = std::max(worst, constraint_value(c, z));
    for (Eigen::Index l = 0; l < z.size(); ++l)
        worst = std::max(worst, std::abs(z(l)) - pb.box(l));
    return worst;
}

Solution path_follow(const Problem& pb, VectorXd z, const Options& opt) {
    const double m = static_cast<double>(pb.constraints.size() + 2 * z.size());
    const double cost_scale = std::max(1.0, pb.cost.cwiseAbs().maxCoeff() * pb.box.maxCoeff());
    const double gap_target = opt.tolerance * cost_scale;
    double t = std::max(1.0, m / cost_scale);
    Solution sol;
    for (int round = 0; round < 64; ++round) {
        if (!center(pb, t, z, opt)) {
            sol.status = Status::NumericalTrouble;
            sol.z = z;
            sol.objective = pb.cost.dot(z);
            sol.max_violation = worst_violation(pb, z);
            return sol;
        }
        if (m / t <= gap_target) break;
        t *= opt.mu_factor;
    }
    sol.status = Status::Optimal;
    sol.z = z;
    sol.objective = pb.cost.dot(z);
    sol.max_violation = worst_violation(pb, z);
    return sol;
}

void validate(const Problem& pb) {
    const auto n = pb.cost.size();
    if (n <= 0) throw std::invalid_argument("qcqp: empty cost vector");
    if (pb.box.size() != n) throw std::invalid_argument("qcqp: box size mismatch");
    if ((pb.box.array() <= 0.0).any()) throw std::invalid_argument("qcqp: box widths must be positive");
    for (const auto& c : pb.constraints) {
        if (c.q.size() != n) throw std::invalid_argument("qcqp: constraint gradient size mismatch");
        if (has_quadratic(c) && (c.p.rows() != n || c.p.cols() != n))
            throw std::invalid_argument("qcqp: constraint matrix size mismatch");
    }
}

} // namespace

Solution minimize(const Problem& problem, const Options& options) {
    validate(problem);
    const auto n = problem.cost.size();

    // The origin is the natural start for trust-region steps; use it directly
    // when it sits strictly inside the constraint set.
    VectorXd z0 = VectorXd::Zero(n);
    double worst0 = -std::numeric_limits<double>::infinity();
    for (const auto& c : problem.constraints)
        worst0 = std::max(worst0, constraint_value(c, z0));
    const double margin = options.interior_margin;
    if (problem.constraints.empty() || worst0 < -margin)
        return path_follow(problem, z0, options);

    // Phase one: minimize an extra slack s with constraints g_i(z) - s <= 0.
    // The slack gets a generous box of its own so the barrier stays proper.
    Problem ext;
    ext.cost = VectorXd::Zero(n + 1);
    ext.cost(n) = 1.0;
    ext.box = VectorXd::Zero(n + 1);
    ext.box.head(n) = problem.box;
    ext.box(n) = std::abs(worst0) + 10.0;
    for (const auto& c : problem.constraints) {
        QuadConstraint cc;
        if (has_quadratic(c)) {
            cc.p = MatrixXd::Zero(n + 1, n + 1);
            cc.p.topLeftCorner(n, n) = c.p;
        }
        cc.q = VectorXd::Zero(n + 1);
        cc.q.head(n) = c.q;
        cc.q(n) = -1.0;
        cc.r = c.r;
        cc.label = c.label;
        ext.constraints.push_back(std::move(cc));
    }
    VectorXd zs0 = VectorXd::Zero(n + 1);
    zs0(n) = worst0 + 1.0; // strictly interior by construction
    Options phase1 = options;
    phase1.tolerance = std::min(options.tolerance, 0.1 * margin);
    Solution feas = path_follow(ext, zs0, phase1);
    const double s_star = feas.z(n);
    VectorXd z_interior = feas.z.head(n);
    bool strictly_inside = feas.status == Status::Optimal && s_star < -margin;
    if (strictly_inside) {
        for (const auto& c : problem.constraints)
            if (!(constraint_value(c, z_interior) < 0.0)) strictly_inside = false;
    }
    if (!strictly_inside) {
        Solution sol;
        sol.status = Status::NoInterior;
        sol.z = z_interior;
        sol.objective = problem.cost.dot(z_interior);
        sol.max_violation = worst_violation(problem, z_interior);
        return sol;
    }
    return path_follow(problem, z_interior, options);
}

} // namespace dmabeam::qcqp
