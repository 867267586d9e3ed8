// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dmabeam::qcqp {

// Small convex quadratically constrained problem over a box:
//   minimize   cost^T z
//   subject to z^T p_i z + q_i^T z + r_i <= 0   (p_i symmetric PSD or zero)
//              |z_l| <= box_l
// Solved by a log-barrier Newton path-following method; dimensions here stay
// below ~100, so dense factorizations are the right tool.

struct QuadConstraint {
    Eigen::MatrixXd p; // may be 0x0 for a purely linear constraint
    Eigen::VectorXd q;
    double r = 0.0;
    std::string label;
};

enum class Status { Optimal, NoInterior, NumericalTrouble };

struct Options {
    double tolerance = 1e-10;       // duality-gap target, relative to cost scale
    double mu_factor = 20.0;        // barrier parameter growth per outer round
    int max_newton = 60;            // Newton iterations per centering
    double interior_margin = 1e-9;  // slack required to call a point interior
};

struct Solution {
    Status status = Status::NumericalTrouble;
    Eigen::VectorXd z;
    double objective = 0.0;
    double max_violation = 0.0; // of the returned point, absolute units
};

struct Problem {
    Eigen::VectorXd cost;
    std::vector<QuadConstraint> constraints;
    Eigen::VectorXd box; // per-coordinate half-width, all > 0
};

Solution minimize(const Problem& problem, const Options& options = {});

} // namespace dmabeam::qcqp
