// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dmabeam::sdp {

// Block-diagonal real symmetric SDP in inequality form:
//   maximize   <objective, X>
//   subject to <coeff_k, X> (<= | >= | ==) rhs_k,   X >= 0 blockwise
// Inner products are trace inner products summed over blocks.

enum class Sense { LessEqual, GreaterEqual, Equal };

enum class Status { Optimal, Infeasible, NumericalTrouble };

// Constraint families, used to name the most violated constraint when a
// problem is infeasible.
enum class Family { BeampatternLow, BeampatternHigh, Sinr, Power, Other };

struct BlockMatrix {
    std::vector<Eigen::MatrixXd> blocks;

    static BlockMatrix zeros(const std::vector<int>& dims);
    double inner(const BlockMatrix& other) const;
    double frobenius_norm() const;
};

struct Constraint {
    BlockMatrix coeff;
    Sense sense = Sense::LessEqual;
    double rhs = 0.0;
    std::string label;
    Family family = Family::Other;
};

struct Problem {
    std::vector<int> block_dims;
    BlockMatrix objective;
    std::vector<Constraint> constraints;
};

struct Options {
    double tolerance = 1e-9;        // target for gap and feasibility residuals
    double accept_tolerance = 1e-7; // best residual still reported Optimal
    double feasibility_gap = 1e-7;  // phase-1 threshold separating infeasible
    int max_iterations = 100;
    double step_fraction = 0.98;
};

struct Solution {
    Status status = Status::NumericalTrouble;
    std::vector<Eigen::MatrixXd> x; // primal blocks, symmetric PSD
    double objective = 0.0;
    double max_residual = 0.0;      // worst normalized constraint violation
    int iterations = 0;

    // Populated when status == Infeasible.
    double infeasibility_gap = 0.0;
    std::string most_violated_label;
    Family most_violated_family = Family::Other;
};

// Backend interface per the solver contract: coefficient matrices with sense
// and right-hand side in, status/blocks/objective/residual out.
class SdpBackend {
public:
    virtual ~SdpBackend() = default;
    virtual Solution solve(const Problem& problem) const = 0;
};

// Primal-dual interior-point method (HKM direction, Mehrotra
// predictor-corrector) with a phase-1 feasibility classification pass.
class InteriorPointBackend final : public SdpBackend {
public:
    InteriorPointBackend() = default;
    explicit InteriorPointBackend(const Options& options) : options_(options) {}
    Solution solve(const Problem& problem) const override;

private:
    Options options_;
};

const char* to_string(Status status);
const char* to_string(Family family);

} // namespace dmabeam::sdp
