// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmabeam/linalg.hpp"

namespace dmabeam {

// Transmit array: L metasurface elements fed by N RF ports, serving M users.
// Positions are in wavelength units.
struct ArrayGeometry {
    Eigen::Matrix<double, Eigen::Dynamic, 3> positions;
    int num_rf_ports = 0;
    int num_users = 0;

    int num_elements() const { return static_cast<int>(positions.rows()); }

    // Rows x cols grid in the x-y plane, spacing in wavelengths.
    static ArrayGeometry uniform_planar(int rows, int cols, double spacing,
                                        int num_rf_ports, int num_users);

    // Throws ValidationError on empty array, nonpositive port/user counts,
    // or coincident element positions.
    void validate() const;
};

// Multiport admittance description of the transmit surface and receivers.
// Subscripts: t = RF feeds (N ports), s = surface elements (L), r = receive
// side (M users).
struct AdmittanceSet {
    Eigen::MatrixXcd y_tt; // N x N, diagonal, purely imaginary
    Eigen::MatrixXcd y_s;  // L x L, diagonal, Re = r0 on the diagonal
    Eigen::MatrixXcd y_ss; // L x L, complex symmetric
    Eigen::MatrixXcd y_st; // L x N, purely imaginary entries
    Eigen::MatrixXcd y_r;  // M x M
    Eigen::MatrixXcd y_rr; // M x M
    Eigen::MatrixXcd y_rs; // M x L
};

// One steering direction, radians.
struct Direction {
    double theta = 0.0;
    double phi = 0.0;
};

// Unit-modulus steering entries a_l for one direction.
struct SteeringVector {
    Eigen::VectorXcd entries;
};

// Full problem instance: geometry, electromagnetic model, beampattern
// directions and thresholds, SINR floors, noise and power budget.
struct Scenario {
    ArrayGeometry geometry;
    AdmittanceSet admittances;
    std::vector<Direction> directions;
    Eigen::VectorXd beta_lo;                                 // D lower beampattern bounds
    double beta_max = std::numeric_limits<double>::infinity();
    Eigen::VectorXd gamma_min;                               // M SINR floors
    double noise_power = 1.0;                                // sigma^2
    double p_max = 1.0;
    double r0 = 0.0;

    int num_elements() const { return geometry.num_elements(); }
    int num_rf_ports() const { return geometry.num_rf_ports; }
    int num_users() const { return geometry.num_users; }
    int num_directions() const { return static_cast<int>(directions.size()); }

    // Structural and range checks; throws ValidationError with the failing
    // field named.
    void validate() const;
};

// Far-field phase-only steering for positions in wavelengths:
// a_l = exp(i*2*pi*(x_l sin(theta)cos(phi) + y_l sin(theta)sin(phi) + z_l cos(theta))).
SteeringVector steering_vector(const ArrayGeometry& geometry, double theta, double phi);

// Deterministic synthetic model. Off-diagonal coupling in y_ss decays as
// coupling_scale/(1+distance) and is rescaled so Re(y_ss) stays strictly
// diagonally dominant; this keeps Re(y_s + y_ss) positive definite, which
// makes y_s + y_ss invertible for every purely imaginary perturbation of the
// y_s diagonal and keeps the radiated-power form positive definite. r0 sets
// the common real part of the y_s diagonal.
AdmittanceSet build_synthetic_admittances(const ArrayGeometry& geometry, std::uint64_t seed,
                                          double coupling_scale, double r0 = 0.0);

// One validator line: violation residual, passing iff residual <= eps.
struct AdmittanceCheck {
    std::string name;
    double residual = 0.0;
    bool passed = false;
};

struct AdmittanceReport {
    std::vector<AdmittanceCheck> checks;
    bool all_passed() const;
    const AdmittanceCheck* find(const std::string& name) const;
};

// Structural checks (nothing thrown; failures are reported):
//   - y_tt diagonal with purely imaginary diagonal
//   - y_st purely imaginary
//   - y_ss symmetric
//   - y_s diagonal with a common nonnegative real part
//   - y_s + y_ss and y_r + y_rr invertibility margins
//     (residual = max(0, (1e-9*||A|| - sigma_min)/||A||))
AdmittanceReport validate_admittances(const AdmittanceSet& adm, double eps);

// Matrix-file container. Header line "L N M D" followed by the seven named
// blocks in fixed order, each entry as "re im", row-major. D is carried for
// scenario cross-checks; the matrices themselves do not depend on it.
struct AdmittanceFile {
    AdmittanceSet set;
    int num_directions = 0;
};

void save_admittances(const AdmittanceSet& set, int num_directions, const std::string& path);
AdmittanceFile load_admittance_file(const std::string& path);
AdmittanceSet load_admittances(const std::string& path);

// Copy of `scenario` with Im(diag(y_s)) = y and Re(diag(y_s)) = r0; the
// analog stage moves through susceptance space with this helper.
Scenario scenario_with_susceptance(const Scenario& scenario, const Eigen::VectorXd& y);

} // namespace dmabeam
