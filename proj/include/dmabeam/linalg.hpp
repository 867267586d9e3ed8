// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#pragma once

#include <complex>
#include <string>

#include <Eigen/Dense>

namespace dmabeam {

using Cplx = std::complex<double>;

// (A + A^H) / 2
Eigen::MatrixXcd hermitian_part(const Eigen::MatrixXcd& a);

// Largest singular value.
double spectral_norm(const Eigen::MatrixXcd& a);
double spectral_norm_real(const Eigen::MatrixXd& a);

// Smallest singular value.
double min_singular_value(const Eigen::MatrixXcd& a);

// Smallest eigenvalue of a Hermitian matrix (input assumed Hermitian; only
// the self-adjoint view is read).
double min_hermitian_eigenvalue(const Eigen::MatrixXcd& h);

// Eigen-clip of a real symmetric matrix: negative eigenvalues set to zero.
Eigen::MatrixXd psd_clip(const Eigen::MatrixXd& sym);

// Inverse guarded by the conditioning rule sigma_min > 1e-9 * ||A||.
// Throws ConditioningError naming `label` when the margin is violated.
Eigen::MatrixXcd checked_inverse(const Eigen::MatrixXcd& a, const std::string& label);

// max(1, |reference|), the normalization used for relative comparisons.
inline double rel_scale(double reference) {
    double mag = reference < 0 ? -reference : reference;
    return mag > 1.0 ? mag : 1.0;
}

} // namespace dmabeam
