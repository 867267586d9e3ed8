// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#include "dmabeam/linalg.hpp"

#include <Eigen/SVD>

#include "dmabeam/errors.hpp"

namespace dmabeam {

Eigen::MatrixXcd hermitian_part(const Eigen::MatrixXcd& a) {
    return 0.5 * (a + a.adjoint());
}

double spectral_norm(const Eigen::MatrixXcd& a) {
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
    return svd.singularValues()(0);
}

double spectral_norm_real(const Eigen::MatrixXd& a) {
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    return svd.singularValues()(0);
}

double min_singular_value(const Eigen::MatrixXcd& a) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
    return svd.singularValues()(svd.singularValues().size() - 1);
}

double min_hermitian_eigenvalue(const Eigen::MatrixXcd& h) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

Eigen::MatrixXd psd_clip(const Eigen::MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXcd checked_inverse(const Eigen::MatrixXcd& a, const std::string& label) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
    const auto& sv = svd.singularValues();
    double smax = sv(0);
    double smin = sv(sv.size() - 1);
    if (!(smin > 1e-9 * smax) || smax == 0.0) {
        throw ConditioningError(label + " is singular or ill-conditioned: sigma_min = " +
                                std::to_string(smin) + ", sigma_max = " + std::to_string(smax));
    }
    return a.partialPivLu().inverse();
}

} // namespace dmabeam
