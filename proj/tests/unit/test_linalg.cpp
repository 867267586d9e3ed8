// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#include <complex>

#include "doctest.h"

#include "dmabeam/errors.hpp"
#include "dmabeam/linalg.hpp"
#include "dmabeam/rng.hpp"

using namespace dmabeam;

TEST_CASE("spectral norm matches known matrices") {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(4, 4) * Cplx(0.0, 3.0);
    CHECK(spectral_norm(m) == doctest::Approx(3.0).epsilon(1e-12));

    Eigen::MatrixXd d(2, 2);
    d << 3, 0, 0, -7;
    CHECK(spectral_norm_real(d) == doctest::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("hermitian part is hermitian and idempotent on hermitian input") {
    Rng rng(21);
    const Eigen::MatrixXcd a = rng.complex_normal_matrix(5, 5);
    const Eigen::MatrixXcd h = hermitian_part(a);
    CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((hermitian_part(h) - h).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("psd clip removes negative eigenvalues only") {
    Eigen::MatrixXd m(2, 2);
    m << 1, 0, 0, -2;
    const Eigen::MatrixXd c = psd_clip(m);
    CHECK(c(0, 0) == doctest::Approx(1.0));
    CHECK(c(1, 1) == doctest::Approx(0.0));
    CHECK(min_hermitian_eigenvalue(c.cast<Cplx>()) >= -1e-12);

    // A PSD matrix passes through unchanged.
    Eigen::MatrixXd p(2, 2);
    p << 2, 1, 1, 2;
    CHECK((psd_clip(p) - p).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("psd clip dominates the original matrix") {
    // clip(A) - A is PSD, the property the surrogate relies on.
    Rng rng(22);
    for (int t = 0; t < 20; ++t) {
        Eigen::MatrixXd a = rng.complex_normal_matrix(6, 6).real();
        a = ((a + a.transpose()) / 2.0).eval();
        const Eigen::MatrixXd diff = psd_clip(a) - a;
        CHECK(min_hermitian_eigenvalue(diff.cast<Cplx>()) >= -1e-10);
    }
}

TEST_CASE("checked inverse round-trips and flags singularity") {
    Rng rng(23);
    const Eigen::MatrixXcd a =
        rng.complex_normal_matrix(6, 6) + 3.0 * Eigen::MatrixXcd::Identity(6, 6);
    const Eigen::MatrixXcd inv = checked_inverse(a, "test matrix");
    CHECK((a * inv - Eigen::MatrixXcd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-10);

    Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(3, 3);
    s(0, 0) = 1.0;
    CHECK_THROWS_AS(checked_inverse(s, "singular matrix"), ConditioningError);
}

TEST_CASE("minimum singular value and eigenvalue agree on hermitian psd") {
    Eigen::MatrixXcd h(2, 2);
    h << 4.0, 1.0, 1.0, 2.0;
    const double ev = min_hermitian_eigenvalue(h);
    const double sv = min_singular_value(h);
    CHECK(ev == doctest::Approx(sv).epsilon(1e-10));
}

TEST_CASE("rel scale floors at one") {
    CHECK(rel_scale(0.5) == 1.0);
    CHECK(rel_scale(-3.0) == 3.0);
    CHECK(rel_scale(42.0) == 42.0);
}
