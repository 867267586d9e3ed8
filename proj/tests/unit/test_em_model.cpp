// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#include <cmath>
#include <complex>
#include <cstdio>

#include "doctest.h"

#include "dmabeam/em_model.hpp"
#include "dmabeam/errors.hpp"
#include "dmabeam/rng.hpp"
#include "helpers.hpp"

using namespace dmabeam;

TEST_CASE("steering vector is all ones at broadside") {
    const auto g = ArrayGeometry::uniform_planar(3, 3, 0.5, 1, 1);
    const auto a = steering_vector(g, 0.0, 0.0);
    for (Eigen::Index l = 0; l < a.entries.size(); ++l) {
        CHECK(a.entries(l).real() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(a.entries(l).imag()) < 1e-12);
    }
}

TEST_CASE("half-wavelength pair flips sign at grazing incidence") {
    ArrayGeometry g;
    g.positions.resize(2, 3);
    g.positions << 0, 0, 0, 0.5, 0, 0;
    g.num_rf_ports = 1;
    g.num_users = 1;
    const auto a = steering_vector(g, 3.14159265358979312 / 2.0, 0.0);
    CHECK(a.entries(0).real() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(a.entries(1).real() == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(std::abs(a.entries(1).imag()) < 1e-9);
}

TEST_CASE("steering entries keep unit modulus") {
    Rng rng(31);
    for (int t = 0; t < 1000; ++t) {
        ArrayGeometry g;
        g.positions = rng.complex_normal_matrix(6, 3).real();
        g.num_rf_ports = 1;
        g.num_users = 1;
        const auto a = steering_vector(g, rng.uniform(0.0, 3.1), rng.uniform(0.0, 6.28));
        for (Eigen::Index l = 0; l < a.entries.size(); ++l)
            CHECK(std::abs(std::abs(a.entries(l)) - 1.0) < 1e-12);
    }
}

TEST_CASE("synthetic admittances validate across sizes and seeds") {
    Rng rng(32);
    for (const int side : {2, 4, 8}) {
        for (int t = 0; t < 33; ++t) {
            const auto g = ArrayGeometry::uniform_planar(side, side, 0.5, 2, 2);
            const auto adm = build_synthetic_admittances(g, rng.next_u64(), 0.2, 0.1);
            const auto report = validate_admittances(adm, 1e-9);
            CHECK(report.all_passed());
        }
    }
}

TEST_CASE("zero coupling gives a diagonal surface matrix") {
    const auto g = ArrayGeometry::uniform_planar(2, 3, 0.5, 1, 1);
    const auto adm = build_synthetic_admittances(g, 77, 0.0, 0.1);
    double off = 0.0;
    for (Eigen::Index a = 0; a < adm.y_ss.rows(); ++a)
        for (Eigen::Index b = 0; b < adm.y_ss.cols(); ++b)
            if (a != b) off = std::max(off, std::abs(adm.y_ss(a, b)));
    CHECK(off == 0.0);
}

TEST_CASE("same seed rebuilds bit-identical admittances") {
    const auto g = ArrayGeometry::uniform_planar(3, 2, 0.5, 2, 1);
    const auto a = build_synthetic_admittances(g, 123, 0.2, 0.1);
    const auto b = build_synthetic_admittances(g, 123, 0.2, 0.1);
    CHECK((a.y_tt - b.y_tt).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.y_ss - b.y_ss).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.y_st - b.y_st).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.y_rs - b.y_rs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("steering phase magnitudes never exceed one") {
    // The outer product of conjugated steering vectors drives the objective
    // assembly; entrywise it must stay inside the unit disc.
    Rng rng(33);
    const auto g = ArrayGeometry::uniform_planar(4, 4, 0.5, 2, 2);
    for (int t = 0; t < 50; ++t) {
        const auto a = steering_vector(g, rng.uniform(0.0, 3.1), rng.uniform(0.0, 6.28));
        const Eigen::MatrixXcd omega = a.entries.conjugate() * a.entries.transpose();
        CHECK(omega.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
    }
}

TEST_CASE("injected defects trip the named validator checks") {
    const auto g = ArrayGeometry::uniform_planar(2, 2, 0.5, 2, 2);
    auto adm = build_synthetic_admittances(g, 5, 0.2, 0.1);

    SUBCASE("real part on y_tt") {
        adm.y_tt(1, 1) = Cplx(1.0, 0.0);
        const auto report = validate_admittances(adm, 1e-9);
        const auto* check = report.find("y_tt imaginary diagonal");
        REQUIRE(check != nullptr);
        CHECK_FALSE(check->passed);
        CHECK(check->residual == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("asymmetric y_ss") {
        adm.y_ss(0, 1) += Cplx(0.25, 0.0);
        const auto report = validate_admittances(adm, 1e-9);
        const auto* check = report.find("y_ss symmetric");
        REQUIRE(check != nullptr);
        CHECK_FALSE(check->passed);
        const double expected = (adm.y_ss - adm.y_ss.transpose()).cwiseAbs().maxCoeff();
        CHECK(check->residual == doctest::Approx(expected).epsilon(1e-12));
    }

    SUBCASE("real y_st") {
        adm.y_st(0, 0) += Cplx(0.5, 0.0);
        const auto report = validate_admittances(adm, 1e-9);
        const auto* check = report.find("y_st imaginary");
        REQUIRE(check != nullptr);
        CHECK_FALSE(check->passed);
    }
}

TEST_CASE("admittance file round-trips exactly") {
    const auto g = ArrayGeometry::uniform_planar(2, 2, 0.5, 2, 2);
    const auto adm = build_synthetic_admittances(g, 99, 0.2, 0.1);
    const std::string path = "roundtrip_test.adm";
    save_admittances(adm, 3, path);
    const AdmittanceFile loaded = load_admittance_file(path);
    std::remove(path.c_str());
    CHECK(loaded.num_directions == 3);
    CHECK((loaded.set.y_tt - adm.y_tt).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((loaded.set.y_s - adm.y_s).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((loaded.set.y_ss - adm.y_ss).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((loaded.set.y_st - adm.y_st).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((loaded.set.y_r - adm.y_r).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((loaded.set.y_rr - adm.y_rr).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((loaded.set.y_rs - adm.y_rs).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("scenario validation catches threshold contradictions") {
    auto scenario = test::random_scenario(41);
    scenario.beta_max = 2.0;
    scenario.beta_lo.setConstant(3.0);
    CHECK_THROWS_AS(scenario.validate(), ValidationError);
}

TEST_CASE("susceptance update only rewrites the diagonal feed imaginary part") {
    const auto scenario = test::random_scenario(42);
    Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(scenario.num_elements(), -0.3, 0.3);
    const auto tuned = scenario_with_susceptance(scenario, y);
    for (int l = 0; l < scenario.num_elements(); ++l) {
        CHECK(tuned.admittances.y_s(l, l).real() == doctest::Approx(scenario.r0).epsilon(1e-15));
        CHECK(tuned.admittances.y_s(l, l).imag() == doctest::Approx(y(l)).epsilon(1e-15));
    }
    CHECK((tuned.admittances.y_ss - scenario.admittances.y_ss).cwiseAbs().maxCoeff() == 0.0);
    CHECK((tuned.admittances.y_st - scenario.admittances.y_st).cwiseAbs().maxCoeff() == 0.0);
}
