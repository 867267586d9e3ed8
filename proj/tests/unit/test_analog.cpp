// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#include <cmath>
#include <complex>

#include "doctest.h"

#include "dmabeam/analog.hpp"
#include "dmabeam/errors.hpp"
#include "dmabeam/linalg.hpp"
#include "dmabeam/rng.hpp"
#include "helpers.hpp"

using namespace dmabeam;

namespace {

struct Setup {
    Scenario scenario;
    Beamformer B;
    AnalogState state;
};

Setup make_setup(std::uint64_t seed, double beam_scale = 0.5) {
    Setup s;
    s.scenario = test::random_scenario(seed);
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    s.B.B = beam_scale * rng.complex_normal_matrix(s.scenario.num_rf_ports(),
                                                   s.scenario.num_rf_ports() +
                                                       s.scenario.num_users());
    const Eigen::VectorXd y = rng.uniform_vector(s.scenario.num_elements(), -0.3, 0.3);
    s.state = make_analog_state(s.scenario, y, 0.1);
    return s;
}

} // namespace

TEST_CASE("trust region bound inverts the spectral norm exactly") {
    const Setup s = make_setup(201);
    const double bound = trust_region_bound(s.state);
    CHECK(bound > 0.0);
    CHECK(bound * spectral_norm(s.state.yhat) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("trust radius outside (0,1) is rejected") {
    const Scenario scenario = test::random_scenario(202);
    const Eigen::VectorXd y = Eigen::VectorXd::Zero(scenario.num_elements());
    CHECK_THROWS_AS(make_analog_state(scenario, y, 0.0), ValidationError);
    CHECK_THROWS_AS(make_analog_state(scenario, y, 1.0), ValidationError);
    CHECK_THROWS_AS(make_analog_state(scenario, y, -0.2), ValidationError);
}

TEST_CASE("neumann inverse at zero step returns the stored inverse") {
    const Setup s = make_setup(203);
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(s.scenario.num_elements());
    CHECK((neumann_inverse(s.state, z) - s.state.yhat).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scalar neumann error matches the closed form") {
    // For a 1x1 system with surface admittance g and step delta, the
    // first-order series drops exactly delta^2/(g^2 (g + i delta)).
    Scenario s;
    s.geometry.positions = Eigen::MatrixXd::Zero(1, 3);
    s.geometry.num_rf_ports = 1;
    s.geometry.num_users = 1;
    auto& adm = s.admittances;
    adm.y_tt = Eigen::MatrixXcd::Constant(1, 1, Cplx(0.0, 0.7));
    adm.y_s = Eigen::MatrixXcd::Constant(1, 1, Cplx(0.8, 0.0));
    adm.y_ss = Eigen::MatrixXcd::Constant(1, 1, Cplx(0.7, 0.0));
    adm.y_st = Eigen::MatrixXcd::Constant(1, 1, Cplx(0.0, 0.4));
    adm.y_r = Eigen::MatrixXcd::Constant(1, 1, Cplx(1.1, 0.3));
    adm.y_rr = Eigen::MatrixXcd::Constant(1, 1, Cplx(0.2, -0.1));
    adm.y_rs = Eigen::MatrixXcd::Constant(1, 1, Cplx(0.5, 0.6));
    Direction dir;
    dir.theta = 0.3;
    dir.phi = 1.2;
    s.directions = {dir};
    s.beta_lo = Eigen::VectorXd::Zero(1);
    s.gamma_min = Eigen::VectorXd::Constant(1, 0.1);
    s.noise_power = 0.05;
    s.p_max = 4.0;
    s.r0 = 0.8;

    const auto state = make_analog_state(s, Eigen::VectorXd::Zero(1), 0.1);
    const double g = 1.5; // y_s + y_ss = 0.8 + 0.7, purely real here
    const double delta = 0.05;
    const Eigen::VectorXd z = Eigen::VectorXd::Constant(1, delta);
    const Cplx exact = 1.0 / Cplx(g, delta);
    const Cplx series = neumann_inverse(state, z)(0, 0);
    const double expected_err = delta * delta / (g * g * std::abs(Cplx(g, delta)));
    CHECK(std::abs(series - exact) == doctest::Approx(expected_err).epsilon(1e-10));
}

TEST_CASE("neumann error scales quadratically with the step") {
    const Setup s = make_setup(204);
    Rng rng(205);
    const double bound = trust_region_bound(s.state);
    Eigen::VectorXd z = rng.uniform_vector(s.scenario.num_elements(), -1.0, 1.0);
    z *= 0.05 * bound / z.cwiseAbs().maxCoeff();

    auto exact_at = [&](const Eigen::VectorXd& step) {
        Eigen::MatrixXcd shifted = s.state.yss_tilde;
        for (int l = 0; l < step.size(); ++l) shifted(l, l) += Cplx(0.0, s.state.y(l) + step(l));
        return shifted.inverse().eval();
    };
    const double err_full = (exact_at(z) - neumann_inverse(s.state, z)).norm();
    const double err_half = (exact_at(z / 2) - neumann_inverse(s.state, z / 2)).norm();
    CHECK(err_half / err_full > 0.2);
    CHECK(err_half / err_full < 0.3);
}

TEST_CASE("steps outside the series region are refused") {
    const Setup s = make_setup(206);
    const double huge = 2.0 / spectral_norm(s.state.yhat);
    const Eigen::VectorXd z = Eigen::VectorXd::Constant(s.scenario.num_elements(), huge);
    CHECK_THROWS_AS(neumann_inverse(s.state, z), TrustRegionError);
}

TEST_CASE("zero beamformer zeroes every assembled quantity") {
    Setup s = make_setup(207);
    s.B = Beamformer::zero(s.scenario.num_rf_ports(), s.scenario.num_users());
    const auto data = assemble_qcqp_data(s.state, s.scenario, s.B);
    CHECK(data.e_t == 0.0);
    CHECK(data.w_t.cwiseAbs().maxCoeff() == 0.0);
    for (int d = 0; d < s.scenario.num_directions(); ++d) {
        CHECK(data.e_d[d] == 0.0);
        CHECK(data.w_d[d].cwiseAbs().maxCoeff() == 0.0);
        CHECK(data.q_d[d].cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK(data.j.cwiseAbs().maxCoeff() == 0.0);
    CHECK(data.p_t_budget == doctest::Approx(2.0 * s.scenario.p_max).epsilon(1e-14));
}

TEST_CASE("objective constant equals the exact current gain") {
    const Setup s = make_setup(208);
    const auto data = assemble_qcqp_data(s.state, s.scenario, s.B);
    const Scenario tuned = scenario_with_susceptance(s.scenario, s.state.y);
    CHECK(data.e_t == doctest::Approx(total_beampattern(tuned, s.B)).epsilon(1e-10));
    const Eigen::VectorXd z0 = Eigen::VectorXd::Zero(s.scenario.num_elements());
    CHECK(truncated_objective(data, z0) == doctest::Approx(data.e_t).epsilon(1e-14));
}

TEST_CASE("per-direction quadratic reproduces the truncated-inverse gain") {
    const Setup s = make_setup(209);
    const auto data = assemble_qcqp_data(s.state, s.scenario, s.B);
    Rng rng(210);
    Eigen::VectorXd z = rng.uniform_vector(s.scenario.num_elements(), -1.0, 1.0);
    z *= 0.5 * data.z_bound / z.cwiseAbs().maxCoeff();
    const Eigen::MatrixXcd truncated = neumann_inverse(s.state, z);
    for (int d = 0; d < s.scenario.num_directions(); ++d) {
        const auto a = steering_vector(s.scenario.geometry, s.scenario.directions[d].theta,
                                       s.scenario.directions[d].phi);
        const Eigen::RowVectorXcd row =
            a.entries.transpose() * truncated * s.scenario.admittances.y_st * s.B.B;
        const double direct = row.squaredNorm();
        const double quad = data.e_d[d] + 2.0 * data.w_d[d].real().dot(z) +
                            z.dot(data.q_d[d].real().selfadjointView<Eigen::Lower>() * z);
        CHECK(quad == doctest::Approx(direct).epsilon(1e-9));
    }
}

TEST_CASE("assembled curvature blocks are psd for the objective side") {
    Rng rng(211);
    for (int t = 0; t < 20; ++t) {
        const Setup s = make_setup(rng.next_u64());
        const auto data = assemble_qcqp_data(s.state, s.scenario, s.B);
        for (const auto& q : data.q_d) {
            const double norm = spectral_norm(q);
            CHECK(min_hermitian_eigenvalue(q) >= -1e-9 * std::max(1.0, norm));
        }
    }
}

TEST_CASE("stale state is caught before assembly") {
    Setup s = make_setup(212);
    s.state.y(0) += 0.5; // stored inverse no longer matches
    CHECK_THROWS_AS(assemble_qcqp_data(s.state, s.scenario, s.B), ConditioningError);
}

TEST_CASE("unconstrained linear surrogate saturates the step box") {
    Setup s = make_setup(213);
    // Remove every side constraint's bite: no sinr floor, no beampattern
    // caps, a power budget far above anything reachable.
    s.scenario.gamma_min.setConstant(1e-9);
    s.scenario.beta_lo.setZero();
    s.scenario.p_max = 1e6;
    const auto data = assemble_qcqp_data(s.state, s.scenario, s.B);
    AnalogOptions options;
    options.mode = SurrogateMode::ConvexRestriction;
    const Eigen::VectorXd z = solve_analog_step(data, s.scenario, options);
    for (int l = 0; l < z.size(); ++l) {
        if (std::abs(data.w_t(l).real()) < 1e-9) continue;
        CHECK(std::abs(z(l)) == doctest::Approx(data.z_bound).epsilon(1e-4));
        CHECK(z(l) * data.w_t(l).real() > 0.0);
    }
}

TEST_CASE("analog stage reports feasibility loss instead of stepping") {
    Setup s = make_setup(214);
    s.scenario.gamma_min.setConstant(1e9); // current point cannot satisfy this
    const auto data = assemble_qcqp_data(s.state, s.scenario, s.B);
    CHECK_THROWS_AS(solve_analog_step(data, s.scenario, AnalogOptions{}), FeasibilityLostError);
}

TEST_CASE("both surrogate modes return steps that keep the exact point feasible") {
    for (const auto mode : {SurrogateMode::ConvexRestriction, SurrogateMode::AsPrinted}) {
        Setup s = make_setup(215);
        s.scenario.gamma_min.setConstant(1e-6);
        const auto data = assemble_qcqp_data(s.state, s.scenario, s.B);
        AnalogOptions options;
        options.mode = mode;
        const Eigen::VectorXd z = solve_analog_step(data, s.scenario, options);
        CHECK(z.cwiseAbs().maxCoeff() <= data.z_bound * (1.0 + 1e-9));
        const Scenario tuned = scenario_with_susceptance(s.scenario, s.state.y + z);
        const auto report = p1_constraint_report(tuned, effective_channels(tuned), s.B);
        CHECK(report.within(1e-5));
    }
}

TEST_CASE("zero step is rejected as non-improving") {
    const Setup s = make_setup(216);
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(s.scenario.num_elements());
    const auto outcome = accept_or_shrink(s.state, z, s.scenario, s.B);
    CHECK_FALSE(outcome.result.accepted);
    CHECK(outcome.state.trust_radius < s.state.trust_radius);
    CHECK((outcome.state.y - s.state.y).cwiseAbs().maxCoeff() == 0.0);
    CHECK(outcome.result.exact_objective_after ==
          doctest::Approx(outcome.result.exact_objective_before).epsilon(1e-14));
}

TEST_CASE("an improving feasible candidate is accepted and the radius grows") {
    Setup s = make_setup(217);
    s.scenario.gamma_min.setConstant(1e-6);
    const auto data = assemble_qcqp_data(s.state, s.scenario, s.B);
    const Eigen::VectorXd z = solve_analog_step(data, s.scenario, AnalogOptions{});
    REQUIRE(z.cwiseAbs().maxCoeff() > 0.0);
    const auto outcome = accept_or_shrink(s.state, z, s.scenario, s.B);
    REQUIRE(outcome.result.accepted);
    CHECK(outcome.result.exact_objective_after > outcome.result.exact_objective_before);
    CHECK(outcome.state.iteration == s.state.iteration + 1);
    CHECK(outcome.state.trust_radius == doctest::Approx(0.15).epsilon(1e-12));
    CHECK((outcome.state.y - (s.state.y + z)).cwiseAbs().maxCoeff() < 1e-15);
    // The stored inverse is exact, not the series.
    Eigen::MatrixXcd shifted = outcome.state.yss_tilde;
    for (int l = 0; l < outcome.state.y.size(); ++l)
        shifted(l, l) += Cplx(0.0, outcome.state.y(l));
    CHECK((shifted * outcome.state.yhat - Eigen::MatrixXcd::Identity(shifted.rows(),
                                                                     shifted.cols()))
              .cwiseAbs()
              .maxCoeff() < 1e-9);
}

TEST_CASE("candidates beyond the trust bound are refused outright") {
    const Setup s = make_setup(218);
    const double bound = trust_region_bound(s.state);
    const Eigen::VectorXd z =
        Eigen::VectorXd::Constant(s.scenario.num_elements(), 2.0 * bound);
    CHECK_THROWS_AS(accept_or_shrink(s.state, z, s.scenario, s.B), TrustRegionError);
}

TEST_CASE("rejection without a resolver shrinks until the budget runs out") {
    Setup s = make_setup(219);
    // A candidate violating the exact sinr floor: make the floor just above
    // what the candidate achieves, so the linear model lies.
    const Scenario tuned = scenario_with_susceptance(s.scenario, s.state.y);
    const auto ch = effective_channels(tuned);
    double min_sinr = 1e30;
    for (int m = 0; m < s.scenario.num_users(); ++m)
        min_sinr = std::min(min_sinr, sinr(tuned, ch, s.B, m));
    REQUIRE(min_sinr > 0.0);
    s.scenario.gamma_min.setConstant(min_sinr * 1.000001);

    Rng rng(220);
    Eigen::VectorXd z = rng.uniform_vector(s.scenario.num_elements(), -1.0, 1.0);
    z *= 0.9 * trust_region_bound(s.state) / z.cwiseAbs().maxCoeff();
    AcceptOptions options;
    options.max_shrinks = 3;
    const auto outcome = accept_or_shrink(s.state, z, s.scenario, s.B, options);
    if (!outcome.result.accepted) {
        CHECK(outcome.result.shrink_count >= 1);
        CHECK(outcome.state.trust_radius < s.state.trust_radius);
    }
}
