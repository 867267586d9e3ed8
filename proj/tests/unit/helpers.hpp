// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#pragma once

#include <cstdint>

#include "dmabeam/em_model.hpp"
#include "dmabeam/metrics.hpp"
#include "dmabeam/rng.hpp"

namespace dmabeam::test {

struct ScenarioShape {
    int rows = 2;
    int cols = 2;
    int num_rf_ports = 2;
    int num_users = 2;
    int num_directions = 2;
};

// Small randomized scenario for property tests. Thresholds are loose so the
// scenario itself is always valid; tightness is the test's business.
inline Scenario random_scenario(std::uint64_t seed, const ScenarioShape& shape = {}) {
    Rng rng(seed);
    Scenario scenario;
    scenario.geometry = ArrayGeometry::uniform_planar(shape.rows, shape.cols, 0.5,
                                                      shape.num_rf_ports, shape.num_users);
    scenario.r0 = 0.1;
    scenario.admittances =
        build_synthetic_admittances(scenario.geometry, rng.next_u64(), 0.2, scenario.r0);
    for (int d = 0; d < shape.num_directions; ++d) {
        Direction dir;
        dir.theta = rng.uniform(0.05, 1.5);
        dir.phi = rng.uniform(0.0, 6.28);
        scenario.directions.push_back(dir);
    }
    scenario.beta_lo = Eigen::VectorXd::Zero(shape.num_directions);
    scenario.gamma_min = Eigen::VectorXd::Constant(shape.num_users, 1.0);
    scenario.noise_power = 0.01;
    scenario.p_max = 10.0;
    scenario.validate();
    return scenario;
}

inline Beamformer random_beamformer(std::uint64_t seed, int num_rf_ports, int num_users) {
    Rng rng(seed);
    Beamformer B;
    B.B = 0.5 * rng.complex_normal_matrix(num_rf_ports, num_rf_ports + num_users);
    return B;
}

} // namespace dmabeam::test
