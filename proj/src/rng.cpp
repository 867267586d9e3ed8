// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#include "dmabeam/rng.hpp"

#include <cmath>
#include <numbers>

namespace dmabeam {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

Rng Rng::stream(std::uint64_t index) const {
    // Mix seed and index through two splitmix64 rounds so that nearby
    // (seed, index) pairs land far apart in seed space.
    std::uint64_t x = seed_;
    std::uint64_t a = splitmix64(x);
    x ^= index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL;
    std::uint64_t b = splitmix64(x);
    return Rng(a ^ (b + index));
}

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double Rng::normal() {
    if (have_spare_normal_) {
        have_spare_normal_ = false;
        return spare_normal_;
    }
    // Box-Muller on (0,1] x [0,1) to avoid log(0).
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    spare_normal_ = r * std::sin(a);
    have_spare_normal_ = true;
    return r * std::cos(a);
}

std::complex<double> Rng::complex_normal() {
    const double s = std::numbers::sqrt2;
    return {normal() / s, normal() / s};
}

Eigen::VectorXd Rng::uniform_vector(int n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = uniform(lo, hi);
    return v;
}

Eigen::MatrixXcd Rng::complex_normal_matrix(int rows, int cols) {
    Eigen::MatrixXcd m(rows, cols);
    // Row-major fill order is part of the determinism contract.
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = complex_normal();
    return m;
}

} // namespace dmabeam
