// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#pragma once

#include <complex>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace dmabeam {

// Deterministic random source. All randomness in the project flows through
// this class so that a (seed, stream) pair reproduces byte-identical results
// on any platform. std::mt19937_64 has a standardized, portable sequence;
// the distribution transforms are written out here because the standard
// library's distribution objects are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    // Child generator for substream `index`, decorrelated via splitmix64.
    Rng stream(std::uint64_t index) const;

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi);

    // Standard normal via Box-Muller; both outputs are consumed so draws
    // pair up deterministically.
    double normal();

    // CN(0, 1): real and imaginary parts are N(0, 1/2).
    std::complex<double> complex_normal();

    Eigen::VectorXd uniform_vector(int n, double lo, double hi);
    Eigen::MatrixXcd complex_normal_matrix(int rows, int cols);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool have_spare_normal_ = false;
    double spare_normal_ = 0.0;
};

} // namespace dmabeam
