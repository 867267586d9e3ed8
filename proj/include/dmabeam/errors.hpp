// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#pragma once

#include <stdexcept>
#include <string>

namespace dmabeam {

// Bad user input: shapes, ranges, unknown fields, malformed files.
// The CLI maps this family to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A matrix that must be inverted is singular or near-singular.
class ConditioningError : public std::runtime_error {
public:
    explicit ConditioningError(const std::string& msg) : std::runtime_error(msg) {}
};

// An independent recomputation disagreed with the value under test.
// The CLI maps this family to exit code 3.
class OracleError : public std::runtime_error {
public:
    explicit OracleError(const std::string& msg) : std::runtime_error(msg) {}
};

// A candidate step left the region where the truncated series expansion of
// the tuned inverse is valid.
class TrustRegionError : public std::runtime_error {
public:
    explicit TrustRegionError(const std::string& msg) : std::runtime_error(msg) {}
};

// The analog stage found the current operating point outside the linearized
// constraint set; the digital stage has to restore feasibility first.
class FeasibilityLostError : public std::runtime_error {
public:
    explicit FeasibilityLostError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace dmabeam
