// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dmabeam::oracle {

// Brute-force cross-checks of every algebraic reformulation the optimizer
// relies on. Each check evaluates the production assembly on one side and a
// deliberately naive reformulation-free evaluation on the other; the two
// sides share no helper code, so agreement is evidence rather than tautology.

struct OracleReport {
    std::string identity;
    double max_rel_error = 0.0;
    int trials = 0;
    double tolerance = 0.0;
    bool passed = false;
    // Observations that are measured but not asserted (see the boundedness
    // check); nonzero values are worth a look, not a failure.
    int flagged = 0;
};

// Planted defects for oracle self-tests: each one recreates a plausible
// transcription slip in a local copy of the assembly and must make at least
// one check fail. Production code never sees these.
enum class Mutation {
    None,
    HadamardTransposeDropped, // second factor of the gain curvature not transposed
    SinrKernelSignFlip,       // (1 - 1/gamma) instead of (1 + 1/gamma) in the user kernel
    NeumannSeriesPlusSign,    // first-order series correction added instead of subtracted
    SteeringConjugateDropped, // steering outer product built from a instead of conj(a)
    PowerBudgetSignFlip,      // tuned trace enters the power budget with the wrong sign
    FeedSusceptanceMadeReal,  // feed self-admittance loses its factor i in the model
};

std::string to_string(Mutation mutation);

// Lifted-objective identity: the direction-averaged quadratic-form matrix
// applied to all beamformer columns reproduces the exact mean beampattern.
OracleReport check_lifting_identity(int trials, std::uint64_t seed,
                                    Mutation mutation = Mutation::None);

// SINR reformulation: the lifted constraint row equals
// (interference + noise) * (1 - gamma/Gamma) for Gamma swept through the
// exact SINR, so its sign flips exactly at the SINR boundary.
OracleReport check_sinr_chain(int trials, std::uint64_t seed,
                              Mutation mutation = Mutation::None);

// First-order series substitution: the assembled quadratic forms for gain,
// SINR margin, and radiated power match direct evaluation with the truncated
// inverse at random steps inside the trust region.
OracleReport check_neumann_chain(int trials, std::uint64_t seed,
                                 Mutation mutation = Mutation::None);

// tr{diag(z) A diag(z) C} = z^T (A o C^T) z for random complex A, C, real z.
OracleReport check_hadamard_trace_identity(int trials, std::uint64_t seed,
                                           Mutation mutation = Mutation::None);

// Objective upper bound chain: the certified bound dominates the exact mean
// gain, the feed trace is purely imaginary, the averaged steering outer
// product has norm at most L, and the trace-dominates-norm step is measured
// (flagged when it fails) rather than assumed.
OracleReport check_boundedness_chain(int trials, std::uint64_t seed,
                                     Mutation mutation = Mutation::None);

// All five checks with no mutation.
std::vector<OracleReport> run_all_oracles(int trials, std::uint64_t seed);

struct MutationOutcome {
    Mutation mutation = Mutation::None;
    std::vector<std::string> tripped; // identities that failed under the defect
    bool detected = false;
};

// Runs every planted defect through every check; each must trip at least one.
std::vector<MutationOutcome> mutation_sensitivity(int trials, std::uint64_t seed);

} // namespace dmabeam::oracle
