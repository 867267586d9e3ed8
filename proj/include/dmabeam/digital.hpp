// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmabeam/em_model.hpp"
#include "dmabeam/metrics.hpp"
#include "dmabeam/sdp.hpp"

namespace dmabeam {

// Coefficient matrices of the lifted digital problem. With y_tilde the exact
// inverse at the current analog state and omega_d the rank-one steering outer
// product for direction d:
//   a0    = (1/D) y_st^H y_tilde^H (sum_d omega_d) y_tilde y_st
//   ad[d] = y_st^H y_tilde^H omega_d y_tilde y_st
//   psi[m] = y_rs_eff_m^H y_rs_eff_m
//   ym[m] = y_st^H y_tilde^H psi[m] y_tilde y_st
//   ap    = 0.5 (y_tt - y_st^T y_tilde y_st)    (not Hermitian in general)
struct SdpData {
    Eigen::MatrixXcd a0;
    std::vector<Eigen::MatrixXcd> ad;
    std::vector<Eigen::MatrixXcd> ym;
    std::vector<Eigen::MatrixXcd> psi;
    Eigen::MatrixXcd ap;
    std::vector<Eigen::MatrixXcd> omega;
};

struct DigitalSolution {
    std::vector<Eigen::MatrixXcd> lifted; // M+N Hermitian PSD blocks
    Beamformer B;
    sdp::Status status = sdp::Status::NumericalTrouble;
    std::vector<double> rank_gap;         // lambda2/lambda1 per lifted block
    double objective_lifted = 0.0;
    double objective_recovered = 0.0;

    bool recovered_feasible = false;
    double randomization_feasible_fraction = 0.0;
    std::string constraint_report;        // violations of the recovered point, if any

    // From the backend when status == Infeasible.
    std::string most_violated_label;
    sdp::Family most_violated_family = sdp::Family::Other;
};

SdpData assemble_sdp_data(const Scenario& scenario, const EffectiveChannelSet& channels);

// [[Re H, -Im H], [Im H, Re H]]; eigenvalues of H doubled in multiplicity,
// and tr{A Hm} = 0.5 tr{emb(A) emb(Hm)} for Hermitian A, Hm. Throws on
// non-Hermitian input (relative tolerance 1e-10).
Eigen::MatrixXd hermitian_embedding(const Eigen::MatrixXcd& h);

// Solves the lifted relaxation for fixed analog state. Only the lifted part
// of the solution is filled; recovery is a separate step.
DigitalSolution solve_digital_sdp(const SdpData& data, const Scenario& scenario,
                                  const sdp::SdpBackend& backend);

// Rank-one recovery: principal eigenvector when every lifted block has
// lambda2/lambda1 <= threshold, otherwise Gaussian randomization screened by
// the exact metrics. Fills B, objective_recovered, rank gaps and feasibility
// diagnostics on the passed-in solution.
void extract_rank_one(DigitalSolution& solution, const SdpData& data, const Scenario& scenario,
                      int num_samples, std::uint64_t seed, double rank_one_threshold = 1e-6);

} // namespace dmabeam
