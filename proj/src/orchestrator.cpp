// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#include "dmabeam/orchestrator.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "dmabeam/digital.hpp"
#include "dmabeam/errors.hpp"
#include "dmabeam/linalg.hpp"
#include "dmabeam/rng.hpp"
#include "dmabeam/sdp.hpp"

namespace dmabeam {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

IterationRecord record_point(int outer, Stage stage, const Scenario& base,
                             const AnalogState& state, const Beamformer& B,
                             bool accepted, double wall) {
    const Scenario scen = scenario_with_susceptance(base, state.y);
    const EffectiveChannelSet ch = effective_channels(scen);
    IterationRecord rec;
    rec.outer = outer;
    rec.stage = stage;
    rec.p_tot = total_beampattern(scen, ch, B);
    rec.per_direction.resize(scen.num_directions());
    for (int d = 0; d < scen.num_directions(); ++d) {
        const auto& dir = scen.directions[static_cast<std::size_t>(d)];
        rec.per_direction(d) = beampattern_gain(scen, ch, B, dir.theta, dir.phi);
    }
    rec.per_user_sinr.resize(scen.num_users());
    for (int m = 0; m < scen.num_users(); ++m) rec.per_user_sinr(m) = sinr(scen, ch, B, m);
    rec.p_t = radiated_power(scen, ch, B);
    rec.bound = objective_upper_bound(scen, B);
    rec.accepted = accepted;
    rec.wall_time_seconds = wall;
    return rec;
}

} // namespace

void AlgorithmConfig::validate() const {
    if (max_outer_iters < 1) throw ValidationError("config: max_outer_iters must be >= 1");
    if (analog_steps_per_outer < 0)
        throw ValidationError("config: analog_steps_per_outer must be >= 0");
    if (!(objective_tolerance > 0.0) || !(objective_tolerance < 1.0))
        throw ValidationError("config: objective_tolerance must lie in (0, 1)");
    if (!(rank_one_threshold > 0.0))
        throw ValidationError("config: rank_one_threshold must be positive");
    if (randomization_samples < 1)
        throw ValidationError("config: randomization_samples must be >= 1");
    if (!(trust_rho > 0.0) || !(trust_rho < 1.0))
        throw ValidationError("config: trust_rho must lie in (0, 1)");
    if (!(trust_rho_max >= trust_rho) || !(trust_rho_max < 1.0))
        throw ValidationError("config: trust_rho_max must lie in [trust_rho, 1)");
    if (max_shrinks < 0) throw ValidationError("config: max_shrinks must be >= 0");
}

RunResult run_alternating(const Scenario& scenario, const AlgorithmConfig& config) {
    scenario.validate();
    config.validate();

    const int L = scenario.num_elements();
    const int N = scenario.num_rf_ports();
    const int M = scenario.num_users();

    RunResult result;
    result.B = Beamformer::zero(N, M);
    AnalogState state =
        make_analog_state(scenario, Eigen::VectorXd::Zero(L), config.trust_rho);

    sdp::InteriorPointBackend backend;
    AnalogOptions analog_opts;
    analog_opts.mode = config.surrogate;
    AcceptOptions accept_opts;
    accept_opts.rho_max = config.trust_rho_max;
    accept_opts.max_shrinks = config.max_shrinks;

    bool have_beamformer = false;
    double prev_outer_p = -std::numeric_limits<double>::infinity();
    Termination termination = Termination::MaxIterations;

    for (int outer = 1; outer <= config.max_outer_iters; ++outer) {
        const auto t_digital = Clock::now();
        const Scenario scen_cur = scenario_with_susceptance(scenario, state.y);
        const EffectiveChannelSet ch_cur = effective_channels(scen_cur);
        const SdpData sdp_data = assemble_sdp_data(scen_cur, ch_cur);
        DigitalSolution digital = solve_digital_sdp(sdp_data, scen_cur, backend);

        bool beamformer_updated = false;
        if (digital.status == sdp::Status::Infeasible) {
            if (!have_beamformer) {
                result.state = state;
                result.termination = Termination::DigitalInfeasible;
                result.feasible = false;
                result.infeasibility_detail =
                    std::string("digital stage infeasible: ") +
                    sdp::to_string(digital.most_violated_family) + " (" +
                    digital.most_violated_label + ")";
                return result;
            }
            termination = Termination::AnomalyDigitalInfeasible;
            result.infeasibility_detail =
                "digital stage reported infeasible after a feasible iterate: " +
                digital.most_violated_label;
            break;
        }
        if (digital.status == sdp::Status::Optimal) {
            const std::uint64_t stage_seed =
                Rng(config.seed).stream(static_cast<std::uint64_t>(outer)).next_u64();
            extract_rank_one(digital, sdp_data, scen_cur, config.randomization_samples,
                             stage_seed, config.rank_one_threshold);
            const double p_candidate = total_beampattern(scen_cur, ch_cur, digital.B);
            const double p_incumbent =
                have_beamformer ? total_beampattern(scen_cur, ch_cur, result.B)
                                : -std::numeric_limits<double>::infinity();
            // Monotonicity outranks freshness: a recovery that loses exact
            // objective (or feasibility) never replaces the incumbent.
            if (!have_beamformer ||
                (digital.recovered_feasible && p_candidate > p_incumbent)) {
                result.B = digital.B;
                have_beamformer = true;
                beamformer_updated = true;
            }
        } else if (!have_beamformer) {
            result.state = state;
            result.termination = Termination::DigitalStalled;
            result.feasible = false;
            result.infeasibility_detail =
                "digital stage returned no usable point on the first iteration";
            return result;
        }
        result.trace.push_back(record_point(outer, Stage::Digital, scenario, state, result.B,
                                            beamformer_updated, seconds_since(t_digital)));

        int accepted_steps = 0;
        for (int step = 0; step < config.analog_steps_per_outer; ++step) {
            const auto t_analog = Clock::now();
            Eigen::VectorXd z;
            try {
                const QcqpData qcqp_data = assemble_qcqp_data(state, scenario, result.B);
                z = solve_analog_step(qcqp_data, scenario, analog_opts);
            } catch (const FeasibilityLostError&) {
                break; // the next digital solve restores feasibility
            }
            const StepResolver resolver = [&](const AnalogState& shrunk) {
                const QcqpData qd = assemble_qcqp_data(shrunk, scenario, result.B);
                return solve_analog_step(qd, scenario, analog_opts);
            };
            StepOutcome outcome =
                accept_or_shrink(state, z, scenario, result.B, accept_opts, resolver);
            state = outcome.state;
            result.trace.push_back(record_point(outer, Stage::Analog, scenario, state, result.B,
                                                outcome.result.accepted,
                                                seconds_since(t_analog)));
            if (!outcome.result.accepted) break;
            ++accepted_steps;
        }

        const IterationRecord& last = result.trace.back();
        const double p_end = last.p_tot;
        if (p_end > last.bound * (1.0 + 1e-9) + 1e-9) {
            termination = Termination::AnomalyBoundViolation;
            result.infeasibility_detail = "exact objective exceeds its upper bound";
            break;
        }
        if (!beamformer_updated && accepted_steps == 0) {
            termination = Termination::NoProgress;
            break;
        }
        if (outer > 1) {
            const double improvement = (p_end - prev_outer_p) / rel_scale(prev_outer_p);
            if (improvement < config.objective_tolerance) {
                termination = Termination::Converged;
                prev_outer_p = p_end;
                break;
            }
        }
        prev_outer_p = p_end;
    }

    result.state = state;
    result.termination = termination;
    const Scenario scen_final = scenario_with_susceptance(scenario, state.y);
    const EffectiveChannelSet ch_final = effective_channels(scen_final);
    result.final_p_tot = total_beampattern(scen_final, ch_final, result.B);
    result.final_bound = objective_upper_bound(scen_final, result.B);
    result.final_report = p1_constraint_report(scen_final, ch_final, result.B);
    result.feasible = result.final_report.within(1e-6);
    if (!result.feasible && result.infeasibility_detail.empty())
        result.infeasibility_detail =
            "final point violates " + result.final_report.worst_label;
    return result;
}

Convergence convergence_check(const std::vector<IterationRecord>& trace, double tol) {
    if (trace.empty()) throw ValidationError("convergence_check: empty trace");
    for (const auto& rec : trace)
        if (rec.p_tot > rec.bound * (1.0 + 1e-9) + 1e-9) return Convergence::Anomaly;

    // Objective at the end of each outer iteration, in order.
    std::vector<double> outer_end;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        if (i + 1 == trace.size() || trace[i + 1].outer != trace[i].outer)
            outer_end.push_back(trace[i].p_tot);
    }
    if (outer_end.size() < 2) return Convergence::NotConverged;
    const double prev = outer_end[outer_end.size() - 2];
    const double last = outer_end.back();
    const double improvement = (last - prev) / rel_scale(prev);
    return improvement < tol ? Convergence::Converged : Convergence::NotConverged;
}

std::string to_string(Stage stage) {
    return stage == Stage::Digital ? "digital" : "analog";
}

std::string to_string(Termination termination) {
    switch (termination) {
        case Termination::Converged: return "converged";
        case Termination::MaxIterations: return "max-outer-iterations";
        case Termination::NoProgress: return "no-progress";
        case Termination::DigitalInfeasible: return "digital-infeasible";
        case Termination::DigitalStalled: return "digital-stalled";
        case Termination::AnomalyDigitalInfeasible: return "anomaly-digital-infeasible";
        case Termination::AnomalyBoundViolation: return "anomaly-bound-violation";
    }
    return "unknown";
}

std::string to_string(Convergence convergence) {
    switch (convergence) {
        case Convergence::Converged: return "converged";
        case Convergence::NotConverged: return "not-converged";
        case Convergence::Anomaly: return "anomaly";
    }
    return "unknown";
}

} // namespace dmabeam
