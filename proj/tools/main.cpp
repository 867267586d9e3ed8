// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dmabeam/errors.hpp"
#include "dmabeam/io.hpp"
#include "dmabeam/oracle.hpp"
#include "dmabeam/orchestrator.hpp"

namespace {

namespace fs = std::filesystem;
using namespace dmabeam;

constexpr int kExitSuccess = 0;
constexpr int kExitInfeasible = 1;
constexpr int kExitValidation = 2;
constexpr int kExitOracle = 3;

bool anomalous(Termination t) {
    return t == Termination::AnomalyDigitalInfeasible || t == Termination::AnomalyBoundViolation;
}

struct RunArtifacts {
    RunResult result;
    std::string trace_text;
    std::string result_text;
};

RunArtifacts execute(const Scenario& scenario, const AlgorithmConfig& config) {
    RunArtifacts artifacts{run_alternating(scenario, config), {}, {}};
    artifacts.trace_text = io::render_trace(artifacts.result);
    artifacts.result_text = io::render_result(artifacts.result, scenario);
    return artifacts;
}

void write_run_files(const RunArtifacts& artifacts, const Scenario& scenario,
                     const io::GridSpec& grid, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    io::write_text_file((out_dir / "trace.jsonl").string(), artifacts.trace_text);
    io::write_text_file((out_dir / "result.json").string(), artifacts.result_text);
    const Scenario tuned = scenario_with_susceptance(scenario, artifacts.result.state.y);
    io::export_beampattern(tuned, artifacts.result.B, grid,
                           (out_dir / "beampattern.csv").string());
}

int finish_run(const RunResult& result) {
    std::cout << "termination: " << to_string(result.termination)
              << "  objective: " << io::format_double(result.final_p_tot)
              << "  bound: " << io::format_double(result.final_bound) << "\n";
    if (anomalous(result.termination)) {
        std::cerr << "internal consistency check failed: " << to_string(result.termination)
                  << "\n";
        return kExitOracle;
    }
    if (!result.feasible) {
        std::cerr << "no feasible design: " << result.infeasibility_detail << "\n";
        return kExitInfeasible;
    }
    return kExitSuccess;
}

int command_run(const std::string& scenario_path, const std::string& config_path,
                const std::string& out_dir, bool seed_set, std::uint64_t seed,
                const std::string& grid_text) {
    const Scenario scenario = io::load_scenario(scenario_path);
    AlgorithmConfig config =
        config_path.empty() ? AlgorithmConfig{} : io::load_config(config_path);
    if (seed_set) config.seed = seed;
    config.validate();
    const RunArtifacts artifacts = execute(scenario, config);
    write_run_files(artifacts, scenario, io::parse_grid(grid_text), out_dir);
    return finish_run(artifacts.result);
}

int command_verify(const std::string& out_path, std::uint64_t seed) {
    const int trials = 100;
    const auto reports = oracle::run_all_oracles(trials, seed);
    const auto mutations = oracle::mutation_sensitivity(trials, seed);
    bool ok = true;
    for (const auto& r : reports) {
        std::cout << (r.passed ? "PASS" : "FAIL") << "  " << r.identity
                  << "  max_rel_error=" << io::format_double(r.max_rel_error)
                  << "  tolerance=" << io::format_double(r.tolerance) << "  trials=" << r.trials
                  << (r.flagged ? "  flagged=" + std::to_string(r.flagged) : "") << "\n";
        ok = ok && r.passed;
    }
    for (const auto& m : mutations) {
        std::cout << (m.detected ? "PASS" : "FAIL") << "  mutation " << to_string(m.mutation)
                  << " tripped " << m.tripped.size() << " check(s)\n";
        ok = ok && m.detected;
    }
    if (!out_path.empty())
        io::write_text_file(out_path, io::render_oracle_reports(reports, mutations));
    if (!ok) std::cerr << "oracle suite detected failures\n";
    return ok ? kExitSuccess : kExitOracle;
}

// Sweepable fields are scalar thresholds that leave the electromagnetic
// model untouched, so one admittance build serves the whole sweep.
Scenario apply_sweep_value(Scenario scenario, const std::string& field, double value) {
    if (field == "p_max") {
        scenario.p_max = value;
    } else if (field == "noise_power") {
        scenario.noise_power = value;
    } else if (field == "beta_max") {
        scenario.beta_max = value;
    } else if (field == "beta_lo") {
        scenario.beta_lo.setConstant(value);
    } else if (field == "gamma_min") {
        scenario.gamma_min.setConstant(value);
    } else {
        throw ValidationError("unsupported sweep field \"" + field +
                              "\"; pick one of p_max, noise_power, beta_max, beta_lo, gamma_min");
    }
    scenario.validate();
    return scenario;
}

int command_sweep(const std::string& scenario_path, const std::string& config_path,
                  const std::string& out_dir, bool seed_set, std::uint64_t seed,
                  const std::string& field, const std::string& values_csv,
                  const std::string& grid_text) {
    const Scenario base = io::load_scenario(scenario_path);
    AlgorithmConfig config =
        config_path.empty() ? AlgorithmConfig{} : io::load_config(config_path);
    if (seed_set) config.seed = seed;
    config.validate();
    const io::GridSpec grid = io::parse_grid(grid_text);

    std::vector<double> values;
    std::string token;
    std::istringstream stream(values_csv);
    while (std::getline(stream, token, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(token, &used));
            if (used != token.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ValidationError("sweep value \"" + token + "\" is not a number");
        }
    }
    if (values.empty()) throw ValidationError("--sweep-values needs at least one number");

    // Validate every point before any expensive work starts.
    std::vector<Scenario> scenarios;
    scenarios.reserve(values.size());
    for (const double v : values) scenarios.push_back(apply_sweep_value(base, field, v));

    std::vector<std::future<RunArtifacts>> futures;
    futures.reserve(values.size());
    for (const auto& scenario : scenarios)
        futures.push_back(std::async(std::launch::async,
                                     [&config, scenario] { return execute(scenario, config); }));

    std::string summary = "{\"schema\":\"dmabeam-sweep/1\",\"field\":\"" + field + "\"}\n";
    int exit_code = kExitSuccess;
    for (std::size_t i = 0; i < futures.size(); ++i) {
        const RunArtifacts artifacts = futures[i].get();
        const fs::path point_dir =
            fs::path(out_dir) / (field + "=" + io::format_double(values[i]));
        write_run_files(artifacts, scenarios[i], grid, point_dir);
        summary += "{\"value\":" + io::format_double(values[i]) + ",\"termination\":\"" +
                   to_string(artifacts.result.termination) +
                   "\",\"feasible\":" + (artifacts.result.feasible ? "true" : "false") +
                   ",\"objective\":" + io::format_double(artifacts.result.final_p_tot) +
                   ",\"bound\":" + io::format_double(artifacts.result.final_bound) + "}\n";
        std::cout << field << "=" << io::format_double(values[i]) << "  "
                  << to_string(artifacts.result.termination) << "  objective "
                  << io::format_double(artifacts.result.final_p_tot) << "\n";
        if (anomalous(artifacts.result.termination)) exit_code = kExitOracle;
        else if (!artifacts.result.feasible && exit_code == kExitSuccess)
            exit_code = kExitInfeasible;
    }
    fs::create_directories(out_dir);
    io::write_text_file((fs::path(out_dir) / "sweep.jsonl").string(), summary);
    return exit_code;
}

int command_export(const std::string& scenario_path, const std::string& out_dir,
                   const std::string& grid_text) {
    const Scenario scenario = io::load_scenario(scenario_path);
    const fs::path result_path = fs::path(out_dir) / "result.json";
    if (!fs::exists(result_path))
        throw ValidationError(result_path.string() +
                              ": not found; run the scenario first, then export");
    const io::ParsedResult result = io::parse_result(result_path.string());
    if (result.susceptance.size() != scenario.num_elements())
        throw ValidationError(result_path.string() + ": susceptance length " +
                              std::to_string(result.susceptance.size()) +
                              " does not match scenario with " +
                              std::to_string(scenario.num_elements()) + " elements");
    const Scenario tuned = scenario_with_susceptance(scenario, result.susceptance);
    io::export_beampattern(tuned, result.beamformer, io::parse_grid(grid_text),
                           (fs::path(out_dir) / "beampattern.csv").string());
    std::cout << "wrote " << (fs::path(out_dir) / "beampattern.csv").string() << "\n";
    return kExitSuccess;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dmabeam: hybrid beamforming engine for metasurface ISAC arrays"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string config_path;
    std::string out_dir = ".";
    std::string out_path;
    std::string grid_text = "64x32";
    std::string sweep_field;
    std::string sweep_values;
    std::uint64_t seed = 0;

    CLI::App* run = app.add_subcommand(
        "run", "Optimize one scenario; writes trace.jsonl, result.json, beampattern.csv");
    run->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    run->add_option("--config", config_path, "Algorithm config JSON file");
    run->add_option("--out", out_dir, "Output directory (default .)");
    run->add_option("--seed", seed, "Override the config seed");
    run->add_option("--grid", grid_text, "Beampattern grid <nTheta>x<nPhi> (default 64x32)");

    CLI::App* verify = app.add_subcommand(
        "verify", "Run the oracle suite and the mutation sensitivity screen");
    verify->add_option("--out", out_path, "Optional report file (JSONL)");
    verify->add_option("--seed", seed, "Oracle trial seed (default 0)");

    CLI::App* sweep = app.add_subcommand(
        "sweep", "Run one scenario over a list of values for a scalar field, in parallel");
    sweep->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    sweep->add_option("--config", config_path, "Algorithm config JSON file");
    sweep->add_option("--out", out_dir, "Output directory (default .)");
    sweep->add_option("--seed", seed, "Override the config seed");
    sweep->add_option("--grid", grid_text, "Beampattern grid per point (default 64x32)");
    sweep->add_option("--sweep-field", sweep_field, "Scenario field to vary")->required();
    sweep->add_option("--sweep-values", sweep_values, "Comma-separated values")->required();

    CLI::App* export_cmd = app.add_subcommand(
        "export-beampattern", "Resample the beampattern of a completed run on a new grid");
    export_cmd->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    export_cmd->add_option("--out", out_dir, "Directory holding result.json (default .)");
    export_cmd->add_option("--grid", grid_text, "Grid <nTheta>x<nPhi> (default 64x32)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitSuccess : kExitValidation;
    }

    try {
        if (run->parsed())
            return command_run(scenario_path, config_path, out_dir, run->count("--seed") > 0,
                               seed, grid_text);
        if (verify->parsed()) return command_verify(out_path, seed);
        if (sweep->parsed())
            return command_sweep(scenario_path, config_path, out_dir, sweep->count("--seed") > 0,
                                 seed, sweep_field, sweep_values, grid_text);
        if (export_cmd->parsed()) return command_export(scenario_path, out_dir, grid_text);
    } catch (const OracleError& e) {
        std::cerr << "oracle failure: " << e.what() << "\n";
        return kExitOracle;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}
