// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#include "dmabeam/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

#include "dmabeam/errors.hpp"

namespace dmabeam::io {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& origin, const std::string& message) {
    throw ValidationError(origin + ": " + message);
}

json parse_json(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        fail(origin, std::string("malformed JSON: ") + e.what());
    }
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& origin, const std::string& where) {
    for (const auto& item : j.items()) {
        if (allowed.count(item.key()) == 0)
            fail(origin, "unknown field \"" + item.key() + "\" in " + where);
    }
}

double require_number(const json& j, const std::string& key, const std::string& origin) {
    if (!j.contains(key)) fail(origin, "missing field \"" + key + "\"");
    if (!j.at(key).is_number()) fail(origin, "field \"" + key + "\" must be a number");
    return j.at(key).get<double>();
}

int require_int(const json& j, const std::string& key, const std::string& origin) {
    if (!j.contains(key)) fail(origin, "missing field \"" + key + "\"");
    if (!j.at(key).is_number_integer()) fail(origin, "field \"" + key + "\" must be an integer");
    return j.at(key).get<int>();
}

// Scalar broadcasts to all entries; an array must have exactly `size`.
Eigen::VectorXd number_or_array(const json& j, const std::string& key, int size,
                                const std::string& origin) {
    const json& v = j.at(key);
    if (v.is_number()) return Eigen::VectorXd::Constant(size, v.get<double>());
    if (!v.is_array() || static_cast<int>(v.size()) != size)
        fail(origin, "field \"" + key + "\" must be a number or an array of length " +
                         std::to_string(size));
    Eigen::VectorXd out(size);
    for (int i = 0; i < size; ++i) {
        if (!v[static_cast<std::size_t>(i)].is_number())
            fail(origin, "field \"" + key + "\" has a non-numeric entry");
        out(i) = v[static_cast<std::size_t>(i)].get<double>();
    }
    return out;
}

std::string escape_json(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 8);
    for (const char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

std::string render_vector(const Eigen::VectorXd& v) {
    std::string out = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += format_double(v(i));
    }
    out += "]";
    return out;
}

std::string render_real_matrix(const Eigen::MatrixXd& m) {
    std::string out = "[";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        if (r) out += ",";
        out += "[";
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) out += ",";
            out += format_double(m(r, c));
        }
        out += "]";
    }
    out += "]";
    return out;
}

Eigen::VectorXd vector_from_json(const json& v, const std::string& origin,
                                 const std::string& what) {
    if (!v.is_array()) fail(origin, what + " must be an array");
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) fail(origin, what + " has a non-numeric entry");
        out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    return out;
}

} // namespace

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError(path + ": cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError(path + ": cannot open for writing");
    out << content;
    if (!out) throw ValidationError(path + ": write failed");
}

Scenario parse_scenario_text(const std::string& text, const std::string& origin) {
    const json j = parse_json(text, origin);
    if (!j.is_object()) fail(origin, "scenario file must hold a JSON object");
    reject_unknown_keys(j,
                        {"array", "positions", "num_rf_ports", "num_users", "directions",
                         "beta_lo", "beta_max", "gamma_min", "noise_power", "p_max", "r0",
                         "admittances"},
                        origin, "scenario");

    Scenario scenario;
    const int num_rf_ports = require_int(j, "num_rf_ports", origin);
    const int num_users = require_int(j, "num_users", origin);

    if (j.contains("array") == j.contains("positions"))
        fail(origin, "provide exactly one of \"array\" or \"positions\"");
    if (j.contains("array")) {
        const json& a = j.at("array");
        if (!a.is_object()) fail(origin, "field \"array\" must be an object");
        reject_unknown_keys(a, {"rows", "cols", "spacing"}, origin, "array");
        scenario.geometry = ArrayGeometry::uniform_planar(
            require_int(a, "rows", origin), require_int(a, "cols", origin),
            require_number(a, "spacing", origin), num_rf_ports, num_users);
    } else {
        const json& p = j.at("positions");
        if (!p.is_array() || p.empty()) fail(origin, "field \"positions\" must be a non-empty array");
        scenario.geometry.positions.resize(static_cast<Eigen::Index>(p.size()), 3);
        for (std::size_t l = 0; l < p.size(); ++l) {
            const json& row = p[l];
            if (!row.is_array() || row.size() != 3)
                fail(origin, "each position must be an [x, y, z] triple");
            for (int k = 0; k < 3; ++k) {
                if (!row[static_cast<std::size_t>(k)].is_number())
                    fail(origin, "positions must be numeric");
                scenario.geometry.positions(static_cast<Eigen::Index>(l), k) =
                    row[static_cast<std::size_t>(k)].get<double>();
            }
        }
        scenario.geometry.num_rf_ports = num_rf_ports;
        scenario.geometry.num_users = num_users;
    }

    if (!j.contains("directions") || !j.at("directions").is_array() || j.at("directions").empty())
        fail(origin, "field \"directions\" must be a non-empty array");
    for (const auto& d : j.at("directions")) {
        if (!d.is_object()) fail(origin, "each direction must be an object");
        reject_unknown_keys(d, {"theta", "phi"}, origin, "directions");
        Direction dir;
        dir.theta = require_number(d, "theta", origin);
        dir.phi = require_number(d, "phi", origin);
        scenario.directions.push_back(dir);
    }
    const int D = scenario.num_directions();
    const int M = num_users;

    scenario.beta_lo = j.contains("beta_lo") ? number_or_array(j, "beta_lo", D, origin)
                                             : Eigen::VectorXd::Zero(D);
    if (j.contains("beta_max")) {
        const json& bm = j.at("beta_max");
        if (bm.is_string()) {
            if (bm.get<std::string>() != "inf")
                fail(origin, "field \"beta_max\" accepts only the string \"inf\"");
            scenario.beta_max = std::numeric_limits<double>::infinity();
        } else if (bm.is_number()) {
            scenario.beta_max = bm.get<double>();
        } else {
            fail(origin, "field \"beta_max\" must be a number or \"inf\"");
        }
    }
    if (!j.contains("gamma_min")) fail(origin, "missing field \"gamma_min\"");
    scenario.gamma_min = number_or_array(j, "gamma_min", M, origin);
    scenario.noise_power = require_number(j, "noise_power", origin);
    scenario.p_max = require_number(j, "p_max", origin);
    if (j.contains("r0")) scenario.r0 = require_number(j, "r0", origin);

    if (!j.contains("admittances") || !j.at("admittances").is_object())
        fail(origin, "field \"admittances\" must be an object");
    const json& adm = j.at("admittances");
    reject_unknown_keys(adm, {"synthetic", "file"}, origin, "admittances");
    if (adm.contains("synthetic") == adm.contains("file"))
        fail(origin, "admittances: provide exactly one of \"synthetic\" or \"file\"");
    if (adm.contains("synthetic")) {
        const json& syn = adm.at("synthetic");
        if (!syn.is_object()) fail(origin, "admittances.synthetic must be an object");
        reject_unknown_keys(syn, {"seed", "coupling_scale"}, origin, "admittances.synthetic");
        if (!syn.contains("seed") || !syn.at("seed").is_number_unsigned())
            fail(origin, "admittances.synthetic.seed must be a nonnegative integer");
        const auto seed = syn.at("seed").get<std::uint64_t>();
        const double coupling = syn.contains("coupling_scale")
                                    ? require_number(syn, "coupling_scale", origin)
                                    : 0.2;
        scenario.admittances =
            build_synthetic_admittances(scenario.geometry, seed, coupling, scenario.r0);
    } else {
        const json& file = adm.at("file");
        if (!file.is_string()) fail(origin, "admittances.file must be a path string");
        const AdmittanceFile loaded = load_admittance_file(file.get<std::string>());
        if (loaded.num_directions != D)
            fail(origin, "admittance file declares " + std::to_string(loaded.num_directions) +
                             " directions, scenario has " + std::to_string(D));
        scenario.admittances = loaded.set;
    }

    scenario.validate();
    return scenario;
}

Scenario load_scenario(const std::string& path) {
    return parse_scenario_text(read_text_file(path), path);
}

std::string render_scenario(const Scenario& scenario) {
    std::string out = "{\n";
    out += "  \"positions\": [";
    for (Eigen::Index l = 0; l < scenario.geometry.positions.rows(); ++l) {
        if (l) out += ",";
        out += "\n    [" + format_double(scenario.geometry.positions(l, 0)) + ", " +
               format_double(scenario.geometry.positions(l, 1)) + ", " +
               format_double(scenario.geometry.positions(l, 2)) + "]";
    }
    out += "\n  ],\n";
    out += "  \"num_rf_ports\": " + std::to_string(scenario.num_rf_ports()) + ",\n";
    out += "  \"num_users\": " + std::to_string(scenario.num_users()) + ",\n";
    out += "  \"directions\": [";
    for (int d = 0; d < scenario.num_directions(); ++d) {
        if (d) out += ",";
        const auto& dir = scenario.directions[static_cast<std::size_t>(d)];
        out += "\n    {\"theta\": " + format_double(dir.theta) +
               ", \"phi\": " + format_double(dir.phi) + "}";
    }
    out += "\n  ],\n";
    out += "  \"beta_lo\": " + render_vector(scenario.beta_lo) + ",\n";
    out += std::isfinite(scenario.beta_max)
               ? "  \"beta_max\": " + format_double(scenario.beta_max) + ",\n"
               : std::string("  \"beta_max\": \"inf\",\n");
    out += "  \"gamma_min\": " + render_vector(scenario.gamma_min) + ",\n";
    out += "  \"noise_power\": " + format_double(scenario.noise_power) + ",\n";
    out += "  \"p_max\": " + format_double(scenario.p_max) + ",\n";
    out += "  \"r0\": " + format_double(scenario.r0) + ",\n";
    out += "  \"admittances\": {\"file\": \"__ADM__\"}\n";
    out += "}\n";
    return out;
}

void save_scenario(const Scenario& scenario, const std::string& path) {
    // The matrices travel in a sibling file the JSON points at, so a saved
    // scenario reloads bit-exactly without re-running the synthetic recipe.
    const std::string adm_path = path + ".adm";
    save_admittances(scenario.admittances, scenario.num_directions(), adm_path);
    std::string text = render_scenario(scenario);
    const std::string placeholder = "__ADM__";
    const auto pos = text.find(placeholder);
    text.replace(pos, placeholder.size(), escape_json(adm_path));
    write_text_file(path, text);
}

AlgorithmConfig parse_config_text(const std::string& text, const std::string& origin) {
    const json j = parse_json(text, origin);
    if (!j.is_object()) fail(origin, "config file must hold a JSON object");
    reject_unknown_keys(j,
                        {"max_outer_iters", "analog_steps_per_outer", "objective_tolerance",
                         "rank_one_threshold", "randomization_samples", "trust_rho",
                         "trust_rho_max", "max_shrinks", "seed", "surrogate"},
                        origin, "config");
    AlgorithmConfig config;
    if (j.contains("max_outer_iters")) config.max_outer_iters = require_int(j, "max_outer_iters", origin);
    if (j.contains("analog_steps_per_outer"))
        config.analog_steps_per_outer = require_int(j, "analog_steps_per_outer", origin);
    if (j.contains("objective_tolerance"))
        config.objective_tolerance = require_number(j, "objective_tolerance", origin);
    if (j.contains("rank_one_threshold"))
        config.rank_one_threshold = require_number(j, "rank_one_threshold", origin);
    if (j.contains("randomization_samples"))
        config.randomization_samples = require_int(j, "randomization_samples", origin);
    if (j.contains("trust_rho")) config.trust_rho = require_number(j, "trust_rho", origin);
    if (j.contains("trust_rho_max")) config.trust_rho_max = require_number(j, "trust_rho_max", origin);
    if (j.contains("max_shrinks")) config.max_shrinks = require_int(j, "max_shrinks", origin);
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned())
            fail(origin, "field \"seed\" must be a nonnegative integer");
        config.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("surrogate")) {
        const json& s = j.at("surrogate");
        if (!s.is_string()) fail(origin, "field \"surrogate\" must be a string");
        const std::string name = s.get<std::string>();
        if (name == "convex-restriction") config.surrogate = SurrogateMode::ConvexRestriction;
        else if (name == "as-printed") config.surrogate = SurrogateMode::AsPrinted;
        else fail(origin, "field \"surrogate\" must be \"convex-restriction\" or \"as-printed\"");
    }
    config.validate();
    return config;
}

AlgorithmConfig load_config(const std::string& path) {
    return parse_config_text(read_text_file(path), path);
}

std::string render_trace(const RunResult& result) {
    std::string out = "{\"schema\":\"dmabeam-trace/1\"}\n";
    for (const auto& rec : result.trace) {
        out += "{\"outer\":" + std::to_string(rec.outer) + ",\"stage\":\"" +
               to_string(rec.stage) + "\",\"p_tot\":" + format_double(rec.p_tot) +
               ",\"per_direction\":" + render_vector(rec.per_direction) +
               ",\"per_user_sinr\":" + render_vector(rec.per_user_sinr) +
               ",\"p_t\":" + format_double(rec.p_t) + ",\"bound\":" + format_double(rec.bound) +
               ",\"accepted\":" + (rec.accepted ? "true" : "false") + "}\n";
    }
    out += "{\"termination\":\"" + to_string(result.termination) + "\",\"feasible\":" +
           (result.feasible ? "true" : "false") +
           ",\"final_p_tot\":" + format_double(result.final_p_tot) +
           ",\"final_bound\":" + format_double(result.final_bound) + ",\"detail\":\"" +
           escape_json(result.infeasibility_detail) + "\"}\n";
    return out;
}

void emit_trace(const RunResult& result, const std::string& path) {
    write_text_file(path, render_trace(result));
}

ParsedTrace parse_trace(const std::string& path) {
    const std::string text = read_text_file(path);
    ParsedTrace parsed;
    std::istringstream lines(text);
    std::string line;
    int line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string origin = path + ":" + std::to_string(line_no);
        const json j = parse_json(line, origin);
        if (j.contains("schema")) {
            parsed.schema = j.at("schema").get<std::string>();
        } else if (j.contains("outer")) {
            IterationRecord rec;
            rec.outer = j.at("outer").get<int>();
            const std::string stage = j.at("stage").get<std::string>();
            if (stage != "digital" && stage != "analog") fail(origin, "unknown stage tag");
            rec.stage = stage == "digital" ? Stage::Digital : Stage::Analog;
            rec.p_tot = j.at("p_tot").get<double>();
            rec.per_direction = vector_from_json(j.at("per_direction"), origin, "per_direction");
            rec.per_user_sinr = vector_from_json(j.at("per_user_sinr"), origin, "per_user_sinr");
            rec.p_t = j.at("p_t").get<double>();
            rec.bound = j.at("bound").get<double>();
            rec.accepted = j.at("accepted").get<bool>();
            parsed.records.push_back(std::move(rec));
        } else if (j.contains("termination")) {
            parsed.termination = j.at("termination").get<std::string>();
            parsed.feasible = j.at("feasible").get<bool>();
            parsed.final_p_tot = j.at("final_p_tot").get<double>();
            parsed.final_bound = j.at("final_bound").get<double>();
        } else {
            fail(origin, "unrecognized trace record");
        }
    }
    if (parsed.schema != "dmabeam-trace/1")
        throw ValidationError(path + ": missing or unsupported trace schema");
    return parsed;
}

std::string render_result(const RunResult& result, const Scenario& scenario) {
    const Scenario scen = scenario_with_susceptance(scenario, result.state.y);
    const EffectiveChannelSet channels = effective_channels(scen);
    Eigen::VectorXd per_direction(scen.num_directions());
    for (int d = 0; d < scen.num_directions(); ++d) {
        const auto& dir = scen.directions[static_cast<std::size_t>(d)];
        per_direction(d) = beampattern_gain(scen, channels, result.B, dir.theta, dir.phi);
    }
    Eigen::VectorXd per_user(scen.num_users());
    for (int m = 0; m < scen.num_users(); ++m) per_user(m) = sinr(scen, channels, result.B, m);

    std::string out = "{\n";
    out += "  \"schema\": \"dmabeam-result/1\",\n";
    out += "  \"termination\": \"" + to_string(result.termination) + "\",\n";
    out += std::string("  \"feasible\": ") + (result.feasible ? "true" : "false") + ",\n";
    out += "  \"detail\": \"" + escape_json(result.infeasibility_detail) + "\",\n";
    out += "  \"objective\": " + format_double(result.final_p_tot) + ",\n";
    out += "  \"bound\": " + format_double(result.final_bound) + ",\n";
    out += "  \"p_t\": " + format_double(radiated_power(scen, channels, result.B)) + ",\n";
    out += "  \"per_direction\": " + render_vector(per_direction) + ",\n";
    out += "  \"per_user_sinr\": " + render_vector(per_user) + ",\n";
    out += "  \"susceptance\": " + render_vector(result.state.y) + ",\n";
    out += "  \"beamformer_re\": " + render_real_matrix(result.B.B.real()) + ",\n";
    out += "  \"beamformer_im\": " + render_real_matrix(result.B.B.imag()) + "\n";
    out += "}\n";
    return out;
}

void write_result(const RunResult& result, const Scenario& scenario, const std::string& path) {
    write_text_file(path, render_result(result, scenario));
}

ParsedResult parse_result(const std::string& path) {
    const json j = parse_json(read_text_file(path), path);
    if (!j.is_object() || !j.contains("schema") || j.at("schema") != "dmabeam-result/1")
        throw ValidationError(path + ": not a dmabeam-result/1 file");
    ParsedResult out;
    out.termination = j.at("termination").get<std::string>();
    out.feasible = j.at("feasible").get<bool>();
    out.objective = j.at("objective").get<double>();
    out.bound = j.at("bound").get<double>();
    out.susceptance = vector_from_json(j.at("susceptance"), path, "susceptance");
    const json& re = j.at("beamformer_re");
    const json& im = j.at("beamformer_im");
    if (!re.is_array() || !im.is_array() || re.size() != im.size() || re.empty())
        throw ValidationError(path + ": beamformer blocks are malformed");
    const auto rows = static_cast<Eigen::Index>(re.size());
    const auto cols = static_cast<Eigen::Index>(re[0].size());
    out.beamformer.B.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const Eigen::VectorXd vr = vector_from_json(re[static_cast<std::size_t>(r)], path, "beamformer_re");
        const Eigen::VectorXd vi = vector_from_json(im[static_cast<std::size_t>(r)], path, "beamformer_im");
        if (vr.size() != cols || vi.size() != cols)
            throw ValidationError(path + ": beamformer rows have inconsistent lengths");
        for (Eigen::Index c = 0; c < cols; ++c) out.beamformer.B(r, c) = Cplx(vr(c), vi(c));
    }
    return out;
}

GridSpec parse_grid(const std::string& text) {
    GridSpec grid;
    const auto x = text.find('x');
    if (x == std::string::npos || x == 0 || x + 1 >= text.size())
        throw ValidationError("grid spec must look like <nTheta>x<nPhi>, got \"" + text + "\"");
    try {
        std::size_t used = 0;
        grid.n_theta = std::stoi(text.substr(0, x), &used);
        if (used != x) throw std::invalid_argument("trailing");
        grid.n_phi = std::stoi(text.substr(x + 1), &used);
        if (used != text.size() - x - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw ValidationError("grid spec must look like <nTheta>x<nPhi>, got \"" + text + "\"");
    }
    if (grid.n_theta < 1 || grid.n_phi < 1)
        throw ValidationError("grid sizes must be at least 1");
    return grid;
}

std::string render_beampattern(const Scenario& scenario, const Beamformer& B,
                               const GridSpec& grid) {
    const EffectiveChannelSet channels = effective_channels(scenario);
    std::string out = "theta,phi,gain\n";
    for (int ti = 0; ti < grid.n_theta; ++ti) {
        const double theta =
            grid.n_theta == 1
                ? grid.theta_lo
                : grid.theta_lo + (grid.theta_hi - grid.theta_lo) * ti / (grid.n_theta - 1);
        for (int pi = 0; pi < grid.n_phi; ++pi) {
            // phi wraps, so the grid leaves the upper edge out
            const double phi = grid.phi_lo + (grid.phi_hi - grid.phi_lo) * pi / grid.n_phi;
            const double gain = beampattern_gain(scenario, channels, B, theta, phi);
            out += format_double(theta) + "," + format_double(phi) + "," +
                   format_double(gain) + "\n";
        }
    }
    return out;
}

void export_beampattern(const Scenario& scenario, const Beamformer& B, const GridSpec& grid,
                        const std::string& path) {
    write_text_file(path, render_beampattern(scenario, B, grid));
}

std::string render_oracle_reports(const std::vector<oracle::OracleReport>& reports,
                                  const std::vector<oracle::MutationOutcome>& mutations) {
    std::string out = "{\"schema\":\"dmabeam-oracle/1\"}\n";
    for (const auto& r : reports) {
        out += "{\"identity\":\"" + escape_json(r.identity) + "\",\"trials\":" +
               std::to_string(r.trials) + ",\"max_rel_error\":" + format_double(r.max_rel_error) +
               ",\"tolerance\":" + format_double(r.tolerance) + ",\"passed\":" +
               (r.passed ? "true" : "false") + ",\"flagged\":" + std::to_string(r.flagged) +
               "}\n";
    }
    for (const auto& m : mutations) {
        out += "{\"mutation\":\"" + oracle::to_string(m.mutation) + "\",\"detected\":" +
               (m.detected ? "true" : "false") + ",\"tripped\":[";
        for (std::size_t i = 0; i < m.tripped.size(); ++i) {
            if (i) out += ",";
            out += "\"" + escape_json(m.tripped[i]) + "\"";
        }
        out += "]}\n";
    }
    return out;
}

} // namespace dmabeam::io
