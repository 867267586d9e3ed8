// SPDX-License-Identifier: Apache-2.0
//
// dmabeam: hybrid beamforming for dynamic-metasurface ISAC arrays

#include "dmabeam/em_model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "dmabeam/errors.hpp"
#include "dmabeam/rng.hpp"

namespace dmabeam {

ArrayGeometry ArrayGeometry::uniform_planar(int rows, int cols, double spacing,
                                            int num_rf_ports, int num_users) {
    if (rows < 1 || cols < 1) throw ValidationError("uniform_planar: rows and cols must be >= 1");
    if (spacing <= 0.0) throw ValidationError("uniform_planar: spacing must be > 0");
    ArrayGeometry g;
    g.positions.resize(static_cast<Eigen::Index>(rows) * cols, 3);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            Eigen::Index l = static_cast<Eigen::Index>(r) * cols + c;
            g.positions(l, 0) = c * spacing;
            g.positions(l, 1) = r * spacing;
            g.positions(l, 2) = 0.0;
        }
    }
    g.num_rf_ports = num_rf_ports;
    g.num_users = num_users;
    return g;
}

void ArrayGeometry::validate() const {
    if (num_elements() < 1) throw ValidationError("geometry: at least one element required");
    if (num_rf_ports < 1) throw ValidationError("geometry: num_rf_ports must be >= 1");
    if (num_users < 1) throw ValidationError("geometry: num_users must be >= 1");
    for (Eigen::Index a = 0; a < positions.rows(); ++a) {
        if (!positions.row(a).allFinite())
            throw ValidationError("geometry: non-finite element position");
        for (Eigen::Index b = a + 1; b < positions.rows(); ++b) {
            if ((positions.row(a) - positions.row(b)).norm() < 1e-12)
                throw ValidationError("geometry: elements " + std::to_string(a) + " and " +
                                      std::to_string(b) + " coincide");
        }
    }
}

void Scenario::validate() const {
    geometry.validate();
    const int el = num_elements();
    const int np = num_rf_ports();
    const int nu = num_users();

    auto check_shape = [](const Eigen::MatrixXcd& m, int rows, int cols, const char* name) {
        if (m.rows() != rows || m.cols() != cols)
            throw ValidationError(std::string("admittances: ") + name + " must be " +
                                  std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
                                  std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
        if (!m.allFinite()) throw ValidationError(std::string("admittances: ") + name + " has non-finite entries");
    };
    check_shape(admittances.y_tt, np, np, "y_tt");
    check_shape(admittances.y_s, el, el, "y_s");
    check_shape(admittances.y_ss, el, el, "y_ss");
    check_shape(admittances.y_st, el, np, "y_st");
    check_shape(admittances.y_r, nu, nu, "y_r");
    check_shape(admittances.y_rr, nu, nu, "y_rr");
    check_shape(admittances.y_rs, nu, el, "y_rs");

    if (directions.empty()) throw ValidationError("directions: at least one direction required");
    for (const auto& d : directions) {
        if (!std::isfinite(d.theta) || !std::isfinite(d.phi))
            throw ValidationError("directions: non-finite angle");
    }
    if (beta_lo.size() != num_directions())
        throw ValidationError("beta_lo: expected one value per direction");
    if ((beta_lo.array() < 0.0).any()) throw ValidationError("beta_lo: values must be >= 0");
    if (std::isnan(beta_max) || beta_max < 0.0)
        throw ValidationError("beta_max: must be >= 0");
    if ((beta_lo.array() > beta_max).any())
        throw ValidationError("beta_lo: lower beampattern bound exceeds beta_max");
    if (gamma_min.size() != nu) throw ValidationError("gamma_min: expected one value per user");
    if ((gamma_min.array() <= 0.0).any()) throw ValidationError("gamma_min: values must be > 0");
    if (!(noise_power > 0.0)) throw ValidationError("noise_power: must be > 0");
    if (!(p_max > 0.0)) throw ValidationError("p_max: must be > 0");
    if (r0 < 0.0) throw ValidationError("r0: must be >= 0");
    for (int l = 0; l < el; ++l) {
        if (std::abs(admittances.y_s(l, l).real() - r0) > 1e-9)
            throw ValidationError("y_s: diagonal real part does not match r0");
    }
}

SteeringVector steering_vector(const ArrayGeometry& geometry, double theta, double phi) {
    const double st = std::sin(theta);
    const double ct = std::cos(theta);
    const double cp = std::cos(phi);
    const double sp = std::sin(phi);
    SteeringVector a;
    a.entries.resize(geometry.num_elements());
    for (Eigen::Index l = 0; l < geometry.positions.rows(); ++l) {
        double phase = 2.0 * std::numbers::pi *
                       (geometry.positions(l, 0) * st * cp + geometry.positions(l, 1) * st * sp +
                        geometry.positions(l, 2) * ct);
        a.entries(l) = Cplx(std::cos(phase), std::sin(phase));
    }
    return a;
}

AdmittanceSet build_synthetic_admittances(const ArrayGeometry& geometry, std::uint64_t seed,
                                          double coupling_scale, double r0) {
    if (coupling_scale < 0.0)
        throw ValidationError("build_synthetic_admittances: coupling_scale must be >= 0");
    if (r0 < 0.0) throw ValidationError("build_synthetic_admittances: r0 must be >= 0");
    geometry.validate();

    const int el = geometry.num_elements();
    const int np = geometry.num_rf_ports;
    const int nu = geometry.num_users;
    Rng root(seed);
    // One substream per matrix so adding draws to one block cannot shift
    // the others.
    Rng r_tt = root.stream(1), r_s = root.stream(2), r_ss = root.stream(3);
    Rng r_st = root.stream(4), r_r = root.stream(5), r_rr = root.stream(6), r_rs = root.stream(7);

    AdmittanceSet adm;

    adm.y_tt = Eigen::MatrixXcd::Zero(np, np);
    for (int n = 0; n < np; ++n) adm.y_tt(n, n) = Cplx(0.0, r_tt.uniform(0.5, 1.5));

    adm.y_s = Eigen::MatrixXcd::Zero(el, el);
    for (int l = 0; l < el; ++l) adm.y_s(l, l) = Cplx(r0, r_s.uniform(-0.5, 0.5));

    // Diagonal conductance in (1, 1.5); couplings decay with distance and are
    // then rescaled so each row of Re(y_ss) keeps 40% diagonal dominance.
    adm.y_ss = Eigen::MatrixXcd::Zero(el, el);
    for (int l = 0; l < el; ++l)
        adm.y_ss(l, l) = Cplx(r_ss.uniform(1.0, 1.5), r_ss.uniform(-0.5, 0.5));
    for (int a = 0; a < el; ++a) {
        for (int b = a + 1; b < el; ++b) {
            double dist = (geometry.positions.row(a) - geometry.positions.row(b)).norm();
            double mag = coupling_scale / (1.0 + dist);
            Cplx v(mag * r_ss.uniform(-1.0, 1.0), mag * r_ss.uniform(-1.0, 1.0));
            adm.y_ss(a, b) = v;
            adm.y_ss(b, a) = v;
        }
    }
    double shrink = 1.0;
    for (int a = 0; a < el; ++a) {
        double off = 0.0;
        for (int b = 0; b < el; ++b)
            if (b != a) off += std::abs(adm.y_ss(a, b).real());
        if (off > 0.0) shrink = std::min(shrink, 0.6 * adm.y_ss(a, a).real() / off);
    }
    if (shrink < 1.0) {
        for (int a = 0; a < el; ++a)
            for (int b = 0; b < el; ++b)
                if (b != a) adm.y_ss(a, b) *= shrink;
    }

    adm.y_st = Eigen::MatrixXcd::Zero(el, np);
    for (int l = 0; l < el; ++l)
        for (int n = 0; n < np; ++n) adm.y_st(l, n) = Cplx(0.0, r_st.uniform(-1.0, 1.0));

    // Receive-side blocks: diagonally dominant real parts keep y_r + y_rr
    // comfortably invertible.
    auto receive_block = [nu](Rng& rng) {
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(nu, nu);
        double off_scale = 0.15 / std::max(1, nu - 1);
        for (int a = 0; a < nu; ++a)
            m(a, a) = Cplx(rng.uniform(0.5, 1.0), rng.uniform(-0.25, 0.25));
        for (int a = 0; a < nu; ++a)
            for (int b = 0; b < nu; ++b)
                if (a != b)
                    m(a, b) = Cplx(off_scale * rng.uniform(-1.0, 1.0),
                                   off_scale * rng.uniform(-1.0, 1.0));
        return m;
    };
    adm.y_r = receive_block(r_r);
    adm.y_rr = receive_block(r_rr);

    adm.y_rs = Eigen::MatrixXcd::Zero(nu, el);
    double rs_scale = 1.0 / std::sqrt(static_cast<double>(el));
    for (int m = 0; m < nu; ++m)
        for (int l = 0; l < el; ++l)
            adm.y_rs(m, l) =
                Cplx(rs_scale * r_rs.uniform(-1.0, 1.0), rs_scale * r_rs.uniform(-1.0, 1.0));

    // The dominance construction makes these unreachable in practice, but the
    // contract promises a hard rejection rather than a degenerate model.
    auto cond = [](const Eigen::MatrixXcd& m) {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
        const auto& sv = svd.singularValues();
        return sv(0) / sv(sv.size() - 1);
    };
    if (cond(adm.y_s + adm.y_ss) > 1e12 || cond(adm.y_r + adm.y_rr) > 1e12)
        throw ValidationError("build_synthetic_admittances: degenerate model, resample seed");

    return adm;
}

bool AdmittanceReport::all_passed() const {
    for (const auto& c : checks)
        if (!c.passed) return false;
    return true;
}

const AdmittanceCheck* AdmittanceReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

AdmittanceReport validate_admittances(const AdmittanceSet& adm, double eps) {
    AdmittanceReport report;
    auto add = [&](const std::string& name, double residual) {
        report.checks.push_back({name, residual, residual <= eps});
    };

    double tt_res = 0.0;
    for (Eigen::Index a = 0; a < adm.y_tt.rows(); ++a)
        for (Eigen::Index b = 0; b < adm.y_tt.cols(); ++b)
            tt_res = std::max(tt_res, a == b ? std::abs(adm.y_tt(a, b).real())
                                             : std::abs(adm.y_tt(a, b)));
    add("y_tt imaginary diagonal", tt_res);

    add("y_st imaginary", adm.y_st.size() ? adm.y_st.real().cwiseAbs().maxCoeff() : 0.0);

    add("y_ss symmetric",
        adm.y_ss.size() ? (adm.y_ss - adm.y_ss.transpose()).cwiseAbs().maxCoeff() : 0.0);

    // Diagonal with one common nonnegative real part. The residual mixes the
    // off-diagonal mass, the spread around the mean real part, and any
    // negative mean, so a single number still pinpoints the defect size.
    double s_res = 0.0;
    double mean_r = 0.0;
    for (Eigen::Index l = 0; l < adm.y_s.rows(); ++l) mean_r += adm.y_s(l, l).real();
    if (adm.y_s.rows() > 0) mean_r /= static_cast<double>(adm.y_s.rows());
    for (Eigen::Index a = 0; a < adm.y_s.rows(); ++a) {
        for (Eigen::Index b = 0; b < adm.y_s.cols(); ++b) {
            if (a == b)
                s_res = std::max(s_res, std::abs(adm.y_s(a, a).real() - mean_r));
            else
                s_res = std::max(s_res, std::abs(adm.y_s(a, b)));
        }
    }
    s_res = std::max(s_res, std::max(0.0, -mean_r));
    add("y_s diagonal with common nonnegative real part", s_res);

    auto invert_margin = [](const Eigen::MatrixXcd& m) {
        if (m.size() == 0) return 1.0;
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
        const auto& sv = svd.singularValues();
        double smax = sv(0);
        if (smax == 0.0) return 1.0;
        return std::max(0.0, (1e-9 * smax - sv(sv.size() - 1)) / smax);
    };
    add("y_s + y_ss invertible", invert_margin(adm.y_s + adm.y_ss));
    add("y_r + y_rr invertible", invert_margin(adm.y_r + adm.y_rr));

    return report;
}

namespace {

void write_matrix(std::FILE* f, const char* name, const Eigen::MatrixXcd& m) {
    std::fprintf(f, "%s\n", name);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            std::fprintf(f, "%s%.17g %.17g", c == 0 ? "" : " ", m(r, c).real(), m(r, c).imag());
        }
        std::fprintf(f, "\n");
    }
}

struct LineReader {
    std::ifstream in;
    int line_no = 0;
    std::string path;

    std::string next() {
        std::string line;
        while (std::getline(in, line)) {
            ++line_no;
            // Allow blank separator lines between blocks.
            if (line.find_first_not_of(" \t\r") != std::string::npos) return line;
        }
        throw ValidationError(path + ": unexpected end of file at line " +
                              std::to_string(line_no));
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ValidationError(path + ":" + std::to_string(line_no) + ": " + what);
    }
};

Eigen::MatrixXcd read_matrix(LineReader& reader, const std::string& name, int rows, int cols) {
    std::string header = reader.next();
    std::istringstream hs(header);
    std::string got;
    hs >> got;
    if (got != name) reader.fail("expected block '" + name + "', found '" + got + "'");
    Eigen::MatrixXcd m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        std::istringstream ls(reader.next());
        for (int c = 0; c < cols; ++c) {
            double re, im;
            if (!(ls >> re >> im))
                reader.fail("block '" + name + "': expected " + std::to_string(2 * cols) +
                            " numbers in row " + std::to_string(r));
            m(r, c) = Cplx(re, im);
        }
        double extra;
        if (ls >> extra)
            reader.fail("block '" + name + "': trailing numbers in row " + std::to_string(r));
    }
    return m;
}

} // namespace

void save_admittances(const AdmittanceSet& set, int num_directions, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw ValidationError("cannot open for writing: " + path);
    std::fprintf(f, "%d %d %d %d\n", static_cast<int>(set.y_s.rows()),
                 static_cast<int>(set.y_st.cols()), static_cast<int>(set.y_r.rows()),
                 num_directions);
    write_matrix(f, "Y_tt", set.y_tt);
    write_matrix(f, "Y_s", set.y_s);
    write_matrix(f, "Y_ss", set.y_ss);
    write_matrix(f, "Y_st", set.y_st);
    write_matrix(f, "Y_r", set.y_r);
    write_matrix(f, "Y_rr", set.y_rr);
    write_matrix(f, "Y_rs", set.y_rs);
    std::fclose(f);
}

AdmittanceFile load_admittance_file(const std::string& path) {
    LineReader reader;
    reader.path = path;
    reader.in.open(path);
    if (!reader.in) throw ValidationError("cannot open: " + path);

    std::istringstream hs(reader.next());
    int el, np, nu, nd;
    if (!(hs >> el >> np >> nu >> nd)) reader.fail("header must be 'L N M D'");
    if (el < 1 || np < 1 || nu < 1 || nd < 1) reader.fail("header dimensions must be >= 1");

    AdmittanceFile file;
    file.num_directions = nd;
    file.set.y_tt = read_matrix(reader, "Y_tt", np, np);
    file.set.y_s = read_matrix(reader, "Y_s", el, el);
    file.set.y_ss = read_matrix(reader, "Y_ss", el, el);
    file.set.y_st = read_matrix(reader, "Y_st", el, np);
    file.set.y_r = read_matrix(reader, "Y_r", nu, nu);
    file.set.y_rr = read_matrix(reader, "Y_rr", nu, nu);
    file.set.y_rs = read_matrix(reader, "Y_rs", nu, el);
    return file;
}

AdmittanceSet load_admittances(const std::string& path) {
    return load_admittance_file(path).set;
}

Scenario scenario_with_susceptance(const Scenario& scenario, const Eigen::VectorXd& y) {
    if (y.size() != scenario.num_elements())
        throw ValidationError("scenario_with_susceptance: susceptance length mismatch");
    Scenario out = scenario;
    out.admittances.y_s = Eigen::MatrixXcd::Zero(y.size(), y.size());
    for (Eigen::Index l = 0; l < y.size(); ++l)
        out.admittances.y_s(l, l) = Cplx(scenario.r0, y(l));
    return out;
}

} // namespace dmabeam
