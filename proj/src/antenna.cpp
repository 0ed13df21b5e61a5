#include "cfmimo/antenna.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace cfmimo {

using constants::pi;

namespace {

/// peak - 12 (theta / theta_3db)^2 dB, floored. -3 dB at theta_3db / 2.
double parabolic_gain_db(double off_axis_rad, double peak_dbi, double theta_3db_rad,
                         double min_gain_dbi)
{
    const double ratio = off_axis_rad / theta_3db_rad;
    return std::max(peak_dbi - 12.0 * ratio * ratio, min_gain_dbi);
}

} // namespace

AntennaParams load_antenna_params(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open antenna parameter file: " + path);
    }
    std::map<std::string, double> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::stringstream ss(line);
        std::string profile;
        std::string key;
        std::string value;
        if (!std::getline(ss, profile, ',') || !std::getline(ss, key, ',') ||
            !std::getline(ss, value)) {
            throw std::runtime_error("malformed antenna parameter line: " + line);
        }
        kv[profile + "/" + key] = std::stod(value);
    }
    auto require = [&](const std::string& k) {
        auto it = kv.find(k);
        if (it == kv.end()) {
            throw std::runtime_error("antenna parameter file missing key: " + k);
        }
        return it->second;
    };

    AntennaParams p;
    p.element.peak_gain_dbi = require("element/peak_gain_dbi");
    p.element.theta_3db_rad = deg_to_rad(require("element/theta_3db_deg"));
    p.element.min_gain_dbi = require("element/min_gain_dbi");
    p.vsat.peak_gain_dbi = require("38821-vsat-s-band/peak_gain_dbi");
    p.vsat.theta_3db_rad = deg_to_rad(require("38821-vsat-s-band/theta_3db_deg"));
    p.vsat.min_gain_dbi = require("38821-vsat-s-band/min_gain_dbi");
    p.vsat_noise_temperature_k = require("38821-vsat-s-band/noise_temperature_k");
    p.handheld_gain_dbi = require("handheld/gain_dbi");
    p.handheld_noise_temperature_k = require("handheld/noise_temperature_k");
    return p;
}

std::vector<Eigen::Vector2d> element_positions_wl(const UpaConfig& upa)
{
    std::vector<Eigen::Vector2d> pos;
    pos.reserve(static_cast<std::size_t>(upa.n_elements()));
    const double s = upa.spacing_wavelengths;
    for (int r = 0; r < upa.n_rows; ++r) {
        for (int c = 0; c < upa.n_cols; ++c) {
            pos.emplace_back((c - 0.5 * (upa.n_cols - 1)) * s, (r - 0.5 * (upa.n_rows - 1)) * s);
        }
    }
    return pos;
}

cplx element_gain(double u, double v, const ElementPatternParams& params)
{
    const double rho2 = u * u + v * v;
    if (rho2 > 1.0) {
        return {0.0, 0.0};
    }
    const double theta = std::asin(std::sqrt(rho2));
    const double g_db =
        parabolic_gain_db(theta, params.peak_gain_dbi, params.theta_3db_rad, params.min_gain_dbi);
    return {db_to_amplitude(g_db), 0.0};
}

Eigen::VectorXcd array_response(const UpaConfig& upa, double u, double v)
{
    const cplx g_e = element_gain(u, v, upa.element);
    const auto positions = element_positions_wl(upa);
    Eigen::VectorXcd out(static_cast<Eigen::Index>(positions.size()));
    for (std::size_t n = 0; n < positions.size(); ++n) {
        const double phase = 2.0 * pi * (positions[n].x() * u + positions[n].y() * v);
        out(static_cast<Eigen::Index>(n)) = g_e * std::polar(1.0, phase);
    }
    return out;
}

cplx receiver_gain(TerminalClass terminal_class, const Vec3& user_ecef, const Vec3& node_pos,
                   const Vec3& pointed_node_pos, const AntennaParams& params)
{
    if (terminal_class == TerminalClass::Handheld) {
        return {db_to_amplitude(params.handheld_gain_dbi), 0.0};
    }
    const Vec3 to_node = (node_pos - user_ecef).normalized();
    const Vec3 to_pointed = (pointed_node_pos - user_ecef).normalized();
    const double off = std::acos(std::clamp(to_node.dot(to_pointed), -1.0, 1.0));
    const double g_db = parabolic_gain_db(off, params.vsat.peak_gain_dbi,
                                          params.vsat.theta_3db_rad, params.vsat.min_gain_dbi);
    return {db_to_amplitude(g_db), 0.0};
}

int hex_lattice_count(int n_tiers)
{
    return 3 * n_tiers * (n_tiers + 1) + 1;
}

BeamLattice build_lattice(int n_tiers, double theta_3db_rad, const NodeState& node,
                          const EarthModel& earth)
{
    if (n_tiers < 0) {
        throw std::invalid_argument("tier count must be non-negative");
    }
    BeamLattice lattice;
    lattice.node_id = node.node_id;
    lattice.n_tiers = n_tiers;
    lattice.theta_3db_rad = theta_3db_rad;
    lattice.spacing_uv = 2.0 * std::sin(0.5 * theta_3db_rad);

    const double s = lattice.spacing_uv;
    auto push_beam = [&](int q, int r) {
        Beam b;
        b.node_id = node.node_id;
        b.local_id = lattice.n_beams();
        b.axial_q = q;
        b.axial_r = r;
        b.u = s * (q + 0.5 * r);
        b.v = s * (std::sqrt(3.0) / 2.0) * r;
        b.ground_ecef = uv_to_ground(earth, node, b.u, b.v);
        lattice.beams.push_back(b);
    };

    push_beam(0, 0);
    // Ring walk in axial coordinates, one tier at a time.
    static constexpr int dirs[6][2] = {{1, 0}, {1, -1}, {0, -1}, {-1, 0}, {-1, 1}, {0, 1}};
    for (int k = 1; k <= n_tiers; ++k) {
        int q = -k;
        int r = k;
        for (const auto& dir : dirs) {
            for (int step = 0; step < k; ++step) {
                push_beam(q, r);
                q += dir[0];
                r += dir[1];
            }
        }
    }
    return lattice;
}

} // namespace cfmimo
