#include "cfmimo/channel.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cfmimo {

using constants::pi;

LossTables LossTables::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open loss table file: " + path);
    }
    LossTables t;
    std::string line;
    bool header_skipped = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        if (!header_skipped) {
            header_skipped = true;
            continue;
        }
        std::stringstream ss(line);
        std::string env;
        std::string field;
        if (!std::getline(ss, env, ',')) {
            throw std::runtime_error("malformed loss table line: " + line);
        }
        double values[7];
        for (double& value : values) {
            if (!std::getline(ss, field, ',')) {
                throw std::runtime_error("malformed loss table line: " + line);
            }
            value = std::stod(field);
        }
        LossTableRow row;
        row.p_los = values[1];
        row.sigma_los_db = values[2];
        row.sigma_nlos_db = values[3];
        row.clutter_loss_db = values[4];
        row.atmospheric_db = values[5];
        row.scintillation_db = values[6];
        t.by_env_[env][static_cast<int>(values[0])] = row;
    }
    t.validate();
    return t;
}

LossTables LossTables::from_rows(const std::string& environment,
                                 const std::map<int, LossTableRow>& rows)
{
    LossTables t;
    t.by_env_[environment] = rows;
    t.validate();
    return t;
}

void LossTables::validate() const
{
    for (const auto& [env, rows] : by_env_) {
        for (int bin = 10; bin <= 90; bin += 10) {
            auto it = rows.find(bin);
            if (it == rows.end()) {
                throw std::runtime_error("loss table for " + env + " missing elevation bin " +
                                         std::to_string(bin));
            }
            const LossTableRow& r = it->second;
            if (r.p_los < 0.0 || r.p_los > 1.0) {
                throw std::runtime_error("loss table probability out of [0,1] in " + env);
            }
            if (r.clutter_loss_db < 0.0 || r.atmospheric_db < 0.0 || r.scintillation_db < 0.0 ||
                r.sigma_los_db < 0.0 || r.sigma_nlos_db < 0.0) {
                throw std::runtime_error("negative loss entry in " + env);
            }
        }
    }
}

int LossTables::elevation_bin_deg(double elevation_rad)
{
    const double deg = rad_to_deg(elevation_rad);
    if (deg < 5.0) {
        throw std::out_of_range("elevation out of table domain");
    }
    const int bin = static_cast<int>(std::lround(deg / 10.0)) * 10;
    return std::clamp(bin, 10, 90);
}

bool LossTables::has_environment(const std::string& environment) const
{
    return by_env_.count(environment) > 0;
}

const LossTableRow& LossTables::lookup(const std::string& environment,
                                       double elevation_rad) const
{
    auto env_it = by_env_.find(environment);
    if (env_it == by_env_.end()) {
        throw std::out_of_range("no loss table for environment: " + environment);
    }
    return env_it->second.at(elevation_bin_deg(elevation_rad));
}

cplx channel_coefficient(const ChannelCoefficientTerms& terms, double wavelength_m)
{
    if (terms.slant_range_m <= 0.0) {
        throw std::invalid_argument("degenerate slant range");
    }
    const double d_wl = terms.slant_range_m / wavelength_m;
    const double denom =
        4.0 * pi * d_wl * std::sqrt(terms.additional_loss_linear * terms.noise_power_w);
    const double phase = -2.0 * pi * std::fmod(d_wl, 1.0) - terms.phase_misalignment_rad;
    return terms.tx_gain * terms.rx_gain * std::polar(1.0 / denom, phase);
}

void ChannelModel::assign_los_state(std::vector<UserTerminal>& users,
                                    const GeometrySnapshot& snapshot, std::uint64_t seed,
                                    std::uint64_t drop) const
{
    for (std::size_t i = 0; i < users.size(); ++i) {
        if (p_.mode == ChannelMode::ClearSky) {
            users[i].los_state = LosState::Los;
            continue;
        }
        const double best_elevation = snapshot.elevation_rad.row(static_cast<Eigen::Index>(i))
                                          .maxCoeff();
        const LossTableRow& row = p_.tables.lookup(p_.environment, best_elevation);
        RngStream rng = RngStream::from_path(
            seed, {drop, rng_purpose::los_assign, static_cast<std::uint64_t>(users[i].user_id)});
        users[i].los_state = rng.uniform() < row.p_los ? LosState::Los : LosState::Nlos;
    }
}

double ChannelModel::sample_additional_loss(const UserTerminal& user, int user_row,
                                            int node_index, const GeometrySnapshot& snapshot,
                                            RngStream& rng) const
{
    if (p_.mode == ChannelMode::ClearSky) {
        return 1.0;
    }
    if (user.los_state == LosState::Unassigned) {
        throw std::logic_error("LOS state not assigned before loss sampling");
    }
    const double elevation = snapshot.elevation_rad(user_row, node_index);
    const LossTableRow& row = p_.tables.lookup(p_.environment, elevation);
    const bool los = user.los_state == LosState::Los;
    const double sigma = los ? row.sigma_los_db : row.sigma_nlos_db;
    double loss_db = sigma * rng.normal() + row.atmospheric_db + row.scintillation_db;
    if (!los) {
        loss_db += row.clutter_loss_db;
    }
    return db_to_linear(loss_db);
}

Eigen::RowVectorXcd ChannelModel::csi_row(TerminalClass terminal_class,
                                          double noise_temperature_k, const Vec3& user_ecef,
                                          const Swarm& swarm,
                                          const std::vector<UserNodeGeom>& geom,
                                          const std::vector<double>& loss_linear,
                                          const std::vector<double>& phase_rad,
                                          RpErrorDraw* rp_error) const
{
    const int n_node = swarm.n_node();
    const int n_f = p_.upa.n_elements();
    Eigen::RowVectorXcd row(static_cast<Eigen::Index>(n_node) * n_f);
    row.setZero();

    // VSAT pointing: the node seen under the highest elevation (lowest id on
    // ties). Handhelds ignore this.
    int pointed = 0;
    for (int s = 1; s < n_node; ++s) {
        if (geom[s].elevation_rad > geom[pointed].elevation_rad) {
            pointed = s;
        }
    }
    const Vec3 pointed_pos = swarm.nodes[static_cast<std::size_t>(pointed)].position_ecef;

    const double noise_w = noise_power_w(noise_temperature_k);
    for (int s = 0; s < n_node; ++s) {
        // Below the local horizon the node contributes nothing.
        if (geom[s].elevation_rad <= 0.0) {
            continue;
        }
        Eigen::VectorXcd tx = array_response(p_.upa, geom[s].u, geom[s].v);
        if (rp_error != nullptr && rp_error->epsilon_rp > 0.0) {
            for (Eigen::Index n = 0; n < tx.size(); ++n) {
                tx(n) = perturb_radiation_pattern(tx(n), rp_error->epsilon_rp,
                                                  rp_error->folded_amplitude, *rp_error->rng);
            }
        }
        const Vec3 node_pos = swarm.nodes[static_cast<std::size_t>(s)].position_ecef;
        const cplx g_rx =
            receiver_gain(terminal_class, user_ecef, node_pos, pointed_pos, p_.antenna);

        const double d_wl = geom[s].slant_range_m / p_.wavelength_m;
        if (d_wl <= 0.0) {
            throw std::invalid_argument("degenerate slant range");
        }
        const double denom = 4.0 * pi * d_wl * std::sqrt(loss_linear[s] * noise_w);
        const cplx scale =
            g_rx * std::polar(1.0 / denom, -2.0 * pi * std::fmod(d_wl, 1.0) - phase_rad[s]);
        row.segment(static_cast<Eigen::Index>(s) * n_f, n_f) = scale * tx;
    }
    return row;
}

ChannelMatrix ChannelModel::assemble(const std::vector<int>& scheduled_user_indices,
                                     const std::vector<UserTerminal>& users, const Swarm& swarm,
                                     const GeometrySnapshot& snapshot, std::uint64_t seed,
                                     std::uint64_t drop) const
{
    if (scheduled_user_indices.empty()) {
        throw std::invalid_argument("cannot assemble a channel matrix for zero users");
    }
    const int n_node = swarm.n_node();
    const int n_f = p_.upa.n_elements();
    const auto tag_word = static_cast<std::uint64_t>(snapshot.time_tag);

    ChannelMatrix h;
    h.time_tag = snapshot.time_tag;
    h.n_node = n_node;
    h.n_f = n_f;
    h.entries.resize(static_cast<Eigen::Index>(scheduled_user_indices.size()),
                     static_cast<Eigen::Index>(n_node) * n_f);

    for (std::size_t k = 0; k < scheduled_user_indices.size(); ++k) {
        const int idx = scheduled_user_indices[k];
        const UserTerminal& user = users[static_cast<std::size_t>(idx)];
        h.user_ids.push_back(user.user_id);

        std::vector<UserNodeGeom> geom(static_cast<std::size_t>(n_node));
        std::vector<double> loss(static_cast<std::size_t>(n_node), 1.0);
        std::vector<double> phase(static_cast<std::size_t>(n_node), 0.0);
        for (int s = 0; s < n_node; ++s) {
            geom[s].slant_range_m = snapshot.slant_range_m(idx, s);
            geom[s].elevation_rad = snapshot.elevation_rad(idx, s);
            geom[s].u = snapshot.uv[static_cast<std::size_t>(s)](idx, 0);
            geom[s].v = snapshot.uv[static_cast<std::size_t>(s)](idx, 1);

            if (p_.mode != ChannelMode::ClearSky) {
                RngStream shadow = RngStream::from_path(
                    seed, {drop, rng_purpose::shadowing, tag_word,
                           static_cast<std::uint64_t>(user.user_id),
                           static_cast<std::uint64_t>(s)});
                loss[s] = sample_additional_loss(user, idx, s, snapshot, shadow);
            }
            if (p_.phase_misalignment_sigma_rad > 0.0 && n_node > 1) {
                RngStream ph = RngStream::from_path(
                    seed, {drop, rng_purpose::phase_misalignment, tag_word,
                           static_cast<std::uint64_t>(user.user_id),
                           static_cast<std::uint64_t>(s)});
                phase[s] = std::remainder(p_.phase_misalignment_sigma_rad * ph.normal(),
                                          2.0 * pi);
            }
        }
        const Vec3 user_ecef =
            geodetic_to_ecef(p_.earth, user.lat_rad, user.lon_rad, user.alt_m);
        h.entries.row(static_cast<Eigen::Index>(k)) = csi_row(
            user.terminal_class, user.noise_temperature_k, user_ecef, swarm, geom, loss, phase);
    }
    return h;
}

} // namespace cfmimo
