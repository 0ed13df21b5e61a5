#include "cfmimo/engine.hpp"

#include "cfmimo/rng.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace cfmimo {

namespace fs = std::filesystem;

double aging_interval_ms(const LatencyBudget& b, ComputeArch arch)
{
    for (double v : {b.tau_user_ms, b.tau_feeder_dl_ms, b.tau_feeder_ul_ms, b.tau_p_ms,
                     b.tau_rout_ms, b.tau_ad_ms}) {
        if (v < 0.0) {
            throw std::invalid_argument("latency terms must be non-negative");
        }
    }
    if (arch == ComputeArch::Obc) {
        return b.tau_user_ms + b.tau_p_ms + b.tau_ad_ms;
    }
    return b.tau_user_ms + b.tau_feeder_dl_ms + b.tau_feeder_ul_ms + b.tau_p_ms + b.tau_rout_ms +
           b.tau_ad_ms;
}

long signalling_overhead_bits(int n_f, OverheadKind kind)
{
    if (n_f < 1) {
        throw std::invalid_argument("n_f must be at least 1");
    }
    return kind == OverheadKind::Csi ? 64L * n_f : 48L;
}

namespace {

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

UpaConfig make_upa(const ScenarioConfig& config, const AntennaParams& params)
{
    UpaConfig upa;
    upa.n_rows = config.antenna.n_rows;
    upa.n_cols = config.antenna.n_cols;
    upa.spacing_wavelengths = config.antenna.spacing_wavelengths;
    upa.element = params.element;
    return upa;
}

} // namespace

Deployment build_deployment(const ScenarioConfig& config)
{
    config.validate();

    EarthModel earth{config.geom.earth_radius_km * 1e3};
    const AntennaParams antenna = load_antenna_params(config.antenna.params_file);
    const UpaConfig upa = make_upa(config, antenna);

    const double theta_3db = config.antenna.theta_3db_deg
                                 ? deg_to_rad(*config.antenna.theta_3db_deg)
                                 : upa.array_theta_3db_rad();
    const double spacing_uv = 2.0 * std::sin(0.5 * theta_3db);
    const double center_lat = deg_to_rad(config.geom.center_lat_deg);
    const double center_lon = deg_to_rad(config.geom.center_lon_deg);
    const double altitude_m = config.geom.altitude_km * 1e3;

    // Default along-track spacing: the two lattices abut (slightly
    // interpenetrating at the border), i.e. nadirs separated by the ground
    // arc spanned by 2 T beam steps.
    double spacing_m = 0.0;
    if (config.geom.n_node > 1) {
        if (config.geom.node_spacing_km) {
            spacing_m = *config.geom.node_spacing_km * 1e3;
        } else {
            const Swarm probe = make_swarm(earth, altitude_m, 1, 0.0, center_lat, center_lon);
            const double uv_off =
                std::max(2 * config.lattice.n_tiers, 1) * spacing_uv;
            if (uv_off >= earth.radius_m / (earth.radius_m + altitude_m)) {
                throw std::invalid_argument(
                    "default node spacing falls outside the field of view; set "
                    "geom.node_spacing_km explicitly");
            }
            const Vec3 edge = uv_to_ground(earth, probe.nodes[0], uv_off, 0.0);
            const Vec3 nadir = earth.radius_m * probe.nodes[0].position_ecef.normalized();
            spacing_m = central_angle(earth, nadir, edge) * earth.radius_m;
        }
    }

    Deployment dep{.earth = earth,
                   .swarm_t0 = make_swarm(earth, altitude_m, config.geom.n_node, spacing_m,
                                          center_lat, center_lon),
                   .swarm_t1 = {},
                   .lattices = {},
                   .beams = {},
                   .mask = {},
                   .region = CoverageRegion::disc(earth, center_lat, center_lon, 1.0),
                   .model = ChannelModel{{}},
                   .theta_3db_rad = theta_3db,
                   .p_t_w = config.p_t_w(),
                   .p_t_node_w = 0.0,
                   .budget = {},
                   .noise_temperature_k = 0.0,
                   .shannon = {}};
    dep.swarm_t1 = propagate_swarm(dep.swarm_t0, config.delta_t_ms * 1e-3);

    for (const auto& node : dep.swarm_t0.nodes) {
        dep.lattices.push_back(build_lattice(config.lattice.n_tiers, theta_3db, node, earth));
    }
    dep.beams = collect_swarm_beams(dep.lattices);
    dep.mask = activate_beams(dep.beams, dep.swarm_t0, spacing_uv);

    const int ref_tiers = config.lattice.n_tiers_single_ref.value_or(config.lattice.n_tiers);
    dep.p_t_node_w = scale_node_power(dep.p_t_w, hex_lattice_count(ref_tiers), dep.mask.n_active,
                                      config.geom.n_node);
    dep.budget = PowerBudget{dep.p_t_node_w, config.geom.n_node, upa.n_elements()};

    // Coverage region: convex hull of the per-node lattice envelopes (outer
    // beam centers pushed out by half a beam step), or the configured disc.
    if (config.geom.area_kind == GeomConfig::AreaKind::Disc) {
        dep.region = CoverageRegion::disc(earth, center_lat, center_lon,
                                          config.geom.area_disc_radius_km * 1e3);
    } else {
        const double rc = (config.lattice.n_tiers + 0.5) * spacing_uv;
        std::vector<Eigen::Vector2d> corners;
        for (const auto& node : dep.swarm_t0.nodes) {
            for (int k = 0; k < 6; ++k) {
                const double ang = deg_to_rad(60.0 * k);
                const Vec3 g = uv_to_ground(earth, node, rc * std::cos(ang), rc * std::sin(ang));
                double lat = 0.0;
                double lon = 0.0;
                double alt = 0.0;
                ecef_to_geodetic(earth, g, lat, lon, alt);
                corners.push_back(tangent_plane_en(earth, center_lat, center_lon, lat, lon));
            }
        }
        // Andrew's monotone chain.
        std::sort(corners.begin(), corners.end(), [](const auto& a, const auto& b) {
            return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
        });
        auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a,
                        const Eigen::Vector2d& b) {
            return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
        };
        std::vector<Eigen::Vector2d> hull(2 * corners.size());
        std::size_t h = 0;
        for (const auto& p : corners) {
            while (h >= 2 && cross(hull[h - 2], hull[h - 1], p) <= 0) {
                --h;
            }
            hull[h++] = p;
        }
        const std::size_t lower = h + 1;
        for (auto it = corners.rbegin() + 1; it != corners.rend(); ++it) {
            while (h >= lower && cross(hull[h - 2], hull[h - 1], *it) <= 0) {
                --h;
            }
            hull[h++] = *it;
        }
        hull.resize(h - 1);
        dep.region = CoverageRegion::convex_polygon(earth, center_lat, center_lon, hull);
    }

    LossTables tables = config.channel.mode == ChannelMode::ClearSky
                            ? LossTables::from_rows(config.channel.environment,
                                                    [] {
                                                        std::map<int, LossTableRow> rows;
                                                        for (int b = 10; b <= 90; b += 10) {
                                                            rows[b] = LossTableRow{};
                                                        }
                                                        return rows;
                                                    }())
                            : LossTables::load(config.channel.loss_table_file);

    ChannelModel::Params mp;
    mp.earth = earth;
    mp.upa = upa;
    mp.antenna = antenna;
    mp.tables = std::move(tables);
    mp.mode = config.channel.mode;
    mp.environment = config.channel.environment;
    mp.wavelength_m = config.wavelength_m();
    mp.bandwidth_hz = config.bandwidth_hz();
    mp.phase_misalignment_sigma_rad = config.phase_sigma_rad();
    dep.model = ChannelModel{std::move(mp)};

    dep.noise_temperature_k = config.terminal == TerminalClass::Vsat
                                  ? antenna.vsat_noise_temperature_k
                                  : antenna.handheld_noise_temperature_k;
    return dep;
}

namespace {

bool is_fr(Scheme scheme)
{
    return scheme == Scheme::Fr3 || scheme == Scheme::Fr4;
}

Eigen::VectorXd slot_alpha(const ScenarioConfig& config, const Deployment& dep, Eigen::Index k)
{
    if (config.beamform.alpha_override) {
        return Eigen::VectorXd::Constant(k, *config.beamform.alpha_override);
    }
    const double p_alpha = config.beamform.alpha_power == BeamformConfig::AlphaPower::SwarmTotal
                               ? dep.budget.p_t_total_w()
                               : dep.budget.p_t_node_w;
    return default_alpha(k, dep.model.params().upa.n_elements(), p_alpha);
}

std::vector<UserSlotResult> run_drop_cf(const Deployment& dep, const ScenarioConfig& config,
                                        int drop, std::vector<UserTerminal>& users,
                                        const GeometrySnapshot& snap_t0,
                                        const GeometrySnapshot& snap_t1,
                                        const std::vector<LocationReport>& reports,
                                        const std::vector<int>& association,
                                        const std::vector<SlotSchedule>& schedule)
{
    const auto scheme = config.beamform.algorithm;
    const std::uint64_t seed = config.seed;
    const auto drop_u = static_cast<std::uint64_t>(drop);
    std::vector<UserSlotResult> records;

    for (const auto& slot : schedule) {
        const std::vector<int>& sched = slot.user_indices;
        const auto k = static_cast<Eigen::Index>(sched.size());

        std::vector<UserTerminal> sched_users;
        sched_users.reserve(sched.size());
        for (int idx : sched) {
            sched_users.push_back(users[static_cast<std::size_t>(idx)]);
        }

        BeamformingMatrix w;
        switch (scheme) {
        case Scheme::Mmse: {
            ChannelMatrix h0 = dep.model.assemble(sched, users, dep.swarm_t0, snap_t0, seed,
                                                  drop_u);
            if (config.beamform.csi_dropout_threshold_db) {
                apply_csi_dropout(h0, *config.beamform.csi_dropout_threshold_db);
            }
            w = mmse_weights(h0, slot_alpha(config, dep, k));
            break;
        }
        case Scheme::LbMmse: {
            std::vector<LocationReport> slot_reports;
            slot_reports.reserve(sched.size());
            for (int idx : sched) {
                slot_reports.push_back(reports[static_cast<std::size_t>(idx)]);
            }
            w = lb_mmse_weights(slot_reports, sched_users, dep.swarm_t0, dep.model,
                                slot_alpha(config, dep, k), config.impair, seed, drop_u);
            break;
        }
        case Scheme::SsMmse: {
            std::vector<Vec3> centers;
            centers.reserve(sched.size());
            for (int idx : sched) {
                const int beam_id = association[static_cast<std::size_t>(idx)];
                centers.push_back(dep.beams[static_cast<std::size_t>(beam_id)].ground_ecef);
            }
            w = ss_mmse_weights(centers, sched_users, dep.swarm_t0, dep.model,
                                slot_alpha(config, dep, k), config.impair, seed, drop_u);
            break;
        }
        case Scheme::Mb: {
            std::vector<Beam> slot_beams;
            slot_beams.reserve(slot.beam_ids.size());
            for (int beam_id : slot.beam_ids) {
                slot_beams.push_back(dep.beams[static_cast<std::size_t>(beam_id)]);
            }
            w = mb_weights(slot_beams, dep.model.params().upa, dep.swarm_t0);
            break;
        }
        default:
            throw std::logic_error("FR schemes handled elsewhere");
        }

        const NormalizedMatrix norm =
            normalize(w.entries, dep.budget, config.power.normalization);
        w.entries = norm.entries;
        w.normalized = true;
        if (!w.entries.allFinite()) {
            throw std::runtime_error("non-finite beamforming weights after normalization");
        }

        const ChannelMatrix h1 =
            dep.model.assemble(sched, users, dep.swarm_t1, snap_t1, seed, drop_u);
        const std::vector<SinrResult> slot_results = slot_sinr(h1, w);

        for (std::size_t i = 0; i < sched.size(); ++i) {
            const UserTerminal& user = users[static_cast<std::size_t>(sched[i])];
            const SinrResult& r = slot_results[i];
            if (!std::isfinite(r.sinr_linear) || !std::isfinite(r.snr_linear)) {
                throw std::runtime_error("non-finite SINR encountered");
            }
            UserSlotResult rec;
            rec.user_id = user.user_id;
            rec.drop = drop;
            rec.slot = slot.slot_index;
            rec.sinr_linear = r.sinr_linear;
            rec.snr_linear = r.snr_linear;
            rec.sir_linear = r.sir_linear;
            rec.se_bps_hz = truncated_shannon(r.sinr_linear, dep.shannon);
            rec.served = r.sinr_linear >= db_to_linear(dep.shannon.gamma_min_db);
            rec.alloc_power_w = w.entries.col(static_cast<Eigen::Index>(i)).squaredNorm();
            rec.lat_rad = user.lat_rad;
            rec.lon_rad = user.lon_rad;
            records.push_back(rec);
        }
    }
    return records;
}

std::vector<UserSlotResult> run_drop_fr(const Deployment& dep, const ScenarioConfig& config,
                                        int drop, std::vector<UserTerminal>& users,
                                        const GeometrySnapshot& snap_t1,
                                        const std::vector<SlotSchedule>& schedule)
{
    const int colors_n = config.beamform.algorithm == Scheme::Fr3 ? 3 : 4;
    const std::uint64_t seed = config.seed;
    const auto drop_u = static_cast<std::uint64_t>(drop);

    // Reduced per-user bandwidth changes the noise normalization.
    ChannelModel fr_model = dep.model;
    fr_model.params().bandwidth_hz = dep.model.params().bandwidth_hz / colors_n;

    const std::vector<int> beam_colors = color_beams(dep.beams, colors_n);
    BeamformingMatrix steering = mb_weights(dep.beams, dep.model.params().upa, dep.swarm_t0);
    // Equal per-beam power summing to the node budget.
    const double per_beam_w = dep.p_t_node_w / static_cast<double>(dep.beams.size());
    for (Eigen::Index c = 0; c < steering.entries.cols(); ++c) {
        steering.entries.col(c) *= std::sqrt(per_beam_w) / steering.entries.col(c).norm();
    }

    std::vector<UserSlotResult> records;
    for (const auto& slot : schedule) {
        const std::vector<int>& sched = slot.user_indices;
        Eigen::MatrixXcd w_slot(steering.entries.rows(),
                                static_cast<Eigen::Index>(sched.size()));
        std::vector<int> slot_colors(sched.size());
        for (std::size_t i = 0; i < sched.size(); ++i) {
            const int beam_id = slot.beam_ids[i];
            w_slot.col(static_cast<Eigen::Index>(i)) =
                steering.entries.col(static_cast<Eigen::Index>(beam_id));
            slot_colors[i] = beam_colors[static_cast<std::size_t>(beam_id)];
        }

        const ChannelMatrix h1 = fr_model.assemble(sched, users, dep.swarm_t1, snap_t1, seed,
                                                   drop_u);
        for (std::size_t i = 0; i < sched.size(); ++i) {
            const UserTerminal& user = users[static_cast<std::size_t>(sched[i])];
            const SinrResult r = fr_sinr(h1, w_slot, slot_colors,
                                         static_cast<Eigen::Index>(i));
            UserSlotResult rec;
            rec.user_id = user.user_id;
            rec.drop = drop;
            rec.slot = slot.slot_index;
            rec.sinr_linear = r.sinr_linear;
            rec.snr_linear = r.snr_linear;
            rec.sir_linear = r.sir_linear;
            rec.se_bps_hz = truncated_shannon(r.sinr_linear, dep.shannon);
            rec.served = r.sinr_linear >= db_to_linear(dep.shannon.gamma_min_db);
            rec.alloc_power_w = w_slot.col(static_cast<Eigen::Index>(i)).squaredNorm();
            rec.lat_rad = user.lat_rad;
            rec.lon_rad = user.lon_rad;
            records.push_back(rec);
        }
    }
    return records;
}

} // namespace

std::vector<UserSlotResult> run_drop(const Deployment& dep, const ScenarioConfig& config,
                                     int drop)
{
    const std::uint64_t seed = config.seed;
    const auto drop_u = static_cast<std::uint64_t>(drop);

    RngStream drop_rng = RngStream::from_path(seed, {drop_u, rng_purpose::user_drop});
    std::vector<UserTerminal> users =
        drop_users(dep.region, config.geom.user_density_per_km2, config.terminal,
                   dep.noise_temperature_k, drop_rng);
    if (users.empty()) {
        throw std::runtime_error("coverage region produced no users; raise the density");
    }

    const double min_el = deg_to_rad(config.geom.min_elevation_deg);
    const GeometrySnapshot snap_t0 =
        compute_snapshot(dep.earth, dep.swarm_t0, users, TimeTag::Estimation, min_el);
    const GeometrySnapshot snap_t1 =
        compute_snapshot(dep.earth, dep.swarm_t1, users, TimeTag::Transmission, min_el);

    dep.model.assign_los_state(users, snap_t0, seed, drop_u);

    // Reported positions drive both the location reports and the user-to-beam
    // association; they equal the true positions unless the error is enabled.
    std::vector<LocationReport> reports(users.size());
    std::vector<Vec3> reported_ecef(users.size());
    for (std::size_t i = 0; i < users.size(); ++i) {
        double lat = users[i].lat_rad;
        double lon = users[i].lon_rad;
        if (config.impair.position_error_enabled && config.impair.position_error_max_m > 0.0) {
            RngStream rng = RngStream::from_path(
                seed, {drop_u, rng_purpose::position_error,
                       static_cast<std::uint64_t>(users[i].user_id)});
            std::tie(lat, lon) = perturb_position(dep.earth, lat, lon,
                                                  config.impair.position_error_max_m, rng);
        }
        reports[i] = LocationReport{users[i].user_id, lat, lon, 0.0};
        reported_ecef[i] = geodetic_to_ecef(dep.earth, lat, lon, 0.0);
    }

    const std::vector<int> association =
        associate_users(reported_ecef, snap_t0.in_service, dep.beams, dep.mask, dep.earth);
    RngStream sched_rng = RngStream::from_path(seed, {drop_u, rng_purpose::schedule});
    const std::vector<SlotSchedule> schedule =
        build_schedule(association, dep.beams, dep.mask, sched_rng);

    if (is_fr(config.beamform.algorithm)) {
        return run_drop_fr(dep, config, drop, users, snap_t1, schedule);
    }
    return run_drop_cf(dep, config, drop, users, snap_t0, snap_t1, reports, association,
                       schedule);
}

namespace {

const char* kUserRecordsHeader =
    "scenario_id,drop,slot,user_id,lat_deg,lon_deg,algorithm,normalization,eirp_dbw_mhz,"
    "n_node,channel_mode,terminal,sinr_db,snr_db,sir_db,se_bps_hz,served,alloc_power_w";

const char* kSummaryHeader =
    "scenario_id,algorithm,normalization,eirp_dbw_mhz,n_node,channel_mode,terminal,"
    "avg_se_bps_hz,outage_pct,avg_capacity_mbps,n_total,n_served,n_drops,seed,"
    "user_bandwidth_hz";

std::string normalization_label(const ScenarioConfig& config)
{
    return is_fr(config.beamform.algorithm) ? "equal_per_beam"
                                            : to_string(config.power.normalization);
}

double scheme_bandwidth_hz(const ScenarioConfig& config)
{
    switch (config.beamform.algorithm) {
    case Scheme::Fr3:
        return config.bandwidth_hz() / 3.0;
    case Scheme::Fr4:
        return config.bandwidth_hz() / 4.0;
    default:
        return config.bandwidth_hz();
    }
}

SummaryRow make_summary(const ScenarioConfig& config, const MetricsReport& report)
{
    SummaryRow row;
    row.scenario_id = config.effective_scenario_id();
    row.algorithm = to_string(config.beamform.algorithm);
    row.normalization = normalization_label(config);
    row.eirp_dbw_per_mhz = config.power.eirp_dbw_per_mhz;
    row.n_node = config.geom.n_node;
    row.channel_mode = to_string(config.channel.mode);
    row.terminal = to_string(config.terminal);
    row.avg_se_bps_hz = report.avg_se_bps_hz;
    row.outage_pct = report.outage_pct;
    row.avg_capacity_mbps = report.avg_capacity_mbps;
    row.n_total = report.n_total;
    row.n_served = report.n_served;
    row.n_drops = config.n_drops;
    row.seed = config.seed;
    row.user_bandwidth_hz = scheme_bandwidth_hz(config);
    return row;
}

std::string summary_csv_line(const SummaryRow& r)
{
    std::ostringstream os;
    os << r.scenario_id << ',' << r.algorithm << ',' << r.normalization << ','
       << fmt(r.eirp_dbw_per_mhz) << ',' << r.n_node << ',' << r.channel_mode << ','
       << r.terminal << ',' << fmt(r.avg_se_bps_hz) << ',' << fmt(r.outage_pct) << ','
       << fmt(r.avg_capacity_mbps) << ',' << r.n_total << ',' << r.n_served << ',' << r.n_drops
       << ',' << r.seed << ',' << fmt(r.user_bandwidth_hz);
    return os.str();
}

std::optional<SummaryRow> read_summary_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        return std::nullopt;
    }
    std::string header;
    std::string line;
    if (!std::getline(in, header) || !std::getline(in, line)) {
        return std::nullopt;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
        f.push_back(field);
    }
    if (f.size() != 15) {
        return std::nullopt;
    }
    SummaryRow r;
    r.scenario_id = f[0];
    r.algorithm = f[1];
    r.normalization = f[2];
    r.eirp_dbw_per_mhz = std::stod(f[3]);
    r.n_node = std::stoi(f[4]);
    r.channel_mode = f[5];
    r.terminal = f[6];
    r.avg_se_bps_hz = std::stod(f[7]);
    r.outage_pct = std::stod(f[8]);
    r.avg_capacity_mbps = std::stod(f[9]);
    r.n_total = std::stol(f[10]);
    r.n_served = std::stol(f[11]);
    r.n_drops = std::stoi(f[12]);
    r.seed = std::stoull(f[13]);
    r.user_bandwidth_hz = std::stod(f[14]);
    return r;
}

void write_artifacts(const ScenarioConfig& config, const RunResult& result,
                     const std::string& dir)
{
    fs::create_directories(dir);

    {
        std::ofstream out(dir + "/user_records.csv", std::ios::binary);
        out << kUserRecordsHeader << '\n';
        const std::string sid = result.scenario_id;
        const std::string alg = to_string(config.beamform.algorithm);
        const std::string norm = normalization_label(config);
        const std::string mode = to_string(config.channel.mode);
        const std::string term = to_string(config.terminal);
        for (const auto& r : result.records) {
            out << sid << ',' << r.drop << ',' << r.slot << ',' << r.user_id << ','
                << fmt(rad_to_deg(r.lat_rad)) << ',' << fmt(rad_to_deg(r.lon_rad)) << ','
                << alg << ',' << norm << ',' << fmt(config.power.eirp_dbw_per_mhz) << ','
                << config.geom.n_node << ',' << mode << ',' << term << ','
                << fmt(linear_to_db(r.sinr_linear)) << ',' << fmt(linear_to_db(r.snr_linear))
                << ',' << fmt(linear_to_db(r.sir_linear)) << ',' << fmt(r.se_bps_hz) << ','
                << (r.served ? 1 : 0) << ',' << fmt(r.alloc_power_w) << '\n';
        }
    }
    {
        std::ofstream out(dir + "/summary.csv", std::ios::binary);
        out << kSummaryHeader << '\n' << summary_csv_line(result.summary) << '\n';
    }
    {
        json echo = config.to_json();
        echo["config_hash"] = config.config_hash();
        std::ofstream out(dir + "/config_echo.json", std::ios::binary);
        out << echo.dump(2) << '\n';
    }
    {
        std::ofstream out(dir + "/seed_log.txt", std::ios::binary);
        out << "scenario_seed " << config.seed << '\n';
        for (int d = 0; d < config.n_drops; ++d) {
            out << "drop " << d << " stream_root "
                << splitmix64(config.seed ^ static_cast<std::uint64_t>(d)) << '\n';
        }
    }
}

} // namespace

RunResult run_scenario(const ScenarioConfig& config)
{
    config.validate();
    RunResult result;
    result.scenario_id = config.effective_scenario_id();

    const bool persist = !config.output_dir.empty();
    const std::string dir = config.output_dir + "/" + result.scenario_id;

    if (persist && config.cache) {
        const std::string echo_path = dir + "/config_echo.json";
        std::ifstream echo_in(echo_path);
        if (echo_in) {
            json echo;
            try {
                echo_in >> echo;
            } catch (const json::parse_error&) {
                echo = json::object();
            }
            if (echo.value("config_hash", "") == config.config_hash()) {
                if (auto row = read_summary_csv(dir + "/summary.csv")) {
                    result.summary = *row;
                    result.report.avg_se_bps_hz = row->avg_se_bps_hz;
                    result.report.outage_pct = row->outage_pct;
                    result.report.avg_capacity_mbps = row->avg_capacity_mbps;
                    result.report.n_total = row->n_total;
                    result.report.n_served = row->n_served;
                    result.cached = true;
                    result.scenario_dir = dir;
                    return result;
                }
            }
        }
    }

    const Deployment dep = build_deployment(config);

    const int n_drops = config.n_drops;
    std::vector<std::vector<UserSlotResult>> per_drop(static_cast<std::size_t>(n_drops));
    unsigned jobs = config.jobs > 0 ? static_cast<unsigned>(config.jobs)
                                    : std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, static_cast<unsigned>(n_drops));

    if (jobs <= 1) {
        for (int d = 0; d < n_drops; ++d) {
            per_drop[static_cast<std::size_t>(d)] = run_drop(dep, config, d);
        }
    } else {
        std::atomic<int> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        auto worker = [&] {
            while (true) {
                const int d = next.fetch_add(1);
                if (d >= n_drops) {
                    return;
                }
                try {
                    per_drop[static_cast<std::size_t>(d)] = run_drop(dep, config, d);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) {
                        first_error = std::current_exception();
                    }
                    return;
                }
            }
        };
        std::vector<std::thread> threads;
        threads.reserve(jobs);
        for (unsigned t = 0; t < jobs; ++t) {
            threads.emplace_back(worker);
        }
        for (auto& t : threads) {
            t.join();
        }
        if (first_error) {
            std::rethrow_exception(first_error);
        }
    }

    for (auto& drop_records : per_drop) {
        result.records.insert(result.records.end(), drop_records.begin(), drop_records.end());
    }
    if (result.records.empty()) {
        throw std::runtime_error("scenario produced no user records");
    }
    result.report = aggregate(result.records, scheme_bandwidth_hz(config));
    result.summary = make_summary(config, result.report);

    if (persist) {
        write_artifacts(config, result, dir);
        result.scenario_dir = dir;
    }
    return result;
}

std::vector<ScenarioConfig> expand_sweep(const ScenarioConfig& base)
{
    const SweepConfig& s = base.sweep;
    if (s.eirp_dbw_per_mhz.empty() && s.algorithm.empty() && s.normalization.empty() &&
        s.n_node.empty() && s.channel_mode.empty()) {
        return {};
    }
    const auto eirps =
        s.eirp_dbw_per_mhz.empty() ? std::vector<double>{base.power.eirp_dbw_per_mhz}
                                   : s.eirp_dbw_per_mhz;
    const auto algorithms = s.algorithm.empty()
                                ? std::vector<Scheme>{base.beamform.algorithm}
                                : s.algorithm;
    const auto norms = s.normalization.empty()
                           ? std::vector<Normalization>{base.power.normalization}
                           : s.normalization;
    const auto nodes = s.n_node.empty() ? std::vector<int>{base.geom.n_node} : s.n_node;
    const auto modes = s.channel_mode.empty() ? std::vector<ChannelMode>{base.channel.mode}
                                              : s.channel_mode;

    std::vector<ScenarioConfig> out;
    for (double eirp : eirps) {
        for (Scheme alg : algorithms) {
            for (Normalization norm : norms) {
                for (int n_node : nodes) {
                    for (ChannelMode mode : modes) {
                        ScenarioConfig c = base;
                        c.sweep = SweepConfig{};
                        c.scenario_id.clear();
                        c.power.eirp_dbw_per_mhz = eirp;
                        c.beamform.algorithm = alg;
                        c.power.normalization = norm;
                        c.geom.n_node = n_node;
                        c.channel.mode = mode;
                        out.push_back(std::move(c));
                    }
                }
            }
        }
    }
    return out;
}

SweepResult sweep(const std::vector<ScenarioConfig>& configs)
{
    SweepResult result;
    if (configs.empty()) {
        return result;
    }

    struct Slot {
        std::optional<SummaryRow> row;
        std::string error;
        bool cached = false;
    };
    std::vector<Slot> slots(configs.size());

    unsigned jobs = configs[0].jobs > 0 ? static_cast<unsigned>(configs[0].jobs)
                                        : std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, static_cast<unsigned>(configs.size()));

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= configs.size()) {
                return;
            }
            try {
                // Drop-level parallelism is disabled inside a sweep; the
                // configs themselves are the work units.
                ScenarioConfig c = configs[i];
                c.jobs = 1;
                const RunResult r = run_scenario(c);
                slots[i].row = r.summary;
                slots[i].cached = r.cached;
            } catch (const std::exception& e) {
                slots[i].error = e.what();
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(jobs);
    for (unsigned t = 0; t < jobs; ++t) {
        threads.emplace_back(worker);
    }
    for (auto& t : threads) {
        t.join();
    }

    for (std::size_t i = 0; i < configs.size(); ++i) {
        const std::string sid = configs[i].effective_scenario_id();
        if (slots[i].row) {
            result.rows.push_back(*slots[i].row);
            if (slots[i].cached) {
                result.cached_ids.push_back(sid);
            }
        } else {
            result.failures.emplace_back(sid, slots[i].error);
        }
    }

    if (!configs[0].output_dir.empty()) {
        fs::create_directories(configs[0].output_dir);
        std::ofstream out(configs[0].output_dir + "/sweep_summary.csv", std::ios::binary);
        out << kSummaryHeader << '\n';
        for (const auto& row : result.rows) {
            out << summary_csv_line(row) << '\n';
        }
    }
    return result;
}

} // namespace cfmimo
