#include "cfmimo/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cfmimo {

namespace {

[[noreturn]] void config_error(const std::string& msg)
{
    throw std::invalid_argument("config error: " + msg);
}

template <typename T>
T enum_from_string(const std::string& key, const std::string& value,
                   const std::vector<std::pair<std::string, T>>& table)
{
    for (const auto& [name, v] : table) {
        if (name == value) {
            return v;
        }
    }
    std::ostringstream os;
    os << key << ": unknown value '" << value << "' (expected one of:";
    for (const auto& [name, v] : table) {
        os << ' ' << name;
    }
    os << ')';
    config_error(os.str());
}

const std::vector<std::pair<std::string, Scheme>> kSchemes = {
    {"mmse", Scheme::Mmse},   {"lb_mmse", Scheme::LbMmse}, {"ss_mmse", Scheme::SsMmse},
    {"mb", Scheme::Mb},       {"fr3", Scheme::Fr3},        {"fr4", Scheme::Fr4},
};
const std::vector<std::pair<std::string, Normalization>> kNorms = {
    {"spc", Normalization::Spc},   {"mpc", Normalization::Mpc},   {"pac", Normalization::Pac},
    {"sspc", Normalization::Sspc}, {"smpc", Normalization::Smpc},
};
const std::vector<std::pair<std::string, ChannelMode>> kModes = {
    {"clear_sky", ChannelMode::ClearSky},
    {"nlos_dense_urban", ChannelMode::NlosDenseUrban},
};
const std::vector<std::pair<std::string, TerminalClass>> kTerminals = {
    {"vsat", TerminalClass::Vsat},
    {"handheld", TerminalClass::Handheld},
};

/// Allowed keys per object path; validation walks the document against this.
const json& schema()
{
    static const json s = {
        {"scenario_id", true},
        {"seed", true},
        {"n_drops", true},
        {"delta_t_ms", true},
        {"jobs", true},
        {"cache", true},
        {"output_dir", true},
        {"geom",
         {{"earth_radius_km", true},
          {"altitude_km", true},
          {"n_node", true},
          {"node_spacing_km", true},
          {"min_elevation_deg", true},
          {"user_density_per_km2", true},
          {"area", {{"kind", true}, {"radius_km", true}}},
          {"center_lat_deg", true},
          {"center_lon_deg", true}}},
        {"antenna",
         {{"n_rows", true},
          {"n_cols", true},
          {"spacing_wavelengths", true},
          {"params_file", true},
          {"theta_3db_deg", true}}},
        {"lattice", {{"n_tiers", true}, {"n_tiers_single_ref", true}}},
        {"channel",
         {{"mode", true},
          {"environment", true},
          {"loss_table_file", true},
          {"carrier_ghz", true},
          {"bandwidth_mhz", true},
          {"phase_misalignment_variance", true},
          {"phase_misalignment_convention", true}}},
        {"terminal", {{"class", true}}},
        {"beamform",
         {{"algorithm", true},
          {"alpha_override", true},
          {"alpha_power", true},
          {"csi_dropout_threshold_db", true}}},
        {"power", {{"normalization", true}, {"eirp_dbw_per_mhz", true}}},
        {"sched", {{"kind", true}}},
        {"impair",
         {{"position_error_enabled", true},
          {"position_error_max_m", true},
          {"rp_error_enabled", true},
          {"epsilon_rp", true},
          {"rp_amplitude_convention", true}}},
        {"sweep",
         {{"eirp_dbw_per_mhz", true},
          {"algorithm", true},
          {"normalization", true},
          {"n_node", true},
          {"channel_mode", true}}},
    };
    return s;
}

void check_keys(const json& doc, const json& allowed, const std::string& path)
{
    if (!doc.is_object()) {
        return;
    }
    for (const auto& [key, value] : doc.items()) {
        const std::string here = path.empty() ? key : path + "." + key;
        if (!allowed.contains(key)) {
            config_error("unknown key '" + here + "'");
        }
        if (allowed.at(key).is_object()) {
            check_keys(value, allowed.at(key), here);
        }
    }
}

template <typename T>
void read(const json& j, const char* key, T& out)
{
    if (j.contains(key) && !j.at(key).is_null()) {
        j.at(key).get_to(out);
    }
}

template <typename T>
void read_optional(const json& j, const char* key, std::optional<T>& out)
{
    if (j.contains(key) && !j.at(key).is_null()) {
        out = j.at(key).get<T>();
    }
}

template <typename T>
void read_enum(const json& j, const char* key, T& out,
               const std::vector<std::pair<std::string, T>>& table)
{
    if (j.contains(key) && !j.at(key).is_null()) {
        out = enum_from_string(key, j.at(key).get<std::string>(), table);
    }
}

std::uint64_t fnv1a64(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace

std::string to_string(Scheme scheme)
{
    for (const auto& [name, v] : kSchemes) {
        if (v == scheme) {
            return name;
        }
    }
    return "?";
}

std::string to_string(Normalization n)
{
    for (const auto& [name, v] : kNorms) {
        if (v == n) {
            return name;
        }
    }
    return "?";
}

std::string to_string(ChannelMode m)
{
    for (const auto& [name, v] : kModes) {
        if (v == m) {
            return name;
        }
    }
    return "?";
}

std::string to_string(TerminalClass c)
{
    for (const auto& [name, v] : kTerminals) {
        if (v == c) {
            return name;
        }
    }
    return "?";
}

void ScenarioConfig::validate() const
{
    if (n_drops < 1) {
        config_error("n_drops must be at least 1");
    }
    if (delta_t_ms < 0.0) {
        config_error("delta_t_ms must be non-negative");
    }
    if (geom.altitude_km <= 0.0 || geom.earth_radius_km <= 0.0) {
        config_error("geom: altitude and earth radius must be positive");
    }
    if (geom.n_node < 1) {
        config_error("geom.n_node must be at least 1");
    }
    if (geom.user_density_per_km2 <= 0.0) {
        config_error("geom.user_density_per_km2 must be positive");
    }
    if (geom.area_kind == GeomConfig::AreaKind::Disc && geom.area_disc_radius_km <= 0.0) {
        config_error("geom.area.radius_km must be positive for disc areas");
    }
    if (antenna.n_rows < 1 || antenna.n_cols < 1) {
        config_error("antenna: UPA dimensions must be positive");
    }
    if (antenna.spacing_wavelengths <= 0.0) {
        config_error("antenna.spacing_wavelengths must be positive");
    }
    if (lattice.n_tiers < 0) {
        config_error("lattice.n_tiers must be non-negative");
    }
    if (channel.carrier_ghz <= 0.0 || channel.bandwidth_mhz <= 0.0) {
        config_error("channel: carrier and bandwidth must be positive");
    }
    if (channel.phase_misalignment_variance < 0.0) {
        config_error("channel.phase_misalignment_variance must be non-negative");
    }
    if (beamform.alpha_override && *beamform.alpha_override <= 0.0) {
        config_error("beamform.alpha_override must be positive");
    }
    if (beamform.csi_dropout_threshold_db && *beamform.csi_dropout_threshold_db <= 0.0) {
        config_error("beamform.csi_dropout_threshold_db must be positive");
    }
    if (impair.epsilon_rp < 0.0 || impair.epsilon_rp >= 1.0) {
        config_error("impair.epsilon_rp must lie in [0, 1)");
    }
    if (impair.position_error_max_m < 0.0) {
        config_error("impair.position_error_max_m must be non-negative");
    }
    if ((beamform.algorithm == Scheme::Fr3 || beamform.algorithm == Scheme::Fr4) &&
        geom.n_node != 1) {
        config_error("frequency-reuse baselines require a single node");
    }
    if (sched.kind != "random") {
        config_error("sched.kind: only 'random' is implemented");
    }
}

double ScenarioConfig::phase_sigma_rad() const
{
    const double v = channel.phase_misalignment_variance;
    if (v <= 0.0) {
        return 0.0;
    }
    return channel.phase_convention == ChannelConfig::PhaseConvention::Variance ? std::sqrt(v)
                                                                                : v;
}

std::string ScenarioConfig::effective_scenario_id() const
{
    if (!scenario_id.empty()) {
        return scenario_id;
    }
    std::ostringstream os;
    os << "n" << geom.n_node << "-" << to_string(beamform.algorithm) << "-"
       << to_string(power.normalization) << "-e" << power.eirp_dbw_per_mhz << "-"
       << to_string(channel.mode) << "-" << to_string(terminal) << "-s" << seed;
    return os.str();
}

json ScenarioConfig::to_json() const
{
    json j;
    j["scenario_id"] = scenario_id;
    j["seed"] = seed;
    j["n_drops"] = n_drops;
    j["delta_t_ms"] = delta_t_ms;
    j["jobs"] = jobs;
    j["cache"] = cache;
    j["output_dir"] = output_dir;

    json g;
    g["earth_radius_km"] = geom.earth_radius_km;
    g["altitude_km"] = geom.altitude_km;
    g["n_node"] = geom.n_node;
    if (geom.node_spacing_km) {
        g["node_spacing_km"] = *geom.node_spacing_km;
    }
    g["min_elevation_deg"] = geom.min_elevation_deg;
    g["user_density_per_km2"] = geom.user_density_per_km2;
    g["area"]["kind"] = geom.area_kind == GeomConfig::AreaKind::Lattice ? "lattice" : "disc";
    g["area"]["radius_km"] = geom.area_disc_radius_km;
    g["center_lat_deg"] = geom.center_lat_deg;
    g["center_lon_deg"] = geom.center_lon_deg;
    j["geom"] = g;

    json a;
    a["n_rows"] = antenna.n_rows;
    a["n_cols"] = antenna.n_cols;
    a["spacing_wavelengths"] = antenna.spacing_wavelengths;
    a["params_file"] = antenna.params_file;
    if (antenna.theta_3db_deg) {
        a["theta_3db_deg"] = *antenna.theta_3db_deg;
    }
    j["antenna"] = a;

    json l;
    l["n_tiers"] = lattice.n_tiers;
    if (lattice.n_tiers_single_ref) {
        l["n_tiers_single_ref"] = *lattice.n_tiers_single_ref;
    }
    j["lattice"] = l;

    json c;
    c["mode"] = to_string(channel.mode);
    c["environment"] = channel.environment;
    c["loss_table_file"] = channel.loss_table_file;
    c["carrier_ghz"] = channel.carrier_ghz;
    c["bandwidth_mhz"] = channel.bandwidth_mhz;
    c["phase_misalignment_variance"] = channel.phase_misalignment_variance;
    c["phase_misalignment_convention"] =
        channel.phase_convention == ChannelConfig::PhaseConvention::Variance ? "variance"
                                                                             : "stddev";
    j["channel"] = c;

    j["terminal"]["class"] = to_string(terminal);

    json b;
    b["algorithm"] = to_string(beamform.algorithm);
    if (beamform.alpha_override) {
        b["alpha_override"] = *beamform.alpha_override;
    }
    b["alpha_power"] = beamform.alpha_power == BeamformConfig::AlphaPower::SwarmTotal
                           ? "swarm_total"
                           : "per_node";
    if (beamform.csi_dropout_threshold_db) {
        b["csi_dropout_threshold_db"] = *beamform.csi_dropout_threshold_db;
    }
    j["beamform"] = b;

    j["power"]["normalization"] = to_string(power.normalization);
    j["power"]["eirp_dbw_per_mhz"] = power.eirp_dbw_per_mhz;

    j["sched"]["kind"] = sched.kind;

    json im;
    im["position_error_enabled"] = impair.position_error_enabled;
    im["position_error_max_m"] = impair.position_error_max_m;
    im["rp_error_enabled"] = impair.rp_error_enabled;
    im["epsilon_rp"] = impair.epsilon_rp;
    im["rp_amplitude_convention"] = impair.rp_folded_amplitude ? "folded" : "signed";
    j["impair"] = im;

    if (!sweep.eirp_dbw_per_mhz.empty() || !sweep.algorithm.empty() ||
        !sweep.normalization.empty() || !sweep.n_node.empty() || !sweep.channel_mode.empty()) {
        json s;
        s["eirp_dbw_per_mhz"] = sweep.eirp_dbw_per_mhz;
        json alg = json::array();
        for (auto v : sweep.algorithm) {
            alg.push_back(to_string(v));
        }
        s["algorithm"] = alg;
        json norm = json::array();
        for (auto v : sweep.normalization) {
            norm.push_back(to_string(v));
        }
        s["normalization"] = norm;
        s["n_node"] = sweep.n_node;
        json cm = json::array();
        for (auto v : sweep.channel_mode) {
            cm.push_back(to_string(v));
        }
        s["channel_mode"] = cm;
        j["sweep"] = s;
    }
    return j;
}

ScenarioConfig ScenarioConfig::from_json(const json& j)
{
    ScenarioConfig c;
    read(j, "scenario_id", c.scenario_id);
    read(j, "seed", c.seed);
    read(j, "n_drops", c.n_drops);
    read(j, "delta_t_ms", c.delta_t_ms);
    read(j, "jobs", c.jobs);
    read(j, "cache", c.cache);
    read(j, "output_dir", c.output_dir);

    if (j.contains("geom")) {
        const json& g = j.at("geom");
        read(g, "earth_radius_km", c.geom.earth_radius_km);
        read(g, "altitude_km", c.geom.altitude_km);
        read(g, "n_node", c.geom.n_node);
        read_optional(g, "node_spacing_km", c.geom.node_spacing_km);
        read(g, "min_elevation_deg", c.geom.min_elevation_deg);
        read(g, "user_density_per_km2", c.geom.user_density_per_km2);
        if (g.contains("area")) {
            const json& area = g.at("area");
            if (area.contains("kind")) {
                const auto kind = area.at("kind").get<std::string>();
                if (kind == "lattice") {
                    c.geom.area_kind = GeomConfig::AreaKind::Lattice;
                } else if (kind == "disc") {
                    c.geom.area_kind = GeomConfig::AreaKind::Disc;
                } else {
                    config_error("geom.area.kind: unknown value '" + kind + "'");
                }
            }
            read(area, "radius_km", c.geom.area_disc_radius_km);
        }
        read(g, "center_lat_deg", c.geom.center_lat_deg);
        read(g, "center_lon_deg", c.geom.center_lon_deg);
    }

    if (j.contains("antenna")) {
        const json& a = j.at("antenna");
        read(a, "n_rows", c.antenna.n_rows);
        read(a, "n_cols", c.antenna.n_cols);
        read(a, "spacing_wavelengths", c.antenna.spacing_wavelengths);
        read(a, "params_file", c.antenna.params_file);
        read_optional(a, "theta_3db_deg", c.antenna.theta_3db_deg);
    }

    if (j.contains("lattice")) {
        const json& l = j.at("lattice");
        read(l, "n_tiers", c.lattice.n_tiers);
        read_optional(l, "n_tiers_single_ref", c.lattice.n_tiers_single_ref);
    }

    if (j.contains("channel")) {
        const json& ch = j.at("channel");
        read_enum(ch, "mode", c.channel.mode, kModes);
        read(ch, "environment", c.channel.environment);
        read(ch, "loss_table_file", c.channel.loss_table_file);
        read(ch, "carrier_ghz", c.channel.carrier_ghz);
        read(ch, "bandwidth_mhz", c.channel.bandwidth_mhz);
        read(ch, "phase_misalignment_variance", c.channel.phase_misalignment_variance);
        if (ch.contains("phase_misalignment_convention")) {
            const auto conv = ch.at("phase_misalignment_convention").get<std::string>();
            if (conv == "variance") {
                c.channel.phase_convention = ChannelConfig::PhaseConvention::Variance;
            } else if (conv == "stddev") {
                c.channel.phase_convention = ChannelConfig::PhaseConvention::Stddev;
            } else {
                config_error("channel.phase_misalignment_convention: unknown value '" + conv +
                             "'");
            }
        }
    }

    if (j.contains("terminal")) {
        read_enum(j.at("terminal"), "class", c.terminal, kTerminals);
    }

    if (j.contains("beamform")) {
        const json& b = j.at("beamform");
        read_enum(b, "algorithm", c.beamform.algorithm, kSchemes);
        read_optional(b, "alpha_override", c.beamform.alpha_override);
        if (b.contains("alpha_power")) {
            const auto ap = b.at("alpha_power").get<std::string>();
            if (ap == "swarm_total") {
                c.beamform.alpha_power = BeamformConfig::AlphaPower::SwarmTotal;
            } else if (ap == "per_node") {
                c.beamform.alpha_power = BeamformConfig::AlphaPower::PerNode;
            } else {
                config_error("beamform.alpha_power: unknown value '" + ap + "'");
            }
        }
        read_optional(b, "csi_dropout_threshold_db", c.beamform.csi_dropout_threshold_db);
    }

    if (j.contains("power")) {
        const json& p = j.at("power");
        read_enum(p, "normalization", c.power.normalization, kNorms);
        read(p, "eirp_dbw_per_mhz", c.power.eirp_dbw_per_mhz);
    }

    if (j.contains("sched")) {
        read(j.at("sched"), "kind", c.sched.kind);
    }

    if (j.contains("impair")) {
        const json& im = j.at("impair");
        read(im, "position_error_enabled", c.impair.position_error_enabled);
        read(im, "position_error_max_m", c.impair.position_error_max_m);
        read(im, "rp_error_enabled", c.impair.rp_error_enabled);
        read(im, "epsilon_rp", c.impair.epsilon_rp);
        if (im.contains("rp_amplitude_convention")) {
            const auto conv = im.at("rp_amplitude_convention").get<std::string>();
            if (conv == "signed") {
                c.impair.rp_folded_amplitude = false;
            } else if (conv == "folded") {
                c.impair.rp_folded_amplitude = true;
            } else {
                config_error("impair.rp_amplitude_convention: unknown value '" + conv + "'");
            }
        }
    }

    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        read(s, "eirp_dbw_per_mhz", c.sweep.eirp_dbw_per_mhz);
        if (s.contains("algorithm")) {
            for (const auto& v : s.at("algorithm")) {
                c.sweep.algorithm.push_back(
                    enum_from_string("sweep.algorithm", v.get<std::string>(), kSchemes));
            }
        }
        if (s.contains("normalization")) {
            for (const auto& v : s.at("normalization")) {
                c.sweep.normalization.push_back(
                    enum_from_string("sweep.normalization", v.get<std::string>(), kNorms));
            }
        }
        read(s, "n_node", c.sweep.n_node);
        if (s.contains("channel_mode")) {
            for (const auto& v : s.at("channel_mode")) {
                c.sweep.channel_mode.push_back(
                    enum_from_string("sweep.channel_mode", v.get<std::string>(), kModes));
            }
        }
    }
    return c;
}

std::string ScenarioConfig::config_hash() const
{
    // Execution knobs do not affect the results; keep them out of the cache
    // key so jobs/output overrides still hit the cache.
    json j = to_json();
    j.erase("jobs");
    j.erase("cache");
    j.erase("output_dir");
    j.erase("scenario_id");
    std::ostringstream os;
    os << std::hex << fnv1a64(j.dump());
    return os.str();
}

ScenarioConfig parse_config(const json& j)
{
    check_keys(j, schema(), "");
    ScenarioConfig c = ScenarioConfig::from_json(j);
    c.validate();
    return c;
}

ScenarioConfig load_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        config_error("cannot open config file: " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        config_error("invalid JSON in " + path + ": " + e.what());
    }
    return parse_config(j);
}

json preset_json(const std::string& name)
{
    if (name == "desk") {
        return json{
            {"seed", 1234},
            {"n_drops", 100},
            {"delta_t_ms", 16.7},
            {"geom",
             {{"altitude_km", 600.0},
              {"n_node", 1},
              {"min_elevation_deg", 10.0},
              {"user_density_per_km2", 6.2e-4},
              {"area", {{"kind", "lattice"}}}}},
            {"antenna", {{"n_rows", 8}, {"n_cols", 8}, {"spacing_wavelengths", 0.55}}},
            {"lattice", {{"n_tiers", 2}}},
            {"channel",
             {{"mode", "clear_sky"},
              {"environment", "dense_urban"},
              {"carrier_ghz", 2.0},
              {"bandwidth_mhz", 30.0}}},
            {"terminal", {{"class", "vsat"}}},
            {"beamform", {{"algorithm", "mmse"}}},
            {"power", {{"normalization", "mpc"}, {"eirp_dbw_per_mhz", 4.0}}},
        };
    }
    if (name == "paper") {
        return json{
            {"seed", 1234},
            {"n_drops", 10},
            {"delta_t_ms", 16.7},
            {"geom",
             {{"altitude_km", 600.0},
              {"n_node", 1},
              {"min_elevation_deg", 10.0},
              {"user_density_per_km2", 0.5},
              {"area", {{"kind", "lattice"}}}}},
            {"antenna", {{"n_rows", 32}, {"n_cols", 32}, {"spacing_wavelengths", 0.55}}},
            {"lattice", {{"n_tiers", 5}}},
            {"channel",
             {{"mode", "clear_sky"},
              {"environment", "dense_urban"},
              {"carrier_ghz", 2.0},
              {"bandwidth_mhz", 30.0}}},
            {"terminal", {{"class", "vsat"}}},
            {"beamform", {{"algorithm", "mmse"}}},
            {"power", {{"normalization", "mpc"}, {"eirp_dbw_per_mhz", 4.0}}},
        };
    }
    config_error("unknown preset '" + name + "' (expected desk or paper)");
}

json deep_merge(json base, const json& patch)
{
    if (!patch.is_object() || !base.is_object()) {
        return patch;
    }
    for (const auto& [key, value] : patch.items()) {
        if (base.contains(key)) {
            base[key] = deep_merge(base[key], value);
        } else {
            base[key] = value;
        }
    }
    return base;
}

json apply_env_overrides(json base, const std::vector<std::pair<std::string, std::string>>& env)
{
    const std::string prefix = "CFMIMO_";
    for (const auto& [name, value] : env) {
        if (name.rfind(prefix, 0) != 0) {
            continue;
        }
        // CFMIMO_POWER__NORMALIZATION -> power.normalization
        std::string path = name.substr(prefix.size());
        std::transform(path.begin(), path.end(), path.begin(),
                       [](unsigned char ch) { return std::tolower(ch); });
        std::vector<std::string> parts;
        std::size_t pos = 0;
        while (true) {
            const std::size_t next = path.find("__", pos);
            if (next == std::string::npos) {
                parts.push_back(path.substr(pos));
                break;
            }
            parts.push_back(path.substr(pos, next - pos));
            pos = next + 2;
        }
        json parsed;
        try {
            parsed = json::parse(value);
        } catch (const json::parse_error&) {
            parsed = value;
        }
        json* cursor = &base;
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
            cursor = &(*cursor)[parts[i]];
        }
        (*cursor)[parts.back()] = parsed;
    }
    return base;
}

} // namespace cfmimo
