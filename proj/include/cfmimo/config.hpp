#pragma once

#include "cfmimo/channel.hpp"
#include "cfmimo/impair.hpp"
#include "cfmimo/power.hpp"
#include "cfmimo/types.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace cfmimo {

using json = nlohmann::json;

/// Which transmission scheme a scenario runs: one of the four beamforming
/// algorithms under full frequency reuse, or a legacy 3/4-color baseline.
enum class Scheme : std::uint8_t { Mmse, LbMmse, SsMmse, Mb, Fr3, Fr4 };

std::string to_string(Scheme scheme);
std::string to_string(Normalization n);
std::string to_string(ChannelMode m);
std::string to_string(TerminalClass c);

struct GeomConfig {
    double earth_radius_km = 6371.0;
    double altitude_km = 600.0;
    int n_node = 1;
    std::optional<double> node_spacing_km; ///< default: lattices abut along-track
    double min_elevation_deg = 10.0;
    double user_density_per_km2 = 0.5;
    enum class AreaKind : std::uint8_t { Lattice, Disc } area_kind = AreaKind::Lattice;
    double area_disc_radius_km = 100.0;
    double center_lat_deg = 0.0;
    double center_lon_deg = 0.0;
};

struct AntennaConfig {
    int n_rows = 32;
    int n_cols = 32;
    double spacing_wavelengths = 0.55;
    std::string params_file = "data/antenna_params.csv";
    std::optional<double> theta_3db_deg; ///< default: array half-power beamwidth
};

struct LatticeConfig {
    int n_tiers = 5;
    /// Active-beam count of the single-node reference deployment used by the
    /// per-node power scaling; defaults to this scenario's own tier count.
    std::optional<int> n_tiers_single_ref;
};

struct ChannelConfig {
    ChannelMode mode = ChannelMode::ClearSky;
    std::string environment = "dense_urban";
    std::string loss_table_file = "data/ntn_loss_tables.csv";
    double carrier_ghz = 2.0;
    double bandwidth_mhz = 30.0;
    double phase_misalignment_variance = 0.0; ///< rad^2 (or rad with stddev convention); 0 = off
    enum class PhaseConvention : std::uint8_t { Variance, Stddev } phase_convention =
        PhaseConvention::Variance;
};

struct BeamformConfig {
    Scheme algorithm = Scheme::Mmse;
    std::optional<double> alpha_override;
    enum class AlphaPower : std::uint8_t { SwarmTotal, PerNode } alpha_power =
        AlphaPower::SwarmTotal;
    std::optional<double> csi_dropout_threshold_db;
};

struct PowerConfig {
    Normalization normalization = Normalization::Mpc;
    double eirp_dbw_per_mhz = 4.0;
};

struct SchedConfig {
    std::string kind = "random"; ///< the only scheduler; ties break to the lowest beam id
};

struct SweepConfig {
    std::vector<double> eirp_dbw_per_mhz;
    std::vector<Scheme> algorithm;
    std::vector<Normalization> normalization;
    std::vector<int> n_node;
    std::vector<ChannelMode> channel_mode;
};

struct ScenarioConfig {
    std::string scenario_id; ///< derived from the parameters when empty
    std::uint64_t seed = 1234;
    int n_drops = 100;
    double delta_t_ms = 16.7;
    int jobs = 0; ///< 0 = hardware concurrency
    bool cache = false;
    std::string output_dir = "out";

    GeomConfig geom;
    AntennaConfig antenna;
    LatticeConfig lattice;
    ChannelConfig channel;
    TerminalClass terminal = TerminalClass::Vsat;
    BeamformConfig beamform;
    PowerConfig power;
    SchedConfig sched;
    ImpairmentConfig impair;
    SweepConfig sweep;

    /// Cross-field validation (positivity, enum consistency, FR single-node).
    void validate() const;

    std::string effective_scenario_id() const;

    double wavelength_m() const
    {
        return constants::speed_of_light_m_s / (channel.carrier_ghz * 1e9);
    }
    double bandwidth_hz() const { return channel.bandwidth_mhz * 1e6; }
    /// Total available power implied by the EIRP density over the bandwidth.
    double p_t_w() const
    {
        return db_to_linear(power.eirp_dbw_per_mhz + linear_to_db(channel.bandwidth_mhz));
    }
    double phase_sigma_rad() const;

    json to_json() const;
    static ScenarioConfig from_json(const json& j);

    /// FNV-1a over the canonical serialized form; keys the result cache.
    std::string config_hash() const;
};

/// Parse + key-validate a config JSON document. Unknown keys anywhere are an
/// error naming the offending path.
ScenarioConfig parse_config(const json& j);
ScenarioConfig load_config_file(const std::string& path);

/// Built-in configurations: "desk" (8x8 UPA, 2 tiers, ~200 users, fast) and
/// "paper" (32x32 UPA, 5 tiers, 0.5 users/km^2).
json preset_json(const std::string& name);

/// Overlay patch onto base, recursing into objects.
json deep_merge(json base, const json& patch);

/// Apply CFMIMO_* environment overrides: CFMIMO_SEED=7 sets /seed,
/// CFMIMO_POWER__NORMALIZATION=mpc sets /power/normalization. Values parse as
/// JSON when possible, else as strings.
json apply_env_overrides(json base, const std::vector<std::pair<std::string, std::string>>& env);

} // namespace cfmimo
