#pragma once

#include "cfmimo/beamform.hpp"
#include "cfmimo/channel.hpp"
#include "cfmimo/config.hpp"
#include "cfmimo/geom.hpp"
#include "cfmimo/metrics.hpp"
#include "cfmimo/power.hpp"
#include "cfmimo/sched.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cfmimo {

enum class ComputeArch : std::uint8_t { Ogc, Obc };
enum class OverheadKind : std::uint8_t { Csi, Location };

/// Latency components of the ancillary-information loop, in milliseconds.
struct LatencyBudget {
    double tau_user_ms = 0.0;
    double tau_feeder_dl_ms = 0.0;
    double tau_feeder_ul_ms = 0.0;
    double tau_p_ms = 0.0;
    double tau_rout_ms = 0.0;
    double tau_ad_ms = 0.0;
};

/// Aging interval between estimation and transmission. On-ground computation
/// pays the feeder and routing legs; on-board computation drops them.
double aging_interval_ms(const LatencyBudget& budget, ComputeArch arch);

/// Return-link ancillary payload per user: 64 bits per complex channel
/// coefficient versus one 48-bit position report.
long signalling_overhead_bits(int n_f, OverheadKind kind);

/// Everything derived from a ScenarioConfig that stays fixed across drops.
struct Deployment {
    EarthModel earth;
    Swarm swarm_t0;
    Swarm swarm_t1;
    std::vector<BeamLattice> lattices;
    std::vector<Beam> beams;
    ActivationMask mask;
    CoverageRegion region;
    ChannelModel model;
    double theta_3db_rad = 0.0;
    double p_t_w = 0.0;
    double p_t_node_w = 0.0;
    PowerBudget budget;
    double noise_temperature_k = 0.0;
    ShannonParams shannon;
};

Deployment build_deployment(const ScenarioConfig& config);

/// One summary row of a scenario run, as persisted to summary.csv.
struct SummaryRow {
    std::string scenario_id;
    std::string algorithm;
    std::string normalization;
    double eirp_dbw_per_mhz = 0.0;
    int n_node = 1;
    std::string channel_mode;
    std::string terminal;
    double avg_se_bps_hz = 0.0;
    double outage_pct = 0.0;
    double avg_capacity_mbps = 0.0;
    long n_total = 0;
    long n_served = 0;
    int n_drops = 0;
    std::uint64_t seed = 0;
    double user_bandwidth_hz = 0.0;
};

struct RunResult {
    std::string scenario_id;
    MetricsReport report;
    SummaryRow summary;
    std::vector<UserSlotResult> records;
    bool cached = false;
    std::string scenario_dir; ///< empty when persistence is disabled
};

/// Full Monte Carlo run of one scenario: per drop, drop users, assign LOS,
/// schedule, compute the estimation-time weights, normalize, and evaluate
/// every slot against the transmission-time channel. Deterministic per
/// (config, seed), serial or parallel. Artifacts are written under
/// output_dir/<scenario_id>/ unless output_dir is empty.
RunResult run_scenario(const ScenarioConfig& config);

/// Expand the config's sweep lists into one scenario per combination.
std::vector<ScenarioConfig> expand_sweep(const ScenarioConfig& base);

struct SweepResult {
    std::vector<SummaryRow> rows;
    std::vector<std::pair<std::string, std::string>> failures; ///< (scenario id, error)
    std::vector<std::string> cached_ids;
};

/// Run a list of scenarios (parallel across configs), collect their summary
/// rows, and keep going past per-scenario failures. Writes
/// output_dir/sweep_summary.csv when the base config persists artifacts.
SweepResult sweep(const std::vector<ScenarioConfig>& configs);

/// Records of one drop, exposed for tests that need the raw pipeline.
std::vector<UserSlotResult> run_drop(const Deployment& dep, const ScenarioConfig& config,
                                     int drop);

} // namespace cfmimo
