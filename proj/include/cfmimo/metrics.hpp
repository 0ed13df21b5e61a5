#pragma once

#include "cfmimo/antenna.hpp"
#include "cfmimo/beamform.hpp"
#include "cfmimo/channel.hpp"
#include "cfmimo/types.hpp"

#include <vector>

namespace cfmimo {

struct SinrResult {
    double sinr_linear = 0.0;
    double snr_linear = 0.0;
    double sir_linear = 0.0; ///< +inf when there is no interference
};

/// Post-beamforming SINR of scheduled user i: |h_i w_i|^2 over unit noise
/// plus the summed interference of the other columns. The channel must be the
/// true transmission-time matrix.
SinrResult sinr(const ChannelMatrix& h_t1, const BeamformingMatrix& w_t0, Eigen::Index i);

/// All users of the slot at once.
std::vector<SinrResult> slot_sinr(const ChannelMatrix& h_t1, const BeamformingMatrix& w_t0);

/// Co-color variant for frequency-reuse baselines: interference only from
/// columns sharing user i's color.
SinrResult fr_sinr(const ChannelMatrix& h_t1, const Eigen::MatrixXcd& w,
                   const std::vector<int>& column_colors, Eigen::Index i);

struct ShannonParams {
    double gamma_min_db = -10.0;
    double gamma_max_db = 30.0;
    double epsilon = 1.0;
};

/// Truncated Shannon spectral efficiency: zero below gamma_min, capped at
/// gamma_max.
double truncated_shannon(double gamma_linear, const ShannonParams& params = {});

struct UserSlotResult {
    int user_id = 0;
    int drop = 0;
    int slot = 0;
    double sinr_linear = 0.0;
    double snr_linear = 0.0;
    double sir_linear = 0.0;
    double se_bps_hz = 0.0;
    bool served = false;
    double alloc_power_w = 0.0;
    double lat_rad = 0.0;
    double lon_rad = 0.0;
};

struct MetricsReport {
    double avg_se_bps_hz = 0.0; ///< served users only; NaN when none served
    double outage_pct = 0.0;
    double avg_capacity_mbps = 0.0; ///< avg SE times the per-user bandwidth
    long n_total = 0;
    long n_served = 0;
};

/// Averages over served users only; outage = percentage below gamma_min.
MetricsReport aggregate(const std::vector<UserSlotResult>& results, double bandwidth_hz);

/// Proper hex-lattice coloring with 3 or 4 colors from the beams' axial
/// coordinates; adjacent beams never share a color.
std::vector<int> color_beams(const std::vector<Beam>& beams, int n_colors);

} // namespace cfmimo
