#pragma once

#include "cfmimo/antenna.hpp"
#include "cfmimo/channel.hpp"
#include "cfmimo/geom.hpp"
#include "cfmimo/types.hpp"

#include <optional>
#include <vector>

namespace cfmimo {

enum class Algorithm : std::uint8_t { Mmse, LbMmse, SsMmse, Mb };

struct BeamformingMatrix {
    Eigen::MatrixXcd entries; ///< (n_node * n_f) x K, column c serves scheduled user c
    Algorithm algorithm = Algorithm::Mmse;
    bool normalized = false;
    Eigen::VectorXd alpha;
};

/// A user's self-reported position, the ancillary information of the
/// location-based algorithms. The swarm ephemeris travels alongside.
struct LocationReport {
    int user_id = 0;
    double lat_rad = 0.0;
    double lon_rad = 0.0;
    double alt_m = 0.0;
};

/// Regularized channel inversion W = H^H (H H^H + diag(alpha))^{-1}, solved
/// as a Hermitian positive-definite K x K system. H must be tagged with the
/// estimation instant.
BeamformingMatrix mmse_weights(const ChannelMatrix& h_est, const Eigen::VectorXd& alpha);

/// The regularization the solve defaults to: alpha = n_f / p_t for every user.
Eigen::VectorXd default_alpha(Eigen::Index k, int n_f, double p_t_w);

/// Rebuild one channel row from a reported position and the ephemeris:
/// stochastic terms (additional losses, phase misalignment) are excluded by
/// construction. Nodes below the reported horizon contribute zero entries and
/// are flagged.
Eigen::RowVectorXcd reconstruct_channel_from_location(
    const LocationReport& report, TerminalClass terminal_class, double noise_temperature_k,
    const Swarm& swarm_t0, const ChannelModel& model, RpErrorDraw* rp_error = nullptr,
    std::vector<bool>* below_horizon = nullptr);

/// Location-based MMSE: reconstruct every scheduled row, then invert.
/// scheduled_users runs parallel to reports. rp streams are derived per
/// (user, node) from (seed, drop) when impair.rp_error_enabled.
BeamformingMatrix lb_mmse_weights(const std::vector<LocationReport>& reports,
                                  const std::vector<UserTerminal>& scheduled_users,
                                  const Swarm& swarm_t0, const ChannelModel& model,
                                  const Eigen::VectorXd& alpha, const ImpairmentConfig& impair,
                                  std::uint64_t seed, std::uint64_t drop);

/// Spatially-sampled MMSE: rows reconstructed at each user's associated beam
/// center instead of its reported location.
BeamformingMatrix ss_mmse_weights(const std::vector<Vec3>& beam_centers_ecef,
                                  const std::vector<UserTerminal>& scheduled_users,
                                  const Swarm& swarm_t0, const ChannelModel& model,
                                  const Eigen::VectorXd& alpha, const ImpairmentConfig& impair,
                                  std::uint64_t seed, std::uint64_t drop);

/// Phase-only multi-beam steering: every node steers towards every listed
/// beam center (in its own frame), one column per beam, entries of modulus
/// 1/sqrt(n_f).
BeamformingMatrix mb_weights(const std::vector<Beam>& beams, const UpaConfig& upa,
                             const Swarm& swarm);

/// Optional CSI-dropout impairment: zero estimated entries more than
/// threshold_db below the row's strongest coefficient.
void apply_csi_dropout(ChannelMatrix& h_est, double threshold_db);

} // namespace cfmimo
