#pragma once

#include "cfmimo/antenna.hpp"
#include "cfmimo/geom.hpp"
#include "cfmimo/impair.hpp"
#include "cfmimo/rng.hpp"
#include "cfmimo/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cfmimo {

enum class ChannelMode : std::uint8_t { ClearSky, NlosDenseUrban };

/// One elevation-bin record of the ingested loss-table file.
struct LossTableRow {
    double p_los = 1.0;
    double sigma_los_db = 0.0;
    double sigma_nlos_db = 0.0;
    double clutter_loss_db = 0.0;
    double atmospheric_db = 0.0;
    double scintillation_db = 0.0;
};

/// Environment x elevation-bin tables (LOS probability, shadowing sigmas,
/// clutter, atmospheric and scintillation losses), 10 deg bins over
/// [10, 90] deg. The data file is the ground truth for these values.
class LossTables {
  public:
    static LossTables load(const std::string& path);
    static LossTables from_rows(const std::string& environment,
                                const std::map<int, LossTableRow>& rows);

    const LossTableRow& lookup(const std::string& environment, double elevation_rad) const;
    bool has_environment(const std::string& environment) const;

    /// Nearest 10 deg bin, clamped to [10, 90]. Throws below 5 deg.
    static int elevation_bin_deg(double elevation_rad);

  private:
    std::map<std::string, std::map<int, LossTableRow>> by_env_;
    void validate() const;
};

/// Inputs of the scalar channel-coefficient formula.
struct ChannelCoefficientTerms {
    double slant_range_m = 0.0;
    cplx tx_gain{1.0, 0.0};
    cplx rx_gain{1.0, 0.0};
    double additional_loss_linear = 1.0;
    double noise_power_w = 1.0; ///< kappa * B * T
    double phase_misalignment_rad = 0.0;
};

/// Noise-normalized coefficient
///   h = g_tx g_rx / (4 pi (d/lambda) sqrt(L kappa B T)) e^{-j 2 pi d / lambda} e^{-j phi}.
cplx channel_coefficient(const ChannelCoefficientTerms& terms, double wavelength_m);

/// K x (N_node * N_F) noise-normalized channel matrix. Column blocks of width
/// N_F per node, node order fixed.
struct ChannelMatrix {
    Eigen::MatrixXcd entries;
    TimeTag time_tag = TimeTag::Estimation;
    std::vector<int> user_ids;
    int n_node = 1;
    int n_f = 0;
    /// Set on matrices reconstructed with injected impairments; such matrices
    /// must never reach the metrics path.
    bool estimated_with_impairments = false;
};

/// Per-(user, node) geometry inputs of the row kernel.
struct UserNodeGeom {
    double slant_range_m = 0.0;
    double elevation_rad = 0.0;
    double u = 0.0;
    double v = 0.0;
};

/// Optional radiation-pattern error applied to the transmit gains while
/// reconstructing rows (location-based estimation only).
struct RpErrorDraw {
    double epsilon_rp = 0.0;
    bool folded_amplitude = false;
    RngStream* rng = nullptr; ///< one stream per (user, node); 2 N_F draws
};

/// Channel synthesis: true Eq.-style coefficients with stochastic losses and
/// phase misalignment, plus the deterministic row kernel shared with the
/// location-based reconstruction path.
class ChannelModel {
  public:
    struct Params {
        EarthModel earth;
        UpaConfig upa;
        AntennaParams antenna;
        LossTables tables;
        ChannelMode mode = ChannelMode::ClearSky;
        std::string environment = "dense_urban";
        double wavelength_m = constants::speed_of_light_m_s / 2.0e9;
        double bandwidth_hz = 30.0e6;
        double phase_misalignment_sigma_rad = 0.0; ///< 0 = ideal swarm sync
    };

    explicit ChannelModel(Params params) : p_(std::move(params)) {}

    const Params& params() const { return p_; }
    Params& params() { return p_; }

    double noise_power_w(double noise_temperature_k) const
    {
        return constants::boltzmann_j_per_k * p_.bandwidth_hz * noise_temperature_k;
    }

    /// Bernoulli LOS/NLOS per user from the elevation-binned table (clear-sky
    /// forces LOS). The state persists across both time instants.
    void assign_los_state(std::vector<UserTerminal>& users, const GeometrySnapshot& snapshot,
                          std::uint64_t seed, std::uint64_t drop) const;

    /// Linear additional loss for one (user, node) pair: product of
    /// log-normal shadowing, atmospheric, scintillation and (NLOS) clutter
    /// terms. Clear-sky returns exactly 1. user_row is the user's row in the
    /// snapshot.
    double sample_additional_loss(const UserTerminal& user, int user_row, int node_index,
                                  const GeometrySnapshot& snapshot, RngStream& rng) const;

    /// One CSI row over all nodes from explicit geometry and stochastic
    /// terms. loss_linear/phase are per node; rp_error perturbs the transmit
    /// gains when given. Shared by true synthesis and reconstruction; the
    /// user position only feeds the receive-pattern pointing angles.
    Eigen::RowVectorXcd csi_row(TerminalClass terminal_class, double noise_temperature_k,
                                const Vec3& user_ecef, const Swarm& swarm,
                                const std::vector<UserNodeGeom>& geom,
                                const std::vector<double>& loss_linear,
                                const std::vector<double>& phase_rad,
                                RpErrorDraw* rp_error = nullptr) const;

    /// True K x (N_node N_F) channel matrix for the scheduled users at the
    /// snapshot's time instant. Stochastic draws are keyed by
    /// (seed, drop, purpose, time tag, user, node) so assembly order and
    /// threading never change the values.
    ChannelMatrix assemble(const std::vector<int>& scheduled_user_indices,
                           const std::vector<UserTerminal>& users, const Swarm& swarm,
                           const GeometrySnapshot& snapshot, std::uint64_t seed,
                           std::uint64_t drop) const;

  private:
    Params p_;
};

} // namespace cfmimo
