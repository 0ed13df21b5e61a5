#include "cfmimo/beamform.hpp"

#include "cfmimo/rng.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>

namespace cfmimo {

using constants::pi;

Eigen::VectorXd default_alpha(Eigen::Index k, int n_f, double p_t_w)
{
    if (p_t_w <= 0.0) {
        throw std::invalid_argument("transmit power must be positive");
    }
    return Eigen::VectorXd::Constant(k, static_cast<double>(n_f) / p_t_w);
}

BeamformingMatrix mmse_weights(const ChannelMatrix& h_est, const Eigen::VectorXd& alpha)
{
    if (h_est.time_tag != TimeTag::Estimation) {
        throw std::logic_error("beamforming weights must be computed from estimation-time CSI");
    }
    const Eigen::Index k = h_est.entries.rows();
    if (alpha.size() != k) {
        throw std::invalid_argument("alpha length must equal the number of scheduled users");
    }
    if ((alpha.array() <= 0.0).any()) {
        throw std::invalid_argument("regularization factors must be positive");
    }
    if (!h_est.entries.allFinite()) {
        throw std::invalid_argument("non-finite channel entries");
    }

    Eigen::MatrixXcd gram = h_est.entries * h_est.entries.adjoint();
    gram.diagonal() += alpha.cast<cplx>();

    // Hermitian positive definite for alpha > 0.
    Eigen::LLT<Eigen::MatrixXcd> llt(gram);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("MMSE system factorization failed");
    }

    BeamformingMatrix w;
    w.algorithm = Algorithm::Mmse;
    w.alpha = alpha;
    // W = H^H A^{-1} = (A^{-1} H)^H since A is Hermitian.
    w.entries = llt.solve(h_est.entries).adjoint();
    if (!w.entries.allFinite()) {
        throw std::runtime_error("non-finite beamforming weights");
    }
    return w;
}

Eigen::RowVectorXcd reconstruct_channel_from_location(const LocationReport& report,
                                                      TerminalClass terminal_class,
                                                      double noise_temperature_k,
                                                      const Swarm& swarm_t0,
                                                      const ChannelModel& model,
                                                      RpErrorDraw* rp_error,
                                                      std::vector<bool>* below_horizon)
{
    const int n_node = swarm_t0.n_node();
    const Vec3 reported_ecef = geodetic_to_ecef(model.params().earth, report.lat_rad,
                                                report.lon_rad, report.alt_m);

    std::vector<UserNodeGeom> geom(static_cast<std::size_t>(n_node));
    std::vector<double> loss(static_cast<std::size_t>(n_node), 1.0);
    std::vector<double> phase(static_cast<std::size_t>(n_node), 0.0);
    if (below_horizon != nullptr) {
        below_horizon->assign(static_cast<std::size_t>(n_node), false);
    }
    for (int s = 0; s < n_node; ++s) {
        const PairGeometry g = pair_geometry(swarm_t0.nodes[static_cast<std::size_t>(s)],
                                             reported_ecef);
        geom[s].slant_range_m = g.slant_range_m;
        geom[s].elevation_rad = g.elevation_rad;
        geom[s].u = g.u;
        geom[s].v = g.v;
        if (!g.above_horizon && below_horizon != nullptr) {
            (*below_horizon)[static_cast<std::size_t>(s)] = true;
        }
    }
    return model.csi_row(terminal_class, noise_temperature_k, reported_ecef, swarm_t0, geom,
                         loss, phase, rp_error);
}

namespace {

BeamformingMatrix reconstruct_and_invert(const std::vector<LocationReport>& reports,
                                         const std::vector<UserTerminal>& scheduled_users,
                                         const Swarm& swarm_t0, const ChannelModel& model,
                                         const Eigen::VectorXd& alpha,
                                         const ImpairmentConfig& impair, std::uint64_t seed,
                                         std::uint64_t drop, Algorithm algorithm)
{
    if (reports.size() != scheduled_users.size()) {
        throw std::invalid_argument("reports and scheduled users must align");
    }
    const int n_node = swarm_t0.n_node();
    const int n_f = model.params().upa.n_elements();

    ChannelMatrix h;
    h.time_tag = TimeTag::Estimation;
    h.n_node = n_node;
    h.n_f = n_f;
    h.estimated_with_impairments = impair.rp_error_enabled || impair.position_error_enabled;
    h.entries.resize(static_cast<Eigen::Index>(reports.size()),
                     static_cast<Eigen::Index>(n_node) * n_f);

    for (std::size_t i = 0; i < reports.size(); ++i) {
        RpErrorDraw rp;
        RngStream rp_rng(0);
        RpErrorDraw* rp_ptr = nullptr;
        if (impair.rp_error_enabled && impair.epsilon_rp > 0.0) {
            rp_rng = RngStream::from_path(
                seed, {drop, rng_purpose::rp_error,
                       static_cast<std::uint64_t>(scheduled_users[i].user_id)});
            rp.epsilon_rp = impair.epsilon_rp;
            rp.folded_amplitude = impair.rp_folded_amplitude;
            rp.rng = &rp_rng;
            rp_ptr = &rp;
        }
        h.entries.row(static_cast<Eigen::Index>(i)) = reconstruct_channel_from_location(
            reports[i], scheduled_users[i].terminal_class,
            scheduled_users[i].noise_temperature_k, swarm_t0, model, rp_ptr);
    }

    BeamformingMatrix w = mmse_weights(h, alpha);
    w.algorithm = algorithm;
    return w;
}

} // namespace

BeamformingMatrix lb_mmse_weights(const std::vector<LocationReport>& reports,
                                  const std::vector<UserTerminal>& scheduled_users,
                                  const Swarm& swarm_t0, const ChannelModel& model,
                                  const Eigen::VectorXd& alpha, const ImpairmentConfig& impair,
                                  std::uint64_t seed, std::uint64_t drop)
{
    return reconstruct_and_invert(reports, scheduled_users, swarm_t0, model, alpha, impair,
                                  seed, drop, Algorithm::LbMmse);
}

BeamformingMatrix ss_mmse_weights(const std::vector<Vec3>& beam_centers_ecef,
                                  const std::vector<UserTerminal>& scheduled_users,
                                  const Swarm& swarm_t0, const ChannelModel& model,
                                  const Eigen::VectorXd& alpha, const ImpairmentConfig& impair,
                                  std::uint64_t seed, std::uint64_t drop)
{
    if (beam_centers_ecef.size() != scheduled_users.size()) {
        throw std::invalid_argument("beam centers and scheduled users must align");
    }
    std::vector<LocationReport> reports(beam_centers_ecef.size());
    const EarthModel& earth = model.params().earth;
    for (std::size_t i = 0; i < beam_centers_ecef.size(); ++i) {
        LocationReport r;
        r.user_id = scheduled_users[i].user_id;
        ecef_to_geodetic(earth, beam_centers_ecef[i], r.lat_rad, r.lon_rad, r.alt_m);
        r.alt_m = 0.0; // beam centers sit on the surface
        reports[i] = r;
    }
    // Position error does not apply here: the approximation IS the beam
    // center. Only the radiation-pattern error carries over.
    ImpairmentConfig eff = impair;
    eff.position_error_enabled = false;
    return reconstruct_and_invert(reports, scheduled_users, swarm_t0, model, alpha, eff, seed,
                                  drop, Algorithm::SsMmse);
}

BeamformingMatrix mb_weights(const std::vector<Beam>& beams, const UpaConfig& upa,
                             const Swarm& swarm)
{
    if (beams.empty()) {
        throw std::invalid_argument("multi-beam steering needs at least one active beam");
    }
    const int n_node = swarm.n_node();
    const int n_f = upa.n_elements();
    const auto positions = element_positions_wl(upa);
    const double inv_sqrt_nf = 1.0 / std::sqrt(static_cast<double>(n_f));

    BeamformingMatrix w;
    w.algorithm = Algorithm::Mb;
    w.entries.resize(static_cast<Eigen::Index>(n_node) * n_f,
                     static_cast<Eigen::Index>(beams.size()));
    for (std::size_t l = 0; l < beams.size(); ++l) {
        for (int s = 0; s < n_node; ++s) {
            // Every node steers towards the beam's ground center, expressed
            // in its own boresight frame.
            const PairGeometry g =
                pair_geometry(swarm.nodes[static_cast<std::size_t>(s)], beams[l].ground_ecef);
            for (int n = 0; n < n_f; ++n) {
                const double phase =
                    -2.0 * pi * (positions[static_cast<std::size_t>(n)].x() * g.u +
                                 positions[static_cast<std::size_t>(n)].y() * g.v);
                w.entries(static_cast<Eigen::Index>(s) * n_f + n,
                          static_cast<Eigen::Index>(l)) = std::polar(inv_sqrt_nf, phase);
            }
        }
    }
    return w;
}

void apply_csi_dropout(ChannelMatrix& h_est, double threshold_db)
{
    if (threshold_db <= 0.0) {
        throw std::invalid_argument("dropout threshold must be a positive dB margin");
    }
    for (Eigen::Index r = 0; r < h_est.entries.rows(); ++r) {
        const double peak = h_est.entries.row(r).cwiseAbs().maxCoeff();
        if (peak <= 0.0) {
            continue;
        }
        const double floor = peak * db_to_amplitude(-threshold_db);
        for (Eigen::Index c = 0; c < h_est.entries.cols(); ++c) {
            if (std::abs(h_est.entries(r, c)) < floor) {
                h_est.entries(r, c) = cplx{0.0, 0.0};
            }
        }
    }
    h_est.estimated_with_impairments = true;
}

} // namespace cfmimo
