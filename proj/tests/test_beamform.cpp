#include "cfmimo/beamform.hpp"

#include "cfmimo/rng.hpp"
#include "cfmimo/sched.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace cfmimo;
using constants::pi;

namespace {

const EarthModel kEarth{};

/// Hand-rolled complex Gaussian elimination with partial pivoting; the
/// independent oracle for the library's Cholesky-based MMSE solve.
Eigen::MatrixXcd solve_dense_oracle(Eigen::MatrixXcd a, Eigen::MatrixXcd b)
{
    const Eigen::Index n = a.rows();
    for (Eigen::Index col = 0; col < n; ++col) {
        Eigen::Index pivot = col;
        for (Eigen::Index r = col + 1; r < n; ++r) {
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) {
                pivot = r;
            }
        }
        a.row(col).swap(a.row(pivot));
        b.row(col).swap(b.row(pivot));
        const cplx d = a(col, col);
        a.row(col) /= d;
        b.row(col) /= d;
        for (Eigen::Index r = 0; r < n; ++r) {
            if (r != col && a(r, col) != cplx{0.0, 0.0}) {
                const cplx f = a(r, col);
                a.row(r) -= f * a.row(col);
                b.row(r) -= f * b.row(col);
            }
        }
    }
    return b;
}

Eigen::MatrixXcd random_complex(Eigen::Index rows, Eigen::Index cols, RngStream& rng)
{
    Eigen::MatrixXcd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = cplx{rng.normal(), rng.normal()};
        }
    }
    return m;
}

ChannelMatrix estimation_matrix(Eigen::MatrixXcd entries, int n_node = 1)
{
    ChannelMatrix h;
    h.entries = std::move(entries);
    h.time_tag = TimeTag::Estimation;
    h.n_node = n_node;
    h.n_f = static_cast<int>(h.entries.cols()) / n_node;
    return h;
}

ChannelModel clear_sky_model(int n_rows = 4, int n_cols = 4)
{
    std::map<int, LossTableRow> rows;
    for (int b = 10; b <= 90; b += 10) {
        rows[b] = LossTableRow{};
    }
    ChannelModel::Params p;
    p.earth = kEarth;
    p.upa.n_rows = n_rows;
    p.upa.n_cols = n_cols;
    p.upa.spacing_wavelengths = 0.55;
    p.antenna = AntennaParams{};
    p.tables = LossTables::from_rows("dense_urban", rows);
    p.mode = ChannelMode::ClearSky;
    p.wavelength_m = 0.15;
    p.bandwidth_hz = 30e6;
    return ChannelModel{std::move(p)};
}

double cosine_similarity(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b)
{
    return std::abs(a.dot(b)) / (a.norm() * b.norm());
}

} // namespace

TEST_CASE("single-user MMSE is a matched filter")
{
    RngStream rng(1);
    const Eigen::MatrixXcd h = random_complex(1, 16, rng);
    const BeamformingMatrix w =
        mmse_weights(estimation_matrix(h), Eigen::VectorXd::Constant(1, 0.5));
    CHECK(cosine_similarity(w.entries.col(0), h.row(0).adjoint()) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("orthogonal equal-norm rows have the closed-form solution")
{
    // rows g * e_k are orthogonal with norm g -> W = H^H / (g^2 + alpha)
    const double g = 3.0;
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(3, 8);
    h(0, 1) = g;
    h(1, 4) = g;
    h(2, 6) = g;
    const double alpha = 0.7;
    const BeamformingMatrix w =
        mmse_weights(estimation_matrix(h), Eigen::VectorXd::Constant(3, alpha));
    const Eigen::MatrixXcd expected = h.adjoint() / (g * g + alpha);
    CHECK((w.entries - expected).norm() < 1e-12 * expected.norm());
}

TEST_CASE("MMSE agrees with the dense-solver oracle on random instances")
{
    RngStream rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::MatrixXcd h = random_complex(4, 16, rng);
        Eigen::VectorXd alpha(4);
        for (int i = 0; i < 4; ++i) {
            alpha(i) = 0.1 + rng.uniform();
        }
        const BeamformingMatrix w = mmse_weights(estimation_matrix(h), alpha);

        Eigen::MatrixXcd gram = h * h.adjoint();
        gram.diagonal() += alpha.cast<cplx>();
        const Eigen::MatrixXcd w_oracle = solve_dense_oracle(gram, h).adjoint();
        CHECK((w.entries - w_oracle).norm() < 1e-10 * w_oracle.norm());
    }
}

TEST_CASE("MMSE solve residual is tiny")
{
    RngStream rng(9);
    const Eigen::MatrixXcd h = random_complex(6, 24, rng);
    const Eigen::VectorXd alpha = Eigen::VectorXd::Constant(6, 0.3);
    Eigen::MatrixXcd gram = h * h.adjoint();
    gram.diagonal() += alpha.cast<cplx>();
    // X solving A X = H H^H via the same route the weights use
    const BeamformingMatrix w = mmse_weights(estimation_matrix(h), alpha);
    const Eigen::MatrixXcd x = w.entries.adjoint() * h.adjoint(); // = A^{-1} H H^H
    const Eigen::MatrixXcd rhs = h * h.adjoint();
    CHECK((gram * x - rhs).norm() / rhs.norm() < 1e-10);
}

TEST_CASE("scaling the channel leaves the single-user beam direction unchanged")
{
    RngStream rng(3);
    const Eigen::MatrixXcd h = random_complex(1, 12, rng);
    const Eigen::VectorXd alpha = Eigen::VectorXd::Constant(1, 0.9);
    const BeamformingMatrix w1 = mmse_weights(estimation_matrix(h), alpha);
    const BeamformingMatrix w2 = mmse_weights(estimation_matrix(3.7 * h), alpha);
    CHECK(cosine_similarity(w1.entries.col(0), w2.entries.col(0)) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("weights demand estimation-tagged inputs and finite entries")
{
    RngStream rng(5);
    Eigen::MatrixXcd entries = random_complex(2, 8, rng);
    ChannelMatrix h = estimation_matrix(entries);
    h.time_tag = TimeTag::Transmission;
    CHECK_THROWS(mmse_weights(h, Eigen::VectorXd::Constant(2, 0.5)));

    ChannelMatrix bad = estimation_matrix(entries);
    bad.entries(0, 0) = cplx{std::nan(""), 0.0};
    CHECK_THROWS(mmse_weights(bad, Eigen::VectorXd::Constant(2, 0.5)));

    ChannelMatrix ok = estimation_matrix(entries);
    CHECK_THROWS(mmse_weights(ok, Eigen::VectorXd::Constant(2, -1.0)));
}

TEST_CASE("reconstruction from the exact position reproduces the true clear-sky row")
{
    const ChannelModel model = clear_sky_model();
    const Swarm swarm = make_swarm(kEarth, 600e3, 2, 300e3);

    std::vector<UserTerminal> users(1);
    users[0].user_id = 0;
    users[0].lat_rad = deg_to_rad(0.4);
    users[0].lon_rad = deg_to_rad(-0.2);
    users[0].noise_temperature_k = 290.0;

    const GeometrySnapshot snap =
        compute_snapshot(kEarth, swarm, users, TimeTag::Estimation, 0.0);
    const ChannelMatrix truth = model.assemble({0}, users, swarm, snap, 1, 0);

    const LocationReport report{0, users[0].lat_rad, users[0].lon_rad, 0.0};
    const Eigen::RowVectorXcd rebuilt = reconstruct_channel_from_location(
        report, users[0].terminal_class, users[0].noise_temperature_k, swarm, model);
    CHECK((rebuilt - truth.entries.row(0)).norm() < 1e-12 * truth.entries.row(0).norm());
}

TEST_CASE("a 10 m position offset leaves the magnitude almost unchanged")
{
    const ChannelModel model = clear_sky_model();
    const Swarm swarm = make_swarm(kEarth, 600e3, 1, 0.0);

    const LocationReport exact{0, deg_to_rad(0.5), deg_to_rad(0.1), 0.0};
    const auto [lat_off, lon_off] =
        geodetic_offset(kEarth, exact.lat_rad, exact.lon_rad, 1.1, 10.0);
    const LocationReport offset{0, lat_off, lon_off, 0.0};

    const Eigen::RowVectorXcd a =
        reconstruct_channel_from_location(exact, TerminalClass::Vsat, 290.0, swarm, model);
    const Eigen::RowVectorXcd b =
        reconstruct_channel_from_location(offset, TerminalClass::Vsat, 290.0, swarm, model);
    for (Eigen::Index n = 0; n < a.size(); ++n) {
        CHECK(std::abs(std::abs(b(n)) / std::abs(a(n)) - 1.0) < 1e-4);
    }
}

TEST_CASE("reconstruction of an NLOS user still excludes the stochastic losses")
{
    // Same position, NLOS channel mode: the true row carries the losses, the
    // reconstruction never does.
    std::map<int, LossTableRow> rows;
    for (int b = 10; b <= 90; b += 10) {
        LossTableRow r;
        r.p_los = 0.0;
        r.sigma_nlos_db = 10.0;
        r.clutter_loss_db = 25.0;
        rows[b] = r;
    }
    ChannelModel::Params p;
    p.earth = kEarth;
    p.upa.n_rows = 4;
    p.upa.n_cols = 4;
    p.antenna = AntennaParams{};
    p.tables = LossTables::from_rows("dense_urban", rows);
    p.mode = ChannelMode::NlosDenseUrban;
    p.wavelength_m = 0.15;
    p.bandwidth_hz = 30e6;
    const ChannelModel nlos_model{std::move(p)};
    const ChannelModel ideal_model = clear_sky_model();

    const Swarm swarm = make_swarm(kEarth, 600e3, 1, 0.0);
    std::vector<UserTerminal> users(1);
    users[0].user_id = 0;
    users[0].lat_rad = deg_to_rad(0.3);
    users[0].los_state = LosState::Nlos;

    const GeometrySnapshot snap =
        compute_snapshot(kEarth, swarm, users, TimeTag::Estimation, 0.0);
    const ChannelMatrix truth = nlos_model.assemble({0}, users, swarm, snap, 3, 0);
    const LocationReport report{0, users[0].lat_rad, users[0].lon_rad, 0.0};
    const Eigen::RowVectorXcd rebuilt = reconstruct_channel_from_location(
        report, users[0].terminal_class, users[0].noise_temperature_k, swarm, nlos_model);
    const Eigen::RowVectorXcd ideal = reconstruct_channel_from_location(
        report, users[0].terminal_class, users[0].noise_temperature_k, swarm, ideal_model);
    // reconstruction equals the loss-free row, not the lossy truth
    CHECK((rebuilt - ideal).norm() < 1e-12 * ideal.norm());
    CHECK((rebuilt - truth.entries.row(0)).norm() > 1e-3 * rebuilt.norm());
}

TEST_CASE("nodes below the reported horizon contribute zero entries")
{
    const ChannelModel model = clear_sky_model();
    Swarm swarm = make_swarm(kEarth, 600e3, 1, 0.0);
    // push the node to the other side of the planet
    swarm.nodes[0].position_ecef = -swarm.nodes[0].position_ecef;
    const LocationReport report{0, 0.0, 0.0, 0.0};
    std::vector<bool> below;
    const Eigen::RowVectorXcd row = reconstruct_channel_from_location(
        report, TerminalClass::Vsat, 290.0, swarm, model, nullptr, &below);
    CHECK(row.norm() == 0.0);
    REQUIRE(below.size() == 1);
    CHECK(below[0]);
}

TEST_CASE("LB-MMSE equals MMSE in the fully ideal zero-aging case")
{
    const ChannelModel model = clear_sky_model();
    const Swarm swarm = make_swarm(kEarth, 600e3, 2, 300e3);
    std::vector<UserTerminal> users(3);
    std::vector<LocationReport> reports;
    for (int i = 0; i < 3; ++i) {
        users[static_cast<std::size_t>(i)].user_id = i;
        users[static_cast<std::size_t>(i)].lat_rad = deg_to_rad(0.2 * i - 0.2);
        users[static_cast<std::size_t>(i)].lon_rad = deg_to_rad(0.3 * i);
        reports.push_back(LocationReport{i, users[static_cast<std::size_t>(i)].lat_rad,
                                         users[static_cast<std::size_t>(i)].lon_rad, 0.0});
    }
    const GeometrySnapshot snap =
        compute_snapshot(kEarth, swarm, users, TimeTag::Estimation, 0.0);
    const ChannelMatrix h = model.assemble({0, 1, 2}, users, swarm, snap, 1, 0);
    const Eigen::VectorXd alpha = Eigen::VectorXd::Constant(3, 0.4);

    const BeamformingMatrix w_csi = mmse_weights(h, alpha);
    const BeamformingMatrix w_loc =
        lb_mmse_weights(reports, users, swarm, model, alpha, ImpairmentConfig{}, 1, 0);
    CHECK((w_csi.entries - w_loc.entries).norm() < 1e-12 * w_csi.entries.norm());
}

TEST_CASE("MB coefficients are unit-modulus over sqrt(N_F)")
{
    const Swarm swarm = make_swarm(kEarth, 600e3, 2, 300e3);
    UpaConfig upa;
    upa.n_rows = 4;
    upa.n_cols = 4;
    std::vector<BeamLattice> lattices;
    for (const auto& node : swarm.nodes) {
        lattices.push_back(build_lattice(1, deg_to_rad(10.0), node, kEarth));
    }
    const std::vector<Beam> beams = collect_swarm_beams(lattices);
    const BeamformingMatrix w = mb_weights(beams, upa, swarm);
    CHECK(w.entries.rows() == 32);
    CHECK(w.entries.cols() == 14);
    for (Eigen::Index r = 0; r < w.entries.rows(); ++r) {
        for (Eigen::Index c = 0; c < w.entries.cols(); ++c) {
            CHECK(std::abs(w.entries(r, c)) == doctest::Approx(0.25).epsilon(1e-12));
        }
    }
    // per-node block of each column has unit norm; the stack has sqrt(N_node)
    for (Eigen::Index c = 0; c < w.entries.cols(); ++c) {
        CHECK(w.entries.col(c).segment(0, 16).norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(w.entries.col(c).norm() ==
              doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    }
    CHECK_THROWS(mb_weights({}, upa, swarm));
}

TEST_CASE("boresight beam column is constant 1/sqrt(N_F)")
{
    const Swarm swarm = make_swarm(kEarth, 600e3, 1, 0.0);
    UpaConfig upa;
    upa.n_rows = 4;
    upa.n_cols = 4;
    const BeamLattice lattice = build_lattice(0, deg_to_rad(10.0), swarm.nodes[0], kEarth);
    const BeamformingMatrix w = mb_weights(lattice.beams, upa, swarm);
    for (Eigen::Index r = 0; r < 16; ++r) {
        CHECK(std::abs(w.entries(r, 0) - cplx{0.25, 0.0}) < 1e-9);
    }
}

TEST_CASE("steered gain peaks at the beam center over a uv grid")
{
    const Swarm swarm = make_swarm(kEarth, 600e3, 1, 0.0);
    UpaConfig upa;
    upa.n_rows = 8;
    upa.n_cols = 8;
    const BeamLattice lattice = build_lattice(1, deg_to_rad(12.0), swarm.nodes[0], kEarth);
    const Beam& beam = lattice.beams[3];
    const BeamformingMatrix w = mb_weights({beam}, upa, swarm);

    auto gain_at = [&](double u, double v) {
        // array factor: element gain normalized out so the steering phases
        // alone set the maximum
        const Eigen::VectorXcd a = array_response(upa, u, v);
        const double g_e = std::abs(element_gain(u, v, upa.element));
        return std::abs((a.transpose() * w.entries.col(0))(0)) / g_e;
    };
    const double peak = gain_at(beam.u, beam.v);
    // grid search around the center; the maximum must sit at the center
    for (int du = -5; du <= 5; ++du) {
        for (int dv = -5; dv <= 5; ++dv) {
            if (du == 0 && dv == 0) {
                continue;
            }
            CHECK(gain_at(beam.u + 0.02 * du, beam.v + 0.02 * dv) <= peak * (1.0 + 1e-9));
        }
    }
}

TEST_CASE("SS-MMSE with users on beam centers equals LB-MMSE")
{
    const ChannelModel model = clear_sky_model();
    const Swarm swarm = make_swarm(kEarth, 600e3, 1, 0.0);
    const BeamLattice lattice =
        build_lattice(1, deg_to_rad(10.0), swarm.nodes[0], kEarth);

    std::vector<UserTerminal> users(3);
    std::vector<LocationReport> reports;
    std::vector<Vec3> centers;
    for (int i = 0; i < 3; ++i) {
        const Beam& beam = lattice.beams[static_cast<std::size_t>(2 * i)];
        double lat = 0.0;
        double lon = 0.0;
        double alt = 0.0;
        ecef_to_geodetic(kEarth, beam.ground_ecef, lat, lon, alt);
        users[static_cast<std::size_t>(i)].user_id = i;
        users[static_cast<std::size_t>(i)].lat_rad = lat;
        users[static_cast<std::size_t>(i)].lon_rad = lon;
        reports.push_back(LocationReport{i, lat, lon, 0.0});
        centers.push_back(beam.ground_ecef);
    }
    const Eigen::VectorXd alpha = Eigen::VectorXd::Constant(3, 0.25);
    const BeamformingMatrix w_lb =
        lb_mmse_weights(reports, users, swarm, model, alpha, ImpairmentConfig{}, 2, 0);
    const BeamformingMatrix w_ss =
        ss_mmse_weights(centers, users, swarm, model, alpha, ImpairmentConfig{}, 2, 0);
    CHECK((w_lb.entries - w_ss.entries).norm() < 1e-12 * w_lb.entries.norm());
}

TEST_CASE("CSI dropout zeroes weak entries and marks the matrix impaired")
{
    Eigen::MatrixXcd entries(1, 4);
    entries << cplx{1.0, 0.0}, cplx{0.5, 0.0}, cplx{1e-4, 0.0}, cplx{0.0, 1e-5};
    ChannelMatrix h = estimation_matrix(entries);
    apply_csi_dropout(h, 40.0);
    CHECK(h.entries(0, 0) == cplx{1.0, 0.0});
    CHECK(h.entries(0, 1) == cplx{0.5, 0.0});
    CHECK(h.entries(0, 2) == cplx{0.0, 0.0});
    CHECK(h.entries(0, 3) == cplx{0.0, 0.0});
    CHECK(h.estimated_with_impairments);
}
