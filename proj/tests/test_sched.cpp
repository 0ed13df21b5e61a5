#include "cfmimo/sched.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace cfmimo;

namespace {

const EarthModel kEarth{};

std::vector<BeamLattice> lattices_for(const Swarm& swarm, int tiers, double theta_deg)
{
    std::vector<BeamLattice> lattices;
    for (const auto& node : swarm.nodes) {
        lattices.push_back(build_lattice(tiers, deg_to_rad(theta_deg), node, kEarth));
    }
    return lattices;
}

} // namespace

TEST_CASE("a single node keeps every beam active")
{
    const Swarm swarm = make_swarm(kEarth, 600e3, 1, 0.0);
    const auto lattices = lattices_for(swarm, 5, 3.0);
    const auto beams = collect_swarm_beams(lattices);
    REQUIRE(beams.size() == 91);
    const ActivationMask mask = activate_beams(beams, swarm, lattices[0].spacing_uv);
    CHECK(mask.n_active == 91);
}

TEST_CASE("coincident lattices collapse to one")
{
    // two nodes at (numerically) the same position: every cross pair conflicts
    Swarm swarm = make_swarm(kEarth, 600e3, 1, 0.0);
    NodeState clone = swarm.nodes[0];
    clone.node_id = 1;
    swarm.nodes.push_back(clone);
    const auto lattices = lattices_for(swarm, 3, 5.0);
    const auto beams = collect_swarm_beams(lattices);
    REQUIRE(beams.size() == 74);
    const ActivationMask mask = activate_beams(beams, swarm, lattices[0].spacing_uv);
    CHECK(mask.n_active == 37);
    for (std::size_t b = 0; b < 37; ++b) {
        CHECK(mask.active[b]);
    }
}

TEST_CASE("two-node activation is conflict-free and maximal")
{
    const double theta_deg = 5.0;
    const Swarm probe = make_swarm(kEarth, 600e3, 1, 0.0);
    // nadir spacing spanning 2T beam steps so the lattices abut
    const double s_uv = 2.0 * std::sin(0.5 * deg_to_rad(theta_deg));
    const Vec3 edge = uv_to_ground(kEarth, probe.nodes[0], 4.0 * s_uv, 0.0);
    const Vec3 nadir = kEarth.radius_m * probe.nodes[0].position_ecef.normalized();
    const double spacing_m = central_angle(kEarth, nadir, edge) * kEarth.radius_m;

    const Swarm swarm = make_swarm(kEarth, 600e3, 2, spacing_m);
    const auto lattices = lattices_for(swarm, 2, theta_deg);
    const auto beams = collect_swarm_beams(lattices);
    const ActivationMask mask = activate_beams(beams, swarm, s_uv);

    // some border beams must go, but most survive
    CHECK(mask.n_active < static_cast<int>(beams.size()));
    CHECK(mask.n_active > static_cast<int>(beams.size()) * 3 / 4);

    auto uv_in_frame = [&](const Beam& beam, int frame_node) {
        const PairGeometry g =
            pair_geometry(swarm.nodes[static_cast<std::size_t>(frame_node)], beam.ground_ecef);
        return Eigen::Vector2d{g.u, g.v};
    };
    auto conflict = [&](const Beam& a, const Beam& b) {
        const double in_a = (uv_in_frame(a, a.node_id) - uv_in_frame(b, a.node_id)).norm();
        const double in_b = (uv_in_frame(a, b.node_id) - uv_in_frame(b, b.node_id)).norm();
        return std::min(in_a, in_b) < s_uv * (1.0 - 1e-9);
    };

    // conflict-freedom among the active set
    for (std::size_t i = 0; i < beams.size(); ++i) {
        for (std::size_t j = i + 1; j < beams.size(); ++j) {
            if (mask.active[i] && mask.active[j]) {
                CHECK_FALSE(conflict(beams[i], beams[j]));
            }
        }
    }
    // maximality: every deactivated beam conflicts with some active one
    for (std::size_t i = 0; i < beams.size(); ++i) {
        if (mask.active[i]) {
            continue;
        }
        bool blocked = false;
        for (std::size_t j = 0; j < beams.size() && !blocked; ++j) {
            blocked = mask.active[j] && conflict(beams[i], beams[j]);
        }
        CHECK(blocked);
    }
}

TEST_CASE("users at beam centers associate to those beams")
{
    const Swarm swarm = make_swarm(kEarth, 600e3, 1, 0.0);
    const auto lattices = lattices_for(swarm, 2, 8.0);
    const auto beams = collect_swarm_beams(lattices);
    const ActivationMask mask = activate_beams(beams, swarm, lattices[0].spacing_uv);

    std::vector<Vec3> positions;
    for (const auto& beam : beams) {
        positions.push_back(beam.ground_ecef);
    }
    const std::vector<bool> in_service(positions.size(), true);
    const std::vector<int> assoc =
        associate_users(positions, in_service, beams, mask, kEarth);
    for (std::size_t i = 0; i < beams.size(); ++i) {
        CHECK(assoc[i] == beams[i].beam_id);
    }
}

TEST_CASE("association ties break towards the lowest beam id")
{
    const Swarm swarm = make_swarm(kEarth, 600e3, 1, 0.0);
    auto lattice = build_lattice(0, deg_to_rad(8.0), swarm.nodes[0], kEarth);
    // two beams with identical ground centers force exact distance ties
    std::vector<Beam> beams(2, lattice.beams[0]);
    beams[0].beam_id = 0;
    beams[1].beam_id = 1;
    ActivationMask mask;
    mask.active = {true, true};
    mask.n_active = 2;

    const std::vector<Vec3> positions = {uv_to_ground(kEarth, swarm.nodes[0], 0.05, 0.02)};
    const std::vector<bool> in_service = {true};
    const std::vector<int> assoc =
        associate_users(positions, in_service, beams, mask, kEarth);
    CHECK(assoc[0] == 0);
}

TEST_CASE("out-of-service users stay unassigned")
{
    const Swarm swarm = make_swarm(kEarth, 600e3, 1, 0.0);
    const auto lattices = lattices_for(swarm, 1, 8.0);
    const auto beams = collect_swarm_beams(lattices);
    const ActivationMask mask = activate_beams(beams, swarm, lattices[0].spacing_uv);
    const std::vector<Vec3> positions = {beams[0].ground_ecef};
    const std::vector<bool> in_service = {false};
    const std::vector<int> assoc =
        associate_users(positions, in_service, beams, mask, kEarth);
    CHECK(assoc[0] == -1);
}

namespace {

/// Tiny synthetic association: beam ids 0..n-1 all active.
std::pair<std::vector<Beam>, ActivationMask> synthetic_beams(int n)
{
    const Swarm swarm = make_swarm(kEarth, 600e3, 1, 0.0);
    const BeamLattice lattice = build_lattice(2, deg_to_rad(8.0), swarm.nodes[0], kEarth);
    std::vector<Beam> beams(lattice.beams.begin(),
                            lattice.beams.begin() + n);
    for (int i = 0; i < n; ++i) {
        beams[static_cast<std::size_t>(i)].beam_id = i;
    }
    ActivationMask mask;
    mask.active.assign(static_cast<std::size_t>(n), true);
    mask.n_active = n;
    return {beams, mask};
}

} // namespace

TEST_CASE("slot count equals the largest beam population")
{
    const auto [beams, mask] = synthetic_beams(3);
    // populations {3, 1, 2}
    const std::vector<int> assoc = {0, 0, 0, 1, 2, 2};
    RngStream rng(1);
    const auto schedule = build_schedule(assoc, beams, mask, rng);
    REQUIRE(schedule.size() == 3);
    CHECK(schedule[0].user_indices.size() == 3); // all beams busy
    CHECK(schedule[1].user_indices.size() == 2); // beam 1 exhausted
    CHECK(schedule[2].user_indices.size() == 1); // only beam 0 left
}

TEST_CASE("one user per beam completes in a single slot")
{
    const auto [beams, mask] = synthetic_beams(4);
    const std::vector<int> assoc = {0, 1, 2, 3};
    RngStream rng(2);
    const auto schedule = build_schedule(assoc, beams, mask, rng);
    REQUIRE(schedule.size() == 1);
    CHECK(schedule[0].user_indices.size() == 4);
}

TEST_CASE("every user is served exactly once")
{
    const auto [beams, mask] = synthetic_beams(5);
    std::vector<int> assoc;
    RngStream pick(3);
    for (int i = 0; i < 137; ++i) {
        assoc.push_back(static_cast<int>(pick.below(5)));
    }
    RngStream rng(4);
    const auto schedule = build_schedule(assoc, beams, mask, rng);
    std::multiset<int> served;
    for (const auto& slot : schedule) {
        std::set<int> in_slot(slot.user_indices.begin(), slot.user_indices.end());
        CHECK(in_slot.size() == slot.user_indices.size()); // no repeats inside a slot
        served.insert(slot.user_indices.begin(), slot.user_indices.end());
    }
    REQUIRE(served.size() == 137);
    for (int i = 0; i < 137; ++i) {
        CHECK(served.count(i) == 1);
    }
}

TEST_CASE("scheduling is deterministic under the seed")
{
    const auto [beams, mask] = synthetic_beams(4);
    std::vector<int> assoc;
    RngStream pick(5);
    for (int i = 0; i < 60; ++i) {
        assoc.push_back(static_cast<int>(pick.below(4)));
    }
    RngStream rng_a(77);
    RngStream rng_b(77);
    const auto a = build_schedule(assoc, beams, mask, rng_a);
    const auto b = build_schedule(assoc, beams, mask, rng_b);
    REQUIRE(a.size() == b.size());
    for (std::size_t t = 0; t < a.size(); ++t) {
        CHECK(a[t].user_indices == b[t].user_indices);
        CHECK(a[t].beam_ids == b[t].beam_ids);
    }
}

TEST_CASE("dense uniform drops occupy every active beam")
{
    const Swarm swarm = make_swarm(kEarth, 600e3, 1, 0.0);
    const auto lattices = lattices_for(swarm, 2, 8.0);
    const auto beams = collect_swarm_beams(lattices);
    const ActivationMask mask = activate_beams(beams, swarm, lattices[0].spacing_uv);

    for (std::uint64_t seed : {11u, 22u, 33u}) {
        // hull of the lattice envelope, sampled densely
        const double rc = 2.5 * lattices[0].spacing_uv;
        std::vector<Eigen::Vector2d> corners;
        for (int k = 0; k < 6; ++k) {
            const Vec3 g = uv_to_ground(kEarth, swarm.nodes[0],
                                        rc * std::cos(deg_to_rad(60.0 * k)),
                                        rc * std::sin(deg_to_rad(60.0 * k)));
            double lat = 0.0;
            double lon = 0.0;
            double alt = 0.0;
            ecef_to_geodetic(kEarth, g, lat, lon, alt);
            corners.push_back(tangent_plane_en(kEarth, 0.0, 0.0, lat, lon));
        }
        const CoverageRegion region = CoverageRegion::convex_polygon(kEarth, 0.0, 0.0, corners);
        RngStream rng(seed);
        const auto users = drop_users(region, 2000.0 / region.area_km2(),
                                      TerminalClass::Vsat, 290.0, rng);
        std::vector<Vec3> positions;
        for (const auto& u : users) {
            positions.push_back(geodetic_to_ecef(kEarth, u.lat_rad, u.lon_rad, 0.0));
        }
        const std::vector<bool> in_service(users.size(), true);
        const auto assoc = associate_users(positions, in_service, beams, mask, kEarth);
        std::set<int> occupied(assoc.begin(), assoc.end());
        CHECK(occupied.size() == static_cast<std::size_t>(mask.n_active));
    }
}
