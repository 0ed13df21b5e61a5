#include "cfmimo/sched.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace cfmimo {

std::vector<Beam> collect_swarm_beams(const std::vector<BeamLattice>& lattices)
{
    std::vector<Beam> beams;
    for (const auto& lattice : lattices) {
        for (const auto& beam : lattice.beams) {
            Beam b = beam;
            b.beam_id = static_cast<int>(beams.size());
            beams.push_back(b);
        }
    }
    return beams;
}

ActivationMask activate_beams(const std::vector<Beam>& beams, const Swarm& swarm,
                              double spacing_uv)
{
    if (spacing_uv <= 0.0) {
        throw std::invalid_argument("beam spacing must be positive");
    }
    // uv of every beam center in every node's frame.
    const int n_node = swarm.n_node();
    std::vector<std::vector<Eigen::Vector2d>> uv_in_frame(
        beams.size(), std::vector<Eigen::Vector2d>(static_cast<std::size_t>(n_node)));
    for (std::size_t b = 0; b < beams.size(); ++b) {
        for (int s = 0; s < n_node; ++s) {
            const PairGeometry g =
                pair_geometry(swarm.nodes[static_cast<std::size_t>(s)], beams[b].ground_ecef);
            uv_in_frame[b][static_cast<std::size_t>(s)] = {g.u, g.v};
        }
    }
    const double criterion = spacing_uv * (1.0 - 1e-9);
    auto conflicts = [&](std::size_t i, std::size_t j) {
        const auto fi = static_cast<std::size_t>(beams[i].node_id);
        const auto fj = static_cast<std::size_t>(beams[j].node_id);
        const double d_in_j = (uv_in_frame[i][fj] - uv_in_frame[j][fj]).norm();
        const double d_in_i = (uv_in_frame[i][fi] - uv_in_frame[j][fi]).norm();
        return d_in_j < criterion || d_in_i < criterion;
    };

    ActivationMask mask;
    mask.active.assign(beams.size(), false);
    std::vector<std::size_t> kept;
    for (std::size_t b = 0; b < beams.size(); ++b) {
        bool ok = true;
        for (std::size_t k : kept) {
            if (conflicts(b, k)) {
                ok = false;
                break;
            }
        }
        if (ok) {
            mask.active[b] = true;
            kept.push_back(b);
        }
    }
    mask.n_active = static_cast<int>(kept.size());
    return mask;
}

std::vector<int> associate_users(const std::vector<Vec3>& user_positions_ecef,
                                 const std::vector<bool>& in_service,
                                 const std::vector<Beam>& beams, const ActivationMask& mask,
                                 const EarthModel& earth)
{
    std::vector<int> assoc(user_positions_ecef.size(), -1);
    for (std::size_t i = 0; i < user_positions_ecef.size(); ++i) {
        if (!in_service[i]) {
            continue;
        }
        double best = std::numeric_limits<double>::infinity();
        int best_id = -1;
        for (std::size_t b = 0; b < beams.size(); ++b) {
            if (!mask.active[b]) {
                continue;
            }
            const double d = central_angle(earth, user_positions_ecef[i], beams[b].ground_ecef);
            if (d < best) {
                best = d;
                best_id = beams[b].beam_id;
            }
        }
        assoc[i] = best_id;
    }
    return assoc;
}

std::vector<SlotSchedule> build_schedule(const std::vector<int>& association,
                                         const std::vector<Beam>& beams,
                                         const ActivationMask& mask, RngStream& rng)
{
    // Unserved pools per active beam, user indices ascending.
    std::map<int, std::vector<int>> pools;
    for (const auto& beam : beams) {
        if (mask.active[static_cast<std::size_t>(beam.beam_id)]) {
            pools[beam.beam_id];
        }
    }
    for (std::size_t i = 0; i < association.size(); ++i) {
        if (association[i] >= 0) {
            pools[association[i]].push_back(static_cast<int>(i));
        }
    }

    std::size_t n_slots = 0;
    for (const auto& [beam_id, pool] : pools) {
        n_slots = std::max(n_slots, pool.size());
    }

    std::vector<SlotSchedule> schedule;
    for (std::size_t t = 0; t < n_slots; ++t) {
        SlotSchedule slot;
        slot.slot_index = static_cast<int>(t);
        for (auto& [beam_id, pool] : pools) {
            if (pool.empty()) {
                continue;
            }
            const auto pick = static_cast<std::size_t>(rng.below(pool.size()));
            slot.user_indices.push_back(pool[pick]);
            slot.beam_ids.push_back(beam_id);
            pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
        }
        schedule.push_back(std::move(slot));
    }
    return schedule;
}

} // namespace cfmimo
