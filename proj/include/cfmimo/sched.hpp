#pragma once

#include "cfmimo/antenna.hpp"
#include "cfmimo/geom.hpp"
#include "cfmimo/rng.hpp"
#include "cfmimo/types.hpp"

#include <vector>

namespace cfmimo {

struct SlotSchedule {
    int slot_index = 0;
    std::vector<int> user_indices; ///< indices into the drop's user vector
    std::vector<int> beam_ids;     ///< global beam id serving each user
};

struct ActivationMask {
    std::vector<bool> active;
    int n_active = 0;
};

/// Flatten per-node lattices into one global beam list (node id, then spiral
/// order) and assign global ids.
std::vector<Beam> collect_swarm_beams(const std::vector<BeamLattice>& lattices);

/// Greedy beam deactivation: walk beams in global order and keep a beam only
/// if, in both owners' frames, its center stays at least one beam spacing
/// (uv chord of theta_3db) away from every already-kept beam. Same-lattice
/// neighbours are exactly one spacing apart and always survive.
ActivationMask activate_beams(const std::vector<Beam>& beams, const Swarm& swarm,
                              double spacing_uv);

/// Nearest active beam center per user (Earth-central angle; ties to the
/// lowest beam id). Out-of-service users map to -1.
std::vector<int> associate_users(const std::vector<Vec3>& user_positions_ecef,
                                 const std::vector<bool>& in_service,
                                 const std::vector<Beam>& beams, const ActivationMask& mask,
                                 const EarthModel& earth);

/// Random scheduler: per slot, one user drawn without replacement from each
/// active beam's unserved pool. Slot count = largest beam population, so
/// every associated user is served exactly once.
std::vector<SlotSchedule> build_schedule(const std::vector<int>& association,
                                         const std::vector<Beam>& beams,
                                         const ActivationMask& mask, RngStream& rng);

} // namespace cfmimo
