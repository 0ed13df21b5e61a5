#pragma once

#include "cfmimo/geom.hpp"
#include "cfmimo/types.hpp"

#include <string>
#include <vector>

namespace cfmimo {

/// Parabolic-in-dB single-element pattern: peak gain at boresight, -3 dB at
/// theta_3db/2 off axis, floored at min_gain_dbi.
struct ElementPatternParams {
    double peak_gain_dbi = 5.0;
    double theta_3db_rad = deg_to_rad(65.0);
    double min_gain_dbi = -30.0;
};

struct UpaConfig {
    int n_rows = 32;
    int n_cols = 32;
    double spacing_wavelengths = 0.55;
    ElementPatternParams element;

    int n_elements() const { return n_rows * n_cols; }

    /// Half-power beamwidth of the full array along a principal cut.
    double array_theta_3db_rad() const
    {
        const int n = std::min(n_rows, n_cols);
        return 0.886 / (n * spacing_wavelengths);
    }
};

/// Same parabolic-dB shape for the VSAT dish, pointed at its serving node.
struct VsatPatternParams {
    double peak_gain_dbi = 19.8;
    double theta_3db_rad = deg_to_rad(17.5);
    double min_gain_dbi = -10.0;
};

/// Receiver-side RF parameters loaded from the antenna data file.
struct AntennaParams {
    ElementPatternParams element;
    VsatPatternParams vsat;
    double handheld_gain_dbi = 0.0;
    double vsat_noise_temperature_k = 74.0;
    double handheld_noise_temperature_k = 1453.0;
};

AntennaParams load_antenna_params(const std::string& path);

/// Element positions on the array plane in wavelengths, row-major
/// (index = row * n_cols + col), centered on the array origin. x lies along
/// the node's along-track axis (u), y along v.
std::vector<Eigen::Vector2d> element_positions_wl(const UpaConfig& upa);

/// Element field amplitude towards direction cosines (u, v); zero outside the
/// visible hemisphere.
cplx element_gain(double u, double v, const ElementPatternParams& params);

/// Per-element complex response g_E(u,v) * exp(+j k0 r_n . p).
Eigen::VectorXcd array_response(const UpaConfig& upa, double u, double v);

/// Receive-side field amplitude of a terminal towards node_pos. VSATs point
/// at pointed_node_pos (the node with the best pattern, i.e. highest
/// elevation); handhelds are omnidirectional.
cplx receiver_gain(TerminalClass terminal_class, const Vec3& user_ecef, const Vec3& node_pos,
                   const Vec3& pointed_node_pos, const AntennaParams& params);

struct Beam {
    int beam_id = 0; ///< global id, unique across the swarm
    int node_id = 0;
    int local_id = 0; ///< spiral index within the owning lattice
    double u = 0.0;   ///< beam center direction cosines in the owner's frame
    double v = 0.0;
    int axial_q = 0; ///< hex lattice coordinates, used for reuse coloring
    int axial_r = 0;
    Vec3 ground_ecef = Vec3::Zero();
};

struct BeamLattice {
    int node_id = 0;
    int n_tiers = 0;
    double theta_3db_rad = 0.0;
    double spacing_uv = 0.0; ///< uv chord between adjacent centers = 2 sin(theta_3db/2)
    std::vector<Beam> beams; ///< spiral order: center first, then tier by tier

    int n_beams() const { return static_cast<int>(beams.size()); }
};

/// Centered hexagonal lattice of beam centers around the node's boresight,
/// rows aligned with the velocity axis, adjacent centers one theta_3db apart
/// so the -3 dB contours abut. Count = 3 T (T + 1) + 1.
BeamLattice build_lattice(int n_tiers, double theta_3db_rad, const NodeState& node,
                          const EarthModel& earth);

/// Centered hexagonal number 3T(T+1)+1.
int hex_lattice_count(int n_tiers);

} // namespace cfmimo
