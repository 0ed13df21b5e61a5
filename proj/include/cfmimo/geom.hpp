#pragma once

#include "cfmimo/rng.hpp"
#include "cfmimo/types.hpp"

#include <vector>

namespace cfmimo {

/// Spherical, non-rotating Earth. Two-body circular orbits make the sub-ms
/// aging intervals used here exact to well below a meter.
struct EarthModel {
    double radius_m = constants::earth_radius_m;
};

struct NodeState {
    int node_id = 0;
    Vec3 position_ecef = Vec3::Zero();
    Vec3 velocity_ecef = Vec3::Zero();
    double altitude_m = 600.0e3;
};

struct Swarm {
    std::vector<NodeState> nodes;
    double inter_node_spacing_m = 0.0;

    int n_node() const { return static_cast<int>(nodes.size()); }
};

struct UserTerminal {
    int user_id = 0;
    double lat_rad = 0.0;
    double lon_rad = 0.0;
    double alt_m = 0.0;
    TerminalClass terminal_class = TerminalClass::Vsat;
    double noise_temperature_k = 290.0;
    LosState los_state = LosState::Unassigned;
};

/// Slant ranges, elevations and per-node direction cosines for a fixed set of
/// users at one time instant. Row = user index, column = node index; uv[s] is
/// a users x 2 matrix of (u, v) in node s's boresight (nadir-pointed) frame.
struct GeometrySnapshot {
    TimeTag time_tag = TimeTag::Estimation;
    Eigen::MatrixXd slant_range_m;
    Eigen::MatrixXd elevation_rad;
    std::vector<Eigen::MatrixX2d> uv;
    std::vector<bool> in_service; ///< elevation above the configured minimum towards every node
};

/// Result of the per-pair geometry kernel shared by snapshots and
/// location-based channel reconstruction.
struct PairGeometry {
    double slant_range_m = 0.0;
    double elevation_rad = 0.0;
    double u = 0.0;
    double v = 0.0;
    bool above_horizon = false;
};

/// Coverage region on the local tangent plane at a reference ground point.
/// Either a disc or a convex polygon (east/north metres); both expose an
/// exact area so the drop count is density * area with no estimation step.
class CoverageRegion {
  public:
    static CoverageRegion disc(const EarthModel& earth, double center_lat_rad,
                               double center_lon_rad, double radius_m);
    static CoverageRegion convex_polygon(const EarthModel& earth, double center_lat_rad,
                                         double center_lon_rad,
                                         std::vector<Eigen::Vector2d> vertices_en_m);

    double area_m2() const { return area_m2_; }
    double area_km2() const { return area_m2_ * 1e-6; }

    /// Draw one point uniformly over the region; returns (lat, lon) radians.
    std::pair<double, double> sample_geodetic(RngStream& rng) const;

  private:
    EarthModel earth_;
    double center_lat_ = 0.0;
    double center_lon_ = 0.0;
    bool is_disc_ = false;
    double radius_m_ = 0.0;
    std::vector<Eigen::Vector2d> polygon_;
    std::vector<double> tri_cumulative_area_;
    double area_m2_ = 0.0;
};

Vec3 geodetic_to_ecef(const EarthModel& earth, double lat_rad, double lon_rad, double alt_m);
void ecef_to_geodetic(const EarthModel& earth, const Vec3& ecef, double& lat_rad, double& lon_rad,
                      double& alt_m);

/// Great-circle destination: from (lat, lon) move arc_m metres along the
/// given initial bearing (clockwise from north).
std::pair<double, double> geodetic_offset(const EarthModel& earth, double lat_rad, double lon_rad,
                                          double bearing_rad, double arc_m);

/// Azimuthal-equidistant forward projection of a ground point onto the
/// tangent plane at the given center; returns (east, north) metres.
Eigen::Vector2d tangent_plane_en(const EarthModel& earth, double center_lat, double center_lon,
                                 double lat, double lon);

/// Earth-central angle between two ground points (radians).
double central_angle(const EarthModel& earth, const Vec3& a, const Vec3& b);

/// Orthonormal boresight frame of a nadir-pointed node: x along-track
/// (velocity), z towards nadir, y completing the right-handed triad.
void node_boresight_frame(const NodeState& node, Vec3& x_hat, Vec3& y_hat, Vec3& z_hat);

/// Slant range, elevation and direction cosines between one ground position
/// and one node.
PairGeometry pair_geometry(const NodeState& node, const Vec3& user_ecef);

/// Intersection of the ray from the node through direction cosines (u, v)
/// with the Earth sphere. Throws if the ray misses the surface.
Vec3 uv_to_ground(const EarthModel& earth, const NodeState& node, double u, double v);

/// Build a swarm of n_node satellites on one circular orbit over the given
/// ground center, separated along-track by spacing_m (node 0 trailing).
Swarm make_swarm(const EarthModel& earth, double altitude_m, int n_node, double spacing_m,
                 double center_lat_rad = 0.0, double center_lon_rad = 0.0);

/// Advance every node along its circular orbit by delta_t seconds.
Swarm propagate_swarm(const Swarm& swarm, double delta_t_s);

/// Uniform user drop over the coverage region; count = round(density * area).
std::vector<UserTerminal> drop_users(const CoverageRegion& region, double density_per_km2,
                                     TerminalClass terminal_class, double noise_temperature_k,
                                     RngStream& rng);

GeometrySnapshot compute_snapshot(const EarthModel& earth, const Swarm& swarm,
                                  const std::vector<UserTerminal>& users, TimeTag tag,
                                  double min_elevation_rad);

} // namespace cfmimo
