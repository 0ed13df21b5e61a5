#include "cfmimo/geom.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cfmimo {

using constants::pi;

Vec3 geodetic_to_ecef(const EarthModel& earth, double lat_rad, double lon_rad, double alt_m)
{
    const double r = earth.radius_m + alt_m;
    return {r * std::cos(lat_rad) * std::cos(lon_rad), r * std::cos(lat_rad) * std::sin(lon_rad),
            r * std::sin(lat_rad)};
}

void ecef_to_geodetic(const EarthModel& earth, const Vec3& ecef, double& lat_rad, double& lon_rad,
                      double& alt_m)
{
    const double r = ecef.norm();
    lat_rad = std::asin(std::clamp(ecef.z() / r, -1.0, 1.0));
    lon_rad = std::atan2(ecef.y(), ecef.x());
    alt_m = r - earth.radius_m;
}

std::pair<double, double> geodetic_offset(const EarthModel& earth, double lat_rad, double lon_rad,
                                          double bearing_rad, double arc_m)
{
    const double sigma = arc_m / earth.radius_m;
    const double sin_lat = std::sin(lat_rad) * std::cos(sigma) +
                           std::cos(lat_rad) * std::sin(sigma) * std::cos(bearing_rad);
    const double lat2 = std::asin(std::clamp(sin_lat, -1.0, 1.0));
    const double lon2 =
        lon_rad + std::atan2(std::sin(bearing_rad) * std::sin(sigma) * std::cos(lat_rad),
                             std::cos(sigma) - std::sin(lat_rad) * sin_lat);
    return {lat2, lon2};
}

Eigen::Vector2d tangent_plane_en(const EarthModel& earth, double center_lat, double center_lon,
                                 double lat, double lon)
{
    const double dlon = lon - center_lon;
    // haversine form: well conditioned at metre-scale separations
    const double sh_lat = std::sin(0.5 * (lat - center_lat));
    const double sh_lon = std::sin(0.5 * dlon);
    const double h = sh_lat * sh_lat + std::cos(center_lat) * std::cos(lat) * sh_lon * sh_lon;
    const double sigma = 2.0 * std::asin(std::min(1.0, std::sqrt(h)));
    const double bearing =
        std::atan2(std::sin(dlon) * std::cos(lat),
                   std::cos(center_lat) * std::sin(lat) -
                       std::sin(center_lat) * std::cos(lat) * std::cos(dlon));
    const double arc = sigma * earth.radius_m;
    return {arc * std::sin(bearing), arc * std::cos(bearing)};
}

double central_angle(const EarthModel& /*earth*/, const Vec3& a, const Vec3& b)
{
    const double c = a.normalized().dot(b.normalized());
    return std::acos(std::clamp(c, -1.0, 1.0));
}

void node_boresight_frame(const NodeState& node, Vec3& x_hat, Vec3& y_hat, Vec3& z_hat)
{
    z_hat = -node.position_ecef.normalized();
    // Along-track axis: velocity component orthogonal to nadir.
    Vec3 v = node.velocity_ecef - node.velocity_ecef.dot(z_hat) * z_hat;
    if (v.norm() < 1e-9) {
        throw std::invalid_argument("node velocity degenerate: boresight frame undefined");
    }
    x_hat = v.normalized();
    y_hat = z_hat.cross(x_hat);
}

PairGeometry pair_geometry(const NodeState& node, const Vec3& user_ecef)
{
    PairGeometry out;
    const Vec3 delta = node.position_ecef - user_ecef;
    out.slant_range_m = delta.norm();
    if (out.slant_range_m <= 0.0) {
        throw std::invalid_argument("degenerate slant range");
    }
    const Vec3 up = user_ecef.normalized();
    out.elevation_rad = std::asin(std::clamp(delta.dot(up) / out.slant_range_m, -1.0, 1.0));
    out.above_horizon = out.elevation_rad > 0.0;

    Vec3 xb;
    Vec3 yb;
    Vec3 zb;
    node_boresight_frame(node, xb, yb, zb);
    const Vec3 dir = -delta / out.slant_range_m; // node -> user
    out.u = dir.dot(xb);
    out.v = dir.dot(yb);
    return out;
}

Vec3 uv_to_ground(const EarthModel& earth, const NodeState& node, double u, double v)
{
    const double w2 = 1.0 - u * u - v * v;
    if (w2 < 0.0) {
        throw std::invalid_argument("direction cosines outside the unit disc");
    }
    Vec3 xb;
    Vec3 yb;
    Vec3 zb;
    node_boresight_frame(node, xb, yb, zb);
    const Vec3 dir = u * xb + v * yb + std::sqrt(w2) * zb;

    const double b = node.position_ecef.dot(dir);
    const double c = node.position_ecef.squaredNorm() - earth.radius_m * earth.radius_m;
    const double disc = b * b - c;
    if (disc < 0.0) {
        throw std::invalid_argument("beam direction misses the Earth surface");
    }
    const double t = -b - std::sqrt(disc);
    if (t < 0.0) {
        throw std::invalid_argument("beam direction points away from the Earth surface");
    }
    return node.position_ecef + t * dir;
}

Swarm make_swarm(const EarthModel& earth, double altitude_m, int n_node, double spacing_m,
                 double center_lat_rad, double center_lon_rad)
{
    if (n_node < 1) {
        throw std::invalid_argument("swarm needs at least one node");
    }
    const double a = earth.radius_m + altitude_m;
    const Vec3 c_hat = geodetic_to_ecef(earth, center_lat_rad, center_lon_rad, 0.0).normalized();
    // Local east at the center defines the along-track direction.
    const Vec3 east(-std::sin(center_lon_rad), std::cos(center_lon_rad), 0.0);
    const Vec3 h_hat = c_hat.cross(east).normalized(); // orbit normal
    const double speed = std::sqrt(constants::earth_mu_m3_s2 / a);

    Swarm swarm;
    swarm.inter_node_spacing_m = spacing_m;
    for (int i = 0; i < n_node; ++i) {
        const double along = (static_cast<double>(i) - 0.5 * (n_node - 1)) * spacing_m;
        const double theta = along / a;
        const Vec3 r_hat = std::cos(theta) * c_hat + std::sin(theta) * h_hat.cross(c_hat);
        NodeState node;
        node.node_id = i;
        node.altitude_m = altitude_m;
        node.position_ecef = a * r_hat;
        node.velocity_ecef = speed * h_hat.cross(r_hat);
        swarm.nodes.push_back(node);
    }
    return swarm;
}

Swarm propagate_swarm(const Swarm& swarm, double delta_t_s)
{
    if (delta_t_s < 0.0) {
        throw std::invalid_argument("negative propagation interval");
    }
    if (delta_t_s == 0.0) {
        return swarm;
    }
    Swarm out = swarm;
    for (auto& node : out.nodes) {
        const double a = node.position_ecef.norm();
        const double omega = std::sqrt(constants::earth_mu_m3_s2 / (a * a * a));
        const Vec3 h_hat = node.position_ecef.cross(node.velocity_ecef).normalized();
        const double theta = omega * delta_t_s;
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        auto rotate = [&](const Vec3& x) -> Vec3 {
            return c * x + s * h_hat.cross(x) + (1.0 - c) * h_hat.dot(x) * h_hat;
        };
        node.position_ecef = rotate(node.position_ecef);
        node.velocity_ecef = rotate(node.velocity_ecef);
    }
    return out;
}

CoverageRegion CoverageRegion::disc(const EarthModel& earth, double center_lat_rad,
                                    double center_lon_rad, double radius_m)
{
    if (radius_m <= 0.0) {
        throw std::invalid_argument("degenerate coverage region");
    }
    CoverageRegion r;
    r.earth_ = earth;
    r.center_lat_ = center_lat_rad;
    r.center_lon_ = center_lon_rad;
    r.is_disc_ = true;
    r.radius_m_ = radius_m;
    r.area_m2_ = pi * radius_m * radius_m;
    return r;
}

CoverageRegion CoverageRegion::convex_polygon(const EarthModel& earth, double center_lat_rad,
                                              double center_lon_rad,
                                              std::vector<Eigen::Vector2d> vertices_en_m)
{
    if (vertices_en_m.size() < 3) {
        throw std::invalid_argument("degenerate coverage region");
    }
    CoverageRegion r;
    r.earth_ = earth;
    r.center_lat_ = center_lat_rad;
    r.center_lon_ = center_lon_rad;
    r.is_disc_ = false;
    r.polygon_ = std::move(vertices_en_m);

    // Fan triangulation from vertex 0; valid because the polygon is convex.
    double total = 0.0;
    for (std::size_t i = 1; i + 1 < r.polygon_.size(); ++i) {
        const Eigen::Vector2d e1 = r.polygon_[i] - r.polygon_[0];
        const Eigen::Vector2d e2 = r.polygon_[i + 1] - r.polygon_[0];
        total += 0.5 * std::abs(e1.x() * e2.y() - e1.y() * e2.x());
        r.tri_cumulative_area_.push_back(total);
    }
    r.area_m2_ = total;
    if (!(total > 0.0)) {
        throw std::invalid_argument("degenerate coverage region");
    }
    return r;
}

std::pair<double, double> CoverageRegion::sample_geodetic(RngStream& rng) const
{
    Eigen::Vector2d en;
    if (is_disc_) {
        const double r = radius_m_ * std::sqrt(rng.uniform());
        const double az = rng.uniform(0.0, 2.0 * pi);
        en = {r * std::sin(az), r * std::cos(az)};
    } else {
        const double pick = rng.uniform() * area_m2_;
        std::size_t t = 0;
        while (t + 1 < tri_cumulative_area_.size() && pick > tri_cumulative_area_[t]) {
            ++t;
        }
        const Eigen::Vector2d& a = polygon_[0];
        const Eigen::Vector2d& b = polygon_[t + 1];
        const Eigen::Vector2d& c = polygon_[t + 2];
        const double r1 = std::sqrt(rng.uniform());
        const double r2 = rng.uniform();
        en = (1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c;
    }
    const double arc = en.norm();
    const double bearing = std::atan2(en.x(), en.y());
    return geodetic_offset(earth_, center_lat_, center_lon_, bearing, arc);
}

std::vector<UserTerminal> drop_users(const CoverageRegion& region, double density_per_km2,
                                     TerminalClass terminal_class, double noise_temperature_k,
                                     RngStream& rng)
{
    if (density_per_km2 <= 0.0) {
        throw std::invalid_argument("user density must be positive");
    }
    const auto count = static_cast<long>(std::llround(density_per_km2 * region.area_km2()));
    std::vector<UserTerminal> users;
    users.reserve(static_cast<std::size_t>(std::max(count, 0L)));
    for (long i = 0; i < count; ++i) {
        auto [lat, lon] = region.sample_geodetic(rng);
        UserTerminal u;
        u.user_id = static_cast<int>(i);
        u.lat_rad = lat;
        u.lon_rad = lon;
        u.terminal_class = terminal_class;
        u.noise_temperature_k = noise_temperature_k;
        users.push_back(u);
    }
    return users;
}

GeometrySnapshot compute_snapshot(const EarthModel& earth, const Swarm& swarm,
                                  const std::vector<UserTerminal>& users, TimeTag tag,
                                  double min_elevation_rad)
{
    const auto n_user = static_cast<Eigen::Index>(users.size());
    const auto n_node = static_cast<Eigen::Index>(swarm.nodes.size());

    GeometrySnapshot snap;
    snap.time_tag = tag;
    snap.slant_range_m.resize(n_user, n_node);
    snap.elevation_rad.resize(n_user, n_node);
    snap.uv.assign(swarm.nodes.size(), Eigen::MatrixX2d(n_user, 2));
    snap.in_service.assign(users.size(), true);

    for (Eigen::Index i = 0; i < n_user; ++i) {
        const Vec3 p_user =
            geodetic_to_ecef(earth, users[i].lat_rad, users[i].lon_rad, users[i].alt_m);
        for (Eigen::Index s = 0; s < n_node; ++s) {
            const PairGeometry g = pair_geometry(swarm.nodes[s], p_user);
            snap.slant_range_m(i, s) = g.slant_range_m;
            snap.elevation_rad(i, s) = g.elevation_rad;
            snap.uv[s](i, 0) = g.u;
            snap.uv[s](i, 1) = g.v;
            if (g.elevation_rad < min_elevation_rad) {
                snap.in_service[i] = false;
            }
        }
    }
    return snap;
}

} // namespace cfmimo
