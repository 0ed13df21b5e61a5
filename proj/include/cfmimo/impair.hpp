#pragma once

#include "cfmimo/geom.hpp"
#include "cfmimo/rng.hpp"
#include "cfmimo/types.hpp"

namespace cfmimo {

/// Error injectors for the location-based estimation path. They only ever
/// touch quantities feeding the weight computation; the transmission-time
/// channel is built from true positions and patterns.
struct ImpairmentConfig {
    bool position_error_enabled = false;
    double position_error_max_m = 10.0;
    bool rp_error_enabled = false;
    double epsilon_rp = 0.05;
    /// Signed: amplitude error drawn N(0, |g|^2 eps) as-is (may reduce the
    /// amplitude). Folded: absolute value of the same draw.
    bool rp_folded_amplitude = false;
};

/// Displace a ground position horizontally by r ~ U[0, max) metres in a
/// uniformly random direction; returns (lat, lon) radians.
std::pair<double, double> perturb_position(const EarthModel& earth, double lat_rad, double lon_rad,
                                           double max_error_m, RngStream& rng);

/// Additive radiation-pattern model error: g_hat = g + |dg| e^{-j ang(dg)}
/// with |dg| ~ N(0, |g|^2 eps) and ang(dg) ~ N(0, ang(g)^2 eps), the phase
/// taken as principal value. Consumes exactly two normal draws.
cplx perturb_radiation_pattern(cplx true_gain, double epsilon_rp, bool folded_amplitude,
                               RngStream& rng);

} // namespace cfmimo
