#include "cfmimo/impair.hpp"

#include <cmath>
#include <stdexcept>

namespace cfmimo {

std::pair<double, double> perturb_position(const EarthModel& earth, double lat_rad, double lon_rad,
                                           double max_error_m, RngStream& rng)
{
    if (max_error_m < 0.0) {
        throw std::invalid_argument("position error bound must be non-negative");
    }
    const double r = rng.uniform(0.0, max_error_m);
    const double azimuth = rng.uniform(0.0, 2.0 * constants::pi);
    if (r == 0.0) {
        return {lat_rad, lon_rad};
    }
    return geodetic_offset(earth, lat_rad, lon_rad, azimuth, r);
}

cplx perturb_radiation_pattern(cplx true_gain, double epsilon_rp, bool folded_amplitude,
                               RngStream& rng)
{
    if (epsilon_rp < 0.0) {
        throw std::invalid_argument("epsilon_rp must be non-negative");
    }
    if (epsilon_rp == 0.0) {
        return true_gain;
    }
    const double amp_std = std::abs(true_gain) * std::sqrt(epsilon_rp);
    const double phase_std = std::abs(std::arg(true_gain)) * std::sqrt(epsilon_rp);
    double amp = amp_std * rng.normal();
    const double phase = phase_std * rng.normal();
    if (folded_amplitude) {
        amp = std::abs(amp);
    }
    return true_gain + amp * std::polar(1.0, -phase);
}

} // namespace cfmimo
