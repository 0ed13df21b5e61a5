#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>

namespace cfmimo {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;

/// Physical constants (SI units).
namespace constants {
inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr double boltzmann_j_per_k = 1.380649e-23;
inline constexpr double speed_of_light_m_s = 299792458.0;
inline constexpr double earth_mu_m3_s2 = 3.986004418e14;
inline constexpr double earth_radius_m = 6371.0e3;
} // namespace constants

/// Which instant a geometry/channel object refers to. Beamforming weights may
/// only be computed from Estimation-tagged inputs; metrics only from
/// Transmission-tagged channels.
enum class TimeTag : std::uint8_t { Estimation, Transmission };

enum class TerminalClass : std::uint8_t { Vsat, Handheld };
enum class LosState : std::uint8_t { Los, Nlos, Unassigned };

inline double deg_to_rad(double deg) { return deg * constants::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / constants::pi; }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
/// Field-amplitude conversion: a gain of g dB scales amplitudes by 10^(g/20).
inline double db_to_amplitude(double db) { return std::pow(10.0, db / 20.0); }

} // namespace cfmimo
