#pragma once

#include <numbers>

namespace ringfiber {

inline constexpr double kSpeedOfLight = 299792458.0;     // m/s
inline constexpr double kVacuumPermittivity = 8.8541878128e-12;  // F/m
inline constexpr double kPi = std::numbers::pi;

// Lengths are carried in micrometres internally; frequencies in rad/s.
inline double omega_from_wavelength_um(double lambda_um) { return 2.0 * kPi * kSpeedOfLight / (lambda_um * 1e-6); }
inline double wavelength_um_from_omega(double omega) { return 2.0 * kPi * kSpeedOfLight / omega * 1e6; }
// Vacuum wavenumber in 1/um.
inline double k0_per_um(double omega) { return omega / kSpeedOfLight * 1e-6; }

}  // namespace ringfiber
