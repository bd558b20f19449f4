#pragma once

#include "iontometer/constants.hpp"

// Unit conversions applied at configuration boundaries. All internal
// frequencies are angular (rad/s), all fields Tesla, all lengths meters.
namespace iontometer::units {

inline constexpr double hz_to_angular(double f_hz) {
  return constants::two_pi * f_hz;
}

inline constexpr double angular_to_hz(double omega) {
  return omega / constants::two_pi;
}

inline constexpr double gauss_to_tesla(double b_gauss) {
  return b_gauss * 1.0e-4;
}

inline constexpr double tesla_to_gauss(double b_tesla) {
  return b_tesla * 1.0e4;
}

inline constexpr double amu_to_kg(double mass_u) {
  return mass_u * constants::atomic_mass_unit;
}

} // namespace iontometer::units
