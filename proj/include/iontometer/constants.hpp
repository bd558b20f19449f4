#pragma once

#include <numbers>

// Fundamental constants, CODATA 2018, SI units throughout.
namespace iontometer::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// e — elementary charge [C] (exact since the 2019 SI redefinition).
inline constexpr double elementary_charge = 1.602176634e-19;

/// u — unified atomic mass unit [kg].
inline constexpr double atomic_mass_unit = 1.66053906660e-27;

/// eps0 — vacuum permittivity [F/m].
inline constexpr double vacuum_permittivity = 8.8541878128e-12;

/// 1/(4 pi eps0) [N m^2 / C^2].
inline constexpr double coulomb_constant =
    1.0 / (4.0 * pi * vacuum_permittivity);

} // namespace iontometer::constants
