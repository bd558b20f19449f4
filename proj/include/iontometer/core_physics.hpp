#pragma once

#include "iontometer/types.hpp"

// Closed-form physics of the transduction chain: electric-field induced
// displacement of a trapped ion, the position dependent Zeeman shift, the
// resulting field-to-frequency transduction parameter, and the two-ion
// gradient metrology used to calibrate it. All functions are pure.
namespace iontometer::core {

/// Quasi-static displacement q E / (m nu^2) of a harmonically confined ion.
double static_displacement(const IonSpecies& ion, double nu, double e_field);

/// Driven-oscillator frequency response q / (m (nu^2 - omega^2)), in meters
/// per (V/m). Reduces to the static value at omega = 0; diverges (and
/// throws) within 1e-9 relative of resonance since damping is not modeled.
double harmonic_response(const IonSpecies& ion, double nu, double omega);

struct ZeemanShift {
  double shift = 0.0; // rad/s relative to the zero-field splitting
  double slope = 0.0; // rad/s per Tesla
};

/// Zeeman shift of the transition and its local field derivative at B.
/// Second order: shift/2pi = 310.8 B_G^2 Hz; first order: 1.4 MHz/G.
ZeemanShift zeeman_shift(const ZeemanTransition& tr, double b_tesla);

/// Transduction parameter gamma = (domega/dB at B0) * (dB/dz) * q/(m nu^2),
/// with every factor reported for the product identity check.
TransductionChain transduction_gamma(const SensorConfig& cfg);

/// Equilibrium separation of an N-ion crystal from the Coulomb/confinement
/// balance: 2.018 / N^0.559 times the length scale
/// (e^2 / (4 pi eps0 m nu^2))^(1/3).
double two_ion_separation(const IonSpecies& ion, double nu, int n_ions);

/// dB/dz = (B2 - B1) / dZ, signed.
double gradient_from_two_ion(double b1_tesla, double b2_tesla, double dz_m);

/// Distance at which a single elementary charge produces field E.
double point_charge_distance(double e_field);

/// Field of a single elementary charge at distance d (inverse of the above).
double field_of_elementary_charge(double distance_m);

} // namespace iontometer::core
