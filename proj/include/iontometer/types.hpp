#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

// Domain value types shared across the library. All quantities are SI:
// angular frequencies in rad/s, magnetic fields in Tesla, lengths in
// meters. Conversions from the Hz/Gauss configuration boundary happen in
// config_io, never here.
namespace iontometer {

struct IonSpecies {
  std::string name;
  double mass_kg = 0.0;
  double charge_c = 0.0; // integer multiple of e, stored in Coulomb

  void validate() const {
    if (!(mass_kg > 0.0))
      throw std::domain_error("IonSpecies: mass must be > 0");
    if (!(charge_c > 0.0))
      throw std::domain_error("IonSpecies: charge must be > 0");
  }
};

/// Species registry (masses in unified atomic mass units).
/// Known names: "Yb171" (170.936 u), "Be9" (9.012 u).
IonSpecies species_by_name(const std::string& name);

struct TrapConfig {
  double nu_axial = 0.0;    // rad/s
  double nu_radial_x = 0.0; // rad/s, carried but not transduced
  double nu_radial_y = 0.0; // rad/s

  void validate() const {
    if (!(nu_axial > 0.0) || !(nu_radial_x > 0.0) || !(nu_radial_y > 0.0))
      throw std::domain_error("TrapConfig: frequencies must be > 0");
  }
};

struct GradientField {
  double b0_tesla = 0.0;
  double dbdz_t_per_m = 0.0;

  void validate() const {
    if (b0_tesla < 0.0)
      throw std::domain_error("GradientField: B0 must be >= 0");
  }
};

enum class ZeemanOrder { first, second };

struct ZeemanTransition {
  ZeemanOrder order = ZeemanOrder::second;
  double coeff_first_hz_per_gauss = 1.4e6;
  double coeff_second_hz_per_gauss2 = 310.8;
  double omega0 = 0.0; // rad/s hyperfine splitting at zero field

  void validate() const {
    if (!(coeff_first_hz_per_gauss > 0.0) ||
        !(coeff_second_hz_per_gauss2 > 0.0))
      throw std::domain_error("ZeemanTransition: coefficients must be > 0");
  }
};

/// Chain of derivatives linking electric field at the ion to the spin
/// transition frequency. The product identity gamma = d_omega_dB * dbdz *
/// dr_dE holds exactly by construction.
struct TransductionChain {
  double gamma = 0.0;      // rad m / V
  double d_omega_db = 0.0; // rad/s per Tesla, evaluated at B0
  double dbdz = 0.0;       // T/m
  double dr_de = 0.0;      // m^2/V
};

struct CouplingModel {
  double capacitance_f = 0.0;
  double resistance_ohm = 0.0;

  double cutoff() const { return 1.0 / (resistance_ohm * capacitance_f); }

  void validate() const {
    if (!(capacitance_f > 0.0) || !(resistance_ohm > 0.0))
      throw std::domain_error("CouplingModel: C and R must be > 0");
  }
};

struct TimingBudget {
  double settling_s = 0.0;
  double cooling_detection_s = 0.0;
  double prep_pulses_s = 0.0;
  double processing_s = 0.0;

  double t_m() const {
    return settling_s + cooling_detection_s + prep_pulses_s + processing_s;
  }

  void validate() const {
    if (settling_s < 0.0 || cooling_detection_s < 0.0 ||
        prep_pulses_s < 0.0 || processing_s < 0.0)
      throw std::domain_error("TimingBudget: components must be >= 0");
  }
};

enum class SenseMode { ac, dc };

/// Full description of one sensor configuration: the transduction chain
/// plus the signal-chain and readout parameters the protocols need.
struct SensorConfig {
  IonSpecies ion;
  TrapConfig trap;
  GradientField gradient;
  ZeemanTransition transition;

  double alpha_per_m = 0.0; // geometric factor, signed
  CouplingModel coupling{220e-12, 1.2e8};

  double t2_s = 0.0;
  TimingBudget timing;
  double spam_eta = 0.0;
  double background_gamma_per_s = 0.0; // residual spin-lock decay rate

  // Calibrated transduction parameter. When absent, gamma() evaluates the
  // forward chain from the configured trap, gradient and transition.
  std::optional<double> gamma_override;

  double gamma() const;

  /// Readout efficiency C = 1/sqrt(1 + 4 eta).
  double readout_c() const { return 1.0 / std::sqrt(1.0 + 4.0 * spam_eta); }

  void validate() const;
};

} // namespace iontometer
