#include "iontometer/core_physics.hpp"

#include "iontometer/constants.hpp"
#include "iontometer/units.hpp"

#include <cmath>
#include <stdexcept>

namespace iontometer {

IonSpecies species_by_name(const std::string& name) {
  if (name == "Yb171")
    return {name, units::amu_to_kg(170.936), constants::elementary_charge};
  if (name == "Be9")
    return {name, units::amu_to_kg(9.012), constants::elementary_charge};
  throw std::invalid_argument("unknown ion species: " + name);
}

double SensorConfig::gamma() const {
  if (gamma_override)
    return *gamma_override;
  return core::transduction_gamma(*this).gamma;
}

void SensorConfig::validate() const {
  ion.validate();
  trap.validate();
  gradient.validate();
  transition.validate();
  coupling.validate();
  timing.validate();
  if (!(t2_s > 0.0))
    throw std::domain_error("SensorConfig: T2 must be > 0");
  if (spam_eta < 0.0 || spam_eta >= 0.5)
    throw std::domain_error("SensorConfig: eta must be in [0, 0.5)");
  if (background_gamma_per_s < 0.0)
    throw std::domain_error("SensorConfig: background decay must be >= 0");
}

namespace core {

double static_displacement(const IonSpecies& ion, double nu, double e_field) {
  if (!(nu > 0.0))
    throw std::domain_error("static_displacement: nu must be > 0");
  return ion.charge_c * e_field / (ion.mass_kg * nu * nu);
}

double harmonic_response(const IonSpecies& ion, double nu, double omega) {
  if (!(nu > 0.0))
    throw std::domain_error("harmonic_response: nu must be > 0");
  if (std::abs(omega - nu) / nu < 1e-9)
    throw std::domain_error(
        "harmonic_response: drive within 1e-9 of resonance, undamped model "
        "diverges");
  return ion.charge_c / (ion.mass_kg * (nu * nu - omega * omega));
}

ZeemanShift zeeman_shift(const ZeemanTransition& tr, double b_tesla) {
  if (b_tesla < 0.0)
    throw std::domain_error("zeeman_shift: B must be >= 0");
  const double b_gauss = units::tesla_to_gauss(b_tesla);
  ZeemanShift out;
  if (tr.order == ZeemanOrder::second) {
    out.shift = units::hz_to_angular(tr.coeff_second_hz_per_gauss2 * b_gauss *
                                     b_gauss);
    // d(shift)/dB in rad/s per Tesla
    out.slope = units::hz_to_angular(2.0 * tr.coeff_second_hz_per_gauss2 *
                                     b_gauss) *
                1.0e4;
  } else {
    out.shift = units::hz_to_angular(tr.coeff_first_hz_per_gauss * b_gauss);
    out.slope = units::hz_to_angular(tr.coeff_first_hz_per_gauss) * 1.0e4;
  }
  return out;
}

TransductionChain transduction_gamma(const SensorConfig& cfg) {
  cfg.ion.validate();
  cfg.trap.validate();
  cfg.gradient.validate();
  cfg.transition.validate();
  TransductionChain chain;
  chain.d_omega_db =
      zeeman_shift(cfg.transition, cfg.gradient.b0_tesla).slope;
  chain.dbdz = cfg.gradient.dbdz_t_per_m;
  chain.dr_de = static_displacement(cfg.ion, cfg.trap.nu_axial, 1.0);
  chain.gamma = chain.d_omega_db * chain.dbdz * chain.dr_de;
  return chain;
}

double two_ion_separation(const IonSpecies& ion, double nu, int n_ions) {
  if (n_ions < 2)
    throw std::domain_error("two_ion_separation: need at least 2 ions");
  const double e = constants::elementary_charge;
  const double scale3 =
      e * e * constants::coulomb_constant / (ion.mass_kg * nu * nu);
  return std::cbrt(scale3) * 2.018 / std::pow(n_ions, 0.559);
}

double gradient_from_two_ion(double b1_tesla, double b2_tesla, double dz_m) {
  if (!(dz_m > 0.0))
    throw std::domain_error("gradient_from_two_ion: separation must be > 0");
  return (b2_tesla - b1_tesla) / dz_m;
}

double point_charge_distance(double e_field) {
  if (!(e_field > 0.0))
    throw std::domain_error("point_charge_distance: field must be > 0");
  return std::sqrt(constants::elementary_charge * constants::coulomb_constant /
                   e_field);
}

double field_of_elementary_charge(double distance_m) {
  if (!(distance_m > 0.0))
    throw std::domain_error(
        "field_of_elementary_charge: distance must be > 0");
  return constants::elementary_charge * constants::coulomb_constant /
         (distance_m * distance_m);
}

} // namespace core
} // namespace iontometer
