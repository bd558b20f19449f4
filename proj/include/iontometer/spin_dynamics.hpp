#pragma once

#include "iontometer/signal_chain.hpp"
#include "iontometer/types.hpp"

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

// Two-level spin evolution under the sensing sequences. The echo protocols
// use the analytic fast path (instantaneous pulses, phase = signed window
// integral of the field-induced detuning); spin locking uses the exact
// per-sample SU(2) rotations in kernels. Projection readout includes a
// symmetric SPAM flip with probability eta.
namespace iontometer::spin {

struct Pulse {
  double axis_phase_rad = 0.0; // 0 = X, pi/2 = Y
  double angle_rad = 0.0;      // in (0, 2*pi]
  bool instantaneous = true;
  double rabi = 0.0; // rad/s, required when finite-duration
};

struct FreeEvolution {
  double duration_s = 0.0;
  bool field_applied = false;
};

using SequenceElement = std::variant<Pulse, FreeEvolution>;

struct PulseSequence {
  std::vector<SequenceElement> elements;

  double total_free_evolution() const;
  void validate() const;
};

/// pi/2 - tau/2 - pi - tau/2 - pi/2 with the final pulse 90 degrees out of
/// phase with the first, so that zero signal reads P = 1/2. In DC mode the
/// field is applied only during the first window.
PulseSequence hahn_echo_sequence(double tau, SenseMode mode);

/// Y(pi/2), X lock drive of duration tau, Y(pi/2) readout.
PulseSequence spin_lock_sequence(double tau, double lock_rabi);

struct SpinOutcome {
  double p_up_ideal = 0.0;
  double p_up_measured = 0.0; // eta + (1 - 2 eta) * p_up_ideal
  double contrast = 0.0;      // exp(-(tau/T2)^2)
};

/// Signed two-window echo phase for a tone-list field, closed form.
/// AC: integral over [0, tau/2] minus integral over [tau/2, tau].
/// DC: field present only during the first window.
double echo_phase_tones(double gamma, double tau,
                        std::span<const signal::Tone> tones, SenseMode mode);

/// Same phase from trapezoid quadrature over a sampled field.
double echo_phase_sampled(double gamma, double tau,
                          const signal::Waveform& field, SenseMode mode);

/// Echo outcome for a sampled field (trapezoid path). The field must cover
/// tau in AC mode and tau/2 in DC mode.
SpinOutcome evolve_echo_analytic(const SensorConfig& cfg, double tau,
                                 const signal::Waveform& field,
                                 SenseMode mode);

/// Echo outcome for a tone-list field (closed-form path).
SpinOutcome evolve_echo_analytic(const SensorConfig& cfg, double tau,
                                 std::span<const signal::Tone> tones,
                                 SenseMode mode);

/// Binomial readout: n projective measurements of a state with ideal
/// up-probability p_true through the symmetric SPAM channel.
std::uint64_t sample_shots(double p_true, double eta, std::uint64_t n,
                           std::uint64_t seed);

/// Locked-state survival for one noise realization: exact piecewise-constant
/// rotations of H = (lock_rabi/2) sigma_x + (gamma E(t)/2) sigma_z, sampled
/// from the waveform. Requires noise duration >= tau and, when the waveform
/// carries band metadata, sample_rate >= 20x the band top.
double integrate_bloch_stochastic(const SensorConfig& cfg, double lock_rabi,
                                  const signal::Waveform& noise_field,
                                  double tau);

struct ExperimentPoint {
  std::size_t setting_index = 0;
  double amplitude_v_per_m = 0.0; // delta E = (2/pi) E_PK
  std::uint64_t shots = 0;
  std::uint64_t up_count = 0;
  std::uint64_t seed = 0;
};

struct ExperimentResult {
  double tau = 0.0;
  SenseMode mode = SenseMode::ac;
  std::uint64_t seed = 0;
  std::vector<ExperimentPoint> points;
};

/// Fringe scan: for each average-field amplitude delta_E, run the echo with
/// a matched sinusoid of peak (pi/2) delta_E and frequency 1/tau, then draw
/// shots. Point r's RNG stream is derived from (seed, r).
ExperimentResult fringe_scan(const SensorConfig& cfg, double tau,
                             SenseMode mode,
                             std::span<const double> amplitudes,
                             std::uint64_t shots_per_point,
                             std::uint64_t seed);

} // namespace iontometer::spin
