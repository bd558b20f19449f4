#include "iontometer/spin_dynamics.hpp"

#include "iontometer/constants.hpp"
#include "iontometer/kernels.hpp"
#include "iontometer/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace iontometer::spin {

namespace {

// integral of a*sin(w t + ph) over [t1, t2]; w = 0 means a constant field
// of value a*sin(ph)
double tone_integral(const signal::Tone& t, double t1, double t2) {
  const double w = constants::two_pi * t.frequency_hz;
  if (w == 0.0)
    return t.amplitude * std::sin(t.phase_rad) * (t2 - t1);
  return t.amplitude / w *
         (std::cos(w * t1 + t.phase_rad) - std::cos(w * t2 + t.phase_rad));
}

// trapezoid integral of a sampled waveform over [t1, t2]; linear
// interpolation at the fractional end segments, constant extrapolation
// past the last sample (at most half a sample, enforced by the caller)
double sampled_integral(const signal::Waveform& w, double t1, double t2) {
  const double fs = w.sample_rate;
  const std::size_t n = w.samples.size();
  auto value_at = [&](double t) {
    const double x = t * fs;
    if (x <= 0.0)
      return w.samples.front();
    if (x >= static_cast<double>(n - 1))
      return w.samples.back();
    const auto i = static_cast<std::size_t>(x);
    const double frac = x - static_cast<double>(i);
    return w.samples[i] * (1.0 - frac) + w.samples[i + 1] * frac;
  };
  const auto i1 = static_cast<std::size_t>(
      std::clamp(std::ceil(t1 * fs), 0.0, static_cast<double>(n - 1)));
  const auto i2 = static_cast<std::size_t>(
      std::clamp(std::floor(t2 * fs), 0.0, static_cast<double>(n - 1)));
  if (i2 <= i1) // both bounds inside one sample interval
    return 0.5 * (value_at(t1) + value_at(t2)) * (t2 - t1);
  double acc = 0.5 * (value_at(t1) + w.samples[i1]) *
               (static_cast<double>(i1) / fs - t1);
  for (std::size_t i = i1; i < i2; ++i)
    acc += 0.5 * (w.samples[i] + w.samples[i + 1]) / fs;
  acc += 0.5 * (w.samples[i2] + value_at(t2)) *
         (t2 - static_cast<double>(i2) / fs);
  return acc;
}

SpinOutcome outcome_from_phase(const SensorConfig& cfg, double tau,
                               double phi) {
  SpinOutcome out;
  out.contrast = std::exp(-(tau / cfg.t2_s) * (tau / cfg.t2_s));
  out.p_up_ideal = 0.5 + 0.5 * out.contrast * std::sin(phi);
  out.p_up_measured =
      cfg.spam_eta + (1.0 - 2.0 * cfg.spam_eta) * out.p_up_ideal;
  return out;
}

double wrap_angle(double angle) {
  double a = std::fmod(angle, constants::two_pi);
  if (a <= 0.0)
    a += constants::two_pi;
  return a;
}

} // namespace

double PulseSequence::total_free_evolution() const {
  double total = 0.0;
  for (const auto& el : elements)
    if (const auto* fe = std::get_if<FreeEvolution>(&el))
      total += fe->duration_s;
  return total;
}

void PulseSequence::validate() const {
  if (elements.empty())
    throw std::domain_error("PulseSequence: empty");
  for (const auto& el : elements) {
    if (const auto* p = std::get_if<Pulse>(&el)) {
      if (!(p->angle_rad > 0.0 && p->angle_rad <= constants::two_pi))
        throw std::domain_error("PulseSequence: angle must be in (0, 2pi]");
      if (!p->instantaneous && !(p->rabi > 0.0))
        throw std::domain_error(
            "PulseSequence: finite-duration pulse needs a Rabi frequency");
    } else if (const auto* fe = std::get_if<FreeEvolution>(&el)) {
      if (fe->duration_s < 0.0)
        throw std::domain_error("PulseSequence: negative duration");
    }
  }
  // readout requires a final mapping into the sigma_z basis
  const auto* last = std::get_if<Pulse>(&elements.back());
  if (last == nullptr)
    throw std::domain_error(
        "PulseSequence: readout sequence must end with a pulse");
}

PulseSequence hahn_echo_sequence(double tau, SenseMode mode) {
  if (!(tau > 0.0))
    throw std::domain_error("hahn_echo_sequence: tau must be > 0");
  const double pi = constants::pi;
  PulseSequence seq;
  seq.elements = {
      Pulse{0.0, pi / 2.0, true, 0.0},
      FreeEvolution{tau / 2.0, true},
      Pulse{0.0, pi, true, 0.0},
      FreeEvolution{tau / 2.0, mode == SenseMode::ac},
      // 90 degrees out of phase with the first pulse: zero signal reads 1/2
      Pulse{pi / 2.0, pi / 2.0, true, 0.0},
  };
  return seq;
}

PulseSequence spin_lock_sequence(double tau, double lock_rabi) {
  if (!(tau > 0.0) || !(lock_rabi > 0.0))
    throw std::domain_error("spin_lock_sequence: tau and rabi must be > 0");
  const double pi = constants::pi;
  PulseSequence seq;
  seq.elements = {
      Pulse{pi / 2.0, pi / 2.0, true, 0.0},
      Pulse{0.0, wrap_angle(lock_rabi * tau), false, lock_rabi},
      Pulse{pi / 2.0, pi / 2.0, true, 0.0},
  };
  return seq;
}

double echo_phase_tones(double gamma, double tau,
                        std::span<const signal::Tone> tones, SenseMode mode) {
  if (!(tau > 0.0))
    throw std::domain_error("echo_phase_tones: tau must be > 0");
  double first = 0.0, second = 0.0;
  for (const signal::Tone& t : tones) {
    first += tone_integral(t, 0.0, tau / 2.0);
    if (mode == SenseMode::ac)
      second += tone_integral(t, tau / 2.0, tau);
  }
  return gamma * (first - second);
}

double echo_phase_sampled(double gamma, double tau,
                          const signal::Waveform& field, SenseMode mode) {
  field.validate();
  const double needed = mode == SenseMode::ac ? tau : tau / 2.0;
  const double covered =
      static_cast<double>(field.samples.size() - 1) / field.sample_rate;
  if (covered + 0.5 / field.sample_rate < needed)
    throw std::domain_error(
        "echo_phase_sampled: field shorter than the sensing window");
  const double first = sampled_integral(field, 0.0, tau / 2.0);
  const double second = mode == SenseMode::ac
                            ? sampled_integral(field, tau / 2.0, tau)
                            : 0.0;
  return gamma * (first - second);
}

SpinOutcome evolve_echo_analytic(const SensorConfig& cfg, double tau,
                                 const signal::Waveform& field,
                                 SenseMode mode) {
  return outcome_from_phase(
      cfg, tau, echo_phase_sampled(cfg.gamma(), tau, field, mode));
}

SpinOutcome evolve_echo_analytic(const SensorConfig& cfg, double tau,
                                 std::span<const signal::Tone> tones,
                                 SenseMode mode) {
  return outcome_from_phase(
      cfg, tau, echo_phase_tones(cfg.gamma(), tau, tones, mode));
}

std::uint64_t sample_shots(double p_true, double eta, std::uint64_t n,
                           std::uint64_t seed) {
  if (!(p_true >= 0.0 && p_true <= 1.0))
    throw std::domain_error("sample_shots: p must be in [0, 1]");
  if (!(eta >= 0.0 && eta < 0.5))
    throw std::domain_error("sample_shots: eta must be in [0, 0.5)");
  const double p = eta + (1.0 - 2.0 * eta) * p_true;
  return kernels::count_successes(p, n, rng::derive_key(seed, {}),
                                  kernels::default_exec());
}

double integrate_bloch_stochastic(const SensorConfig& cfg, double lock_rabi,
                                  const signal::Waveform& noise_field,
                                  double tau) {
  noise_field.validate();
  if (noise_field.duration() < tau)
    throw std::domain_error(
        "integrate_bloch_stochastic: noise shorter than tau");
  if (noise_field.band_max_hz > 0.0 &&
      noise_field.sample_rate < 20.0 * noise_field.band_max_hz)
    throw std::domain_error(
        "integrate_bloch_stochastic: step size too coarse for the noise "
        "band (need sample_rate >= 20x band top)");
  const double gamma = cfg.gamma();
  const auto n_steps = static_cast<std::size_t>(
      std::llround(tau * noise_field.sample_rate));
  std::vector<double> detuning(n_steps);
  for (std::size_t i = 0; i < n_steps; ++i)
    detuning[i] = gamma * noise_field.samples[i];
  const std::size_t snaps[1] = {n_steps};
  return kernels::bloch_lock_survival(lock_rabi, detuning,
                                      1.0 / noise_field.sample_rate,
                                      snaps)[0];
}

ExperimentResult fringe_scan(const SensorConfig& cfg, double tau,
                             SenseMode mode,
                             std::span<const double> amplitudes,
                             std::uint64_t shots_per_point,
                             std::uint64_t seed) {
  ExperimentResult result;
  result.tau = tau;
  result.mode = mode;
  result.seed = seed;
  result.points.reserve(amplitudes.size());
  for (std::size_t i = 0; i < amplitudes.size(); ++i) {
    // matched sinusoid: delta_E is the average field over a half oscillation
    const signal::Tone tone{constants::pi / 2.0 * amplitudes[i], 1.0 / tau,
                            0.0};
    const SpinOutcome outcome =
        evolve_echo_analytic(cfg, tau, std::span{&tone, 1}, mode);
    const std::uint64_t point_seed = rng::derive_key(seed, {i});
    ExperimentPoint pt;
    pt.setting_index = i;
    pt.amplitude_v_per_m = amplitudes[i];
    pt.shots = shots_per_point;
    pt.up_count =
        sample_shots(outcome.p_up_ideal, cfg.spam_eta, shots_per_point,
                     point_seed);
    pt.seed = point_seed;
    result.points.push_back(pt);
  }
  return result;
}

} // namespace iontometer::spin
