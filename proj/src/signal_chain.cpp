#include "iontometer/signal_chain.hpp"

#include "iontometer/constants.hpp"
#include "iontometer/kernels.hpp"
#include "iontometer/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace iontometer::signal {

const char* unit_name(SignalUnit unit) {
  switch (unit) {
  case SignalUnit::volt_awg:
    return "volt_awg";
  case SignalUnit::volt_electrode:
    return "volt_electrode";
  case SignalUnit::field_v_per_m:
    return "field_V_per_m";
  }
  return "unknown";
}

FilterGain highpass_gain(const CouplingModel& model, double omega) {
  model.validate();
  if (omega < 0.0)
    throw std::domain_error("highpass_gain: omega must be >= 0");
  const double x = omega * model.resistance_ohm * model.capacitance_f;
  return {x / std::sqrt(1.0 + x * x),
          constants::pi / 2.0 - std::atan(x)};
}

Waveform waveform_from_tones(std::span<const Tone> tones, double sample_rate,
                             std::size_t n_samples, SignalUnit unit) {
  Waveform w;
  w.sample_rate = sample_rate;
  w.unit = unit;
  w.samples.assign(n_samples, 0.0);
  // sin(x) = cos(x - pi/2); reuse the cosine-sum kernel
  std::vector<double> omega(tones.size()), amp(tones.size()),
      phase(tones.size());
  for (std::size_t k = 0; k < tones.size(); ++k) {
    omega[k] = constants::two_pi * tones[k].frequency_hz;
    amp[k] = tones[k].amplitude;
    phase[k] = tones[k].phase_rad - constants::pi / 2.0;
    w.band_max_hz = std::max(w.band_max_hz, tones[k].frequency_hz);
  }
  kernels::tone_sum(omega, amp, phase, 1.0 / sample_rate, w.samples,
                    kernels::default_exec());
  return w;
}

std::vector<Tone> apply_highpass(std::span<const Tone> tones,
                                 const CouplingModel& model) {
  std::vector<Tone> out;
  out.reserve(tones.size());
  for (const Tone& t : tones) {
    const FilterGain g =
        highpass_gain(model, constants::two_pi * t.frequency_hz);
    out.push_back({t.amplitude * g.magnitude, t.frequency_hz,
                   t.phase_rad + g.phase});
  }
  return out;
}

Precompensated precompensate(const Waveform& target,
                             std::span<const Tone> target_tones,
                             const CouplingModel& model) {
  target.validate();
  Precompensated out;
  out.tones.reserve(target_tones.size());
  for (const Tone& t : target_tones) {
    if (t.frequency_hz <= 0.0)
      throw std::domain_error(
          "precompensate: DC tone cannot cross the coupling capacitor");
    const FilterGain g =
        highpass_gain(model, constants::two_pi * t.frequency_hz);
    out.tones.push_back(
        {t.amplitude / g.magnitude, t.frequency_hz, t.phase_rad - g.phase});
  }
  out.awg = waveform_from_tones(out.tones, target.sample_rate,
                                target.samples.size(), SignalUnit::volt_awg);
  // V_phi = sum of V_A sin(phase) at t = 0 of the shifted waveform
  for (const Tone& t : out.tones)
    out.dc_offset += t.amplitude * std::sin(t.phase_rad);
  return out;
}

BandGrid band_grid(double center_hz, double bandwidth_hz, double psd,
                   double df) {
  const double f_lo = center_hz - bandwidth_hz / 2.0;
  const double f_hi = center_hz + bandwidth_hz / 2.0;
  const auto k_lo = static_cast<std::size_t>(std::ceil(f_lo / df));
  const auto k_hi = static_cast<std::size_t>(std::floor(f_hi / df));
  if (k_hi < k_lo)
    throw std::domain_error(
        "band_grid: no grid bins inside the band; increase duration");
  BandGrid g;
  g.amplitude = std::sqrt(4.0 * psd * df);
  g.omega.reserve(k_hi - k_lo + 1);
  g.bin.reserve(k_hi - k_lo + 1);
  for (std::size_t k = k_lo; k <= k_hi; ++k) {
    g.omega.push_back(constants::two_pi * static_cast<double>(k) * df);
    g.bin.push_back(k);
  }
  return g;
}

Waveform synthesize_band_noise(const NoiseSpec& spec, double sample_rate) {
  spec.validate();
  const double f_hi = spec.center_hz + spec.bandwidth_hz / 2.0;
  if (!(sample_rate >= 20.0 * f_hi))
    throw std::domain_error(
        "synthesize_band_noise: sample rate must be >= 20x the band top");

  const auto n =
      static_cast<std::size_t>(std::ceil(spec.duration_s * sample_rate));
  const double df = sample_rate / static_cast<double>(n); // = 1/duration

  Waveform w;
  w.sample_rate = sample_rate;
  w.unit = SignalUnit::field_v_per_m;
  w.band_max_hz = f_hi;
  w.samples.assign(n, 0.0);
  if (spec.psd_two_sided == 0.0)
    return w;

  const BandGrid grid =
      band_grid(spec.center_hz, spec.bandwidth_hz, spec.psd_two_sided, df);
  std::vector<double> amps(grid.omega.size(), grid.amplitude);
  std::vector<double> phases(grid.omega.size());
  for (std::size_t i = 0; i < grid.bin.size(); ++i)
    phases[i] = rng::uniform_phase(spec.seed, grid.bin[i]);
  kernels::tone_sum(grid.omega, amps, phases, 1.0 / sample_rate, w.samples,
                    kernels::default_exec());
  return w;
}

void write_waveform_csv(std::ostream& os, const Waveform& w) {
  w.validate();
  os << "time_s," << unit_name(w.unit) << "\n";
  char buf[64];
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g",
                  static_cast<double>(i) / w.sample_rate, w.samples[i]);
    os << buf << "\n";
  }
}

} // namespace iontometer::signal
