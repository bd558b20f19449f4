#pragma once

#include "iontometer/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

// Path from the waveform generator to the electric field at the ion:
// geometric scaling, capacitive high-pass coupling with attenuation and
// phase shift, tone pre-compensation, and band-limited noise synthesis.
//
// PSD convention used everywhere in this library: S(omega) is TWO-SIDED,
// the Fourier transform of the autocorrelation, quoted per Hz. The
// one-sided engineering PSD G relates by S = G/2. Under this convention
// a flat band of width B Hz carries total variance 2*S*B, and the
// spin-locking decay rate is Gamma = gamma^2 S_E / 2.
namespace iontometer::signal {

enum class SignalUnit { volt_awg, volt_electrode, field_v_per_m };

const char* unit_name(SignalUnit unit);

struct Waveform {
  std::vector<double> samples;
  double sample_rate = 0.0; // Hz
  SignalUnit unit = SignalUnit::field_v_per_m;
  double band_max_hz = 0.0; // highest synthesized frequency; 0 = unknown

  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }

  void validate() const {
    if (!(sample_rate > 0.0))
      throw std::domain_error("Waveform: sample_rate must be > 0");
    if (samples.empty())
      throw std::domain_error("Waveform: empty");
  }
};

/// Single tone a * sin(2 pi f t + phase).
struct Tone {
  double amplitude = 0.0;
  double frequency_hz = 0.0;
  double phase_rad = 0.0;
};

struct NoiseSpec {
  double center_hz = 0.0;
  double bandwidth_hz = 0.0;
  double psd_two_sided = 0.0; // V^2 m^-2 Hz^-1 at the ion
  double duration_s = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(bandwidth_hz > 0.0))
      throw std::domain_error("NoiseSpec: bandwidth must be > 0");
    if (!(center_hz - bandwidth_hz / 2.0 > 0.0))
      throw std::domain_error("NoiseSpec: band must not reach DC");
    if (psd_two_sided < 0.0)
      throw std::domain_error("NoiseSpec: psd must be >= 0");
    if (!(duration_s > 0.0))
      throw std::domain_error("NoiseSpec: duration must be > 0");
  }
};

/// E = alpha * V, signed.
inline double field_at_ion(double volts, double alpha_per_m) {
  return alpha_per_m * volts;
}

struct FilterGain {
  double magnitude = 0.0;
  double phase = 0.0; // rad, phase lead of the output relative to the input
};

/// First-order high-pass H = j w RC / (1 + j w RC):
/// magnitude wRC/sqrt(1+(wRC)^2), phase pi/2 - atan(wRC).
FilterGain highpass_gain(const CouplingModel& model, double omega);

/// Evaluate a tone list at n uniformly spaced samples.
Waveform waveform_from_tones(std::span<const Tone> tones, double sample_rate,
                             std::size_t n_samples, SignalUnit unit);

/// Forward model of the coupling capacitor on a tone list.
std::vector<Tone> apply_highpass(std::span<const Tone> tones,
                                 const CouplingModel& model);

struct Precompensated {
  Waveform awg;              // waveform to program into the generator
  std::vector<Tone> tones;   // its tone decomposition
  double dc_offset = 0.0;    // volts, applied during the settling window
};

/// Pre-scale and pre-rotate each tone so that the capacitor reproduces the
/// target electrode waveform in amplitude and phase. The DC offset equals
/// the pre-compensated waveform's initial value and suppresses the voltage
/// step when the shifted waveform is switched in. Tones at DC are rejected:
/// they cannot cross the capacitor.
Precompensated precompensate(const Waveform& target,
                             std::span<const Tone> target_tones,
                             const CouplingModel& model);

/// Frequency bins of a band-limited random-phase sum: every multiple of df
/// inside [center - B/2, center + B/2], each carrying amplitude
/// sqrt(4 * psd * df) so the two-sided PSD inside the band equals psd.
struct BandGrid {
  std::vector<double> omega;    // rad/s
  std::vector<std::size_t> bin; // global bin index k (frequency = k * df)
  double amplitude = 0.0;
};

BandGrid band_grid(double center_hz, double bandwidth_hz, double psd,
                   double df);

/// Random-phase harmonic sum on the grid df = 1/duration: bins from
/// band_grid, each with an independent uniform phase keyed on
/// (seed, bin index). The two-sided PSD inside the band equals psd exactly;
/// outside it is zero. Requires sample_rate >= 20 * (center + B/2). The
/// returned duration is rounded to a whole number of samples.
Waveform synthesize_band_noise(const NoiseSpec& spec, double sample_rate);

/// CSV export, one header line naming the unit: `time_s,<unit>`.
void write_waveform_csv(std::ostream& os, const Waveform& w);

} // namespace iontometer::signal
