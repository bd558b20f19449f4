#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

// Hot inner loops, each available as a serial reference and an
// OpenMP-parallel variant. Both variants produce bit-identical output:
// work is split into fixed blocks whose contents never depend on thread
// count or schedule, and all randomness is counter-based. Unit tests
// compare the two variants sample for sample; the bench_kernels target
// compares their throughput.
namespace iontometer::kernels {

enum class Exec { serial, parallel };

/// Parallel when OpenMP is compiled in and more than one thread is
/// available, serial otherwise.
Exec default_exec();

int max_threads();

/// out[n] = sum_k amp[k] * cos(omega[k] * n * dt + phase[k]).
///
/// Evaluated blockwise with a per-block complex phasor recurrence; block
/// boundaries are fixed, so the result is independent of scheduling.
void tone_sum(std::span<const double> omega, std::span<const double> amp,
              std::span<const double> phase, double dt,
              std::span<double> out, Exec exec);

/// Count Bernoulli(p) successes over n counter-indexed draws.
std::uint64_t count_successes(double p, std::uint64_t n, std::uint64_t key,
                              Exec exec);

/// One spin-locking trajectory: Bloch vector starting in the locked state
/// (1,0,0), evolved with exact per-sample rotations under
/// H = (omega_x/2) sigma_x + (detuning[n]/2) sigma_z. Returns the locked
/// state population (1 + r_x)/2 after each requested number of steps
/// (snapshot indices must be non-decreasing).
std::vector<double> bloch_lock_survival(double omega_x,
                                        std::span<const double> detuning,
                                        double dt,
                                        std::span<const std::size_t> snaps);

/// Final Bloch vector of the same trajectory, starting from r0.
std::array<double, 3> bloch_lock_state(double omega_x,
                                       std::span<const double> detuning,
                                       double dt, std::array<double, 3> r0);

/// Full relaxometry ensemble. For each realization r: synthesize the
/// detuning time series as a random-phase harmonic sum over the given bins
/// (phases keyed on (phase_keys[r], bin index)), integrate the trajectory,
/// and record the locked-state population at each snapshot. Bin amplitudes
/// are in detuning units (rad/s). Empty bins mean a stationary locked
/// state. Output is row-major [realization][snapshot].
std::vector<double> spin_lock_ensemble(double omega_x,
                                       std::span<const double> bin_omega,
                                       std::span<const double> bin_amp,
                                       std::span<const std::uint64_t> phase_keys,
                                       double dt, std::size_t n_samples,
                                       std::span<const std::size_t> snaps,
                                       Exec exec);

} // namespace iontometer::kernels
