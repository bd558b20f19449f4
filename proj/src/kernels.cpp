#include "iontometer/kernels.hpp"

#include "iontometer/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace iontometer::kernels {

namespace {

// Fixed work units: results must not depend on how blocks map to threads.
constexpr std::size_t tone_block = 4096;
constexpr std::uint64_t shot_block = 65536;

void tone_sum_block(std::span<const double> omega, std::span<const double> amp,
                    std::span<const double> phase, double dt,
                    std::span<double> out, std::size_t begin,
                    std::size_t end, std::vector<double>& re,
                    std::vector<double>& im, std::vector<double>& src,
                    std::vector<double>& sim) {
  const std::size_t nb = omega.size();
  re.resize(nb);
  im.resize(nb);
  src.resize(nb);
  sim.resize(nb);
  const double t0 = static_cast<double>(begin) * dt;
  for (std::size_t k = 0; k < nb; ++k) {
    re[k] = amp[k] * std::cos(omega[k] * t0 + phase[k]);
    im[k] = amp[k] * std::sin(omega[k] * t0 + phase[k]);
    src[k] = std::cos(omega[k] * dt);
    sim[k] = std::sin(omega[k] * dt);
  }
  for (std::size_t n = begin; n < end; ++n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < nb; ++k) {
      acc += re[k];
      const double r = re[k] * src[k] - im[k] * sim[k];
      im[k] = re[k] * sim[k] + im[k] * src[k];
      re[k] = r;
    }
    out[n] = acc;
  }
}

std::uint64_t count_block(double p, std::uint64_t key, std::uint64_t begin,
                          std::uint64_t end) {
  std::uint64_t up = 0;
  for (std::uint64_t i = begin; i < end; ++i)
    up += rng::uniform01(key, i) < p ? 1 : 0;
  return up;
}

inline void rotate_xz(double& rx, double& ry, double& rz, double wx,
                      double wz, double dt) {
  const double w = std::sqrt(wx * wx + wz * wz);
  if (w == 0.0)
    return;
  const double nx = wx / w;
  const double nz = wz / w;
  const double theta = w * dt;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double ndr = nx * rx + nz * rz;
  // n = (nx, 0, nz): n x r = (-nz*ry, nz*rx - nx*rz, nx*ry)
  const double cx = -nz * ry;
  const double cy = nz * rx - nx * rz;
  const double cz = nx * ry;
  rx = c * rx + s * cx + (1.0 - c) * ndr * nx;
  ry = c * ry + s * cy;
  rz = c * rz + s * cz + (1.0 - c) * ndr * nz;
}

} // namespace

Exec default_exec() {
#ifdef _OPENMP
  return omp_get_max_threads() > 1 ? Exec::parallel : Exec::serial;
#else
  return Exec::serial;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void tone_sum(std::span<const double> omega, std::span<const double> amp,
              std::span<const double> phase, double dt,
              std::span<double> out, Exec exec) {
  if (omega.size() != amp.size() || omega.size() != phase.size())
    throw std::invalid_argument("tone_sum: bin arrays must match");
  if (omega.empty()) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const std::size_t n = out.size();
  const std::size_t nblocks = (n + tone_block - 1) / tone_block;
  if (exec == Exec::parallel) {
#ifdef _OPENMP
#pragma omp parallel
    {
      std::vector<double> re, im, src, sim;
#pragma omp for schedule(static)
      for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nblocks);
           ++b) {
        const std::size_t begin = static_cast<std::size_t>(b) * tone_block;
        const std::size_t end = std::min(begin + tone_block, n);
        tone_sum_block(omega, amp, phase, dt, out, begin, end, re, im, src,
                       sim);
      }
    }
    return;
#endif
  }
  std::vector<double> re, im, src, sim;
  for (std::size_t b = 0; b < nblocks; ++b) {
    const std::size_t begin = b * tone_block;
    const std::size_t end = std::min(begin + tone_block, n);
    tone_sum_block(omega, amp, phase, dt, out, begin, end, re, im, src, sim);
  }
}

std::uint64_t count_successes(double p, std::uint64_t n, std::uint64_t key,
                              Exec exec) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::domain_error("count_successes: p must be in [0, 1]");
  const std::uint64_t nblocks = (n + shot_block - 1) / shot_block;
  std::uint64_t total = 0;
  if (exec == Exec::parallel && nblocks > 1) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : total)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nblocks);
         ++b) {
      const std::uint64_t begin = static_cast<std::uint64_t>(b) * shot_block;
      total += count_block(p, key, begin, std::min(begin + shot_block, n));
    }
    return total;
#endif
  }
  for (std::uint64_t b = 0; b < nblocks; ++b) {
    const std::uint64_t begin = b * shot_block;
    total += count_block(p, key, begin, std::min(begin + shot_block, n));
  }
  return total;
}

std::vector<double> bloch_lock_survival(double omega_x,
                                        std::span<const double> detuning,
                                        double dt,
                                        std::span<const std::size_t> snaps) {
  double rx = 1.0, ry = 0.0, rz = 0.0;
  std::vector<double> out;
  out.reserve(snaps.size());
  std::size_t step = 0;
  for (std::size_t snap : snaps) {
    if (snap > detuning.size())
      throw std::invalid_argument(
          "bloch_lock_survival: snapshot beyond waveform");
    if (snap < step)
      throw std::invalid_argument(
          "bloch_lock_survival: snapshots must be non-decreasing");
    for (; step < snap; ++step)
      rotate_xz(rx, ry, rz, omega_x, detuning[step], dt);
    out.push_back(0.5 * (1.0 + rx));
  }
  return out;
}

std::array<double, 3> bloch_lock_state(double omega_x,
                                       std::span<const double> detuning,
                                       double dt, std::array<double, 3> r0) {
  for (double d : detuning)
    rotate_xz(r0[0], r0[1], r0[2], omega_x, d, dt);
  return r0;
}

std::vector<double> spin_lock_ensemble(double omega_x,
                                       std::span<const double> bin_omega,
                                       std::span<const double> bin_amp,
                                       std::span<const std::uint64_t> phase_keys,
                                       double dt, std::size_t n_samples,
                                       std::span<const std::size_t> snaps,
                                       Exec exec) {
  const std::size_t nreal = phase_keys.size();
  std::vector<double> out(nreal * snaps.size());
  if (bin_omega.empty()) {
    std::fill(out.begin(), out.end(), 1.0);
    return out;
  }

  auto run_one = [&](std::size_t r, std::vector<double>& detuning,
                     std::vector<double>& phases) {
    phases.resize(bin_omega.size());
    for (std::size_t k = 0; k < phases.size(); ++k)
      phases[k] = rng::uniform_phase(phase_keys[r], k);
    detuning.resize(n_samples);
    tone_sum(bin_omega, bin_amp, phases, dt, detuning, Exec::serial);
    const auto traj = bloch_lock_survival(omega_x, detuning, dt, snaps);
    std::copy(traj.begin(), traj.end(), out.begin() + r * snaps.size());
  };

  if (exec == Exec::parallel) {
#ifdef _OPENMP
#pragma omp parallel
    {
      std::vector<double> detuning, phases;
#pragma omp for schedule(dynamic)
      for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(nreal); ++r)
        run_one(static_cast<std::size_t>(r), detuning, phases);
    }
    return out;
#endif
  }
  std::vector<double> detuning, phases;
  for (std::size_t r = 0; r < nreal; ++r)
    run_one(r, detuning, phases);
  return out;
}

} // namespace iontometer::kernels
