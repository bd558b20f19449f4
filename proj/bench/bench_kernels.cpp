// Throughput comparison of the serial reference kernels against the
// OpenMP variants. Verifies bit-identical output while timing.
//
//   bench_kernels [--quick]

#include "iontometer/constants.hpp"
#include "iontometer/kernels.hpp"
#include "iontometer/rng.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

using namespace iontometer;

namespace {

double seconds(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void report(const char* name, double t_serial, double t_parallel,
            bool identical) {
  std::printf("%-22s serial %8.3f s   openmp %8.3f s   speedup %.2fx   %s\n",
              name, t_serial, t_parallel, t_serial / t_parallel,
              identical ? "outputs identical" : "OUTPUT MISMATCH");
}

} // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
  const double scale = quick ? 0.05 : 1.0;
  std::printf("threads available: %d\n", kernels::max_threads());

  // band-noise synthesis
  {
    const std::size_t nbins = 360;
    const auto nsamp = static_cast<std::size_t>(2000000 * scale);
    std::vector<double> omega(nbins), amp(nbins), phase(nbins);
    const std::uint64_t key = rng::derive_key(1, {});
    for (std::size_t k = 0; k < nbins; ++k) {
      omega[k] = constants::two_pi * (28500.0 + 8.33 * k);
      amp[k] = 1e-5;
      phase[k] = rng::uniform_phase(key, k);
    }
    std::vector<double> a(nsamp), b(nsamp);
    const double dt = 1.0 / 630000.0;
    const double ts = seconds([&] {
      kernels::tone_sum(omega, amp, phase, dt, a, kernels::Exec::serial);
    });
    const double tp = seconds([&] {
      kernels::tone_sum(omega, amp, phase, dt, b, kernels::Exec::parallel);
    });
    report("band-noise synthesis", ts, tp, a == b);
  }

  // spin-lock ensemble
  {
    const std::size_t nreal = static_cast<std::size_t>(64 * scale) + 4;
    const std::size_t nsamp = 63000;
    std::vector<double> omega, amp;
    for (int k = 0; k < 300; ++k) {
      omega.push_back(constants::two_pi * (28500.0 + 10.0 * k));
      amp.push_back(40.0);
    }
    std::vector<std::uint64_t> keys(nreal);
    for (std::size_t r = 0; r < nreal; ++r)
      keys[r] = rng::derive_key(2, {r});
    const std::vector<std::size_t> snaps{nsamp / 4, nsamp / 2, nsamp};
    std::vector<double> a, b;
    const double ts = seconds([&] {
      a = kernels::spin_lock_ensemble(1.885e5, omega, amp, keys,
                                      1.0 / 630000.0, nsamp, snaps,
                                      kernels::Exec::serial);
    });
    const double tp = seconds([&] {
      b = kernels::spin_lock_ensemble(1.885e5, omega, amp, keys,
                                      1.0 / 630000.0, nsamp, snaps,
                                      kernels::Exec::parallel);
    });
    report("spin-lock ensemble", ts, tp, a == b);
  }

  // projective shot counting
  {
    const auto n = static_cast<std::uint64_t>(2e8 * scale);
    const std::uint64_t key = rng::derive_key(3, {});
    std::uint64_t a = 0, b = 0;
    const double ts = seconds(
        [&] { a = kernels::count_successes(0.5, n, key, kernels::Exec::serial); });
    const double tp = seconds([&] {
      b = kernels::count_successes(0.5, n, key, kernels::Exec::parallel);
    });
    report("shot counting", ts, tp, a == b);
  }
  return 0;
}
