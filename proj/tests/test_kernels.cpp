#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "iontometer/constants.hpp"
#include "iontometer/kernels.hpp"
#include "iontometer/rng.hpp"

#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace iontometer;
using doctest::Approx;

TEST_CASE("tone_sum matches direct evaluation") {
  const std::vector<double> omega{2.0 * constants::pi * 30.0,
                                  2.0 * constants::pi * 77.5,
                                  2.0 * constants::pi * 120.0};
  const std::vector<double> amp{1.0, 0.3, 2.2};
  const std::vector<double> phase{0.1, 2.5, -1.0};
  const double dt = 1e-3;
  std::vector<double> out(10000);
  kernels::tone_sum(omega, amp, phase, dt, out, kernels::Exec::serial);
  for (std::size_t n : {0ul, 1ul, 999ul, 4096ul, 9999ul}) {
    double ref = 0.0;
    for (std::size_t k = 0; k < omega.size(); ++k)
      ref += amp[k] * std::cos(omega[k] * n * dt + phase[k]);
    CHECK(out[n] == Approx(ref).epsilon(1e-10));
  }
}

TEST_CASE("serial and parallel kernels are bit-identical") {
  std::vector<double> omega, amp, phase;
  const std::uint64_t key = rng::derive_key(5, {1});
  for (int k = 0; k < 257; ++k) {
    omega.push_back(2.0 * constants::pi * (1000.0 + 3.1 * k));
    amp.push_back(0.01 + rng::uniform01(key, 2 * k));
    phase.push_back(constants::two_pi * rng::uniform01(key, 2 * k + 1));
  }
  std::vector<double> a(50000), b(50000);
  kernels::tone_sum(omega, amp, phase, 1e-5, a, kernels::Exec::serial);
  kernels::tone_sum(omega, amp, phase, 1e-5, b, kernels::Exec::parallel);
  CHECK(a == b);

#ifdef _OPENMP
  // and independent of the thread count
  const int saved = omp_get_max_threads();
  for (int threads : {1, 3}) {
    omp_set_num_threads(threads);
    std::vector<double> c(50000);
    kernels::tone_sum(omega, amp, phase, 1e-5, c, kernels::Exec::parallel);
    CHECK(c == a);
  }
  omp_set_num_threads(saved);
#endif

  CHECK(kernels::count_successes(0.37, 1000000, key, kernels::Exec::serial) ==
        kernels::count_successes(0.37, 1000000, key,
                                 kernels::Exec::parallel));
}

TEST_CASE("count_successes is binomial") {
  const std::uint64_t key = rng::derive_key(17, {});
  const std::uint64_t n = 1000000;
  const double p = 0.37;
  const auto up = kernels::count_successes(p, n, key,
                                           kernels::default_exec());
  const double sigma = std::sqrt(p * (1.0 - p) * n);
  CHECK(std::abs(static_cast<double>(up) - p * n) < 5.0 * sigma);
}

TEST_CASE("bloch norm drift below 1e-12 over 1e6 steps") {
  // random detunings comparable to the drive: every step moves the vector
  const std::uint64_t key = rng::derive_key(3, {});
  const std::size_t n = 1000000;
  std::vector<double> detuning(n);
  for (std::size_t i = 0; i < n; ++i)
    detuning[i] = 2e5 * (rng::uniform01(key, i) - 0.5);
  const auto r = kernels::bloch_lock_state(1.2e5, detuning, 2e-6,
                                           {1.0, 0.0, 0.0});
  const double norm = std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
  CHECK(std::abs(norm - 1.0) <= 1e-12);
}

TEST_CASE("locked eigenstate is exactly stationary") {
  const std::size_t n = 100000;
  std::vector<double> zero(n, 0.0);
  const std::vector<std::size_t> snaps{n};
  const double p =
      kernels::bloch_lock_survival(1.885e5, zero, 1.5873e-6, snaps)[0];
  CHECK(p == 1.0);
}

TEST_CASE("spin_lock_ensemble with no bins is stationary") {
  std::vector<std::uint64_t> keys{1, 2, 3};
  const std::vector<std::size_t> snaps{10, 100};
  const auto out = kernels::spin_lock_ensemble(
      1e5, {}, {}, keys, 1e-6, 100, snaps, kernels::default_exec());
  for (double p : out)
    CHECK(p == 1.0);
}

TEST_CASE("spin_lock_ensemble serial/parallel bit-identical") {
  std::vector<double> omega, amp;
  for (int k = 0; k < 40; ++k) {
    omega.push_back(2.0 * constants::pi * (29000.0 + 50.0 * k));
    amp.push_back(30.0);
  }
  std::vector<std::uint64_t> keys;
  for (std::uint64_t r = 0; r < 16; ++r)
    keys.push_back(rng::derive_key(99, {r}));
  const std::vector<std::size_t> snaps{500, 2000, 5000};
  const auto a = kernels::spin_lock_ensemble(
      2.0 * constants::pi * 30000.0, omega, amp, keys, 1.0 / 630000.0, 5000,
      snaps, kernels::Exec::serial);
  const auto b = kernels::spin_lock_ensemble(
      2.0 * constants::pi * 30000.0, omega, amp, keys, 1.0 / 630000.0, 5000,
      snaps, kernels::Exec::parallel);
  CHECK(a == b);
}
