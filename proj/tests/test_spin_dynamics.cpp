#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "iontometer/constants.hpp"
#include "iontometer/spin_dynamics.hpp"
#include "iontometer/units.hpp"

#include <cmath>
#include <vector>

using namespace iontometer;
using doctest::Approx;

namespace {

SensorConfig test_config() {
  SensorConfig cfg;
  cfg.ion = species_by_name("Yb171");
  cfg.trap = {units::hz_to_angular(161191.0), units::hz_to_angular(1.5e6),
              units::hz_to_angular(1.5e6)};
  cfg.gradient = {units::gauss_to_tesla(8.3767), 22.41};
  cfg.transition.order = ZeemanOrder::second;
  cfg.t2_s = 0.304;
  cfg.timing.settling_s = 0.066839;
  cfg.spam_eta = 0.018;
  cfg.alpha_per_m = -95.64;
  cfg.gamma_override = 3998.0;
  return cfg;
}

signal::Waveform sampled_tone(double peak, double freq, double fs,
                              double duration) {
  const std::vector<signal::Tone> tones{{peak, freq, 0.0}};
  return signal::waveform_from_tones(
      tones, fs, static_cast<std::size_t>(duration * fs) + 1,
      signal::SignalUnit::field_v_per_m);
}

} // namespace

TEST_CASE("zero field reads 1/2 at any tau") {
  const SensorConfig cfg = test_config();
  for (double tau : {0.025, 0.172, 0.3}) {
    const std::vector<signal::Tone> none;
    for (SenseMode mode : {SenseMode::ac, SenseMode::dc}) {
      CHECK(spin::evolve_echo_analytic(cfg, tau, none, mode).p_up_ideal ==
            0.5);
    }
  }
}

TEST_CASE("matched AC tone accumulates phi = gamma (2 Epk/pi) tau") {
  const SensorConfig cfg = test_config();
  const double tau = 0.172;
  const double epk = 1.3e-3;
  const std::vector<signal::Tone> tone{{epk, 1.0 / tau, 0.0}};
  const double phi =
      spin::echo_phase_tones(cfg.gamma(), tau, tone, SenseMode::ac);
  CHECK(phi ==
        Approx(cfg.gamma() * 2.0 * epk / constants::pi * tau).epsilon(1e-12));

  // trapezoid quadrature oracle at 1e5 points
  const double fs = 1e5 / tau;
  const double phi_num = spin::echo_phase_sampled(
      cfg.gamma(), tau, sampled_tone(epk, 1.0 / tau, fs, tau), SenseMode::ac);
  CHECK(phi_num == Approx(phi).epsilon(1e-8));
}

TEST_CASE("DC phase is exactly half the AC phase") {
  const SensorConfig cfg = test_config();
  const double tau = 0.1;
  const std::vector<signal::Tone> tone{{2e-3, 1.0 / tau, 0.0}};
  const double ac = spin::echo_phase_tones(cfg.gamma(), tau, tone,
                                           SenseMode::ac);
  const double dc = spin::echo_phase_tones(cfg.gamma(), tau, tone,
                                           SenseMode::dc);
  CHECK(dc == Approx(ac / 2.0).epsilon(1e-14));
}

TEST_CASE("echo cancels a constant detuning exactly") {
  const SensorConfig cfg = test_config();
  // frequency-zero tone with phase pi/2: constant field amplitude
  const std::vector<signal::Tone> constant{
      {0.37, 0.0, constants::pi / 2.0}};
  CHECK(spin::echo_phase_tones(cfg.gamma(), 0.21, constant, SenseMode::ac) ==
        0.0);
  // sampled path: constant waveform, windows identical up to rounding
  signal::Waveform w;
  w.sample_rate = 10000.0;
  w.samples.assign(3001, 0.37);
  w.unit = signal::SignalUnit::field_v_per_m;
  CHECK(std::abs(spin::echo_phase_sampled(cfg.gamma(), 0.3, w,
                                          SenseMode::ac)) < 1e-9);
}

TEST_CASE("analytic and quadrature phases agree for a multi-tone field") {
  const SensorConfig cfg = test_config();
  const double tau = 0.08;
  const std::vector<signal::Tone> tones{
      {1e-3, 1.0 / tau, 0.0}, {4e-4, 3.0 / tau, 1.2}, {2e-4, 7.7, -0.4}};
  const double fs = 1e5 / tau;
  auto w = signal::waveform_from_tones(
      tones, fs, static_cast<std::size_t>(tau * fs) + 1,
      signal::SignalUnit::field_v_per_m);
  for (SenseMode mode : {SenseMode::ac, SenseMode::dc}) {
    const double exact =
        spin::echo_phase_tones(cfg.gamma(), tau, tones, mode);
    const double num = spin::echo_phase_sampled(cfg.gamma(), tau, w, mode);
    CHECK(num == Approx(exact).epsilon(1e-8));
  }
}

TEST_CASE("contrast decays monotonically and hits 1/e at T2") {
  const SensorConfig cfg = test_config();
  const std::vector<signal::Tone> none;
  double prev = 1.0;
  for (int i = 1; i <= 20; ++i) {
    const double tau = 0.03 * i;
    const double a =
        spin::evolve_echo_analytic(cfg, tau, none, SenseMode::ac).contrast;
    CHECK(a <= prev);
    prev = a;
  }
  CHECK(spin::evolve_echo_analytic(cfg, cfg.t2_s, none, SenseMode::ac)
            .contrast == std::exp(-1.0));
}

TEST_CASE("field shorter than the sensing window raises") {
  const SensorConfig cfg = test_config();
  auto w = sampled_tone(1e-3, 10.0, 1000.0, 0.05);
  CHECK_THROWS_AS(
      spin::evolve_echo_analytic(cfg, 0.2, w, SenseMode::ac),
      std::domain_error);
  // DC only needs tau/2
  CHECK_NOTHROW(spin::evolve_echo_analytic(cfg, 0.1, w, SenseMode::dc));
}

TEST_CASE("sample_shots is deterministic and respects the SPAM channel") {
  CHECK(spin::sample_shots(0.7, 0.018, 5000, 42) ==
        spin::sample_shots(0.7, 0.018, 5000, 42));

  // p_true = 1: mean fraction -> 1 - eta
  const auto up = spin::sample_shots(1.0, 0.018, 1000000, 7);
  CHECK(static_cast<double>(up) / 1e6 == Approx(0.982).epsilon(1e-3));

  // symmetric SPAM fixes the midpoint
  const auto mid = spin::sample_shots(0.5, 0.3, 1000000, 8);
  CHECK(static_cast<double>(mid) / 1e6 == Approx(0.5).epsilon(2e-3));

  CHECK_THROWS_AS(spin::sample_shots(1.2, 0.0, 10, 0), std::domain_error);
  CHECK_THROWS_AS(spin::sample_shots(0.5, 0.6, 10, 0), std::domain_error);
}

TEST_CASE("shot fraction scatter matches binomial statistics") {
  const std::uint64_t n = 1000000;
  const auto up = spin::sample_shots(0.5, 0.0, n, 3);
  const double frac = static_cast<double>(up) / static_cast<double>(n);
  CHECK(std::abs(frac - 0.5) < 3.0 / (2.0 * std::sqrt(double(n))));

  // mean over 100 seeds within 4 sigma of eta + (1 - 2 eta) p
  const double p = 0.73, eta = 0.018;
  const std::uint64_t per = 2000;
  double total = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s)
    total += static_cast<double>(spin::sample_shots(p, eta, per, s));
  const double mean = total / (100.0 * per);
  const double expect = eta + (1.0 - 2.0 * eta) * p;
  const double sigma =
      std::sqrt(expect * (1.0 - expect) / (100.0 * per));
  CHECK(std::abs(mean - expect) < 4.0 * sigma);
}

TEST_CASE("stochastic integrator: quiet input stays locked") {
  const SensorConfig cfg = test_config();
  signal::Waveform quiet;
  quiet.sample_rate = 630000.0;
  quiet.samples.assign(63000, 0.0);
  quiet.unit = signal::SignalUnit::field_v_per_m;
  CHECK(spin::integrate_bloch_stochastic(
            cfg, units::hz_to_angular(30000.0), quiet, 0.05) == 1.0);
}

TEST_CASE("stochastic integrator enforces the step-size precondition") {
  const SensorConfig cfg = test_config();
  signal::Waveform coarse;
  coarse.sample_rate = 100000.0; // < 20x the 31.5 kHz band top
  coarse.samples.assign(10000, 0.0);
  coarse.band_max_hz = 31500.0;
  CHECK_THROWS_AS(spin::integrate_bloch_stochastic(
                      cfg, units::hz_to_angular(30000.0), coarse, 0.05),
                  std::domain_error);
}

TEST_CASE("fringe scan reproduces the fringe model") {
  const SensorConfig cfg = test_config();
  const double tau = 0.172;
  const double gamma = cfg.gamma();
  const double kappa_ac = constants::two_pi / (gamma * tau);

  // noiseless limit: ideal probability follows 1/2 + (A/2) sin(2 pi dE/k)
  const double a_exp = std::exp(-(tau / cfg.t2_s) * (tau / cfg.t2_s));
  for (double frac : {0.1, 0.25, 0.4, 0.9}) {
    const double de = frac * kappa_ac;
    const std::vector<signal::Tone> tone{
        {constants::pi / 2.0 * de, 1.0 / tau, 0.0}};
    const double p =
        spin::evolve_echo_analytic(cfg, tau, tone, SenseMode::ac).p_up_ideal;
    CHECK(p == Approx(0.5 + 0.5 * a_exp *
                                std::sin(constants::two_pi * de / kappa_ac))
                   .epsilon(1e-10));
  }

  // a full kappa of amplitude closes the fringe in AC mode, and exactly
  // twice that is needed in DC mode
  const std::vector<signal::Tone> full{
      {constants::pi / 2.0 * kappa_ac, 1.0 / tau, 0.0}};
  CHECK(spin::evolve_echo_analytic(cfg, tau, full, SenseMode::ac).p_up_ideal ==
        Approx(0.5).epsilon(1e-10));
  const std::vector<signal::Tone> twice{
      {constants::pi * kappa_ac, 1.0 / tau, 0.0}};
  CHECK(spin::evolve_echo_analytic(cfg, tau, twice, SenseMode::dc)
            .p_up_ideal == Approx(0.5).epsilon(1e-10));
}

TEST_CASE("fringe scan at zero amplitude is statistically flat") {
  const SensorConfig cfg = test_config();
  const std::vector<double> amplitudes(8, 0.0);
  const auto result =
      spin::fringe_scan(cfg, 0.1, SenseMode::ac, amplitudes, 4000, 11);
  REQUIRE(result.points.size() == 8);
  for (const auto& pt : result.points) {
    const double frac =
        static_cast<double>(pt.up_count) / static_cast<double>(pt.shots);
    CHECK(std::abs(frac - 0.5) < 4.0 / (2.0 * std::sqrt(4000.0)));
  }
}

TEST_CASE("pulse sequence builders validate") {
  const auto echo = spin::hahn_echo_sequence(0.1, SenseMode::ac);
  CHECK_NOTHROW(echo.validate());
  CHECK(echo.total_free_evolution() == Approx(0.1));

  const auto lock =
      spin::spin_lock_sequence(0.05, units::hz_to_angular(30000.0));
  CHECK_NOTHROW(lock.validate());

  spin::PulseSequence bad;
  bad.elements = {spin::Pulse{0.0, 0.0, true, 0.0}};
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
  spin::PulseSequence no_readout;
  no_readout.elements = {spin::FreeEvolution{0.1, false}};
  CHECK_THROWS_AS(no_readout.validate(), std::domain_error);
}
