#pragma once

#include "iontometer/analysis.hpp"
#include "iontometer/spin_dynamics.hpp"
#include "iontometer/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

// End-to-end experiment reproductions: Hahn-echo sensitivity campaigns,
// shot-noise scaling, spin-locking relaxometry, coherence-time fits and
// the calibration procedures.
namespace iontometer::protocols {

struct SensitivityReport {
  double tau = 0.0;
  SenseMode mode = SenseMode::ac;
  double fringe_a = 0.0;
  double fringe_a_err = 0.0;
  double kappa = 0.0; // V/m per 2 pi of phase, in average-field units
  double kappa_err = 0.0;
  double phase = 0.0;
  double slope_max = 0.0; // (A/2)(2 pi / kappa), probability per (V/m)
  double e_min = 0.0;     // at N = shots_per_point
  double sensitivity = 0.0;
  double sensitivity_err = 0.0;
  std::uint64_t shots_per_point = 0;
  bool fit_ok = false;
  spin::ExperimentResult raw;
};

struct CampaignOptions {
  std::size_t points_per_fringe = 12;
  double sweep_periods = 1.5;
};

/// One fringe scan + sinusoid fit + shot-noise floor per evolution time.
/// Point i's RNG stream derives from (seed, i). Fit failures are flagged
/// in the report; the campaign continues.
std::vector<SensitivityReport> run_sensitivity_campaign(
    const SensorConfig& cfg, SenseMode mode, std::span<const double> taus,
    std::uint64_t shots_per_point, std::uint64_t seed,
    const CampaignOptions& opts = {});

struct ScalingPoint {
  std::uint64_t subset_size = 0;
  std::uint64_t subsets = 0;
  double t_exp = 0.0;
  double e_min = 0.0;
  double e_min_err = 0.0;
};

struct ScalingResult {
  std::vector<ScalingPoint> points;
  double loglog_slope = 0.0;
  double loglog_slope_err = 0.0;
  double e_min_1s = 0.0; // extrapolated to t_exp = 1 s
  double e_min_1s_err = 0.0;
};

/// Shot-noise scaling at the P = 0.5 operating point: M shots are split
/// into k = M/N subsets, and the spread of subset means maps to E_min(N)
/// through the fringe slope. slope_max is the projection-noise-limited
/// model slope at the operating tau (see model_fringe_slope). Subsets with
/// k < 10 are skipped.
ScalingResult run_shot_noise_scaling(const SensorConfig& cfg, double tau_opt,
                                     std::uint64_t m_total,
                                     std::span<const std::uint64_t> subset_sizes,
                                     double slope_max, std::uint64_t seed);

/// Model slope (A/2) gamma tau (halved in DC mode) with A = exp(-(tau/T2)^2).
double model_fringe_slope(const SensorConfig& cfg, double tau, SenseMode mode);

struct SpinLockLevel {
  double psd_two_sided = 0.0;
  double gamma_fit = 0.0;
  double gamma_err = 0.0;
  bool upper_bound = false; // fit pinned at Gamma = 0
  double s_e_inferred = 0.0; // 2 (Gamma - Gamma0) / gamma^2
  std::vector<double> durations;
  std::vector<double> p_up; // SPAM-corrected ensemble estimates
};

struct SpinLockResult {
  std::vector<SpinLockLevel> levels;
  double gamma0 = 0.0; // decay rate with no injected noise
  double gamma0_err = 0.0;
  double s_e_min = 0.0; // 2 Gamma0 / gamma^2, the SNR = 1 floor
};

struct SpinLockPlan {
  double lock_rabi = 0.0;    // rad/s
  double noise_center_hz = 0.0;
  double noise_bandwidth_hz = 0.0;
  std::vector<double> psd_levels; // include a zero level for the floor
  std::vector<double> durations;  // shared grid, seconds
  std::vector<double> durations_zero; // optional longer grid for psd = 0
  // optional per-level grids; when non-empty must match psd_levels
  std::vector<std::vector<double>> durations_per_level;
  // shots per duration; every shot evolves under a freshly synthesized
  // noise realization
  std::uint64_t shots_per_duration = 500;
  // Period of the synthesized noise comb (1/df). At the default, several
  // grid lines fall within 1/tau_max; a comb with period equal to the
  // last fit point re-correlates there and its lines are resolvable by
  // decays slower than the line spacing, which breaks the golden-rule
  // (continuum) regime the Eq.-style rate inversion assumes.
  double synthesis_period_s = 0.0; // 0 = grid_oversample * tau_max
  double grid_oversample = 6.0;
};

/// Rotating-frame relaxometry: per PSD level and lock duration, an
/// ensemble of stochastic Bloch trajectories (one fresh noise realization
/// per shot) is projectively sampled, SPAM-corrected, and fitted to the
/// exponential lock decay. The noise-floor PSD is inverted from the
/// zero-injection decay rate at SNR = 1.
SpinLockResult run_spin_locking(const SensorConfig& cfg,
                                const SpinLockPlan& plan, std::uint64_t seed);

struct T2Estimate {
  double t2 = 0.0;
  double t2_err = 0.0;
  double a0 = 0.0;
  analysis::FitResult fit;
};

/// Weighted Gaussian-decay fit of fringe contrasts against evolution time.
T2Estimate measure_t2(std::span<const double> taus,
                      std::span<const double> contrast,
                      std::span<const double> contrast_err);

struct AlphaCalibration {
  double alpha = 0.0;          // 1/m
  double alpha_err = 0.0;
  double d_omega_dv = 0.0;     // rad/s per volt
  double d_omega_dv_err = 0.0;
  double gamma_implied = 0.0;  // (1/alpha) domega/dV
  std::vector<double> dv_volts;
  std::vector<double> omega_shift; // simulated measurements, rad/s
};

/// Geometric-factor calibration: simulated transition-frequency shifts at
/// voltage offsets (hidden true alpha from cfg), straight-line fit, then
/// alpha = (domega/dV) (dE/dz) / (dB/dz * domega/dB) with dE/dz = m nu^2/q.
/// Frequency-measurement noise is modeled as Gaussian with
/// sigma = 1/(C t_probe sqrt(shots)).
AlphaCalibration calibrate_geometric_factor(const SensorConfig& cfg,
                                            std::span<const double> dv_volts,
                                            std::uint64_t shots,
                                            std::uint64_t seed,
                                            double t_probe = 5e-3);

/// Sensitivity projection for a hypothetical sensor (Eq.-4 style forward
/// evaluation with the hypothetical transduction chain).
double project_sensitivity(const SensorConfig& hypothetical, double tau,
                           double t2, double t_m, SenseMode mode);

} // namespace iontometer::protocols
