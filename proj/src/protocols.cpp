#include "iontometer/protocols.hpp"

#include "iontometer/constants.hpp"
#include "iontometer/core_physics.hpp"
#include "iontometer/kernels.hpp"
#include "iontometer/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace iontometer::protocols {

namespace {

constexpr std::uint64_t label_fringe = 0x11;
constexpr std::uint64_t label_scaling = 0x22;
constexpr std::uint64_t label_lock_phase = 0x33;
constexpr std::uint64_t label_lock_shot = 0x44;
constexpr std::uint64_t label_alpha = 0x55;

std::uint64_t shots_for(std::uint64_t total, std::size_t r, std::size_t n) {
  return total / n + (r < total % n ? 1 : 0);
}

} // namespace

double model_fringe_slope(const SensorConfig& cfg, double tau,
                          SenseMode mode) {
  const double a = std::exp(-(tau / cfg.t2_s) * (tau / cfg.t2_s));
  const double slope = 0.5 * a * cfg.gamma() * tau;
  return mode == SenseMode::dc ? 0.5 * slope : slope;
}

std::vector<SensitivityReport> run_sensitivity_campaign(
    const SensorConfig& cfg, SenseMode mode, std::span<const double> taus,
    std::uint64_t shots_per_point, std::uint64_t seed,
    const CampaignOptions& opts) {
  cfg.validate();
  if (opts.points_per_fringe < 5)
    throw std::invalid_argument("campaign: need >= 5 points per fringe");
  const double gamma = cfg.gamma();
  const double readout_c = cfg.readout_c();
  const double t_m = cfg.timing.t_m();

  std::vector<SensitivityReport> reports;
  reports.reserve(taus.size());
  for (std::size_t j = 0; j < taus.size(); ++j) {
    const double tau = taus[j];
    if (!(tau > 0.0))
      throw std::domain_error("campaign: tau must be > 0");
    SensitivityReport rep;
    rep.tau = tau;
    rep.mode = mode;
    rep.shots_per_point = shots_per_point;

    // kappa = field amplitude giving one full 2 pi fringe
    const double kappa_expected = constants::two_pi / (gamma * tau) *
                                  (mode == SenseMode::dc ? 2.0 : 1.0);
    std::vector<double> amplitudes(opts.points_per_fringe);
    for (std::size_t i = 0; i < amplitudes.size(); ++i)
      amplitudes[i] = opts.sweep_periods * kappa_expected *
                      static_cast<double>(i) /
                      static_cast<double>(amplitudes.size() - 1);

    rep.raw = spin::fringe_scan(cfg, tau, mode, amplitudes, shots_per_point,
                                rng::derive_key(seed, {label_fringe, j}));

    std::vector<double> p(amplitudes.size()), sig(amplitudes.size());
    for (std::size_t i = 0; i < amplitudes.size(); ++i) {
      p[i] = static_cast<double>(rep.raw.points[i].up_count) /
             static_cast<double>(shots_per_point);
      sig[i] = analysis::binomial_sigma(p[i], shots_per_point);
    }

    try {
      const analysis::FitResult fit =
          analysis::fit_sinusoid(amplitudes, p, sig);
      // an amplitude consistent with zero has no usable slope
      rep.fit_ok = fit.converged &&
                   fit.value("A") > 2.0 * fit.error("A");
      rep.fringe_a = fit.value("A");
      rep.fringe_a_err = fit.error("A");
      rep.kappa = fit.value("kappa");
      rep.kappa_err = fit.error("kappa");
      rep.phase = fit.value("phase");
      rep.slope_max = 0.5 * rep.fringe_a * constants::two_pi / rep.kappa;
      if (rep.fit_ok && rep.slope_max > 0.0) {
        rep.e_min = analysis::emin_from_slope(
            rep.slope_max, readout_c, static_cast<double>(shots_per_point));
        const double t_exp =
            static_cast<double>(shots_per_point) * (tau + t_m);
        rep.sensitivity = rep.e_min * std::sqrt(t_exp);
        // first-order propagation through slope = pi A / kappa
        const double da = constants::pi / rep.kappa;
        const double dk =
            -constants::pi * rep.fringe_a / (rep.kappa * rep.kappa);
        const std::size_t ia = 0, ik = 1; // indices in the fit covariance
        const double var_slope =
            da * da * fit.covariance[ia * 4 + ia] +
            dk * dk * fit.covariance[ik * 4 + ik] +
            2.0 * da * dk * fit.covariance[ia * 4 + ik];
        if (var_slope > 0.0)
          rep.sensitivity_err =
              rep.sensitivity * std::sqrt(var_slope) / rep.slope_max;
      } else {
        rep.fit_ok = false;
      }
    } catch (const std::exception&) {
      rep.fit_ok = false; // flagged; campaign continues
    }
    reports.push_back(std::move(rep));
  }
  return reports;
}

ScalingResult run_shot_noise_scaling(const SensorConfig& cfg, double tau_opt,
                                     std::uint64_t m_total,
                                     std::span<const std::uint64_t> subset_sizes,
                                     double slope_max, std::uint64_t seed) {
  cfg.validate();
  if (!(slope_max > 0.0))
    throw std::domain_error("shot_noise_scaling: slope must be > 0");
  const double t_m = cfg.timing.t_m();

  // one stream of M shots at the mid-fringe operating point
  const double p_op = cfg.spam_eta + (1.0 - 2.0 * cfg.spam_eta) * 0.5;
  const std::uint64_t key = rng::derive_key(seed, {label_scaling});
  std::vector<std::uint8_t> outcomes(m_total);
  for (std::uint64_t i = 0; i < m_total; ++i)
    outcomes[i] = rng::uniform01(key, i) < p_op ? 1 : 0;

  ScalingResult result;
  for (std::uint64_t n : subset_sizes) {
    if (n == 0 || m_total % n != 0)
      throw std::invalid_argument(
          "shot_noise_scaling: subset size must divide M");
    const std::uint64_t k = m_total / n;
    if (k < 10)
      continue; // too few subsets for a reliable spread estimate

    double mean_of_means = 0.0;
    std::vector<double> means(k);
    for (std::uint64_t j = 0; j < k; ++j) {
      std::uint64_t up = 0;
      for (std::uint64_t i = 0; i < n; ++i)
        up += outcomes[j * n + i];
      means[j] = static_cast<double>(up) / static_cast<double>(n);
      mean_of_means += means[j];
    }
    mean_of_means /= static_cast<double>(k);
    double var = 0.0;
    for (double m : means)
      var += (m - mean_of_means) * (m - mean_of_means);
    var /= static_cast<double>(k - 1);

    ScalingPoint pt;
    pt.subset_size = n;
    pt.subsets = k;
    pt.t_exp = static_cast<double>(n) * (tau_opt + t_m);
    pt.e_min = std::sqrt(var) / slope_max;
    pt.e_min_err = pt.e_min / std::sqrt(2.0 * static_cast<double>(k - 1));
    result.points.push_back(pt);
  }
  if (result.points.size() < 2)
    throw std::domain_error(
        "shot_noise_scaling: need at least two usable subset sizes");

  // weighted straight line in log-log space; intercept at t_exp = 1 s
  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const ScalingPoint& pt : result.points) {
    const double w = 2.0 * static_cast<double>(pt.subsets - 1);
    const double x = std::log(pt.t_exp);
    const double y = std::log(pt.e_min);
    sw += w;
    sx += w * x;
    sy += w * y;
    sxx += w * x * x;
    sxy += w * x * y;
  }
  const double denom = sw * sxx - sx * sx;
  result.loglog_slope = (sw * sxy - sx * sy) / denom;
  result.loglog_slope_err = std::sqrt(sw / denom);
  const double intercept = (sxx * sy - sx * sxy) / denom;
  const double intercept_err = std::sqrt(sxx / denom);
  result.e_min_1s = std::exp(intercept);
  result.e_min_1s_err = result.e_min_1s * intercept_err;
  return result;
}

SpinLockResult run_spin_locking(const SensorConfig& cfg,
                                const SpinLockPlan& plan,
                                std::uint64_t seed) {
  cfg.validate();
  if (!(plan.lock_rabi > 0.0))
    throw std::domain_error("spin_locking: lock Rabi must be > 0");
  if (plan.psd_levels.empty() || plan.durations.empty())
    throw std::invalid_argument("spin_locking: empty plan");
  if (std::none_of(plan.psd_levels.begin(), plan.psd_levels.end(),
                   [](double p) { return p == 0.0; }))
    throw std::invalid_argument(
        "spin_locking: a zero-noise level is required for the floor");
  const double f_hi = plan.noise_center_hz + plan.noise_bandwidth_hz / 2.0;
  const double lock_hz = plan.lock_rabi / constants::two_pi;
  if (lock_hz < plan.noise_center_hz - plan.noise_bandwidth_hz / 2.0 ||
      lock_hz > f_hi)
    throw std::domain_error(
        "spin_locking: lock Rabi frequency outside the synthesized band");

  const double fs = 20.0 * f_hi;
  const double gamma = cfg.gamma();
  const double eta = cfg.spam_eta;
  const double gamma0_bg = cfg.background_gamma_per_s;

  if (!plan.durations_per_level.empty() &&
      plan.durations_per_level.size() != plan.psd_levels.size())
    throw std::invalid_argument(
        "spin_locking: durations_per_level must match psd_levels");

  SpinLockResult result;
  for (std::size_t lvl = 0; lvl < plan.psd_levels.size(); ++lvl) {
    const double psd = plan.psd_levels[lvl];
    SpinLockLevel level;
    level.psd_two_sided = psd;
    if (!plan.durations_per_level.empty())
      level.durations = plan.durations_per_level[lvl];
    else if (psd == 0.0 && !plan.durations_zero.empty())
      level.durations = plan.durations_zero;
    else
      level.durations = plan.durations;
    std::sort(level.durations.begin(), level.durations.end());

    std::vector<double> bin_omega, bin_amp;
    if (psd > 0.0) {
      const double tau_max = level.durations.back();
      double period = std::max(plan.grid_oversample, 1.0) * tau_max;
      if (plan.synthesis_period_s > 0.0) {
        if (plan.synthesis_period_s < tau_max)
          throw std::invalid_argument(
              "spin_locking: synthesis period shorter than the longest "
              "duration");
        period = plan.synthesis_period_s;
      }
      const signal::BandGrid grid =
          signal::band_grid(plan.noise_center_hz, plan.noise_bandwidth_hz,
                            psd, 1.0 / period);
      bin_omega = grid.omega;
      bin_amp.assign(grid.omega.size(), gamma * grid.amplitude);
    }

    // every shot is its own noise realization, as in the experiment
    level.p_up.resize(level.durations.size());
    std::vector<double> p_err(level.durations.size());
    std::vector<std::uint64_t> phase_keys(plan.shots_per_duration);
    for (std::size_t j = 0; j < level.durations.size(); ++j) {
      const std::size_t n_steps = static_cast<std::size_t>(
          std::llround(level.durations[j] * fs));
      const std::vector<std::size_t> snaps{n_steps};
      for (std::uint64_t s = 0; s < plan.shots_per_duration; ++s)
        phase_keys[s] = rng::derive_key(seed, {label_lock_phase, lvl, j, s});
      const std::vector<double> survival = kernels::spin_lock_ensemble(
          plan.lock_rabi, bin_omega, bin_amp, phase_keys, 1.0 / fs, n_steps,
          snaps, kernels::default_exec());

      // background decay composes multiplicatively with the simulated
      // survival before projective readout
      const double bg = std::exp(-gamma0_bg * level.durations[j]);
      std::uint64_t up = 0;
      for (std::uint64_t s = 0; s < plan.shots_per_duration; ++s) {
        const double p_ideal = 0.5 + (survival[s] - 0.5) * bg;
        up += spin::sample_shots(
            p_ideal, eta, 1,
            rng::derive_key(seed, {label_lock_shot, lvl, j, s}));
      }
      const double p_meas = static_cast<double>(up) /
                            static_cast<double>(plan.shots_per_duration);
      // invert the symmetric SPAM channel before fitting Eq.-style decay
      level.p_up[j] = (p_meas - eta) / (1.0 - 2.0 * eta);
      p_err[j] = analysis::binomial_sigma(p_meas, plan.shots_per_duration) /
                 (1.0 - 2.0 * eta);
    }

    const analysis::FitResult fit =
        analysis::fit_exponential_decay(level.durations, level.p_up, p_err);
    level.gamma_fit = fit.value("Gamma");
    level.gamma_err = fit.error("Gamma");
    level.upper_bound = fit.bound_flag && level.gamma_fit <= 0.0;
    result.levels.push_back(std::move(level));
  }

  for (const SpinLockLevel& level : result.levels) {
    if (level.psd_two_sided == 0.0) {
      result.gamma0 = level.gamma_fit;
      result.gamma0_err = level.gamma_err;
    }
  }
  result.s_e_min = 2.0 * result.gamma0 / (gamma * gamma);
  for (SpinLockLevel& level : result.levels)
    level.s_e_inferred =
        2.0 * std::max(level.gamma_fit - result.gamma0, 0.0) /
        (gamma * gamma);
  return result;
}

T2Estimate measure_t2(std::span<const double> taus,
                      std::span<const double> contrast,
                      std::span<const double> contrast_err) {
  T2Estimate est;
  est.fit = analysis::fit_gaussian_contrast(taus, contrast, contrast_err);
  est.t2 = est.fit.value("T2");
  est.t2_err = est.fit.error("T2");
  est.a0 = est.fit.value("A0");
  return est;
}

AlphaCalibration calibrate_geometric_factor(const SensorConfig& cfg,
                                            std::span<const double> dv_volts,
                                            std::uint64_t shots,
                                            std::uint64_t seed,
                                            double t_probe) {
  cfg.validate();
  if (dv_volts.size() < 2)
    throw std::invalid_argument("calibrate_alpha: need >= 2 voltage offsets");
  if (cfg.gradient.dbdz_t_per_m == 0.0)
    throw std::domain_error(
        "calibrate_alpha: zero gradient makes alpha indeterminate");

  const double gamma_true = cfg.gamma();
  const double sigma_omega =
      1.0 / (cfg.readout_c() * t_probe *
             std::sqrt(static_cast<double>(shots)));
  const std::uint64_t key = rng::derive_key(seed, {label_alpha});

  // simulated transition-frequency shifts, straight-line fit
  AlphaCalibration out;
  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < dv_volts.size(); ++i) {
    const double shift =
        gamma_true * cfg.alpha_per_m * dv_volts[i] +
        sigma_omega * rng::normal(key, i);
    out.dv_volts.push_back(dv_volts[i]);
    out.omega_shift.push_back(shift);
    const double w = 1.0 / (sigma_omega * sigma_omega);
    sw += w;
    sx += w * dv_volts[i];
    sy += w * shift;
    sxx += w * dv_volts[i] * dv_volts[i];
    sxy += w * dv_volts[i] * shift;
  }
  const double denom = sw * sxx - sx * sx;
  if (!(std::abs(denom) > 0.0))
    throw std::domain_error("calibrate_alpha: singular voltage design");

  out.d_omega_dv = (sw * sxy - sx * sy) / denom;
  out.d_omega_dv_err = std::sqrt(sw / denom);

  const double de_dz =
      cfg.ion.mass_kg * cfg.trap.nu_axial * cfg.trap.nu_axial /
      cfg.ion.charge_c;
  const double d_omega_db =
      core::zeeman_shift(cfg.transition, cfg.gradient.b0_tesla).slope;
  const double chain = cfg.gradient.dbdz_t_per_m * d_omega_db;
  out.alpha = out.d_omega_dv * de_dz / chain;
  out.alpha_err = out.d_omega_dv_err * de_dz / std::abs(chain);
  out.gamma_implied = out.d_omega_dv / out.alpha;
  return out;
}

double project_sensitivity(const SensorConfig& hypothetical, double tau,
                           double t2, double t_m, SenseMode mode) {
  return analysis::theoretical_sensitivity(
      tau, t2, t_m, std::abs(hypothetical.gamma()),
      hypothetical.readout_c(), mode);
}

} // namespace iontometer::protocols
