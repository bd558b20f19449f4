#include "iontometer/analysis.hpp"

#include "iontometer/constants.hpp"

#include <Eigen/Dense>
#include <fftw3.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>

namespace iontometer::analysis {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double FitResult::value(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name)
      return values[i];
  throw std::invalid_argument("FitResult: no parameter " + name);
}

double FitResult::error(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name)
      return errors[i];
  throw std::invalid_argument("FitResult: no parameter " + name);
}

std::string FitResult::to_json() const {
  nlohmann::json j;
  for (std::size_t i = 0; i < names.size(); ++i) {
    j["parameters"][names[i]] = {{"value", values[i]},
                                 {"std_error", errors[i]}};
  }
  j["residual_norm"] = residual_norm;
  j["converged"] = converged;
  j["bound_flag"] = bound_flag;
  j["iterations"] = iterations;
  return j.dump(2);
}

double binomial_sigma(double p_hat, std::uint64_t shots) {
  const double n = static_cast<double>(shots);
  const double lo = 1.0 / (n + 2.0);
  const double p = std::clamp(p_hat, lo, 1.0 - lo);
  return std::sqrt(p * (1.0 - p) / n);
}

namespace {

using ModelFn = std::function<double(std::span<const double>, double)>;
using JacFn =
    std::function<void(std::span<const double>, double, std::span<double>)>;

double chi2_of(const ModelFn& model, std::span<const double> p,
               std::span<const double> x, std::span<const double> y,
               std::span<const double> wgt) {
  double chi2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - model(p, x[i]);
    chi2 += wgt[i] * r * r;
  }
  return chi2;
}

struct GnOptions {
  int max_iterations = 200;
  std::vector<double> lower_bounds; // empty = unbounded
};

/// Damped (Levenberg) Gauss-Newton with analytic Jacobian. Weights are
/// 1/sigma^2; the covariance is (J^T W J)^-1 at the solution.
FitResult gauss_newton(const ModelFn& model, const JacFn& jac,
                       std::span<const double> x, std::span<const double> y,
                       std::span<const double> wgt,
                       std::vector<double> params,
                       std::vector<std::string> names,
                       const GnOptions& opts = {}) {
  const auto npar = static_cast<Eigen::Index>(params.size());
  const std::size_t npts = x.size();
  FitResult out;
  out.names = std::move(names);

  auto clamp_bounds = [&](std::vector<double>& p) {
    bool hit = false;
    for (std::size_t k = 0; k < opts.lower_bounds.size(); ++k) {
      if (p[k] < opts.lower_bounds[k]) {
        p[k] = opts.lower_bounds[k];
        hit = true;
      }
    }
    return hit;
  };
  clamp_bounds(params);

  double chi2 = chi2_of(model, params, x, y, wgt);
  double lambda = 1e-6;
  bool converged = false;
  bool at_bound = false;
  int iter = 0;
  std::vector<double> row(params.size());

  for (; iter < opts.max_iterations; ++iter) {
    MatrixXd jtj = MatrixXd::Zero(npar, npar);
    VectorXd jtr = VectorXd::Zero(npar);
    for (std::size_t i = 0; i < npts; ++i) {
      jac(params, x[i], row);
      const double r = y[i] - model(params, x[i]);
      for (Eigen::Index a = 0; a < npar; ++a) {
        jtr(a) += wgt[i] * row[static_cast<std::size_t>(a)] * r;
        for (Eigen::Index b = 0; b <= a; ++b)
          jtj(a, b) += wgt[i] * row[static_cast<std::size_t>(a)] *
                       row[static_cast<std::size_t>(b)];
      }
    }
    jtj = jtj.selfadjointView<Eigen::Lower>();

    bool improved = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
      MatrixXd damped = jtj;
      for (Eigen::Index a = 0; a < npar; ++a)
        damped(a, a) += lambda * std::max(jtj(a, a), 1e-30);
      const VectorXd step = damped.ldlt().solve(jtr);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      std::vector<double> trial = params;
      double pnorm = 0.0;
      for (Eigen::Index a = 0; a < npar; ++a) {
        trial[static_cast<std::size_t>(a)] += step(a);
        pnorm += params[static_cast<std::size_t>(a)] *
                 params[static_cast<std::size_t>(a)];
      }
      const bool hit = clamp_bounds(trial);
      const double trial_chi2 = chi2_of(model, trial, x, y, wgt);
      if (trial_chi2 <= chi2 + 1e-14) {
        const double delta = chi2 - trial_chi2;
        params = std::move(trial);
        at_bound = hit;
        chi2 = trial_chi2;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = true;
        if (delta < 1e-13 * (1.0 + chi2) &&
            step.norm() < 1e-9 * (1.0 + std::sqrt(pnorm)))
          converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (converged)
      break;
    if (!improved) { // stationary within damping limits
      converged = true;
      break;
    }
  }

  // covariance at the solution (undamped)
  MatrixXd jtj = MatrixXd::Zero(npar, npar);
  for (std::size_t i = 0; i < npts; ++i) {
    jac(params, x[i], row);
    for (Eigen::Index a = 0; a < npar; ++a)
      for (Eigen::Index b = 0; b <= a; ++b)
        jtj(a, b) += wgt[i] * row[static_cast<std::size_t>(a)] *
                     row[static_cast<std::size_t>(b)];
  }
  jtj = jtj.selfadjointView<Eigen::Lower>();
  const MatrixXd cov = jtj.completeOrthogonalDecomposition().pseudoInverse();

  out.values = params;
  out.covariance.assign(static_cast<std::size_t>(npar * npar), 0.0);
  out.errors.resize(params.size());
  for (Eigen::Index a = 0; a < npar; ++a) {
    for (Eigen::Index b = 0; b < npar; ++b)
      out.covariance[static_cast<std::size_t>(a * npar + b)] = cov(a, b);
    out.errors[static_cast<std::size_t>(a)] =
        std::sqrt(std::max(cov(a, a), 0.0));
  }
  out.residual_norm = std::sqrt(chi2);
  out.converged = converged;
  out.bound_flag = at_bound;
  out.iterations = iter + 1;
  return out;
}

std::vector<double> weights_from_errors(std::span<const double> err) {
  std::vector<double> w(err.size());
  for (std::size_t i = 0; i < err.size(); ++i) {
    if (!(err[i] > 0.0))
      throw std::domain_error("fit: errors must be > 0");
    w[i] = 1.0 / (err[i] * err[i]);
  }
  return w;
}

} // namespace

namespace detail {

double sinusoid_eval(std::span<const double> p, double x) {
  const double arg = constants::two_pi * x / p[3];
  return p[0] + p[1] * std::sin(arg) + p[2] * std::cos(arg);
}

void sinusoid_jacobian(std::span<const double> p, double x,
                       std::span<double> out) {
  const double arg = constants::two_pi * x / p[3];
  const double s = std::sin(arg);
  const double c = std::cos(arg);
  out[0] = 1.0;
  out[1] = s;
  out[2] = c;
  out[3] = (p[1] * c - p[2] * s) * (-arg / p[3]);
}

double expdecay_eval(std::span<const double> p, double x) {
  return 0.5 * (1.0 + std::exp(-p[0] * x));
}

void expdecay_jacobian(std::span<const double> p, double x,
                       std::span<double> out) {
  out[0] = -0.5 * x * std::exp(-p[0] * x);
}

double gauss_contrast_eval(std::span<const double> p, double x) {
  const double z = x / p[1];
  return p[0] * std::exp(-z * z);
}

void gauss_contrast_jacobian(std::span<const double> p, double x,
                             std::span<double> out) {
  const double z = x / p[1];
  const double e = std::exp(-z * z);
  out[0] = e;
  out[1] = p[0] * e * 2.0 * z * z / p[1];
}

} // namespace detail

FitResult fit_sinusoid(std::span<const double> x, std::span<const double> y,
                       std::span<const double> y_err) {
  if (x.size() != y.size() || x.size() != y_err.size())
    throw std::invalid_argument("fit_sinusoid: size mismatch");
  if (x.size() < 5)
    throw std::invalid_argument("fit_sinusoid: need at least 5 points");
  const auto [min_it, max_it] = std::minmax_element(x.begin(), x.end());
  const double span = *max_it - *min_it;
  if (!(span > 0.0))
    throw std::invalid_argument("fit_sinusoid: degenerate x span");
  const auto w = weights_from_errors(y_err);

  // coarse grid over the period, deliberately extending past the sampled
  // span so an under-sampled (ambiguous) fringe is detected rather than
  // aliased; offset/quadratures are solved linearly at each grid period
  double best_chi2 = std::numeric_limits<double>::infinity();
  std::vector<double> best{0.0, 0.0, 0.0, span};
  const int nkappa = 240;
  for (int g = 0; g < nkappa; ++g) {
    const double kappa =
        span / 10.0 * std::pow(80.0, static_cast<double>(g) / (nkappa - 1));
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d atb = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double arg = constants::two_pi * x[i] / kappa;
      const Eigen::Vector3d row(1.0, std::sin(arg), std::cos(arg));
      ata += w[i] * row * row.transpose();
      atb += w[i] * y[i] * row;
    }
    const Eigen::Vector3d sol = ata.ldlt().solve(atb);
    const std::vector<double> p{sol(0), sol(1), sol(2), kappa};
    const double chi2 = chi2_of(detail::sinusoid_eval, p, x, y, w);
    if (chi2 < best_chi2) {
      best_chi2 = chi2;
      best = p;
    }
  }

  FitResult internal = gauss_newton(detail::sinusoid_eval,
                                    detail::sinusoid_jacobian, x, y, w, best,
                                    {"offset", "a", "b", "kappa"});

  const double a = internal.values[1];
  const double b = internal.values[2];
  const double kappa = internal.values[3];
  const double r = std::hypot(a, b);
  if (kappa > 1.05 * span)
    throw std::domain_error(
        "fit_sinusoid: fitted period exceeds the sampled span (ambiguous)");

  // report (A, kappa, phase, offset); covariance via the delta method
  FitResult out;
  out.names = {"A", "kappa", "phase", "offset"};
  out.values = {2.0 * r, kappa, std::atan2(b, a), internal.values[0]};
  Eigen::Matrix4d t = Eigen::Matrix4d::Zero();
  if (r > 1e-300) {
    t(0, 1) = 2.0 * a / r;
    t(0, 2) = 2.0 * b / r;
    t(2, 1) = -b / (r * r);
    t(2, 2) = a / (r * r);
  } else {
    internal.converged = false; // amplitude degenerate, phase undefined
  }
  t(1, 3) = 1.0;
  t(3, 0) = 1.0;
  Eigen::Matrix4d cin;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      cin(i, j) = internal.covariance[static_cast<std::size_t>(i * 4 + j)];
  const Eigen::Matrix4d cout = t * cin * t.transpose();
  out.covariance.resize(16);
  out.errors.resize(4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j)
      out.covariance[static_cast<std::size_t>(i * 4 + j)] = cout(i, j);
    out.errors[static_cast<std::size_t>(i)] =
        std::sqrt(std::max(cout(i, i), 0.0));
  }
  out.residual_norm = internal.residual_norm;
  out.converged = internal.converged;
  out.bound_flag = internal.bound_flag;
  out.iterations = internal.iterations;
  return out;
}

FitResult fit_exponential_decay(std::span<const double> tau,
                                std::span<const double> p_up,
                                std::span<const double> p_err) {
  if (tau.size() != p_up.size() || tau.size() != p_err.size())
    throw std::invalid_argument("fit_exponential_decay: size mismatch");
  if (tau.size() < 4)
    throw std::invalid_argument(
        "fit_exponential_decay: need at least 4 durations");
  const auto w = weights_from_errors(p_err);

  double best_chi2 = std::numeric_limits<double>::infinity();
  std::vector<double> best{0.0};
  for (int g = -1; g < 120; ++g) {
    const double gamma =
        g < 0 ? 0.0 : 1e-4 * std::pow(1e9, static_cast<double>(g) / 119.0);
    const std::vector<double> p{gamma};
    const double chi2 = chi2_of(detail::expdecay_eval, p, tau, p_up, w);
    if (chi2 < best_chi2) {
      best_chi2 = chi2;
      best = p;
    }
  }

  GnOptions opts;
  opts.lower_bounds = {0.0};
  FitResult out =
      gauss_newton(detail::expdecay_eval, detail::expdecay_jacobian, tau,
                   p_up, w, best, {"Gamma"}, opts);
  if (out.values[0] <= 0.0)
    out.bound_flag = true; // only an upper bound on the decay rate

  // populations rising with tau beyond noise cannot be a lock decay
  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    sw += w[i];
    sx += w[i] * tau[i];
    sy += w[i] * p_up[i];
    sxx += w[i] * tau[i] * tau[i];
    sxy += w[i] * tau[i] * p_up[i];
  }
  const double denom = sw * sxx - sx * sx;
  if (denom > 0.0) {
    const double slope = (sw * sxy - sx * sy) / denom;
    const double slope_err = std::sqrt(sw / denom);
    if (slope > 3.0 * slope_err)
      out.converged = false;
  }
  return out;
}

FitResult fit_gaussian_contrast(std::span<const double> tau,
                                std::span<const double> a,
                                std::span<const double> a_err) {
  if (tau.size() != a.size() || tau.size() != a_err.size())
    throw std::invalid_argument("fit_gaussian_contrast: size mismatch");
  if (tau.size() < 3)
    throw std::invalid_argument(
        "fit_gaussian_contrast: need at least 3 points");
  const auto w = weights_from_errors(a_err);

  const double amax = *std::max_element(a.begin(), a.end());
  const double amin = *std::min_element(a.begin(), a.end());
  if (!(amax > 0.0) || amax - amin < 1e-12 * std::abs(amax))
    throw std::domain_error("fit_gaussian_contrast: degenerate contrasts");

  // linearized start: ln A = ln A0 - (tau/T2)^2
  double sxx = 0.0, sxy = 0.0, sx = 0.0, sy = 0.0, sw = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (!(a[i] > 0.0))
      continue;
    const double xx = tau[i] * tau[i];
    const double yy = std::log(a[i]);
    sw += 1.0;
    sx += xx;
    sy += yy;
    sxx += xx * xx;
    sxy += xx * yy;
  }
  const double denom = sw * sxx - sx * sx;
  double slope = denom != 0.0 ? (sw * sxy - sx * sy) / denom : 0.0;
  if (!(slope < 0.0))
    throw std::domain_error(
        "fit_gaussian_contrast: contrasts do not decay with tau");
  const double a0 = std::exp((sy - slope * sx) / sw);
  const double t2 = 1.0 / std::sqrt(-slope);

  return gauss_newton(detail::gauss_contrast_eval,
                      detail::gauss_contrast_jacobian, tau, a, w, {a0, t2},
                      {"A0", "T2"});
}

double emin_from_slope(double slope_max, double readout_c, double shots) {
  if (!(slope_max > 0.0))
    throw std::domain_error("emin_from_slope: slope must be > 0");
  if (!(readout_c > 0.0 && readout_c <= 1.0))
    throw std::domain_error("emin_from_slope: C must be in (0, 1]");
  if (!(shots >= 1.0))
    throw std::domain_error("emin_from_slope: N must be >= 1");
  return 1.0 / (2.0 * readout_c * std::sqrt(shots) * slope_max);
}

double theoretical_sensitivity(double tau, double t2, double t_m,
                               double gamma, double readout_c,
                               SenseMode mode) {
  if (!(tau > 0.0) || !(t2 > 0.0) || t_m < 0.0 || !(gamma > 0.0) ||
      !(readout_c > 0.0))
    throw std::domain_error("theoretical_sensitivity: invalid arguments");
  const double chi = (tau / t2) * (tau / t2);
  const double s =
      std::exp(chi) * std::sqrt(tau + t_m) / (gamma * readout_c * tau);
  return mode == SenseMode::dc ? 2.0 * s : s;
}

OptimalTau optimal_tau(double t2, double t_m, double gamma, double readout_c,
                       SenseMode mode) {
  if (!(t2 > 0.0))
    throw std::domain_error("optimal_tau: T2 must be > 0");
  auto s_of = [&](double tau) {
    return theoretical_sensitivity(tau, t2, t_m, gamma, readout_c, mode);
  };
  // T2 = inf means no decoherence: S decreases monotonically and the
  // search can only report a bracket edge
  const double lo = std::isfinite(t2) ? t2 / 100.0 : 1e-6;
  const double hi = std::isfinite(t2) ? 3.0 * t2 : 1e6;

  // unimodality pre-scan
  const int n = 64;
  std::vector<double> grid(n);
  for (int i = 0; i < n; ++i)
    grid[static_cast<std::size_t>(i)] =
        s_of(lo + (hi - lo) * i / static_cast<double>(n - 1));
  int minima = 0;
  int argmin = 0;
  for (int i = 0; i < n; ++i) {
    if (grid[static_cast<std::size_t>(i)] <
        grid[static_cast<std::size_t>(argmin)])
      argmin = i;
    const bool left_ok =
        i == 0 || grid[static_cast<std::size_t>(i)] <
                      grid[static_cast<std::size_t>(i - 1)];
    const bool right_ok =
        i == n - 1 || grid[static_cast<std::size_t>(i)] <
                          grid[static_cast<std::size_t>(i + 1)];
    if (i > 0 && i < n - 1 && left_ok && right_ok)
      ++minima;
  }
  if (minima > 1)
    throw std::runtime_error("optimal_tau: sensitivity is not unimodal");

  OptimalTau out;
  if (argmin == 0 || argmin == n - 1) {
    out.tau = argmin == 0 ? lo : hi;
    out.sensitivity = s_of(out.tau);
    out.interior = false;
    return out;
  }

  // golden section on the bracketing grid cells
  double a = lo + (hi - lo) * (argmin - 1) / static_cast<double>(n - 1);
  double b = lo + (hi - lo) * (argmin + 1) / static_cast<double>(n - 1);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = s_of(c);
  double fd = s_of(d);
  while (b - a > 1e-5) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = s_of(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = s_of(d);
    }
  }
  out.tau = 0.5 * (a + b);
  out.sensitivity = s_of(out.tau);
  out.interior = true;
  return out;
}

double Periodogram::band_mean(double f_lo, double f_hi) const {
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < frequency_hz.size(); ++i) {
    if (frequency_hz[i] >= f_lo && frequency_hz[i] <= f_hi) {
      acc += psd_two_sided[i];
      ++count;
    }
  }
  if (count == 0)
    throw std::domain_error("Periodogram: empty band");
  return acc / static_cast<double>(count);
}

Periodogram periodogram(const signal::Waveform& w, WindowKind window,
                        int segments) {
  w.validate();
  if (segments < 1)
    throw std::invalid_argument("periodogram: segments must be >= 1");
  const std::size_t nseg = w.samples.size() / static_cast<std::size_t>(segments);
  if (nseg < 64)
    throw std::invalid_argument("periodogram: need >= 64 samples per segment");

  std::vector<double> win(nseg, 1.0);
  if (window == WindowKind::hann) {
    for (std::size_t i = 0; i < nseg; ++i)
      win[i] = 0.5 * (1.0 - std::cos(constants::two_pi *
                                     static_cast<double>(i) /
                                     static_cast<double>(nseg)));
  }
  double u = 0.0; // window power normalization
  for (double v : win)
    u += v * v;
  u /= static_cast<double>(nseg);

  const std::size_t nbins = nseg / 2 + 1;
  Periodogram out;
  out.frequency_hz.resize(nbins);
  out.psd_two_sided.assign(nbins, 0.0);
  const double df = w.sample_rate / static_cast<double>(nseg);
  for (std::size_t k = 0; k < nbins; ++k)
    out.frequency_hz[k] = df * static_cast<double>(k);

  static std::mutex plan_mutex;
  std::vector<double> in(nseg);
  std::vector<fftw_complex> spec(nbins);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(plan_mutex);
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(nseg), in.data(),
                                spec.data(), FFTW_ESTIMATE);
  }
  for (int s = 0; s < segments; ++s) {
    for (std::size_t i = 0; i < nseg; ++i)
      in[i] = w.samples[static_cast<std::size_t>(s) * nseg + i] * win[i];
    fftw_execute_dft_r2c(plan, in.data(), spec.data());
    const double norm =
        1.0 / (w.sample_rate * static_cast<double>(nseg) * u);
    for (std::size_t k = 0; k < nbins; ++k) {
      const double mag2 =
          spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
      out.psd_two_sided[k] += mag2 * norm / segments;
    }
  }
  {
    std::lock_guard<std::mutex> lock(plan_mutex);
    fftw_destroy_plan(plan);
  }
  return out;
}

} // namespace iontometer::analysis
