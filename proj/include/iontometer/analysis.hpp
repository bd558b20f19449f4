#pragma once

#include "iontometer/signal_chain.hpp"
#include "iontometer/types.hpp"

#include <span>
#include <string>
#include <vector>

// Fitting, spectral estimation and the closed-form sensitivity math.
// Fitters follow a grid-then-Gauss-Newton strategy: coarse scan over the
// nonlinear parameters with a linear solve for the rest, then damped
// Gauss-Newton with analytic Jacobians. Weights are 1/sigma^2.
namespace iontometer::analysis {

struct FitResult {
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<double> errors;     // sqrt of covariance diagonal
  std::vector<double> covariance; // row-major, names.size() square
  double residual_norm = 0.0;     // sqrt(chi2)
  bool converged = false;
  bool bound_flag = false; // estimate pinned at a boundary (e.g. Gamma >= 0)
  int iterations = 0;

  double value(const std::string& name) const;
  double error(const std::string& name) const;
  std::string to_json() const;
};

/// Binomial standard error with the probability clipped away from 0 and 1
/// so no point gets infinite weight.
double binomial_sigma(double p_hat, std::uint64_t shots);

/// Fringe fit y = offset + (A/2) sin(2 pi x / kappa + phase).
/// Requires >= 5 points spanning at least one fitted period; a fitted
/// period longer than the span raises an ambiguity error.
FitResult fit_sinusoid(std::span<const double> x, std::span<const double> y,
                       std::span<const double> y_err);

/// Exponential lock decay y = (1 + exp(-Gamma tau)) / 2. Gamma >= 0 is
/// enforced: data favoring negative Gamma report 0 with bound_flag set.
FitResult fit_exponential_decay(std::span<const double> tau,
                                std::span<const double> p_up,
                                std::span<const double> p_err);

/// Gaussian contrast decay A = A0 exp(-(tau/T2)^2).
FitResult fit_gaussian_contrast(std::span<const double> tau,
                                std::span<const double> a,
                                std::span<const double> a_err);

/// E_min = 1 / (2 C sqrt(N) * slope_max), Eq.-style shot-noise floor.
double emin_from_slope(double slope_max, double readout_c, double shots);

/// S = exp((tau/T2)^2) sqrt(tau + t_m) / (gamma C tau), doubled for DC.
double theoretical_sensitivity(double tau, double t2, double t_m,
                               double gamma, double readout_c,
                               SenseMode mode);

struct OptimalTau {
  double tau = 0.0;
  double sensitivity = 0.0;
  bool interior = true; // false: minimum sits on a bracket edge
};

/// Golden-section minimum of the sensitivity over [T2/100, 3 T2] with
/// 1e-5 s absolute tolerance; a grid pre-scan asserts unimodality.
OptimalTau optimal_tau(double t2, double t_m, double gamma, double readout_c,
                       SenseMode mode);

enum class WindowKind { rectangular, hann };

struct Periodogram {
  std::vector<double> frequency_hz;  // 0 .. fs/2
  std::vector<double> psd_two_sided; // units of signal^2 per Hz

  /// Mean PSD over [f_lo, f_hi].
  double band_mean(double f_lo, double f_hi) const;
};

/// Two-sided PSD estimate. Rectangular window satisfies Parseval exactly:
/// sum over the one-sided grid of 2 * psd * df equals the signal variance.
/// With segments > 1 the estimate averages over non-overlapping segments.
Periodogram periodogram(const signal::Waveform& w, WindowKind window,
                        int segments = 1);

// Model functions and analytic Jacobians used inside the fitters, exposed
// for the finite-difference cross checks.
namespace detail {

/// params (offset, a, b, kappa): y = offset + a sin(2 pi x/kappa)
///                                         + b cos(2 pi x/kappa)
double sinusoid_eval(std::span<const double> p, double x);
void sinusoid_jacobian(std::span<const double> p, double x,
                       std::span<double> out);

/// params (Gamma): y = (1 + exp(-Gamma x)) / 2
double expdecay_eval(std::span<const double> p, double x);
void expdecay_jacobian(std::span<const double> p, double x,
                       std::span<double> out);

/// params (A0, T2): y = A0 exp(-(x/T2)^2)
double gauss_contrast_eval(std::span<const double> p, double x);
void gauss_contrast_jacobian(std::span<const double> p, double x,
                             std::span<double> out);

} // namespace detail

} // namespace iontometer::analysis
