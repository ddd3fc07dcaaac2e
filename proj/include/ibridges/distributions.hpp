#pragma once

// One-dimensional laws: Inverse Gaussian (first passage of drifted Brownian
// motion), Gamma, generalized Inverse Gaussian, and the 3-dimensional Bessel
// bridge and process.
//
// Conventions.  Gamma(k, r) has density r^k x^{k-1} e^{-r x} / Gamma(k).
// GIG(q, a, b) has density proportional to t^{q-1} e^{-(a t + b/t)/2}; with
// this normalization the first-passage law of theta - B_t - eta t through 0
// is GIG(-1/2, eta^2, theta^2) = IG(theta/eta, theta^2).

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "ibridges/error.hpp"
#include "ibridges/quadrature.hpp"
#include "ibridges/rng.hpp"
#include "ibridges/special.hpp"

namespace ibridges {

// ---------------------------------------------------------------------------
// First passage / Inverse Gaussian

/// Density of the first hitting time of 0 by theta + B_t - eta t:
///   theta / sqrt(2 pi t^3) exp(-(theta - eta t)^2 / (2 t)).
inline double ig_density(double t, double theta, double eta) {
  detail::require(t > 0.0, "ig_density requires t > 0");
  detail::require(theta > 0.0 && eta >= 0.0, "ig_density requires theta > 0 and eta >= 0");
  if (!std::isfinite(t)) return 0.0;
  const double d = theta - eta * t;
  return std::exp(std::log(theta) - 0.5 * std::log(2.0 * std::numbers::pi) - 1.5 * std::log(t) - d * d / (2.0 * t));
}

/// CDF matching ig_density, P(T0 <= t).  The e^{2 theta eta} term is combined
/// in log space so large theta*eta does not overflow.
inline double ig_cdf(double t, double theta, double eta) {
  detail::require(theta > 0.0 && eta >= 0.0, "ig_cdf requires theta > 0 and eta >= 0");
  if (t <= 0.0) return 0.0;
  if (t == std::numeric_limits<double>::infinity()) return 1.0;
  const double s = std::sqrt(t);
  const double first = normal_cdf((eta * t - theta) / s);
  if (eta == 0.0) return 2.0 * normal_cdf(-theta / s);
  const double z = (eta * t + theta) / s;
  const double second = std::exp(2.0 * theta * eta + log_normal_upper_tail(z));
  return std::min(1.0, first + second);
}

/// IG(mu, lambda) in the usual mean/shape form; IG(theta/eta, theta^2) is the
/// first-passage law above.
inline double ig_cdf_mean_shape(double x, double mu, double lambda) {
  detail::require(mu > 0.0 && lambda > 0.0, "IG requires mu > 0 and lambda > 0");
  const double theta = std::sqrt(lambda);
  return ig_cdf(x, theta, theta / mu);
}

/// Michael-Schucany-Haas transformation with a root-selection uniform.
inline double sample_ig(double mu, double lambda, RngStream& rng) {
  detail::require(mu > 0.0 && lambda > 0.0, "sample_ig requires mu > 0 and lambda > 0");
  const double nu = rng.normal();
  const double r = mu * nu * nu / (2.0 * lambda);
  // Smaller root mu (1 + r - sqrt(r (2 + r))), written without cancellation.
  const double x = mu / (1.0 + r + std::sqrt(r * (2.0 + r)));
  if (rng.uniform() * (mu + x) <= mu) return x;
  return mu * mu / x;
}

// ---------------------------------------------------------------------------
// Gamma

/// Marsaglia-Tsang; shapes below 1 use the U^{1/k} boost.
inline double sample_gamma(double shape, double rate, RngStream& rng) {
  detail::require(shape > 0.0 && rate > 0.0, "sample_gamma requires shape > 0 and rate > 0");
  if (shape < 1.0) {
    const double g = sample_gamma(shape + 1.0, 1.0, rng);
    return g * std::exp(std::log(rng.uniform()) / shape) / rate;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v / rate;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

inline double gamma_density(double x, double shape, double rate) {
  detail::require(shape > 0.0 && rate > 0.0, "gamma_density requires shape > 0 and rate > 0");
  if (x <= 0.0) return 0.0;
  return std::exp(shape * std::log(rate) + (shape - 1.0) * std::log(x) - rate * x - std::lgamma(shape));
}

inline double gamma_cdf(double x, double shape, double rate) {
  detail::require(shape > 0.0 && rate > 0.0, "gamma_cdf requires shape > 0 and rate > 0");
  if (x <= 0.0) return 0.0;
  if (x == std::numeric_limits<double>::infinity()) return 1.0;
  if (shape == 0.5) return std::erf(std::sqrt(rate * x));
  return boost::math::gamma_p(shape, rate * x);
}

// ---------------------------------------------------------------------------
// Generalized Inverse Gaussian

struct GigParams {
  GigParams(double q_, double a_, double b_) : q(q_), a(a_), b(b_) {
    const bool ok = std::isfinite(q) && std::isfinite(a) && std::isfinite(b) &&
                    ((a > 0.0 && b > 0.0) || (a == 0.0 && q < 0.0 && b > 0.0) || (b == 0.0 && q > 0.0 && a > 0.0));
    detail::require(ok, "inadmissible GIG parameters (need a,b > 0, or a = 0 with q < 0, or b = 0 with q > 0)");
  }
  double q;
  double a;
  double b;
};

/// log of the GIG(q, a, b) density.  a = 0 is the inverse-Gamma limit
/// (1/X ~ Gamma(-q, rate b/2)), b = 0 the Gamma limit (Gamma(q, rate a/2)).
inline double gig_log_density(double t, const GigParams& p) {
  detail::require(t > 0.0, "gig_density requires t > 0");
  const double log_t = std::log(t);
  if (p.a == 0.0) {
    const double k = -p.q;
    const double r = 0.5 * p.b;
    return k * std::log(r) - std::lgamma(k) - (k + 1.0) * log_t - r / t;
  }
  if (p.b == 0.0) {
    const double r = 0.5 * p.a;
    return p.q * std::log(r) - std::lgamma(p.q) + (p.q - 1.0) * log_t - r * t;
  }
  const double omega = std::sqrt(p.a * p.b);
  return 0.5 * p.q * std::log(p.a / p.b) - std::log(2.0) - log_bessel_k(p.q, omega) + (p.q - 1.0) * log_t -
         0.5 * (p.a * t + p.b / t);
}

inline double gig_density(double t, const GigParams& p) { return std::exp(gig_log_density(t, p)); }

/// GIG CDF.  Half-integer index with a, b > 0 and the boundary cases are in
/// closed form; otherwise adaptive quadrature of the density.
inline double gig_cdf(double x, const GigParams& p) {
  if (x <= 0.0) return 0.0;
  if (x == std::numeric_limits<double>::infinity()) return 1.0;
  if (p.a == 0.0) return 1.0 - gamma_cdf(1.0 / x, -p.q, 0.5 * p.b);
  if (p.b == 0.0) return gamma_cdf(x, p.q, 0.5 * p.a);
  if (p.q == -0.5) return ig_cdf(x, std::sqrt(p.b), std::sqrt(p.a));
  if (p.q == 0.5) return 1.0 - ig_cdf(1.0 / x, std::sqrt(p.a), std::sqrt(p.b));
  const double mode = p.q >= 1.0 ? ((p.q - 1.0) + std::sqrt((p.q - 1.0) * (p.q - 1.0) + p.a * p.b)) / p.a
                                 : p.b / ((1.0 - p.q) + std::sqrt((1.0 - p.q) * (1.0 - p.q) + p.a * p.b));
  auto f = [&](double t) { return t > 0.0 ? gig_density(t, p) : 0.0; };
  // Split at the mode so the adaptive rule sees the peak from both sides.
  if (x <= mode) return std::clamp(integrate(f, 0.0, x, 1e-14, 1e-12).value, 0.0, 1.0);
  const double upper = integrate_to_infinity(f, x, 1e-14, 1e-12).value;
  return std::clamp(1.0 - upper, 0.0, 1.0);
}

namespace detail {

// Standardized GIG: density proportional to x^{lambda-1} e^{-omega (x + 1/x)/2},
// lambda >= 0, omega > 0.  Hormann and Leydold (2014) choose among three
// rejection schemes by region of (lambda, omega).

inline double gig_mode(double lambda, double omega) {
  if (lambda >= 1.0) return (std::sqrt((lambda - 1.0) * (lambda - 1.0) + omega * omega) + (lambda - 1.0)) / omega;
  return omega / (std::sqrt((1.0 - lambda) * (1.0 - lambda) + omega * omega) + (1.0 - lambda));
}

// Ratio-of-uniforms with the mode shift; lambda > 1 or omega > 1.
inline double gig_rou_shift(double lambda, double omega, RngStream& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);

  // Extremes of (x - xm) sqrt(f(x)) solve a depressed cubic.
  const double a = -(2.0 * (lambda + 1.0) / omega + xm);
  const double b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
  const double c = xm;
  const double p = b - a * a / 3.0;
  const double q = (2.0 * a * a * a) / 27.0 - (a * b) / 3.0 + c;
  const double fi = std::acos(-q / (2.0 * std::sqrt(-(p * p * p) / 27.0)));
  const double fak = 2.0 * std::sqrt(-p / 3.0);
  const double y1 = fak * std::cos(fi / 3.0) - a / 3.0;
  const double y2 = fak * std::cos(fi / 3.0 + 4.0 / 3.0 * std::numbers::pi) - a / 3.0;
  const double uplus = (y1 - xm) * std::exp(t * std::log(y1) - s * (y1 + 1.0 / y1) - nc);
  const double uminus = (y2 - xm) * std::exp(t * std::log(y2) - s * (y2 + 1.0 / y2) - nc);

  for (;;) {
    const double u = uminus + rng.uniform() * (uplus - uminus);
    const double v = rng.uniform();
    const double x = u / v + xm;
    if (x <= 0.0) continue;
    if (std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Ratio-of-uniforms without shift; moderate lambda and omega.
inline double gig_rou_noshift(double lambda, double omega, RngStream& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);
  const double ym = ((lambda + 1.0) + std::sqrt((lambda + 1.0) * (lambda + 1.0) + omega * omega)) / omega;
  const double um = std::exp(0.5 * (lambda + 1.0) * std::log(ym) - s * (ym + 1.0 / ym) - nc);
  for (;;) {
    const double u = um * rng.uniform();
    const double v = rng.uniform();
    const double x = u / v;
    if (std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Piecewise hat (constant, power, exponential) for lambda < 1, small omega.
inline double gig_small_omega(double lambda, double omega, RngStream& rng) {
  const double xm = gig_mode(lambda, omega);
  const double x0 = omega / (1.0 - lambda);
  const double k0 = std::exp((lambda - 1.0) * std::log(xm) - 0.5 * omega * (xm + 1.0 / xm));
  const double a0 = k0 * x0;

  double k1 = 0.0;
  double a1 = 0.0;
  double k2 = 0.0;
  double a2 = 0.0;
  if (x0 >= 2.0 / omega) {
    k2 = std::pow(x0, lambda - 1.0);
    a2 = k2 * 2.0 * std::exp(-0.5 * omega * x0) / omega;
  } else {
    k1 = std::exp(-omega);
    a1 = lambda == 0.0 ? k1 * std::log(2.0 / (omega * omega))
                       : k1 / lambda * (std::pow(2.0 / omega, lambda) - std::pow(x0, lambda));
    k2 = std::pow(2.0 / omega, lambda - 1.0);
    a2 = k2 * 2.0 * std::exp(-1.0) / omega;
  }
  const double total = a0 + a1 + a2;
  const double start3 = std::max(x0, 2.0 / omega);

  for (;;) {
    double v = total * rng.uniform();
    double x = 0.0;
    double hx = 0.0;
    if (v <= a0) {
      x = x0 * v / a0;
      hx = k0;
    } else if (v <= a0 + a1) {
      v -= a0;
      x = lambda == 0.0 ? omega * std::exp(std::exp(omega) * v)
                        : std::pow(std::pow(x0, lambda) + lambda / k1 * v, 1.0 / lambda);
      hx = k1 * std::pow(x, lambda - 1.0);
    } else {
      v -= a0 + a1;
      x = -2.0 / omega * std::log(std::exp(-0.5 * omega * start3) - omega / (2.0 * k2) * v);
      hx = k2 * std::exp(-0.5 * omega * x);
    }
    const double u = rng.uniform() * hx;
    if (std::log(u) <= (lambda - 1.0) * std::log(x) - 0.5 * omega * (x + 1.0 / x)) return x;
  }
}

inline double sample_gig_standard(double lambda, double omega, RngStream& rng) {
  if (lambda > 2.0 || omega > 3.0) return gig_rou_shift(lambda, omega, rng);
  if (lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2) return gig_rou_noshift(lambda, omega, rng);
  return gig_small_omega(lambda, omega, rng);
}

}  // namespace detail

/// One GIG(q, a, b) variate; exact (rejection), never MCMC.
inline double sample_gig(const GigParams& p, RngStream& rng) {
  if (p.a == 0.0) return 1.0 / sample_gamma(-p.q, 0.5 * p.b, rng);
  if (p.b == 0.0) return sample_gamma(p.q, 0.5 * p.a, rng);
  const double omega = std::sqrt(p.a * p.b);
  const double alpha = std::sqrt(p.b / p.a);
  const double y = detail::sample_gig_standard(std::abs(p.q), omega, rng);
  return p.q >= 0.0 ? alpha * y : alpha / y;
}

// ---------------------------------------------------------------------------
// 3-dimensional Bessel bridge and process

/// Norm of a 3-D Brownian bridge from (theta, 0, 0) at time 0 to the origin at
/// t0, sampled exactly at the grid points by sequential Gaussian conditioning.
inline std::vector<double> sample_bessel3_bridge(double theta, double t0, const std::vector<double>& grid,
                                                 RngStream& rng) {
  detail::require(theta > 0.0 && t0 > 0.0, "bessel bridge requires theta > 0 and t0 > 0");
  detail::require(grid.size() >= 2 && grid.front() == 0.0 && grid.back() == t0,
                  "bessel bridge grid must start at 0 and end at t0");
  for (std::size_t k = 1; k < grid.size(); ++k)
    detail::require(grid[k] > grid[k - 1], "bessel bridge grid must be increasing");
  std::vector<double> out(grid.size());
  double c[3] = {theta, 0.0, 0.0};
  out[0] = theta;
  for (std::size_t k = 1; k + 1 < grid.size(); ++k) {
    const double h = grid[k] - grid[k - 1];
    const double left = t0 - grid[k - 1];
    const double frac = h / left;
    const double sd = std::sqrt(h * (t0 - grid[k]) / left);
    double r2 = 0.0;
    for (double& ci : c) {
      ci += -frac * ci + sd * rng.normal();
      r2 += ci * ci;
    }
    out[k] = std::sqrt(r2);
  }
  out.back() = 0.0;
  return out;
}

/// The same bridge read backwards: returns R(t0 - s) at increasing
/// time-to-go points s, 0 < s_1 < ... < t0.  Starting the conditioning at the
/// absorbed end resolves the path arbitrarily close to t0 without roundoff in
/// t0 - t.
inline std::vector<double> sample_bessel3_bridge_time_to_go(double theta, double t0, const std::vector<double>& s,
                                                            RngStream& rng) {
  detail::require(theta > 0.0 && t0 > 0.0, "bessel bridge requires theta > 0 and t0 > 0");
  std::vector<double> out(s.size());
  double c[3] = {0.0, 0.0, 0.0};
  const double target[3] = {theta, 0.0, 0.0};
  double prev = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    detail::require(s[k] > prev && s[k] <= t0, "time-to-go points must be increasing in (0, t0]");
    if (s[k] == t0) {
      out[k] = theta;
      prev = s[k];
      continue;
    }
    const double h = s[k] - prev;
    const double left = t0 - prev;
    const double frac = h / left;
    const double sd = std::sqrt(h * (t0 - s[k]) / left);
    double r2 = 0.0;
    for (int d = 0; d < 3; ++d) {
      c[d] += frac * (target[d] - c[d]) + sd * rng.normal();
      r2 += c[d] * c[d];
    }
    out[k] = std::sqrt(r2);
    prev = s[k];
  }
  return out;
}

/// CDF of the bridge at time t: the norm of N(m e_1, sigma^2 I_3) with
/// m = (1 - t/t0) theta and sigma^2 = t (t0 - t) / t0.
inline double bessel3_bridge_marginal_cdf(double r, double theta, double t0, double t) {
  detail::require(t > 0.0 && t < t0, "bridge marginal requires 0 < t < t0");
  if (r <= 0.0) return 0.0;
  const double m = (1.0 - t / t0) * theta;
  const double sigma = std::sqrt(t * (t0 - t) / t0);
  const double zm = (r - m) / sigma;
  const double zp = (r + m) / sigma;
  const double value = normal_cdf(zm) + normal_cdf(zp) - 1.0 - sigma / m * (normal_pdf(zm) - normal_pdf(zp));
  return std::clamp(value, 0.0, 1.0);
}

/// BES(3) at time s started from x0: |x0 e_1 + sqrt(s) Z|, Z ~ N(0, I_3).
inline double sample_bessel3_process(double x0, double s, RngStream& rng) {
  detail::require(x0 >= 0.0 && s >= 0.0, "bessel process requires x0 >= 0 and s >= 0");
  const double sd = std::sqrt(s);
  const double a = x0 + sd * rng.normal();
  const double b = sd * rng.normal();
  const double c = sd * rng.normal();
  return std::sqrt(a * a + b * b + c * c);
}

}  // namespace ibridges
