#pragma once

// Special functions: normal distribution helpers, the modified Bessel function
// of the second kind K_q, and the Kolmogorov limiting distribution.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ibridges/error.hpp"

namespace ibridges {

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// log(erfc(x)), accurate where erfc underflows.
inline double log_erfc(double x) {
  if (x < 25.0) return std::log(std::erfc(x));
  // Asymptotic series erfc(x) ~ e^{-x^2}/(x sqrt(pi)) (1 - 1/(2x^2) + 3/(4x^4) - 15/(8x^6)).
  const double y = 1.0 / (2.0 * x * x);
  const double series = 1.0 - y + 3.0 * y * y - 15.0 * y * y * y;
  return -x * x - std::log(x * std::sqrt(std::numbers::pi)) + std::log(series);
}

/// log Phi(-z) for z >= 0.
inline double log_normal_upper_tail(double z) { return std::log(0.5) + log_erfc(z / std::numbers::sqrt2); }

namespace detail {

// 1/Gamma(1+z) = sum_k a_{k+1} z^k with Wrench's coefficients; the odd part
// gives gam1 below without cancellation for tiny z.
inline constexpr double kRecipGamma2 = 0.5772156649015329;
inline constexpr double kRecipGamma4 = -0.0420026350340952;
inline constexpr double kRecipGamma6 = -0.0421977345555443;

struct TemmeGammas {
  double gam1;   // (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu)
  double gam2;   // (1/Gamma(1-mu) + 1/Gamma(1+mu)) / 2
  double gampl;  // 1/Gamma(1+mu)
  double gammi;  // 1/Gamma(1-mu)
};

inline TemmeGammas temme_gammas(double mu) {
  TemmeGammas g{};
  g.gampl = 1.0 / std::tgamma(1.0 + mu);
  g.gammi = 1.0 / std::tgamma(1.0 - mu);
  g.gam2 = 0.5 * (g.gammi + g.gampl);
  if (std::abs(mu) < 1e-3) {
    const double m2 = mu * mu;
    g.gam1 = -(kRecipGamma2 + kRecipGamma4 * m2 + kRecipGamma6 * m2 * m2);
  } else {
    g.gam1 = (g.gammi - g.gampl) / (2.0 * mu);
  }
  return g;
}

/// Returns (K_mu(x), K_{mu+1}(x)) for |mu| <= 1/2, both multiplied by e^x
/// when `scaled` is set.  Temme's series for x < 2, Steed's continued
/// fraction otherwise.
inline void bessel_k_fractional(double mu, double x, bool scaled, double& k_mu, double& k_mu1) {
  constexpr double eps = 1e-16;
  constexpr int max_iter = 100000;
  const double xi = 1.0 / x;
  const double xi2 = 2.0 * xi;
  if (x < 2.0) {
    const double x2 = 0.5 * x;
    const double pimu = std::numbers::pi * mu;
    const double fact = std::abs(pimu) < eps ? 1.0 : pimu / std::sin(pimu);
    double d = -std::log(x2);
    double e = mu * d;
    const double fact2 = std::abs(e) < eps ? 1.0 : std::sinh(e) / e;
    const TemmeGammas g = temme_gammas(mu);
    double ff = fact * (g.gam1 * std::cosh(e) + g.gam2 * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e / g.gampl;
    double q = 0.5 / (e * g.gammi);
    double c = 1.0;
    d = x2 * x2;
    double sum1 = p;
    int i = 1;
    for (; i <= max_iter; ++i) {
      ff = (i * ff + p + q) / (i * static_cast<double>(i) - mu * mu);
      c *= d / i;
      p /= i - mu;
      q /= i + mu;
      const double del = c * ff;
      sum += del;
      const double del1 = c * (p - i * ff);
      sum1 += del1;
      if (std::abs(del) < std::abs(sum) * eps) break;
    }
    if (i > max_iter) throw NumericalError("bessel_k: series failed to converge");
    const double scale = scaled ? std::exp(x) : 1.0;
    k_mu = sum * scale;
    k_mu1 = sum1 * xi2 * scale;
    return;
  }
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0;
  double q2 = 1.0;
  const double a1 = 0.25 - mu * mu;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  int i = 2;
  for (; i <= max_iter; ++i) {
    a -= 2 * (i - 1);
    c = -a * c / i;
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < eps) break;
  }
  if (i > max_iter) throw NumericalError("bessel_k: continued fraction failed to converge");
  const double prefactor = std::sqrt(std::numbers::pi / (2.0 * x)) * (scaled ? 1.0 : std::exp(-x));
  k_mu = prefactor / s;
  k_mu1 = k_mu * (mu + x + 0.5 - a1 * h) * xi;
}

/// e^x K_q(x) for q >= 0 by upward recurrence from the fractional order.
inline double bessel_k_scaled_nonneg(double q, double x) {
  // Half-integer orders 1/2 and 3/2 have elementary closed forms.
  if (q == 0.5) return std::sqrt(std::numbers::pi / (2.0 * x));
  if (q == 1.5) return std::sqrt(std::numbers::pi / (2.0 * x)) * (1.0 + 1.0 / x);
  const int nl = static_cast<int>(q + 0.5);
  const double mu = q - nl;
  double k_mu = 0.0;
  double k_mu1 = 0.0;
  bessel_k_fractional(mu, x, true, k_mu, k_mu1);
  const double xi2 = 2.0 / x;
  for (int i = 1; i <= nl; ++i) {
    const double next = (mu + i) * xi2 * k_mu1 + k_mu;
    k_mu = k_mu1;
    k_mu1 = next;
  }
  return k_mu;
}

}  // namespace detail

/// e^x K_q(x).
inline double bessel_k_scaled(double q, double x) {
  detail::require(x > 0.0, "bessel_k requires x > 0");
  return detail::bessel_k_scaled_nonneg(std::abs(q), x);
}

/// Modified Bessel function of the second kind K_q(x), x > 0.
inline double bessel_k(double q, double x) { return bessel_k_scaled(q, x) * std::exp(-x); }

/// log K_q(x); finite where K_q(x) itself under- or overflows.
inline double log_bessel_k(double q, double x) { return std::log(bessel_k_scaled(q, x)) - x; }

/// Survival function of the Kolmogorov distribution, P(K > lambda).
inline double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.0) {
    // P(K <= l) = sqrt(2 pi)/l * sum_k exp(-(2k-1)^2 pi^2 / (8 l^2))
    const double c = -std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
    double sum = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double term = std::exp(c * (2 * k - 1) * (2 * k - 1));
      sum += term;
      if (term < 1e-18 * sum) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * sum, 0.0, 1.0);
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace ibridges
