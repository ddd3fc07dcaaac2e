#pragma once

// Goodness-of-fit and summary statistics used by the verification suites.

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "ibridges/error.hpp"
#include "ibridges/special.hpp"

namespace ibridges {

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;  // effective sample size used for the p-value
};

namespace detail {

inline double ks_p_value(double d, double n_eff) {
  const double root = std::sqrt(n_eff);
  return kolmogorov_survival((root + 0.12 + 0.11 / root) * d);
}

}  // namespace detail

/// One-sample KS statistic against a continuous CDF, with the asymptotic
/// Kolmogorov p-value (Stephens' small-sample adjustment).
inline KsResult ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf) {
  detail::require(!samples.empty(), "ks_one_sample: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, detail::ks_p_value(d, n), samples.size()};
}

/// KS distance restricted to (-inf, cap]: samples above cap (including
/// +inf, e.g. unabsorbed paths) only enter through the empirical CDF level.
/// Used for laws with heavy tails where simulation must stop at a horizon.
inline KsResult ks_one_sample_censored(std::vector<double> samples, const std::function<double(double)>& cdf,
                                       double cap) {
  detail::require(!samples.empty(), "ks_one_sample_censored: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  std::size_t i = 0;
  for (; i < samples.size() && samples[i] <= cap; ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  d = std::max(d, std::abs(static_cast<double>(i) / n - cdf(cap)));
  return {d, detail::ks_p_value(d, n), samples.size()};
}

/// Two-sample KS with effective size n m / (n + m).  Ties are stepped over
/// together so identical samples give a statistic of exactly 0.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  detail::require(!a.empty() && !b.empty(), "ks_two_sample: empty input");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double n_eff = na * nb / (na + nb);
  return {d, detail::ks_p_value(d, n_eff), static_cast<std::size_t>(std::llround(n_eff))};
}

/// Sum of squared increments of a path on a uniform grid.
inline double quadratic_variation(const std::vector<double>& values) {
  detail::require(values.size() >= 2, "quadratic_variation needs at least two points");
  double qv = 0.0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    const double d = values[k] - values[k - 1];
    qv += d * d;
  }
  return qv;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& x) {
  detail::require(x.size() >= 2, "mean_se needs at least two values");
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

inline double sample_variance(const std::vector<double>& x) {
  detail::require(x.size() >= 2, "sample_variance needs at least two values");
  const double mean = mean_se(x).mean;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return ss / (static_cast<double>(x.size()) - 1.0);
}

/// Pearson correlation.
inline double correlation(const std::vector<double>& x, const std::vector<double>& y) {
  detail::require(x.size() == y.size() && x.size() >= 2, "correlation needs paired samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

struct ChiSquareResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int dof = 0;
};

/// Independence proxy: Pearson chi-square on a 4x4 table of marginal
/// quartile bins, 9 degrees of freedom.
inline ChiSquareResult binned_independence(const std::vector<double>& x, const std::vector<double>& y) {
  constexpr int k = 4;
  detail::require(x.size() == y.size() && x.size() >= 16 * k, "binned_independence needs paired samples");
  auto cuts = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::array<double, k - 1> c{};
    for (int q = 1; q < k; ++q) c[q - 1] = v[(v.size() * q) / k];
    return c;
  };
  const auto cx = cuts(x);
  const auto cy = cuts(y);
  auto bin = [](const std::array<double, k - 1>& c, double v) {
    return static_cast<int>(std::upper_bound(c.begin(), c.end(), v) - c.begin());
  };
  std::array<std::array<double, k>, k> table{};
  for (std::size_t m = 0; m < x.size(); ++m) table[bin(cx, x[m])][bin(cy, y[m])] += 1.0;
  std::array<double, k> rows{};
  std::array<double, k> cols{};
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) {
      rows[r] += table[r][c];
      cols[c] += table[r][c];
    }
  const double total = static_cast<double>(x.size());
  double chi2 = 0.0;
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) {
      const double expected = rows[r] * cols[c] / total;
      if (expected > 0.0) chi2 += (table[r][c] - expected) * (table[r][c] - expected) / expected;
    }
  const int dof = (k - 1) * (k - 1);
  return {chi2, boost::math::gamma_q(0.5 * dof, 0.5 * chi2), dof};
}

}  // namespace ibridges
