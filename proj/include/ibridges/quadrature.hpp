#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals, with
// the usual change of variables for [a, +inf).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <vector>

#include "ibridges/error.hpp"

namespace ibridges {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
};

namespace detail {

// Kronrod abscissae (positive half, descending) and weights; the Gauss
// 7-point rule uses the odd-indexed abscissae.
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

template <class F>
Segment gauss_kronrod_15(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double sum = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[j] * sum;
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * sum;
  }
  return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

/// Integrates f over [a, b] to within max(abs_tol, rel_tol |I|).
template <class F>
QuadratureResult integrate(F&& f, double a, double b, double abs_tol = 1e-12, double rel_tol = 1e-10,
                           std::size_t max_segments = 20000) {
  detail::require(std::isfinite(a) && std::isfinite(b), "integrate requires finite limits; use integrate_to_infinity");
  QuadratureResult result;
  if (a == b) {
    result.converged = true;
    return result;
  }
  std::priority_queue<detail::Segment> heap;
  heap.push(detail::gauss_kronrod_15(f, a, b));
  double total = heap.top().value;
  double total_error = heap.top().error;
  result.evaluations = 15;
  while (total_error > std::max(abs_tol, rel_tol * std::abs(total)) && heap.size() < max_segments) {
    const detail::Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      heap.push(worst);
      break;
    }
    const detail::Segment left = detail::gauss_kronrod_15(f, worst.a, mid);
    const detail::Segment right = detail::gauss_kronrod_15(f, mid, worst.b);
    result.evaluations += 30;
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to shed the drift accumulated by the incremental updates.
  total = 0.0;
  total_error = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    total_error += heap.top().error;
    heap.pop();
  }
  result.value = total;
  result.error = total_error;
  result.converged = total_error <= std::max(abs_tol, rel_tol * std::abs(total));
  return result;
}

/// Integrates f over [a, +inf) through x = a + s / (1 - s).
template <class F>
QuadratureResult integrate_to_infinity(F&& f, double a, double abs_tol = 1e-12, double rel_tol = 1e-10,
                                       std::size_t max_segments = 20000) {
  auto g = [&](double s) {
    if (s >= 1.0) return 0.0;
    const double one_minus = 1.0 - s;
    const double value = f(a + s / one_minus);
    return value / (one_minus * one_minus);
  };
  return integrate(g, 0.0, 1.0, abs_tol, rel_tol, max_segments);
}

}  // namespace ibridges
