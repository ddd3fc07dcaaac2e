#pragma once

// The beta potential nu^{W,theta,eta}: density on {H_beta > 0}, quadrature
// normalization for small graphs, a random-walk Metropolis oracle, and the
// pathwise martingale and Girsanov quantities along time-changed paths.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <utility>
#include <variant>
#include <vector>

#include "ibridges/distributions.hpp"
#include "ibridges/error.hpp"
#include "ibridges/linalg.hpp"
#include "ibridges/quadrature.hpp"
#include "ibridges/rng.hpp"
#include "ibridges/sde.hpp"

namespace ibridges {

using NuDensityParams = ModelParams;

/// log nu(beta):
///   (n/2) log(2/pi) - <theta, H theta>/2 - <eta, H^{-1} eta>/2 + <eta, theta>
///   + sum log theta_i - log det(H)/2,
/// and -inf off {H_beta > 0}.
inline double nu_log_density(const NuDensityParams& p, const Vector& beta) {
  detail::require(static_cast<std::size_t>(beta.size()) == p.size(), "nu_log_density: beta has wrong dimension");
  for (Eigen::Index i = 0; i < beta.size(); ++i)
    if (!std::isfinite(beta[i])) return -std::numeric_limits<double>::infinity();
  const Matrix h = h_beta(p.W, beta);
  SpdFactor f;
  if (!f.compute(h)) return -std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(p.size());
  return 0.5 * n * std::log(2.0 / std::numbers::pi) - 0.5 * p.theta.dot(h * p.theta) -
         0.5 * p.eta.dot(f.solve(p.eta)) + p.eta.dot(p.theta) + p.theta.array().log().sum() - 0.5 * f.log_det();
}

/// Per-coordinate integration bounds.
using Box = std::vector<std::pair<double, double>>;

/// [W_ii/2, W_ii/2 + 35/theta_i^2]: above the upper end the factor
/// exp(-theta_i^2 beta_i) has fallen by e^{-35}.
inline Box default_box(const NuDensityParams& p) {
  Box box(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double lo = 0.5 * p.W(i, i);
    const double th = p.theta[static_cast<Eigen::Index>(i)];
    box[i] = {lo, lo + 35.0 / (th * th)};
  }
  return box;
}

/// Mass of nu over box ∩ {H_beta > 0} by nested adaptive Gauss-Kronrod.
/// Coordinate k is integrated from the Schur-complement boundary
///   beta_k > (W_kk + b^T H_{<k}^{-1} b) / 2
/// (or the box's lower end, whichever is larger) with beta_k = lower + s^2,
/// which removes the inverse square-root edge singularity.
inline QuadratureResult quadrature_normalization(const NuDensityParams& p, const Box& box, double tol = 1e-8) {
  const std::size_t n = p.size();
  detail::require(n >= 1 && n <= 3, "quadrature_normalization supports 1 to 3 vertices");
  detail::require(box.size() == n, "quadrature_normalization: box has wrong dimension");
  detail::require(tol > 0.0, "quadrature_normalization: tol must be positive");
  const Matrix& w = p.W.matrix();
  Vector beta = Vector::Zero(static_cast<Eigen::Index>(n));
  const double inner_tol = 0.1 * tol;
  bool all_converged = true;

  std::function<QuadratureResult(std::size_t)> level = [&](std::size_t k) -> QuadratureResult {
    const auto kk = static_cast<Eigen::Index>(k);
    QuadratureResult empty;
    empty.converged = true;
    double lower = 0.5 * w(kk, kk);
    if (k > 0) {
      Matrix h = -w.topLeftCorner(kk, kk);
      h.diagonal() += 2.0 * beta.head(kk);
      SpdFactor f;
      if (!f.compute(h)) return empty;
      const Vector b = w.col(kk).head(kk);
      lower += 0.5 * b.dot(f.solve(b));
    }
    const double lo = std::max(lower, box[k].first);
    const double hi = box[k].second;
    if (!(hi > lo)) return empty;
    const bool edge = lo == lower;
    auto integrand = [&](double s) {
      beta[kk] = edge ? lo + s * s : lo + s;
      const double jac = edge ? 2.0 * s : 1.0;
      if (k + 1 == n) {
        const double ld = nu_log_density(p, beta);
        return std::isfinite(ld) ? jac * std::exp(ld) : 0.0;
      }
      return jac * level(k + 1).value;
    };
    const double upper = edge ? std::sqrt(hi - lo) : hi - lo;
    const double t = k == 0 ? tol : inner_tol;
    QuadratureResult r = integrate(integrand, 0.0, upper, t, t);
    if (!r.converged) all_converged = false;
    return r;
  };

  QuadratureResult out = level(0);
  out.converged = out.converged && all_converged;
  if (!out.converged) throw NumericalError("quadrature_normalization did not converge within budget");
  return out;
}

// ---------------------------------------------------------------------------

struct McmcConfig {
  std::size_t n_samples = 10000;
  std::size_t burn_in = 5000;
  std::size_t thinning = 20;
  double proposal_scale = 1.0;
  RngStream rng{0, 0};
};

struct McmcResult {
  std::vector<Vector> samples;
  double acceptance_rate = 0.0;  // post burn-in
  double final_scale = 0.0;
};

/// A point with H_beta theta = theta > 0, hence H_beta positive definite.
inline Vector interior_point(const NuDensityParams& p) {
  const Vector wt = p.W.matrix() * p.theta;
  return ((wt + p.theta).array() / (2.0 * p.theta.array())).matrix();
}

/// Random-walk Metropolis in beta-space.  Proposals are independent
/// Gaussians per coordinate with scale proposal_scale / theta_i^2; the scale
/// is adapted during burn-in toward 20-40% acceptance and frozen afterwards.
inline McmcResult sample_nu_mcmc(const NuDensityParams& p, McmcConfig cfg) {
  detail::require(cfg.thinning >= 1, "McmcConfig: thinning must be >= 1");
  detail::require(cfg.proposal_scale > 0.0, "McmcConfig: proposal_scale must be positive");
  const auto n = static_cast<Eigen::Index>(p.size());
  const Vector base = (p.theta.array().square().inverse()).matrix();
  double scale = cfg.proposal_scale;
  Vector beta = interior_point(p);
  double ld = nu_log_density(p, beta);
  Vector proposal(n);

  McmcResult out;
  out.samples.reserve(cfg.n_samples);
  std::size_t batch_accepts = 0;
  std::size_t batch = 0;
  std::size_t accepts = 0;
  const std::size_t total = cfg.burn_in + cfg.n_samples * cfg.thinning;
  for (std::size_t it = 0; it < total; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) proposal[i] = beta[i] + scale * base[i] * cfg.rng.normal();
    const double lp = nu_log_density(p, proposal);
    const bool accept = std::isfinite(lp) && std::log(cfg.rng.uniform()) < lp - ld;
    if (accept) {
      beta = proposal;
      ld = lp;
    }
    if (it < cfg.burn_in) {
      batch_accepts += accept;
      if (++batch == 100) {
        const double rate = static_cast<double>(batch_accepts) / 100.0;
        if (rate < 0.2) scale *= 0.8;
        if (rate > 0.4) scale *= 1.25;
        batch = 0;
        batch_accepts = 0;
      }
      continue;
    }
    accepts += accept;
    if ((it - cfg.burn_in + 1) % cfg.thinning == 0) out.samples.push_back(beta);
  }
  const std::size_t post = total - cfg.burn_in;
  out.acceptance_rate = post > 0 ? static_cast<double>(accepts) / static_cast<double>(post) : 0.0;
  out.final_scale = scale;
  return out;
}

// ---------------------------------------------------------------------------

/// 1/(2 beta_i - W_ii) ~ IG(mu, lambda).
struct IgMarginal {
  double mu;
  double lambda;
};

/// Degenerate case eta_i + sum_{j != i} W_ij theta_j = 0:
/// (2 beta_i - W_ii)/2 ~ Gamma(1/2, rate theta_i^2), i.e. 1/(2 beta_i - W_ii)
/// has the first-passage law with zero drift.
struct GammaMarginal {
  double shape;
  double rate;
};

using MarginalLaw = std::variant<IgMarginal, GammaMarginal>;

inline MarginalLaw marginal_ig_params(const NuDensityParams& p, std::size_t i) {
  detail::require(i < p.size(), "marginal_ig_params: vertex out of range");
  const auto ii = static_cast<Eigen::Index>(i);
  double denom = p.eta[ii];
  for (std::size_t j = 0; j < p.size(); ++j)
    if (j != i) denom += p.W(i, j) * p.theta[static_cast<Eigen::Index>(j)];
  const double th = p.theta[ii];
  if (denom > 0.0) return IgMarginal{th / denom, th * th};
  return GammaMarginal{0.5, th * th};
}

/// CDF of 1/(2 beta_i - W_ii) under the marginal law.
inline double marginal_cdf(const MarginalLaw& law, double t) {
  if (const auto* ig = std::get_if<IgMarginal>(&law)) return ig_cdf_mean_shape(t, ig->mu, ig->lambda);
  const auto& g = std::get<GammaMarginal>(law);
  return ig_cdf(t, std::sqrt(g.rate), 0.0);
}

inline Vector beta_from_hitting(const TimeVector& t0) {
  Vector beta(static_cast<Eigen::Index>(t0.size()));
  for (std::size_t i = 0; i < t0.size(); ++i) {
    detail::require(std::isfinite(t0[i]) && t0[i] > 0.0, "beta_from_hitting: hitting times must be finite and > 0");
    beta[static_cast<Eigen::Index>(i)] = 1.0 / (2.0 * t0[i]);
  }
  return beta;
}

// ---------------------------------------------------------------------------

struct MartingaleTrace {
  std::vector<double> closed_form;  // E_i(u_k)
  std::vector<double> stochastic;   // discrete stochastic exponential of L_i
  double max_relative = 0.0;
};

/// Along one coordinate of a time-changed path with phi = 1 - 2 beta T > 0:
///   E(u) = exp(-theta^2 beta + beta e^{2 rho}/phi - rho/2 + u/8) phi^{3/2} sqrt(theta),
///   L(u) = int (-1/2 + 2 beta e^{2 rho}/phi) dB^,  B^ = rho - log theta - u/2 - log phi,
/// with L as a left-point sum.  Both sides start at 1.
inline MartingaleTrace exp_martingale_trace(const TimeChangedPath& tc, std::size_t vertex, double beta, double theta) {
  detail::require(vertex < tc.vertices(), "exp_martingale_check: vertex out of range");
  detail::require(beta > 0.0 && theta > 0.0, "exp_martingale_check requires beta > 0 and theta > 0");
  const auto& rho = tc.rho[vertex];
  const auto& t = tc.T[vertex];
  const double log_theta = std::log(theta);
  MartingaleTrace out;
  out.closed_form.reserve(rho.size());
  out.stochastic.reserve(rho.size());
  double l = 0.0;
  double q = 0.0;
  double prev_b = 0.0;
  double prev_c = 0.0;
  for (std::size_t k = 0; k < rho.size(); ++k) {
    const double u = tc.u_grid[k];
    const double phi = 1.0 - 2.0 * beta * t[k];
    if (!(phi > 0.0)) throw InvalidArgument("exp_martingale_check: 1 - 2 beta T(u) must stay positive");
    const double e2 = std::exp(2.0 * rho[k]);
    const double b = rho[k] - log_theta - 0.5 * u - std::log(phi);
    if (k > 0) {
      l += prev_c * (b - prev_b);
      q += prev_c * prev_c * (u - tc.u_grid[k - 1]);
    }
    const double e = std::exp(-theta * theta * beta + beta * e2 / phi - 0.5 * rho[k] + u / 8.0) * std::pow(phi, 1.5) *
                     std::sqrt(theta);
    const double s = std::exp(l - 0.5 * q);
    out.closed_form.push_back(e);
    out.stochastic.push_back(s);
    out.max_relative = std::max(out.max_relative, std::abs(e - s) / e);
    prev_b = b;
    prev_c = -0.5 + 2.0 * beta * e2 / phi;
  }
  return out;
}

/// max_k |E(u_k) - stochastic exponential(u_k)| / E(u_k).
inline double exp_martingale_check(const TimeChangedPath& tc, std::size_t vertex, double beta, double theta) {
  return exp_martingale_trace(tc, vertex, beta, theta).max_relative;
}

/// log D(u) at grid index k, or -inf where H^{(u)} = T(u)^{-1} - W is not
/// positive definite:
///   -<th~, W~ th~>/2 - <eta, H^{-1} eta>/2 - <eta~, th~> + sum(-rho_i/2 - u/8)
///   - log det K/2 + <theta, W theta>/2 + <eta, theta> + sum log(theta_i)/2,
/// with th~ = e^rho, W~ = W K^{-1}, eta~ = W~ T eta + eta, H^{-1} = K^{-1} T.
inline double girsanov_log_density(const NuDensityParams& p, const TimeChangedPath& tc, std::size_t k) {
  const auto n = static_cast<Eigen::Index>(p.size());
  detail::require(tc.vertices() == p.size(), "girsanov_density: dimension mismatch");
  Vector rho(n);
  Vector t(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& ri = tc.rho[static_cast<std::size_t>(i)];
    detail::require(k < ri.size(), "girsanov_density: grid index beyond the path");
    rho[i] = ri[k];
    t[i] = tc.T[static_cast<std::size_t>(i)][k];
    detail::require(t[i] > 0.0, "girsanov_density requires T(u) > 0");
  }
  const double u = tc.u_grid[k];
  const Matrix& w = p.W.matrix();
  KtSolver solver(w);
  if (!solver.update(t)) return -std::numeric_limits<double>::infinity();
  const Vector th = rho.array().exp().matrix();
  const Matrix wt = solver.w_tilde();
  const Vector t_eta = t.cwiseProduct(p.eta);
  Vector h_inv_eta(n);
  solver.solve(t_eta, h_inv_eta);
  const Vector eta_tilde = wt * t_eta + p.eta;
  double log_d = -0.5 * th.dot(wt * th) - 0.5 * p.eta.dot(h_inv_eta) - eta_tilde.dot(th);
  log_d += -0.5 * rho.sum() - static_cast<double>(n) * u / 8.0 - 0.5 * solver.log_det();
  log_d += 0.5 * p.theta.dot(w * p.theta) + p.eta.dot(p.theta) + 0.5 * p.theta.array().log().sum();
  return log_d;
}

inline double girsanov_density(const NuDensityParams& p, const TimeChangedPath& tc, std::size_t k) {
  return std::exp(girsanov_log_density(p, tc, k));
}

}  // namespace ibridges
