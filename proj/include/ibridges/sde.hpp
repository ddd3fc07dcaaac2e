#pragma once

// Simulation of the interacting absorbed system
//   X_i(t) = theta_i + int 1{s < T0_i} dB_i - int 1{s < T0_i} ((W psi)(s) + eta)_i ds,
//   psi(t) = K_{t ∧ T0}^{-1} (X(t) + (t ∧ T0) eta),
// of its time-changed form in (rho, T), and of the maps between them.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "ibridges/distributions.hpp"
#include "ibridges/error.hpp"
#include "ibridges/linalg.hpp"
#include "ibridges/rng.hpp"

namespace ibridges {

struct SimulationOptions {
  bool record_path = true;
  std::size_t record_every = 1;  // keep one grid point in this many steps
  bool record_increments = false;
};

/// Piecewise-linear multi-coordinate path of X.  values[i][k] = X_i(grid[k]).
struct MultiPath {
  double dt = 0.0;
  std::vector<double> grid;
  std::vector<std::vector<double>> values;
  Vector absorption;  // T0_i, +inf if not absorbed by t_max
  std::vector<std::vector<double>> brownian_increments;  // [vertex][step]

  std::size_t vertices() const { return static_cast<std::size_t>(absorption.size()); }
  bool all_absorbed() const { return absorption.allFinite(); }
  TimeVector hitting_times() const { return TimeVector(absorption); }
};

/// Paired (rho, T) trajectories on a common u grid.  A coordinate's series may
/// stop before the end of u_grid (the Lamperti transform truncates where U's
/// computed range ends).
struct TimeChangedPath {
  double du = 0.0;
  std::vector<double> u_grid;
  std::vector<std::vector<double>> rho;
  std::vector<std::vector<double>> T;
  std::vector<std::vector<double>> driving_increments;  // [vertex][step]

  std::size_t vertices() const { return rho.size(); }
};

// ---------------------------------------------------------------------------

/// psi = K_{t_clamped}^{-1} (x + t_clamped ∘ eta).
inline Vector psi(const ModelParams& params, const Vector& x, const TimeVector& t_clamped) {
  detail::require(static_cast<std::size_t>(x.size()) == params.size() && t_clamped.size() == params.size(),
                  "psi: dimension mismatch");
  detail::require(t_clamped.all_finite(), "psi: clamp times with t ∧ T0 first");
  KtSolver solver(params.W.matrix());
  if (!solver.update(t_clamped.t)) throw NumericalError("psi: K_t is singular or outside the admissible region");
  Vector out(x.size());
  solver.solve(x + t_clamped.t.cwiseProduct(params.eta), out);
  return out;
}

struct HitResult {
  bool hit = false;
  double fraction = 1.0;  // position of the hit inside the step, in [0, 1]
};

/// Absorption test for one Euler step from x_prev > 0 to x_next.  A step that
/// ends at or below 0 hits at the linear-interpolation point.  Otherwise the
/// Brownian bridge between the two values crosses 0 with probability
/// exp(-2 x_prev x_next / dt); given a crossing, the hit time tau solves
/// tau / (dt - tau) ~ IG(x_prev / x_next, x_prev^2 / dt).
inline HitResult detect_hitting(double x_prev, double x_next, double dt, RngStream& rng) {
  if (x_next <= 0.0) return {true, x_prev / (x_prev - x_next)};
  const double exponent = 2.0 * x_prev * x_next / dt;
  if (exponent > 40.0) return {};
  if (rng.uniform() >= std::exp(-exponent)) return {};
  const double lambda = x_prev * x_prev / dt;
  double s = 0.0;
  if (x_next < 1e-12 * x_prev) {
    // Infinite-mean limit: first passage of driftless BM (Levy law).
    const double z = rng.normal();
    s = lambda / (z * z);
  } else {
    s = sample_ig(x_prev / x_next, lambda, rng);
  }
  return {true, s / (1.0 + s)};
}

namespace detail {

inline void record_point(MultiPath& path, double t, const Vector& x) {
  path.grid.push_back(t);
  for (Eigen::Index i = 0; i < x.size(); ++i) path.values[static_cast<std::size_t>(i)].push_back(x[i]);
}

}  // namespace detail

/// Euler-Maruyama for X from an arbitrary start x0 >= 0 with a symmetric
/// interaction matrix w (not necessarily a graph's conductances: restarted
/// systems use W~).  Coordinates with x0_i = 0 are absorbed at time 0.
inline MultiPath simulate_x_from(const Matrix& w, const Vector& x0, const Vector& eta, double dt, double t_max,
                                 RngStream& rng, const SimulationOptions& options = {}) {
  const Eigen::Index n = x0.size();
  detail::require(w.rows() == n && w.cols() == n && eta.size() == n, "simulate_x: dimension mismatch");
  detail::require(dt > 0.0 && std::isfinite(dt), "simulate_x: dt must be positive");
  detail::require(t_max > 0.0 && std::isfinite(t_max), "simulate_x: t_max must be positive and finite");
  detail::require(options.record_every >= 1, "record_every must be >= 1");

  MultiPath path;
  path.dt = dt;
  path.values.assign(static_cast<std::size_t>(n), {});
  path.absorption = Vector::Constant(n, std::numeric_limits<double>::infinity());
  if (options.record_increments) path.brownian_increments.assign(static_cast<std::size_t>(n), {});

  Vector x = x0;
  Eigen::Index active = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    detail::require(std::isfinite(x0[i]) && x0[i] >= 0.0, "simulate_x: start values must be >= 0");
    if (x0[i] == 0.0)
      path.absorption[i] = 0.0;
    else
      ++active;
  }
  if (options.record_path) detail::record_point(path, 0.0, x);

  const bool coupled = !(w.array() == 0.0).all();
  KtSolver solver(w);
  Vector tc(n);
  Vector r(n);
  Vector p(n);
  Vector drift = -eta;
  const double sqrt_dt = std::sqrt(dt);
  const auto steps = static_cast<std::size_t>(std::ceil(t_max / dt - 1e-9));

  for (std::size_t step = 0; step < steps && active > 0; ++step) {
    const double t = static_cast<double>(step) * dt;
    if (coupled) {
      for (Eigen::Index i = 0; i < n; ++i) tc[i] = std::min(t, path.absorption[i]);
      if (!solver.update(tc))
        throw NumericalError("simulate_x: K_{t∧T0} left the positive region at t = " + std::to_string(t));
      r = x + tc.cwiseProduct(eta);
      solver.solve(r, p);
      drift.noalias() = -(w * p);
      drift -= eta;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::isfinite(path.absorption[i])) {
        if (options.record_increments) path.brownian_increments[static_cast<std::size_t>(i)].push_back(0.0);
        continue;
      }
      const double db = sqrt_dt * rng.normal();
      if (options.record_increments) path.brownian_increments[static_cast<std::size_t>(i)].push_back(db);
      const double next = x[i] + drift[i] * dt + db;
      if (!std::isfinite(next)) throw NumericalError("simulate_x: non-finite state");
      const HitResult hit = detect_hitting(x[i], next, dt, rng);
      if (hit.hit) {
        path.absorption[i] = t + hit.fraction * dt;
        x[i] = 0.0;
        --active;
      } else {
        x[i] = next;
      }
    }
    if (options.record_path && ((step + 1) % options.record_every == 0 || active == 0 || step + 1 == steps))
      detail::record_point(path, static_cast<double>(step + 1) * dt, x);
  }
  return path;
}

/// Euler-Maruyama path of the absorbed system with Brownian-bridge barrier
/// correction.  Coordinates still alive at t_max keep T0_i = +inf.
inline MultiPath simulate_x(const ModelParams& params, double dt, double t_max, RngStream& rng,
                            const SimulationOptions& options = {}) {
  return simulate_x_from(params.W.matrix(), params.theta, params.eta, dt, t_max, rng, options);
}

/// Euler-Maruyama for the time-changed system
///   d rho_i = dB_i + (-1/2 - e^{rho_i} (W~(e^rho + T eta) + eta)_i) du,
///   dT_i = e^{2 rho_i} du,
/// with W~ = W K_T^{-1} refactored at every step.
inline TimeChangedPath simulate_rho(const ModelParams& params, double du, double u_max, RngStream& rng,
                                    const SimulationOptions& options = {}) {
  detail::require(du > 0.0 && std::isfinite(du), "simulate_rho: du must be positive");
  detail::require(u_max > 0.0 && std::isfinite(u_max), "simulate_rho: u_max must be positive and finite");
  detail::require(options.record_every >= 1, "record_every must be >= 1");
  const Eigen::Index n = static_cast<Eigen::Index>(params.size());
  const Matrix& w = params.W.matrix();
  const Vector& eta = params.eta;

  TimeChangedPath path;
  path.du = du;
  path.rho.assign(static_cast<std::size_t>(n), {});
  path.T.assign(static_cast<std::size_t>(n), {});
  if (options.record_increments) path.driving_increments.assign(static_cast<std::size_t>(n), {});

  Vector rho = params.theta.array().log().matrix();
  Vector t = Vector::Zero(n);
  Vector e(n);
  Vector r(n);
  Vector p(n);
  Vector wp = Vector::Zero(n);
  auto record = [&](double u) {
    path.u_grid.push_back(u);
    for (Eigen::Index i = 0; i < n; ++i) {
      path.rho[static_cast<std::size_t>(i)].push_back(rho[i]);
      path.T[static_cast<std::size_t>(i)].push_back(t[i]);
    }
  };
  if (options.record_path) record(0.0);

  const bool coupled = !params.W.is_zero();
  KtSolver solver(w);
  const double sqrt_du = std::sqrt(du);
  const auto steps = static_cast<std::size_t>(std::llround(u_max / du));
  for (std::size_t step = 0; step < steps; ++step) {
    e = rho.array().exp().matrix();
    if (coupled) {
      if (!solver.update(t))
        throw NumericalError("simulate_rho: K_{T(u)} left the positive region at u = " +
                             std::to_string(static_cast<double>(step) * du) + " (step too coarse)");
      r = e + t.cwiseProduct(eta);
      solver.solve(r, p);
      wp.noalias() = w * p;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const double db = sqrt_du * rng.normal();
      if (options.record_increments) path.driving_increments[static_cast<std::size_t>(i)].push_back(db);
      t[i] += e[i] * e[i] * du;
      rho[i] += (-0.5 - e[i] * (wp[i] + eta[i])) * du + db;
      if (!std::isfinite(rho[i]) || !std::isfinite(t[i])) throw NumericalError("simulate_rho: non-finite state");
    }
    if (options.record_path && ((step + 1) % options.record_every == 0 || step + 1 == steps))
      record(static_cast<double>(step + 1) * du);
  }
  return path;
}

/// Lamperti time change of a simulated X path.  U_i(t) = int_0^t ds / X_i(s)^2
/// is integrated exactly on each linear segment (dt / (x_k x_{k+1})) up to the
/// last grid point before absorption; T_i = U_i^{-1} by linear interpolation,
/// and rho_i(u) = log X_i(T_i(u)).
inline TimeChangedPath lamperti_transform(const MultiPath& path, const std::vector<double>& u_grid) {
  detail::require(path.all_absorbed(), "lamperti_transform: every coordinate must be absorbed");
  detail::require(path.grid.size() >= 2, "lamperti_transform: path has no recorded grid");
  for (std::size_t k = 1; k < u_grid.size(); ++k)
    detail::require(u_grid[k] > u_grid[k - 1], "lamperti_transform: u grid must be increasing");
  detail::require(!u_grid.empty() && u_grid.front() >= 0.0, "lamperti_transform: u grid must start at >= 0");

  TimeChangedPath out;
  out.du = u_grid.size() >= 2 ? u_grid[1] - u_grid[0] : 0.0;
  out.u_grid = u_grid;
  const std::size_t n = path.vertices();
  out.rho.assign(n, {});
  out.T.assign(n, {});
  std::vector<double> u_of_t;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& x = path.values[i];
    detail::require(x.size() == path.grid.size(), "lamperti_transform: ragged path");
    u_of_t.assign(1, 0.0);
    std::size_t last = 0;
    while (last + 1 < x.size() && x[last + 1] > 0.0 && path.grid[last + 1] < path.absorption[static_cast<Eigen::Index>(i)]) {
      const double inc = (path.grid[last + 1] - path.grid[last]) / (x[last] * x[last + 1]);
      if (!(inc > 0.0) || !std::isfinite(inc)) throw NumericalError("lamperti_transform: U is not increasing");
      u_of_t.push_back(u_of_t.back() + inc);
      ++last;
    }
    std::size_t seg = 0;
    for (double u : u_grid) {
      if (u > u_of_t.back()) break;
      while (seg + 1 < last && u_of_t[seg + 1] < u) ++seg;
      double t_u = path.grid[0];
      double x_u = x[0];
      if (last > 0) {
        const double w = (u - u_of_t[seg]) / (u_of_t[seg + 1] - u_of_t[seg]);
        t_u = path.grid[seg] + w * (path.grid[seg + 1] - path.grid[seg]);
        x_u = x[seg] + w * (x[seg + 1] - x[seg]);
      }
      out.T[i].push_back(t_u);
      out.rho[i].push_back(std::log(x_u));
    }
  }
  return out;
}

/// Value of coordinate i at time t on a recorded path (linear interpolation;
/// 0 from the absorption time on).
inline double path_value(const MultiPath& path, std::size_t i, double t) {
  const auto idx = static_cast<Eigen::Index>(i);
  if (t >= path.absorption[idx]) return 0.0;
  detail::require(!path.grid.empty() && t <= path.grid.back(), "path_value: time beyond the recorded path");
  const auto it = std::upper_bound(path.grid.begin(), path.grid.end(), t);
  if (it == path.grid.end()) return path.values[i].back();
  const std::size_t k = static_cast<std::size_t>(it - path.grid.begin());
  const double w = (t - path.grid[k - 1]) / (path.grid[k] - path.grid[k - 1]);
  return path.values[i][k - 1] + w * (path.values[i][k] - path.values[i][k - 1]);
}

/// Parameters of the system restarted at a multi-stopping time T.
struct RestartParams {
  Matrix W_tilde;
  Vector X_T;
  Vector eta_tilde;
  TimeVector T_clamped;  // T ∧ T0
};

/// W~ = W K_{T∧T0}^{-1}, eta~ = eta + W~((T∧T0) eta), X(T) read off the path.
inline RestartParams restart_params(const ModelParams& params, const MultiPath& path, const TimeVector& T) {
  detail::require(T.size() == params.size() && path.vertices() == params.size(), "restart_params: dimension mismatch");
  RestartParams out;
  out.T_clamped = min(T, path.hitting_times());
  detail::require(out.T_clamped.all_finite(), "restart_params: T ∧ T0 must be finite");
  KtSolver solver(params.W.matrix());
  if (!solver.update(out.T_clamped.t)) throw NumericalError("restart_params: K_{T∧T0} is singular");
  out.W_tilde = solver.w_tilde();
  out.eta_tilde = params.eta + out.W_tilde * out.T_clamped.t.cwiseProduct(params.eta);
  out.X_T.resize(static_cast<Eigen::Index>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) out.X_T[static_cast<Eigen::Index>(i)] = path_value(path, i, T[i]);
  return out;
}

/// Continues the process after a restart: the solution of the system with
/// parameters (W~, X(T), eta~).  Already-absorbed coordinates start at 0.
inline MultiPath simulate_after_restart(const RestartParams& restart, double dt, double t_max, RngStream& rng,
                                        const SimulationOptions& options = {}) {
  return simulate_x_from(restart.W_tilde, restart.X_T, restart.eta_tilde, dt, t_max, rng, options);
}

/// B^_i(u) = rho_i(u) - log theta_i - u/2 - log((T0_i - T_i(u)) / T0_i).
inline std::vector<std::vector<double>> opposite_drift_residual(const TimeChangedPath& tc, const TimeVector& T0,
                                                                const Vector& theta) {
  detail::require(T0.size() == tc.vertices() && static_cast<std::size_t>(theta.size()) == tc.vertices(),
                  "opposite_drift_residual: dimension mismatch");
  std::vector<std::vector<double>> out(tc.vertices());
  for (std::size_t i = 0; i < tc.vertices(); ++i) {
    const double t0 = T0[i];
    const double log_theta = std::log(theta[static_cast<Eigen::Index>(i)]);
    out[i].reserve(tc.rho[i].size());
    for (std::size_t k = 0; k < tc.rho[i].size(); ++k) {
      const double gap = t0 - tc.T[i][k];
      detail::require(gap > 0.0, "opposite_drift_residual: T_i(u) must stay below T0_i");
      // At u = 0 every term cancels; keep that exact.
      out[i].push_back(k == 0 && tc.T[i][k] == 0.0 ? tc.rho[i][k] - log_theta - 0.5 * tc.u_grid[k]
                                                  : tc.rho[i][k] - log_theta - 0.5 * tc.u_grid[k] - std::log(gap / t0));
    }
  }
  return out;
}

/// One coordinate of the quenched time-changed bridge: given T0 = 1/(2 beta)
/// and a Brownian path B^ on the u grid,
///   1/phi(u) = 1 + 2 beta theta^2 int_0^u e^{2 B^(v) + v} dv,
///   rho(u) = log theta + B^(u) + u/2 + log phi(u),  T(u) = (1 - phi(u)) / (2 beta).
/// The integral uses the trapezoidal rule on the grid.  driving_increments
/// holds the increments of B^ (here: the supplied ones).
inline TimeChangedPath quenched_time_changed_bridge(double theta, double beta, double du,
                                                    const std::vector<double>& increments) {
  detail::require(theta > 0.0 && beta > 0.0, "quenched bridge requires theta > 0 and beta > 0");
  detail::require(du > 0.0 && !increments.empty(), "quenched bridge requires du > 0 and at least one step");
  const std::size_t steps = increments.size();
  TimeChangedPath path;
  path.du = du;
  path.u_grid.resize(steps + 1);
  path.rho.assign(1, std::vector<double>(steps + 1));
  path.T.assign(1, std::vector<double>(steps + 1));
  path.driving_increments.assign(1, increments);
  const double log_theta = std::log(theta);
  double b = 0.0;
  double integral = 0.0;
  double prev_integrand = 1.0;
  path.u_grid[0] = 0.0;
  path.rho[0][0] = log_theta;
  path.T[0][0] = 0.0;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double u = static_cast<double>(k) * du;
    b += increments[k - 1];
    const double integrand = std::exp(2.0 * b + u);
    integral += 0.5 * (prev_integrand + integrand) * du;
    prev_integrand = integrand;
    const double inv_phi = 1.0 + 2.0 * beta * theta * theta * integral;
    path.u_grid[k] = u;
    path.rho[0][k] = log_theta + b + 0.5 * u - std::log(inv_phi);
    // 1 - phi = (inv_phi - 1) / inv_phi, without cancellation for small u.
    path.T[0][k] = theta * theta * integral / inv_phi;
  }
  return path;
}

inline TimeChangedPath quenched_time_changed_bridge(double theta, double beta, double du, double u_max,
                                                    RngStream& rng) {
  detail::require(du > 0.0 && u_max > 0.0, "quenched bridge requires du > 0 and u_max > 0");
  const auto steps = static_cast<std::size_t>(std::llround(u_max / du));
  std::vector<double> inc(steps);
  const double sqrt_du = std::sqrt(du);
  for (auto& v : inc) v = sqrt_du * rng.normal();
  return quenched_time_changed_bridge(theta, beta, du, inc);
}

}  // namespace ibridges
