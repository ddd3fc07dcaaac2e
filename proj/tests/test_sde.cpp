#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "ibridges/distributions.hpp"
#include "ibridges/quadrature.hpp"
#include "ibridges/sde.hpp"
#include "ibridges/stats.hpp"

using namespace ibridges;

namespace {

Matrix edge_matrix() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

ModelParams two_vertex(double eta) {
  return ModelParams(ConductanceMatrix(edge_matrix()), Vector::Constant(2, 1.0), Vector::Constant(2, eta));
}

ModelParams one_vertex(double theta, double eta) {
  return ModelParams(ConductanceMatrix(Matrix::Zero(1, 1)), Vector::Constant(1, theta), Vector::Constant(1, eta));
}

SimulationOptions no_path() {
  SimulationOptions o;
  o.record_path = false;
  return o;
}

}  // namespace

TEST(Psi, ZeroTimeReturnsStart) {
  const auto p = two_vertex(1.0);
  const Vector x = p.theta;
  EXPECT_EQ(psi(p, x, TimeVector::zeros(2)), p.theta);
}

TEST(Psi, DecoupledIsShift) {
  const auto p = one_vertex(1.0, 1.5);
  const Vector x = Vector::Constant(1, 0.3);
  EXPECT_NEAR(psi(p, x, TimeVector(Vector::Constant(1, 0.4)))[0], 0.3 + 0.4 * 1.5, 1e-15);
}

TEST(Psi, TwoVertexExample) {
  const auto p = two_vertex(0.0);
  Vector x(2);
  x << 1, 2;
  Vector t(2);
  t << 0.1, 0.2;
  const Vector out = psi(p, x, TimeVector(t));
  EXPECT_NEAR(out[0], 1.2244897959183674, 1e-12);
  EXPECT_NEAR(out[1], 2.2448979591836737, 1e-12);
}

TEST(Psi, SingularKThrows) {
  const auto p = two_vertex(0.0);
  EXPECT_THROW(psi(p, p.theta, TimeVector(Vector::Constant(2, 1.0))), NumericalError);
}

TEST(DetectHitting, NonPositiveEndAlwaysHits) {
  RngStream rng(1, 0);
  const HitResult h = detect_hitting(0.3, -0.1, 1e-3, rng);
  EXPECT_TRUE(h.hit);
  EXPECT_DOUBLE_EQ(h.fraction, 0.75);
  EXPECT_DOUBLE_EQ(detect_hitting(0.3, 0.0, 1e-3, rng).fraction, 1.0);
}

TEST(DetectHitting, FarFromBarrierNeverHits) {
  RngStream rng(2, 0);
  for (int k = 0; k < 1000000; ++k) ASSERT_FALSE(detect_hitting(5.0, 5.0, 1e-4, rng).hit);
}

TEST(DetectHitting, CrossingFrequency) {
  RngStream rng(3, 0);
  const double a = 0.02;
  const double b = 0.03;
  const double dt = 1e-3;
  const double p = std::exp(-2.0 * a * b / dt);
  const int n = 200000;
  int hits = 0;
  for (int k = 0; k < n; ++k) hits += detect_hitting(a, b, dt, rng).hit;
  EXPECT_NEAR(static_cast<double>(hits) / n, p, 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST(DetectHitting, ConditionalHitTimeMatchesBridgeDensity) {
  // Brownian bridge a -> b over [0, dt] conditioned to touch 0: the hit time
  // has density  (first passage of a at tau) * (Gaussian 0 -> b over dt - tau)
  // / (Gaussian a -> -b over dt).
  const double a = 0.03;
  const double b = 0.02;
  const double dt = 1e-3;
  auto gauss = [](double x, double v) { return std::exp(-x * x / (2 * v)) / std::sqrt(2 * std::numbers::pi * v); };
  auto dens = [&](double tau) {
    if (tau <= 0.0 || tau >= dt) return 0.0;
    const double fp = a / std::sqrt(2 * std::numbers::pi * tau * tau * tau) * std::exp(-a * a / (2 * tau));
    return fp * gauss(b, dt - tau) / gauss(a + b, dt);
  };
  RngStream rng(4, 0);
  std::vector<double> frac;
  while (frac.size() < 20000) {
    const HitResult h = detect_hitting(a, b, dt, rng);
    if (h.hit) frac.push_back(h.fraction);
  }
  const auto cdf = [&](double f) {
    if (f <= 0.0) return 0.0;
    if (f >= 1.0) return 1.0;
    return integrate(dens, 0.0, f * dt, 1e-13, 1e-10).value;
  };
  EXPECT_NEAR(cdf(1.0 - 1e-15), 1.0, 1e-6);
  EXPECT_GT(ks_one_sample(frac, cdf).p_value, 0.01);
}

TEST(SimulateX, PathInvariants) {
  RngStream rng(5, 0);
  const auto p = two_vertex(1.0);
  const MultiPath path = simulate_x(p, 1e-3, 50.0, rng);
  ASSERT_TRUE(path.all_absorbed());
  EXPECT_EQ(path.values[0][0], 1.0);
  EXPECT_EQ(path.values[1][0], 1.0);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t k = 0; k < path.grid.size(); ++k) {
      if (path.grid[k] >= path.absorption[static_cast<Eigen::Index>(i)])
        ASSERT_EQ(path.values[i][k], 0.0);
      else
        ASSERT_GT(path.values[i][k], 0.0);
    }
  }
  EXPECT_NEAR(path.grid.back(), path.absorption.maxCoeff(), 1e-3 + 1e-12);
}

TEST(SimulateX, Reproducible) {
  RngStream a(6, 3);
  RngStream b(6, 3);
  const auto p = two_vertex(1.0);
  const MultiPath x = simulate_x(p, 1e-3, 50.0, a);
  const MultiPath y = simulate_x(p, 1e-3, 50.0, b);
  EXPECT_EQ(x.absorption, y.absorption);
  EXPECT_EQ(x.values, y.values);
}

TEST(SimulateX, RecordEveryThinsGrid) {
  RngStream a(7, 0);
  RngStream b(7, 0);
  const auto p = two_vertex(1.0);
  SimulationOptions thin;
  thin.record_every = 10;
  const MultiPath full = simulate_x(p, 1e-3, 50.0, a);
  const MultiPath part = simulate_x(p, 1e-3, 50.0, b, thin);
  EXPECT_EQ(full.absorption, part.absorption);
  EXPECT_LT(part.grid.size(), full.grid.size() / 5);
  EXPECT_EQ(part.grid.back(), full.grid.back());
}

TEST(SimulateX, ZeroStartIsAbsorbedAtOnce) {
  RngStream rng(8, 0);
  Vector x0(2);
  x0 << 0.0, 0.5;
  const MultiPath path = simulate_x_from(edge_matrix(), x0, Vector::Constant(2, 1.0), 1e-3, 20.0, rng);
  EXPECT_EQ(path.absorption[0], 0.0);
  for (double v : path.values[0]) EXPECT_EQ(v, 0.0);
  EXPECT_GT(path.absorption[1], 0.0);
}

TEST(SimulateX, OneVertexHittingTimeLaw) {
  RngStream root(9, 0);
  const auto p = one_vertex(1.0, 1.0);
  std::vector<double> t0(20000);
  for (std::size_t r = 0; r < t0.size(); ++r) {
    RngStream rng = root.substream(r);
    t0[r] = simulate_x(p, 1e-3, 50.0, rng, no_path()).absorption[0];
  }
  EXPECT_GT(ks_one_sample(t0, [](double t) { return ig_cdf(t, 1.0, 1.0); }).p_value, 0.01);
}

TEST(SimulateX, BridgeCorrectionRemovesCoarseGridBias) {
  // At dt = 1e-2 the uncorrected scheme overshoots hitting times visibly; the
  // corrected one keeps only the small bias of the interpolated hit point.
  RngStream root(10, 0);
  const auto p = one_vertex(1.0, 1.0);
  std::vector<double> corrected(100000);
  std::vector<double> naive(100000);
  for (std::size_t r = 0; r < corrected.size(); ++r) {
    RngStream rng = root.substream(r);
    corrected[r] = simulate_x(p, 1e-2, 50.0, rng, no_path()).absorption[0];
    RngStream plain = root.substream(r + 1000000);
    double x = 1.0;
    double t = 0.0;
    while (x > 0.0) {
      x += -1e-2 + 0.1 * plain.normal();
      t += 1e-2;
    }
    naive[r] = t;
  }
  const auto cdf = [](double t) { return ig_cdf(t, 1.0, 1.0); };
  const KsResult c = ks_one_sample(corrected, cdf);
  const KsResult n = ks_one_sample(naive, cdf);
  EXPECT_LT(n.p_value, 1e-6);
  EXPECT_LT(c.statistic, 0.25 * n.statistic);
}

TEST(SimulateRho, DecoupledDriftedBrownianMotion) {
  RngStream root(11, 0);
  const auto p = one_vertex(2.0, 0.0);
  const double u_max = 1.0;
  std::vector<double> end(2000);
  double qv = 0.0;
  for (std::size_t r = 0; r < end.size(); ++r) {
    RngStream rng = root.substream(r);
    const TimeChangedPath tc = simulate_rho(p, 1e-3, u_max, rng);
    end[r] = tc.rho[0].back() - std::log(2.0);
    qv += quadratic_variation(tc.rho[0]);
    for (std::size_t k = 1; k < tc.T[0].size(); ++k) ASSERT_GT(tc.T[0][k], tc.T[0][k - 1]);
  }
  const MeanSe m = mean_se(end);
  EXPECT_LT(std::abs(m.mean + 0.5 * u_max), 4.0 * m.se);
  EXPECT_NEAR(qv / static_cast<double>(end.size()), u_max, 0.05 * u_max);
}

TEST(SimulateRho, InitialValuesAndRecording) {
  RngStream rng(12, 0);
  const auto p = two_vertex(1.0);
  SimulationOptions o;
  o.record_every = 100;
  o.record_increments = true;
  const TimeChangedPath tc = simulate_rho(p, 1e-3, 1.0, rng, o);
  EXPECT_EQ(tc.u_grid.size(), 11u);
  EXPECT_EQ(tc.rho[0][0], 0.0);
  EXPECT_EQ(tc.T[1][0], 0.0);
  EXPECT_EQ(tc.driving_increments[0].size(), 1000u);
  EXPECT_NEAR(tc.u_grid.back(), 1.0, 1e-12);
}

TEST(Lamperti, RoundTripOnGridPoints) {
  RngStream rng(13, 0);
  const auto p = two_vertex(1.0);
  const MultiPath path = simulate_x(p, 1e-3, 50.0, rng);
  for (std::size_t i = 0; i < 2; ++i) {
    // U at the first few hundred grid points.
    std::vector<double> u{0.0};
    std::vector<double> t{0.0};
    for (std::size_t k = 1; k < path.grid.size() && path.values[i][k] > 0.0 && u.size() < 300; ++k) {
      u.push_back(u.back() + (path.grid[k] - path.grid[k - 1]) / (path.values[i][k - 1] * path.values[i][k]));
      t.push_back(path.grid[k]);
    }
    const TimeChangedPath tc = lamperti_transform(path, u);
    ASSERT_EQ(tc.T[i].size(), u.size());
    for (std::size_t k = 1; k < u.size(); ++k) EXPECT_NEAR(tc.T[i][k] / t[k], 1.0, 1e-6);
    EXPECT_EQ(tc.rho[i][0], 0.0);
  }
}

TEST(Lamperti, RejectsUnabsorbedPath) {
  RngStream rng(14, 0);
  const MultiPath path = simulate_x(two_vertex(1.0), 1e-3, 0.01, rng);
  EXPECT_THROW(lamperti_transform(path, {0.0, 0.1}), InvalidArgument);
}

TEST(Lamperti, BesselBridgeResidualIsBrownian) {
  // Exact Bessel bridge on a fine grid, Lamperti-transformed; the residual
  // increments should have variance du.
  RngStream rng(15, 0);
  const double theta = 1.0;
  const double t0 = 0.8;
  const std::size_t m = 100000;
  std::vector<double> grid(m + 1);
  for (std::size_t k = 0; k <= m; ++k) grid[k] = t0 * static_cast<double>(k) / static_cast<double>(m);
  grid.back() = t0;
  const double du = 1e-3;
  std::vector<double> u_grid(1001);
  for (std::size_t k = 0; k < u_grid.size(); ++k) u_grid[k] = du * static_cast<double>(k);
  double qv = 0.0;
  double range = 0.0;
  for (int r = 0; r < 100; ++r) {
    MultiPath path;
    path.dt = grid[1];
    path.grid = grid;
    path.values = {sample_bessel3_bridge(theta, t0, grid, rng)};
    path.absorption = Vector::Constant(1, t0);
    const TimeChangedPath tc = lamperti_transform(path, u_grid);
    const auto res = opposite_drift_residual(tc, TimeVector(Vector::Constant(1, t0)), Vector::Constant(1, theta));
    EXPECT_EQ(res[0][0], 0.0);
    qv += quadratic_variation(res[0]);
    range += tc.u_grid[res[0].size() - 1];
  }
  EXPECT_NEAR(qv / range, 1.0, 0.05);
}

TEST(Restart, ZeroTimeIsIdentity) {
  RngStream rng(16, 0);
  const auto p = two_vertex(1.0);
  const MultiPath path = simulate_x(p, 1e-3, 50.0, rng);
  const RestartParams r = restart_params(p, path, TimeVector::zeros(2));
  EXPECT_EQ(r.W_tilde, p.W.matrix());
  EXPECT_EQ(r.eta_tilde, p.eta);
  EXPECT_EQ(r.X_T, p.theta);
}

TEST(Restart, AfterAbsorptionEverythingIsZero) {
  RngStream rng(17, 0);
  const auto p = two_vertex(1.0);
  const MultiPath path = simulate_x(p, 1e-3, 50.0, rng);
  const TimeVector late(Vector::Constant(2, path.absorption.maxCoeff() + 1.0));
  const RestartParams r = restart_params(p, path, late);
  EXPECT_EQ(r.X_T, Vector::Zero(2));
  const MultiPath after = simulate_after_restart(r, 1e-3, 1.0, rng);
  EXPECT_EQ(after.absorption, Vector::Zero(2));
}

TEST(Restart, RecomputableFromDefinition) {
  RngStream rng(18, 0);
  const auto p = two_vertex(1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const MultiPath path = simulate_x(p, 1e-3, 50.0, rng);
    Vector t(2);
    t << 0.05, 0.08;
    const RestartParams r = restart_params(p, path, TimeVector(t));
    const Matrix k = k_t(p.W, r.T_clamped);
    const Matrix wt = p.W.matrix() * k.inverse();
    EXPECT_LT((r.W_tilde - wt).cwiseAbs().maxCoeff(), 1e-12);
    const Vector et = p.eta + wt * r.T_clamped.t.cwiseProduct(p.eta);
    EXPECT_LT((r.eta_tilde - et).cwiseAbs().maxCoeff(), 1e-12);
    for (std::size_t i = 0; i < 2; ++i)
      EXPECT_DOUBLE_EQ(r.X_T[static_cast<Eigen::Index>(i)], path_value(path, i, t[static_cast<Eigen::Index>(i)]));
  }
}

TEST(OppositeDrift, ZeroAtStartAndRejectsOvershoot) {
  RngStream rng(19, 0);
  const TimeChangedPath tc = quenched_time_changed_bridge(1.0, 0.5, 1e-3, 1.0, rng);
  const auto res = opposite_drift_residual(tc, TimeVector(Vector::Constant(1, 1.0)), Vector::Constant(1, 1.0));
  EXPECT_EQ(res[0][0], 0.0);
  EXPECT_THROW(opposite_drift_residual(tc, TimeVector(Vector::Constant(1, 1e-6)), Vector::Constant(1, 1.0)),
               InvalidArgument);
}

TEST(QuenchedBridge, ResidualRecoversDrivingPath) {
  RngStream rng(20, 0);
  const double beta = 0.7;
  const TimeChangedPath tc = quenched_time_changed_bridge(1.3, beta, 1e-3, 3.0, rng);
  const auto res =
      opposite_drift_residual(tc, TimeVector(Vector::Constant(1, 1.0 / (2.0 * beta))), Vector::Constant(1, 1.3));
  double b = 0.0;
  for (std::size_t k = 1; k < res[0].size(); ++k) {
    b += tc.driving_increments[0][k - 1];
    ASSERT_NEAR(res[0][k], b, 1e-9);
    ASSERT_GT(tc.T[0][k], tc.T[0][k - 1]);
    ASSERT_LT(tc.T[0][k], 1.0 / (2.0 * beta));
  }
}

TEST(QuenchedBridge, IncrementOverloadMatches) {
  RngStream a(21, 0);
  const TimeChangedPath x = quenched_time_changed_bridge(1.0, 1.0, 1e-3, 0.5, a);
  const TimeChangedPath y = quenched_time_changed_bridge(1.0, 1.0, 1e-3, x.driving_increments[0]);
  EXPECT_EQ(x.rho, y.rho);
  EXPECT_EQ(x.T, y.T);
}
