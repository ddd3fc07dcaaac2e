#include <gtest/gtest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "ibridges/distributions.hpp"
#include "ibridges/stats.hpp"

using namespace ibridges;

namespace {

double tanh_sinh_half_line(const std::function<double(double)>& f) {
  boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate(
      [&](double s) { return s >= 1.0 ? 0.0 : f(s / (1.0 - s)) / ((1.0 - s) * (1.0 - s)); }, 0.0, 1.0);
}

template <class Draw>
std::vector<double> draw(std::size_t n, Draw d) {
  std::vector<double> out(n);
  for (auto& x : out) x = d();
  return out;
}

}  // namespace

// ---------------------------------------------------------------- IG density

TEST(IgDensity, Examples) {
  EXPECT_NEAR(ig_density(1.0, 1.0, 0.0), 0.241971, 1e-6);
  EXPECT_NEAR(ig_density(1.0, 1.0, 0.0), std::exp(-0.5) / std::sqrt(2.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(ig_density(1.0, 1.0, 1.0), 0.398942, 1e-6);
  EXPECT_THROW(ig_density(0.0, 1.0, 1.0), InvalidArgument);
}

TEST(IgDensity, IntegratesToOne) {
  const auto r = integrate_to_infinity([](double t) { return t > 0.0 ? ig_density(t, 2.0, 0.5) : 0.0; }, 0.0);
  EXPECT_NEAR(r.value, 1.0, 1e-8);
  EXPECT_NEAR(tanh_sinh_half_line([](double t) { return t > 0.0 ? ig_density(t, 2.0, 0.5) : 0.0; }), 1.0, 1e-8);
}

TEST(IgDensity, MomentsMatchMeanShapeForm) {
  // IG(theta/eta, theta^2) with theta = 2, eta = 1: mean 2, variance mu^3/lambda = 2.
  const double m1 = tanh_sinh_half_line([](double t) { return t > 0.0 ? t * ig_density(t, 2.0, 1.0) : 0.0; });
  const double m2 = tanh_sinh_half_line([](double t) { return t > 0.0 ? t * t * ig_density(t, 2.0, 1.0) : 0.0; });
  EXPECT_NEAR(m1, 2.0, 1e-8);
  EXPECT_NEAR(m2 - m1 * m1, 2.0, 1e-7);
}

TEST(IgCdf, DerivativeIsDensity) {
  for (double eta : {0.0, 0.5, 1.0, 3.0}) {
    for (double t : {0.05, 0.3, 1.0, 4.0}) {
      const double h = 1e-6 * t;
      const double d = (ig_cdf(t + h, 1.3, eta) - ig_cdf(t - h, 1.3, eta)) / (2.0 * h);
      const double dens = ig_density(t, 1.3, eta);
      EXPECT_NEAR(d, dens, 1e-6 * dens + 1e-8) << eta << " " << t;
    }
  }
}

TEST(IgCdf, LargeDriftDoesNotOverflow) {
  const double c = ig_cdf(1.0, 30.0, 30.0);
  EXPECT_TRUE(std::isfinite(c));
  EXPECT_NEAR(c, 0.5, 0.05);
}

// ---------------------------------------------------------------- IG sampler

TEST(SampleIg, Moments) {
  RngStream rng(101, 0);
  const auto x = draw(100000, [&] { return sample_ig(2.0, 4.0, rng); });
  const MeanSe m = mean_se(x);
  EXPECT_LT(std::abs(m.mean - 2.0), 4.0 * m.se);
  // Var of the sample variance: mu_4 - sigma^4 with mu_4 = 15 mu^7/lambda^3 + 3 sigma^4.
  const double sigma2 = 2.0;
  const double mu4 = 15.0 * std::pow(2.0, 7) / 64.0 + 3.0 * sigma2 * sigma2;
  const double se_var = std::sqrt((mu4 - sigma2 * sigma2) / 100000.0);
  EXPECT_LT(std::abs(sample_variance(x) - sigma2), 5.0 * se_var);
}

TEST(SampleIg, Concentrated) {
  RngStream rng(102, 0);
  for (int k = 0; k < 10000; ++k) {
    const double x = sample_ig(1.0, 1e6, rng);
    ASSERT_GT(x, 0.99);
    ASSERT_LT(x, 1.01);
  }
}

TEST(SampleIg, Reproducible) {
  RngStream a(103, 4);
  RngStream b(103, 4);
  for (int k = 0; k < 100; ++k) ASSERT_EQ(sample_ig(1.5, 2.0, a), sample_ig(1.5, 2.0, b));
}

TEST(SampleIg, KsAgainstFirstPassageLaw) {
  RngStream rng(104, 0);
  const auto x = draw(100000, [&] { return sample_ig(1.0, 1.0, rng); });
  EXPECT_GT(ks_one_sample(x, [](double t) { return ig_cdf(t, 1.0, 1.0); }).p_value, 0.01);
}

// ---------------------------------------------------------------- Gamma

TEST(SampleGamma, ReciprocalMatchesZeroDriftFirstPassage) {
  RngStream rng(201, 0);
  const auto x = draw(100000, [&] { return 1.0 / (2.0 * sample_gamma(0.5, 1.0, rng)); });
  const KsResult r = ks_one_sample(x, [](double t) { return ig_cdf(t, 1.0, 0.0); });
  EXPECT_LT(r.statistic, 1.63 / std::sqrt(100000.0));
}

TEST(SampleGamma, HalfShapeMean) {
  RngStream rng(202, 0);
  const auto x = draw(100000, [&] { return sample_gamma(0.5, 1.0, rng); });
  const MeanSe m = mean_se(x);
  EXPECT_LT(std::abs(m.mean - 0.5), 4.0 * m.se);
}

TEST(SampleGamma, ExponentialTail) {
  RngStream rng(203, 0);
  const int n = 100000;
  int above = 0;
  for (int k = 0; k < n; ++k) above += sample_gamma(1.0, 2.0, rng) > 1.0;
  const double p = std::exp(-2.0);
  EXPECT_NEAR(static_cast<double>(above) / n, p, 3.0 * std::sqrt(p * (1 - p) / n));
}

TEST(SampleGamma, KsForSeveralShapes) {
  RngStream rng(204, 0);
  for (double shape : {0.3, 0.5, 1.0, 2.5, 7.0}) {
    const auto x = draw(50000, [&] { return sample_gamma(shape, 1.7, rng); });
    EXPECT_GT(ks_one_sample(x, [&](double t) { return gamma_cdf(t, shape, 1.7); }).p_value, 0.01) << shape;
  }
}

TEST(GammaDensity, IntegratesToOne) {
  EXPECT_NEAR(integrate_to_infinity([](double t) { return gamma_density(t, 2.5, 1.5); }, 0.0).value, 1.0, 1e-8);
  EXPECT_NEAR(integrate([](double s) { return 2.0 * s * gamma_density(s * s, 0.5, 1.0); }, 0.0, 10.0).value, 1.0,
              1e-8);
}

// ---------------------------------------------------------------- GIG

TEST(GigParams, Admissibility) {
  EXPECT_NO_THROW(GigParams(0.3, 1.0, 2.0));
  EXPECT_NO_THROW(GigParams(-0.5, 0.0, 1.0));
  EXPECT_NO_THROW(GigParams(0.5, 1.0, 0.0));
  EXPECT_THROW(GigParams(0.5, 0.0, 1.0), InvalidArgument);
  EXPECT_THROW(GigParams(-0.5, 1.0, 0.0), InvalidArgument);
  EXPECT_THROW(GigParams(0.5, -1.0, 1.0), InvalidArgument);
  EXPECT_THROW(GigParams(0.5, 0.0, 0.0), InvalidArgument);
}

TEST(GigDensity, AnchoredToFirstPassageDensity) {
  // GIG(-1/2, eta^2, theta^2) = first-passage law with (theta, eta).
  for (double t : {0.5, 1.0, 2.0}) EXPECT_NEAR(gig_density(t, {-0.5, 1.0, 1.0}) / ig_density(t, 1.0, 1.0), 1.0, 1e-10);
  for (double t : {0.2, 1.7}) EXPECT_NEAR(gig_density(t, {-0.5, 4.0, 0.25}) / ig_density(t, 0.5, 2.0), 1.0, 1e-10);
}

TEST(GigDensity, PrintedScalingDoesNotMatchFirstPassageDensity) {
  // The halved parameters (eta^2/2, theta^2/2) give a different law.
  EXPECT_GT(std::abs(gig_density(1.0, {-0.5, 0.5, 0.5}) / ig_density(1.0, 1.0, 1.0) - 1.0), 0.1);
}

TEST(GigDensity, ZeroDriftLimitIsReciprocalGamma) {
  for (double t : {0.3, 1.0, 5.0}) EXPECT_NEAR(gig_density(t, {-0.5, 0.0, 1.0}) / ig_density(t, 1.0, 0.0), 1.0, 1e-12);
}

TEST(GigDensity, HalfIndexGammaLimitMatchesGamma) {
  for (double t : {0.3, 1.0, 5.0}) EXPECT_NEAR(gig_density(t, {0.5, 2.0, 0.0}) / gamma_density(t, 0.5, 1.0), 1.0, 1e-12);
}

TEST(GigDensity, Normalization) {
  const GigParams p(1.0, 2.0, 3.0);
  EXPECT_NEAR(integrate_to_infinity([&](double t) { return t > 0.0 ? gig_density(t, p) : 0.0; }, 0.0).value, 1.0,
              1e-8);
  for (const GigParams& q : {GigParams(-2.3, 0.7, 1.9), GigParams(4.2, 0.1, 5.0), GigParams(0.5, 3.0, 0.0),
                             GigParams(-1.5, 0.0, 2.0)}) {
    const double mass = tanh_sinh_half_line([&](double t) { return t > 0.0 ? gig_density(t, q) : 0.0; });
    EXPECT_NEAR(mass, 1.0, 1e-6) << q.q << " " << q.a << " " << q.b;
  }
}

TEST(GigDensity, ReciprocalSymmetry) {
  for (const GigParams& p : {GigParams(0.7, 1.3, 2.1), GigParams(-1.2, 0.4, 3.0), GigParams(2.0, 5.0, 0.1)}) {
    for (double t : {0.1, 0.8, 2.5}) {
      const double lhs = gig_density(t, p);
      const double rhs = gig_density(1.0 / t, {-p.q, p.b, p.a}) / (t * t);
      EXPECT_NEAR(lhs / rhs, 1.0, 1e-12);
    }
  }
}

TEST(GigCdf, ClosedFormsAgreeWithQuadrature) {
  for (const GigParams& p : {GigParams(0.5, 1.5, 0.7), GigParams(-0.5, 0.3, 2.0)}) {
    for (double x : {0.2, 1.0, 3.0}) {
      const double q = integrate([&](double t) { return t > 0.0 ? gig_density(t, p) : 0.0; }, 0.0, x, 1e-14, 1e-12).value;
      EXPECT_NEAR(gig_cdf(x, p), q, 1e-9);
    }
  }
}

TEST(SampleGig, HalfIndexMatchesIgSamples) {
  RngStream a(301, 0);
  RngStream b(301, 1);
  const double theta = 1.3;
  const double eta = 0.8;
  const GigParams p(-0.5, eta * eta, theta * theta);
  const auto g = draw(100000, [&] { return sample_gig(p, a); });
  const auto ig = draw(100000, [&] { return sample_ig(theta / eta, theta * theta, b); });
  EXPECT_GT(ks_two_sample(g, ig).p_value, 0.01);
}

TEST(SampleGig, ReciprocalIdentity) {
  RngStream a(302, 0);
  RngStream b(302, 1);
  const GigParams p(0.5, 2.0, 0.6);
  auto x = draw(100000, [&] { return 1.0 / sample_gig(p, a); });
  const auto y = draw(100000, [&] { return sample_gig({-0.5, 0.6, 2.0}, b); });
  EXPECT_GT(ks_two_sample(x, y).p_value, 0.01);
}

TEST(SampleGig, Reproducible) {
  RngStream a(303, 2);
  RngStream b(303, 2);
  for (int k = 0; k < 100; ++k) ASSERT_EQ(sample_gig({0.3, 0.02, 0.5}, a), sample_gig({0.3, 0.02, 0.5}, b));
}

// Every branch of the sampler (mode-shifted ratio of uniforms, plain ratio of
// uniforms, small-omega piecewise hat) plus both boundary cases.
class SampleGigKs : public ::testing::TestWithParam<std::tuple<double, double, double>> {};

TEST_P(SampleGigKs, MatchesCdf) {
  const auto [q, a, b] = GetParam();
  const GigParams p(q, a, b);
  RngStream rng(304, static_cast<std::uint64_t>(std::abs(q) * 1000 + a * 100 + b * 10));
  const auto x = draw(40000, [&] { return sample_gig(p, rng); });
  EXPECT_GT(ks_one_sample(x, [&](double t) { return gig_cdf(t, p); }).p_value, 0.01);
}

INSTANTIATE_TEST_SUITE_P(Branches, SampleGigKs,
                         ::testing::Values(std::make_tuple(3.0, 1.0, 1.0),      // shifted, lambda > 2
                                           std::make_tuple(0.7, 4.0, 4.0),      // shifted, omega > 3
                                           std::make_tuple(1.5, 1.0, 1.0),      // no shift
                                           std::make_tuple(0.5, 0.3, 2.0),      // no shift, half index
                                           std::make_tuple(-0.8, 1.2, 0.5),     // negative index
                                           std::make_tuple(0.3, 0.1, 0.1),      // small omega, lambda > 0
                                           std::make_tuple(0.0, 0.05, 0.2),     // small omega, lambda = 0
                                           std::make_tuple(-0.2, 0.01, 1.0),    // small omega, negative
                                           std::make_tuple(0.5, 2.0, 0.0),      // Gamma boundary
                                           std::make_tuple(-0.5, 0.0, 2.0)));   // inverse-Gamma boundary

// ---------------------------------------------------------------- Bessel bridge

TEST(BesselBridge, Endpoints) {
  RngStream rng(401, 0);
  std::vector<double> grid{0.0, 0.1, 0.5, 0.9, 1.3};
  const auto x = sample_bessel3_bridge(2.0, 1.3, grid, rng);
  EXPECT_EQ(x.front(), 2.0);
  EXPECT_EQ(x.back(), 0.0);
  EXPECT_THROW(sample_bessel3_bridge(2.0, 1.3, {0.1, 1.3}, rng), InvalidArgument);
  EXPECT_THROW(sample_bessel3_bridge(2.0, 1.3, {0.0, 0.5, 0.4, 1.3}, rng), InvalidArgument);
}

TEST(BesselBridge, SecondMomentAtMidpoint) {
  RngStream rng(402, 0);
  std::vector<double> sq(100000);
  for (auto& v : sq) {
    const auto x = sample_bessel3_bridge(1.0, 1.0, {0.0, 0.5, 1.0}, rng);
    v = x[1] * x[1];
  }
  const MeanSe m = mean_se(sq);
  EXPECT_LT(std::abs(m.mean - 1.0), 4.0 * m.se);
}

TEST(BesselBridge, InteriorStrictlyPositive) {
  RngStream rng(403, 0);
  std::vector<double> grid(1001);
  for (std::size_t k = 0; k < grid.size(); ++k) grid[k] = 0.7 * static_cast<double>(k) / 1000.0;
  grid.back() = 0.7;
  std::size_t count = 0;
  for (int path = 0; path < 1000; ++path) {
    const auto x = sample_bessel3_bridge(0.5, 0.7, grid, rng);
    for (std::size_t k = 1; k + 1 < x.size(); ++k) {
      ASSERT_GT(x[k], 0.0);
      ++count;
    }
  }
  EXPECT_GE(count, 999000u);
}

TEST(BesselBridge, MarginalCdfPit) {
  RngStream rng(404, 0);
  const double t0 = 1.7;
  std::vector<double> u(50000);
  for (auto& v : u) {
    const auto x = sample_bessel3_bridge(1.2, t0, {0.0, 0.2, 0.6, t0}, rng);
    v = bessel3_bridge_marginal_cdf(x[2], 1.2, t0, 0.6);
  }
  EXPECT_GT(ks_one_sample(u, [](double v) { return std::clamp(v, 0.0, 1.0); }).p_value, 0.01);
}

TEST(BesselBridge, MarginalCdfDerivativeMatchesNormIntegral) {
  // Density of |N(m e1, s^2 I3)| at r: (r / (m s sqrt(2 pi))) (e^{-(r-m)^2/2s^2} - e^{-(r+m)^2/2s^2}).
  const double theta = 1.5;
  const double t0 = 2.0;
  const double t = 0.7;
  const double m = (1.0 - t / t0) * theta;
  const double s = std::sqrt(t * (t0 - t) / t0);
  for (double r : {0.3, 1.0, 2.2}) {
    const double dens = r / (m * s * std::sqrt(2.0 * std::numbers::pi)) *
                        (std::exp(-(r - m) * (r - m) / (2 * s * s)) - std::exp(-(r + m) * (r + m) / (2 * s * s)));
    const double h = 1e-6;
    const double d = (bessel3_bridge_marginal_cdf(r + h, theta, t0, t) - bessel3_bridge_marginal_cdf(r - h, theta, t0, t)) /
                     (2 * h);
    EXPECT_NEAR(d, dens, 1e-7);
  }
}

TEST(BesselBridge, RescaledBesselProcessRepresentation) {
  // X(t) = (T0 - t) Y(t / (T0 (T0 - t))), Y a BES(3) from 1/T0 ... started at theta / T0.
  RngStream a(405, 0);
  RngStream b(405, 1);
  const double theta = 1.0;
  const double t0 = 2.0;
  const double t = 0.3 * t0;
  std::vector<double> bridge(100000);
  std::vector<double> rescaled(100000);
  for (auto& v : bridge) v = sample_bessel3_bridge(theta, t0, {0.0, t, t0}, a)[1];
  for (auto& v : rescaled) v = (t0 - t) * sample_bessel3_process(theta / t0, t / (t0 * (t0 - t)), b);
  EXPECT_GT(ks_two_sample(bridge, rescaled).p_value, 0.01);
}

TEST(BesselBridge, TimeToGoAgreesWithForwardSampler) {
  RngStream a(406, 0);
  RngStream b(406, 1);
  const double t0 = 1.5;
  std::vector<double> fwd(50000);
  std::vector<double> back(50000);
  for (auto& v : fwd) v = sample_bessel3_bridge(1.0, t0, {0.0, 1.2, t0}, a)[1];
  for (auto& v : back) v = sample_bessel3_bridge_time_to_go(1.0, t0, {0.3, t0}, b)[0];
  EXPECT_GT(ks_two_sample(fwd, back).p_value, 0.01);
}
