#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ibridges/linalg.hpp"
#include "ibridges/rng.hpp"

using namespace ibridges;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

ConductanceMatrix edge2() { return ConductanceMatrix(mat2(0, 1, 1, 0)); }

}  // namespace

TEST(ConductanceMatrix, RejectsAsymmetric) {
  try {
    ConductanceMatrix w(mat2(0, 1, 2, 0));
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_STREQ(e.what(), "W must be symmetric");
  }
}

TEST(ConductanceMatrix, RejectsNegativeAndDisconnected) {
  EXPECT_THROW(ConductanceMatrix(mat2(0, -1, -1, 0)), InvalidArgument);
  EXPECT_THROW(ConductanceMatrix(mat2(1, 0, 0, 1)), InvalidArgument);
  EXPECT_NO_THROW(ConductanceMatrix(Matrix::Zero(1, 1)));
}

TEST(ConductanceMatrix, FromEdgesWithSelfLoop) {
  const auto w = ConductanceMatrix::from_edges(3, {{0, 1, 1.0}, {1, 2, 0.5}, {2, 2, 0.25}});
  EXPECT_EQ(w(1, 0), 1.0);
  EXPECT_EQ(w(2, 1), 0.5);
  EXPECT_EQ(w(2, 2), 0.25);
  EXPECT_EQ(w(0, 2), 0.0);
}

TEST(ModelParams, Validation) {
  EXPECT_THROW(ModelParams(edge2(), vec({1, 0}), vec({0, 0})), InvalidArgument);
  EXPECT_THROW(ModelParams(edge2(), vec({1, 1}), vec({0, -1})), InvalidArgument);
  EXPECT_THROW(ModelParams(edge2(), vec({1}), vec({0, 0})), InvalidArgument);
}

TEST(HBeta, Examples) {
  EXPECT_EQ(h_beta(ConductanceMatrix(Matrix::Zero(1, 1)), vec({1})), Matrix::Constant(1, 1, 2.0));
  const auto w0 = ConductanceMatrix::from_edges(2, {{0, 1, 1.0}});
  EXPECT_EQ(h_beta(w0, vec({1, 1})), mat2(2, -1, -1, 2));
  EXPECT_EQ(h_beta(ConductanceMatrix(mat2(0.5, 1, 1, 0)), vec({2, 3})), mat2(3.5, -1, -1, 6));
  EXPECT_THROW(h_beta(w0, vec({1, 2, 3})), InvalidArgument);
}

TEST(HBeta, ZeroGraphIsDiagonal) {
  // W = 0 on two vertices is not connected, so check the arithmetic directly.
  Matrix w = Matrix::Zero(2, 2);
  Matrix h = -w;
  h.diagonal() += 2.0 * vec({1, 2});
  EXPECT_EQ(h, mat2(2, 0, 0, 4));
}

TEST(Kt, Examples) {
  const auto w = edge2();
  EXPECT_EQ(k_t(w, TimeVector::zeros(2)), Matrix::Identity(2, 2));
  EXPECT_EQ(k_t(w, TimeVector(vec({1, 2}))), mat2(1, -1, -2, 1));
  const Matrix k = k_t(w, TimeVector(vec({0.25, 0.25})));
  EXPECT_EQ(k, mat2(1, -0.25, -0.25, 1));
  // K_t = t H_{1/(2t)}
  EXPECT_EQ(k, 0.25 * h_beta(w, vec({2, 2})));
  EXPECT_THROW(k_t(w, TimeVector(vec({1, TimeVector::infinity}))), InvalidArgument);
}

TEST(Kt, EqualsDiagTTimesHOfReciprocal) {
  RngStream rng(17, 0);
  const auto w = ConductanceMatrix::from_edges(3, {{0, 1, 0.7}, {1, 2, 1.3}, {0, 0, 0.4}});
  for (int trial = 0; trial < 200; ++trial) {
    Vector t(3);
    for (int i = 0; i < 3; ++i) t[i] = 0.01 + 3.0 * rng.uniform();
    const Matrix lhs = k_t(w, TimeVector(t));
    const Matrix rhs = t.asDiagonal() * h_beta(w, (2.0 * t.array()).inverse().matrix());
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(PositiveDefinite, Examples) {
  EXPECT_TRUE(is_positive_definite(mat2(2, 0, 0, 4)));
  EXPECT_TRUE(is_positive_definite(mat2(2, -1, -1, 2)));
  EXPECT_FALSE(is_positive_definite(mat2(1, -2, -2, 1)));
  EXPECT_THROW(is_positive_definite(mat2(1, 2, 0, 1)), InvalidArgument);
}

TEST(PositiveDefinite, SingularBoundary) {
  // H_beta with beta = (1/2, 1/2) on the edge graph has eigenvector (1, 1)
  // with eigenvalue 0.
  const auto w = edge2();
  EXPECT_FALSE(is_positive_definite(h_beta(w, vec({0.5, 0.5}))));
  EXPECT_TRUE(is_positive_definite(h_beta(w, vec({0.5 + 1e-6, 0.5 + 1e-6}))));
  // Triangle with unit weights: beta_i = 1 gives H = 2I - W, eigenvalue 0 at (1,1,1).
  const auto tri = ConductanceMatrix::from_edges(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}});
  EXPECT_FALSE(is_positive_definite(h_beta(tri, vec({1, 1, 1}))));
}

TEST(PositiveDefinite, MonotoneInBeta) {
  RngStream rng(23, 0);
  const auto w = ConductanceMatrix::from_edges(3, {{0, 1, 1.0}, {1, 2, 0.5}, {2, 2, 0.8}});
  int positives = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    Vector beta(3);
    for (int i = 0; i < 3; ++i) beta[i] = 1.2 * rng.uniform();
    if (!is_positive_definite(h_beta(w, beta))) continue;
    ++positives;
    Vector bigger = beta;
    for (int i = 0; i < 3; ++i) bigger[i] += rng.uniform();
    EXPECT_TRUE(is_positive_definite(h_beta(w, bigger)));
  }
  EXPECT_GT(positives, 50);
}

TEST(BetaPoint, RequiresPositivity) {
  EXPECT_THROW(BetaPoint(edge2(), vec({0.5, 0.5})), InvalidArgument);
  const BetaPoint b(edge2(), vec({2, 3}));
  EXPECT_EQ(b.h(), mat2(4, -1, -1, 6));
}

TEST(KtSolver, PsiExample) {
  KtSolver s(edge2().matrix());
  ASSERT_TRUE(s.update(vec({0.1, 0.2})));
  Vector psi(2);
  s.solve(vec({1, 2}), psi);
  const Vector ref = mat2(1, -0.1, -0.2, 1).partialPivLu().solve(vec({1, 2}));
  EXPECT_NEAR(psi[0], ref[0], 1e-14);
  EXPECT_NEAR(psi[1], ref[1], 1e-14);
  EXPECT_NEAR(psi[0], 1.2244897959183674, 1e-12);
  EXPECT_NEAR(psi[1], 2.2448979591836737, 1e-12);
}

TEST(KtSolver, WTildeMatchesDefinition) {
  RngStream rng(29, 0);
  const auto w = ConductanceMatrix::from_edges(3, {{0, 1, 0.7}, {1, 2, 1.3}, {2, 2, 0.4}});
  for (int trial = 0; trial < 100; ++trial) {
    Vector t(3);
    for (int i = 0; i < 3; ++i) t[i] = 0.3 * rng.uniform();
    KtSolver s(w.matrix());
    ASSERT_TRUE(s.update(t));
    const Matrix ref = w.matrix() * k_t(w, TimeVector(t)).inverse();
    EXPECT_LT((s.w_tilde() - ref).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Determinant, PivotsMatchLu) {
  RngStream rng(31, 0);
  const auto w = ConductanceMatrix::from_edges(3, {{0, 1, 1.0}, {1, 2, 0.6}, {0, 2, 0.2}, {1, 1, 0.3}});
  for (int trial = 0; trial < 500; ++trial) {
    Vector t(3);
    for (int i = 0; i < 3; ++i) t[i] = 0.5 * rng.uniform();
    const DeterminantPair d = det_k_t(w, TimeVector(t));
    EXPECT_NEAR(d.from_pivots / d.from_lu, 1.0, 1e-12);
  }
}

TEST(Lemma2, TwoVertexExample) {
  const ModelParams p(edge2(), vec({1, 1}), vec({1, 0}));
  const BetaPoint b(p.W, vec({2, 3}));
  const auto r = check_lemma2_identities(p, b, TimeVector(vec({0.1, 0.05})));
  EXPECT_LT(r.max(), 1e-10);
}

TEST(Lemma2, DecoupledDyadicIsExact) {
  const ModelParams p(ConductanceMatrix(Matrix::Zero(1, 1)), vec({1}), vec({1.5}));
  const BetaPoint b(p.W, vec({2}));
  const auto r = check_lemma2_identities(p, b, TimeVector(vec({0.125})));
  EXPECT_EQ(r.k_product, 0.0);
  EXPECT_EQ(r.eta_tilde, 0.0);
  EXPECT_EQ(r.quadratic_form, 0.0);
}

TEST(Lemma2, RejectsTimesOutsideRange) {
  const ModelParams p(edge2(), vec({1, 1}), vec({1, 0}));
  const BetaPoint b(p.W, vec({2, 3}));
  EXPECT_THROW(check_lemma2_identities(p, b, TimeVector(vec({0.3, 0.05}))), InvalidArgument);
  EXPECT_THROW(check_lemma2_identities(p, b, TimeVector(vec({0.0, 0.05}))), InvalidArgument);
}
