#pragma once

// Graph and matrix machinery: conductance matrices, H_beta = 2 beta - W,
// K_t = Id - t W, positivity certificates and the matrix identities used when
// the interacting system is restarted at a (multi-)stopping time.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "ibridges/error.hpp"

namespace ibridges {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Relative pivot threshold below which a symmetric factorization is treated
/// as singular.
inline constexpr double kPivotTolerance = 1e-12;

namespace detail {

inline double max_abs_diagonal(const Matrix& m) {
  double scale = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) scale = std::max(scale, std::abs(m(i, i)));
  return scale;
}

inline bool is_symmetric(const Matrix& m, double rel_tol = 1e-12) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > rel_tol * scale) return false;
  return true;
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }
  std::size_t find(std::size_t i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }
  void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace detail

/// Symmetric nonnegative conductance matrix of a connected graph.  Diagonal
/// entries (self-loops) may be positive.
class ConductanceMatrix {
 public:
  explicit ConductanceMatrix(Matrix w) : w_(std::move(w)) {
    detail::require(w_.rows() > 0 && w_.rows() == w_.cols(), "W must be a nonempty square matrix");
    detail::require(detail::is_symmetric(w_), "W must be symmetric");
    for (Eigen::Index i = 0; i < w_.rows(); ++i)
      for (Eigen::Index j = 0; j < w_.cols(); ++j)
        detail::require(std::isfinite(w_(i, j)) && w_(i, j) >= 0.0, "W entries must be finite and nonnegative");
    w_ = 0.5 * (w_ + w_.transpose()).eval();
    detail::require(connected(), "graph induced by positive off-diagonal conductances must be connected");
  }

  /// Builds W from an edge list; self-loops are given as (i, i, w).
  static ConductanceMatrix from_edges(std::size_t n, const std::vector<std::tuple<std::size_t, std::size_t, double>>& edges) {
    detail::require(n > 0, "graph must have at least one vertex");
    Matrix w = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (const auto& [i, j, weight] : edges) {
      detail::require(i < n && j < n, "edge endpoint out of range");
      detail::require(w(i, j) == 0.0, "duplicate edge (" + std::to_string(i) + ", " + std::to_string(j) + ")");
      w(i, j) = weight;
      w(j, i) = weight;
    }
    return ConductanceMatrix(std::move(w));
  }

  std::size_t size() const { return static_cast<std::size_t>(w_.rows()); }
  const Matrix& matrix() const { return w_; }
  double operator()(std::size_t i, std::size_t j) const { return w_(i, j); }
  bool is_zero() const { return (w_.array() == 0.0).all(); }

 private:
  bool connected() const {
    const std::size_t n = size();
    detail::UnionFind uf(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (w_(i, j) > 0.0) uf.unite(i, j);
    for (std::size_t i = 1; i < n; ++i)
      if (uf.find(i) != uf.find(0)) return false;
    return true;
  }

  Matrix w_;
};

/// The parameter triple (W, theta, eta) of the interacting SDE and of the
/// beta-potential density.
struct ModelParams {
  ModelParams(ConductanceMatrix w, Vector theta_, Vector eta_) : W(std::move(w)), theta(std::move(theta_)), eta(std::move(eta_)) {
    detail::require(static_cast<std::size_t>(theta.size()) == W.size(), "theta has wrong dimension");
    detail::require(static_cast<std::size_t>(eta.size()) == W.size(), "eta has wrong dimension");
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      detail::require(std::isfinite(theta[i]) && theta[i] > 0.0, "theta entries must be > 0");
      detail::require(std::isfinite(eta[i]) && eta[i] >= 0.0, "eta entries must be >= 0");
    }
  }

  std::size_t size() const { return W.size(); }

  ConductanceMatrix W;
  Vector theta;
  Vector eta;
};

/// Per-coordinate times; entries are >= 0 or +infinity.
struct TimeVector {
  static constexpr double infinity = std::numeric_limits<double>::infinity();

  TimeVector() = default;
  explicit TimeVector(Vector t_) : t(std::move(t_)) {
    for (Eigen::Index i = 0; i < t.size(); ++i)
      detail::require(t[i] >= 0.0 && !std::isnan(t[i]), "time entries must be >= 0 or +infinity");
  }
  static TimeVector zeros(std::size_t n) { return TimeVector(Vector::Zero(static_cast<Eigen::Index>(n))); }
  static TimeVector constant(std::size_t n, double value) {
    return TimeVector(Vector::Constant(static_cast<Eigen::Index>(n), value));
  }

  std::size_t size() const { return static_cast<std::size_t>(t.size()); }
  double operator[](std::size_t i) const { return t[static_cast<Eigen::Index>(i)]; }
  bool all_finite() const { return t.allFinite(); }

  Vector t;
};

/// Entrywise minimum t ∧ T.
inline TimeVector min(const TimeVector& a, const TimeVector& b) {
  detail::require(a.size() == b.size(), "time vectors differ in dimension");
  return TimeVector(a.t.cwiseMin(b.t));
}

/// Cholesky factor of a symmetric matrix whose pivots all exceed
/// kPivotTolerance times the largest diagonal magnitude.
class SpdFactor {
 public:
  static std::optional<SpdFactor> factor(const Matrix& m) {
    SpdFactor f;
    if (!f.compute(m)) return std::nullopt;
    return f;
  }

  /// Refactors in place; returns false when m is not positive definite.
  bool compute(const Matrix& m) {
    llt_.compute(m);
    if (llt_.info() != Eigen::Success) return false;
    const double threshold = kPivotTolerance * detail::max_abs_diagonal(m);
    const auto& l = llt_.matrixLLT();
    for (Eigen::Index i = 0; i < l.rows(); ++i)
      if (!(l(i, i) * l(i, i) > threshold)) return false;
    return true;
  }

  Vector solve(const Vector& b) const { return llt_.solve(b); }
  Matrix solve(const Matrix& b) const { return llt_.solve(b); }

  double log_det() const {
    const auto& l = llt_.matrixLLT();
    double s = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
    return 2.0 * s;
  }

  /// Product of the pivots (squared diagonal of the Cholesky factor).
  double pivot_product() const {
    const auto& l = llt_.matrixLLT();
    double p = 1.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) p *= l(i, i) * l(i, i);
    return p;
  }

 private:
  Eigen::LLT<Matrix> llt_;
};

/// True iff the symmetric matrix m is positive definite under the pivot rule.
/// Uses an unpivoted LDL^T so each pivot is a ratio of leading minors.
inline bool is_positive_definite(const Matrix& m) {
  detail::require(detail::is_symmetric(m), "is_positive_definite requires a symmetric matrix");
  const Eigen::Index n = m.rows();
  const double threshold = kPivotTolerance * detail::max_abs_diagonal(m);
  Matrix a = m;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double pivot = a(k, k);
    if (!(pivot > threshold)) return false;
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const double factor = a(i, k) / pivot;
      for (Eigen::Index j = k + 1; j <= i; ++j) a(i, j) -= factor * a(j, k);
    }
  }
  return true;
}

/// H_beta = 2 diag(beta) - W.
inline Matrix h_beta(const ConductanceMatrix& w, const Vector& beta) {
  detail::require(static_cast<std::size_t>(beta.size()) == w.size(), "beta has wrong dimension");
  Matrix h = -w.matrix();
  h.diagonal() += 2.0 * beta;
  return h;
}
inline Matrix h_beta(const ModelParams& params, const Vector& beta) { return h_beta(params.W, beta); }

/// K_t = Id - diag(t) W.  Not symmetric for non-constant t.
inline Matrix k_t(const ConductanceMatrix& w, const TimeVector& t) {
  detail::require(t.size() == w.size(), "time vector has wrong dimension");
  detail::require(t.all_finite(), "K_t is undefined for infinite times; clamp with t ∧ T0 first");
  Matrix k = -(t.t.asDiagonal() * w.matrix());
  k.diagonal().array() += 1.0;
  return k;
}
inline Matrix k_t(const ModelParams& params, const TimeVector& t) { return k_t(params.W, t); }

/// A point beta with H_beta positive definite, together with its factor.
class BetaPoint {
 public:
  BetaPoint(const ConductanceMatrix& w, Vector beta) : beta_(std::move(beta)), h_(h_beta(w, beta_)) {
    auto f = SpdFactor::factor(h_);
    detail::require(f.has_value(), "H_beta is not positive definite");
    factor_ = std::move(*f);
  }

  const Vector& beta() const { return beta_; }
  const Matrix& h() const { return h_; }
  const SpdFactor& factor() const { return factor_; }

 private:
  Vector beta_;
  Matrix h_;
  SpdFactor factor_;
};

/// Solver for K_t psi = r through the symmetric matrix
///   S_t = Id - diag(sqrt t) W diag(sqrt t),
/// which is similar to K_t and positive definite exactly when K_t lies in the
/// admissible region.  psi = r + sqrt(t) ∘ S_t^{-1}(sqrt(t) ∘ W r).
/// The Cholesky factor of S_t is computed in place with plain loops (n is
/// small and this sits in the SDE inner loops), same pivot rule as SpdFactor.
class KtSolver {
 public:
  explicit KtSolver(const Matrix& w) : w_(w), n_(w.rows()), sqrt_t_(n_), l_(n_, n_), wr_(n_) {}

  /// Factors S_t; returns false when S_t is not positive definite.
  bool update(const Vector& t) {
    double max_diag = 0.0;
    for (Eigen::Index i = 0; i < n_; ++i) {
      sqrt_t_[i] = std::sqrt(t[i]);
      max_diag = std::max(max_diag, std::abs(1.0 - t[i] * w_(i, i)));
    }
    const double threshold = kPivotTolerance * max_diag;
    for (Eigen::Index j = 0; j < n_; ++j) {
      double d = 1.0 - sqrt_t_[j] * w_(j, j) * sqrt_t_[j];
      for (Eigen::Index k = 0; k < j; ++k) d -= l_(j, k) * l_(j, k);
      if (!(d > threshold)) {
        valid_ = false;
        return false;
      }
      const double ljj = std::sqrt(d);
      l_(j, j) = ljj;
      for (Eigen::Index i = j + 1; i < n_; ++i) {
        double v = -sqrt_t_[i] * w_(i, j) * sqrt_t_[j];
        for (Eigen::Index k = 0; k < j; ++k) v -= l_(i, k) * l_(j, k);
        l_(i, j) = v / ljj;
      }
    }
    valid_ = true;
    return true;
  }

  /// psi = K_t^{-1} r, using the last successful update.
  void solve(const Vector& r, Vector& psi) {
    wr_.noalias() = w_ * r;
    wr_.array() *= sqrt_t_.array();
    solve_in_place(wr_);
    psi = r;
    psi.array() += sqrt_t_.array() * wr_.array();
  }

  /// det K_t = det S_t.
  double log_det() const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n_; ++i) s += std::log(l_(i, i));
    return 2.0 * s;
  }

  /// W K_t^{-1} = W + W sqrt(t) S_t^{-1} sqrt(t) W, symmetric by construction.
  Matrix w_tilde() const {
    const Matrix sw = sqrt_t_.asDiagonal() * w_;
    Matrix z = sw;
    for (Eigen::Index c = 0; c < n_; ++c) {
      Vector col = z.col(c);
      solve_in_place(col);
      z.col(c) = col;
    }
    Matrix wt = w_ + sw.transpose() * z;
    return 0.5 * (wt + wt.transpose());
  }

 private:
  void solve_in_place(Vector& b) const {
    for (Eigen::Index i = 0; i < n_; ++i) {
      double v = b[i];
      for (Eigen::Index k = 0; k < i; ++k) v -= l_(i, k) * b[k];
      b[i] = v / l_(i, i);
    }
    for (Eigen::Index i = n_ - 1; i >= 0; --i) {
      double v = b[i];
      for (Eigen::Index k = i + 1; k < n_; ++k) v -= l_(k, i) * b[k];
      b[i] = v / l_(i, i);
    }
  }

  Matrix w_;
  Eigen::Index n_;
  Vector sqrt_t_;
  Matrix l_;
  Vector wr_;
  bool valid_ = false;
};

/// det K_t computed two ways: through the pivots of S_t and through an LU
/// factorization of K_t itself.
struct DeterminantPair {
  double from_pivots;
  double from_lu;
};

inline DeterminantPair det_k_t(const ConductanceMatrix& w, const TimeVector& t) {
  const Matrix k = k_t(w, t);
  Vector sqrt_t = t.t.cwiseSqrt();
  Matrix s = -(sqrt_t.asDiagonal() * w.matrix() * sqrt_t.asDiagonal());
  s.diagonal().array() += 1.0;
  auto f = SpdFactor::factor(s);
  if (!f) throw NumericalError("K_t is outside the positive region");
  return {f->pivot_product(), Eigen::PartialPivLU<Matrix>(k).determinant()};
}

/// Max-norm residuals of the three restart identities:
///   (i)   K_{1/(2 beta)} = K~ K,
///   (ii)  eta~ = T^{-1} (H^{(u)})^{-1} eta,
///   (iii) <eta~, H~^{-1} eta~> = <eta, H_beta^{-1} eta> - <eta, (H^{(u)})^{-1} eta>.
struct Lemma2Residuals {
  double k_product;
  double eta_tilde;
  double quadratic_form;
  double max() const { return std::max({k_product, eta_tilde, quadratic_form}); }
};

/// Evaluates each identity from the definitions of beta^{(u)}, H^{(u)},
/// K^{(u)}, W~, eta~, T~, beta~, H~ and K~ with explicit LU inverses, so
/// the two sides are computed along independent routes.
inline Lemma2Residuals check_lemma2_identities(const ModelParams& params, const BetaPoint& beta, const TimeVector& t_u) {
  const auto n = static_cast<Eigen::Index>(params.size());
  detail::require(beta.beta().size() == n && static_cast<Eigen::Index>(t_u.size()) == n, "dimension mismatch");
  const Vector& b = beta.beta();
  for (Eigen::Index i = 0; i < n; ++i)
    detail::require(t_u.t[i] > 0.0 && t_u.t[i] < 1.0 / (2.0 * b[i]), "T(u) must lie in (0, 1/(2 beta_i))");

  const Matrix& w = params.W.matrix();
  const Vector& eta = params.eta;
  const Matrix id = Matrix::Identity(n, n);
  const Vector t = t_u.t;

  const Vector beta_u = (2.0 * t.array()).inverse().matrix();
  Matrix h_u = -w;
  h_u.diagonal() += 2.0 * beta_u;
  const Matrix k_u = id - t.asDiagonal() * w;

  Eigen::FullPivLU<Matrix> k_u_lu(k_u);
  if (!k_u_lu.isInvertible()) throw NumericalError("K^{(u)} is singular");
  const Matrix w_tilde = w * k_u_lu.inverse();
  const Vector eta_tilde = w_tilde * t.asDiagonal() * eta + eta;

  const Vector t_tilde = (2.0 * b.array()).inverse().matrix() - t;
  const Vector beta_tilde = (2.0 * t_tilde.array()).inverse().matrix();
  Matrix h_tilde = -w_tilde;
  h_tilde.diagonal() += 2.0 * beta_tilde;
  const Matrix k_tilde = id - t_tilde.asDiagonal() * w_tilde;

  Eigen::FullPivLU<Matrix> h_tilde_lu(h_tilde);
  if (!h_tilde_lu.isInvertible()) throw NumericalError("H~^{(u)} is singular");
  Eigen::FullPivLU<Matrix> h_u_lu(h_u);
  Eigen::FullPivLU<Matrix> h_beta_lu(beta.h());

  const Matrix k_half_beta = id - (2.0 * b.array()).inverse().matrix().asDiagonal() * w;
  const double r1 = (k_half_beta - k_tilde * k_u).cwiseAbs().maxCoeff();

  const Vector rhs2 = t.array().inverse().matrix().asDiagonal() * h_u_lu.solve(eta);
  const double r2 = (eta_tilde - rhs2).cwiseAbs().maxCoeff();

  const double lhs3 = eta_tilde.dot(h_tilde_lu.solve(eta_tilde));
  const double rhs3 = eta.dot(h_beta_lu.solve(eta)) - eta.dot(h_u_lu.solve(eta));
  const double r3 = std::abs(lhs3 - rhs3);

  return {r1, r2, r3};
}

}  // namespace ibridges
