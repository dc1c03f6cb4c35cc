#pragma once

// Dense component arrays over a single index range [0, dim) and the small
// amount of jet-valued matrix algebra the geometry needs.

#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "conegeo/errors.hpp"
#include "conegeo/jet.hpp"

namespace conegeo {

/// Condition numbers above this make a metric matrix count as degenerate.
inline constexpr double kDegenerateCondition = 1e12;

template <class T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(int dim, int rank, const T& fill = T{})
      : dim_(dim), rank_(rank), data_(flat_size(dim, rank), fill) {}

  int dim() const noexcept { return dim_; }
  int rank() const noexcept { return rank_; }
  std::size_t size() const noexcept { return data_.size(); }

  template <class... I>
  T& operator()(I... idx) {
    return data_[index(idx...)];
  }
  template <class... I>
  const T& operator()(I... idx) const {
    return data_[index(idx...)];
  }

  T& flat(std::size_t i) { return data_[i]; }
  const T& flat(std::size_t i) const { return data_[i]; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  /// Multi-index of a flat position, most significant index first.
  std::vector<int> unflatten(std::size_t pos) const {
    std::vector<int> idx(static_cast<std::size_t>(rank_), 0);
    for (int r = rank_ - 1; r >= 0; --r) {
      idx[static_cast<std::size_t>(r)] = static_cast<int>(pos % static_cast<std::size_t>(dim_));
      pos /= static_cast<std::size_t>(dim_);
    }
    return idx;
  }

 private:
  static std::size_t flat_size(int dim, int rank) {
    std::size_t s = 1;
    for (int r = 0; r < rank; ++r) s *= static_cast<std::size_t>(dim);
    return s;
  }

  template <class... I>
  std::size_t index(I... idx) const {
    std::size_t pos = 0;
    ((pos = pos * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(idx)), ...);
    return pos;
  }

  int dim_ = 0;
  int rank_ = 0;
  std::vector<T> data_;
};

using JetTensor = Tensor<Jet>;
using RealTensor = Tensor<double>;

inline RealTensor values_of(const JetTensor& t) {
  RealTensor out(t.dim(), t.rank(), 0.0);
  for (std::size_t i = 0; i < t.size(); ++i) out.flat(i) = t.flat(i).value();
  return out;
}

inline int min_order(const JetTensor& t) {
  int o = kJetOrder;
  for (const Jet& j : t.data()) o = std::min(o, j.order());
  return o;
}

inline double max_abs(const RealTensor& t) {
  double m = 0.0;
  for (double x : t.data()) m = std::max(m, std::abs(x));
  return m;
}

inline Eigen::MatrixXd to_matrix(const RealTensor& t) {
  if (t.rank() != 2) throw ArgumentError("to_matrix expects a rank-2 tensor");
  Eigen::MatrixXd m(t.dim(), t.dim());
  for (int i = 0; i < t.dim(); ++i) {
    for (int j = 0; j < t.dim(); ++j) m(i, j) = t(i, j);
  }
  return m;
}

inline RealTensor from_matrix(const Eigen::MatrixXd& m) {
  RealTensor t(static_cast<int>(m.rows()), 2, 0.0);
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) t(i, j) = m(i, j);
  }
  return t;
}

inline double condition_number(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 1.0;
  const double smin = s(s.size() - 1);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

/// Counts of positive and negative eigenvalues of a symmetric matrix.
inline std::pair<int, int> signature_of(const Eigen::MatrixXd& sym, double rel_tol = 1e-12) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (sym + sym.transpose()),
                                                    Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  int p = 0;
  int q = 0;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev(i) > rel_tol * scale) ++p;
    if (ev(i) < -rel_tol * scale) ++q;
  }
  return {p, q};
}

/// Matrix product of square rank-2 jet tensors.
inline JetTensor matmul(const JetTensor& a, const JetTensor& b) {
  const int n = a.dim();
  JetTensor out(n, 2);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Jet s = a(i, 0) * b(0, j);
      for (int k = 1; k < n; ++k) s += a(i, k) * b(k, j);
      out(i, j) = std::move(s);
    }
  }
  return out;
}

inline JetTensor transpose(const JetTensor& a) {
  JetTensor out(a.dim(), 2);
  for (int i = 0; i < a.dim(); ++i) {
    for (int j = 0; j < a.dim(); ++j) out(i, j) = a(j, i);
  }
  return out;
}

/// Inverse of a jet matrix by the terminating Neumann series
/// (A0 + H)^-1 = (I - M + M^2 - M^3) A0^-1 with M = A0^-1 H.
/// Throws DegeneracyError when cond(A0) exceeds kDegenerateCondition.
inline JetTensor inverse(const JetTensor& a, double* condition = nullptr) {
  const int n = a.dim();
  const Eigen::MatrixXd a0 = to_matrix(values_of(a));
  const double cond = condition_number(a0);
  if (condition != nullptr) *condition = cond;
  if (!(cond <= kDegenerateCondition)) {
    throw DegeneracyError("matrix is degenerate (condition number " + std::to_string(cond) + ")", cond);
  }
  const Eigen::MatrixXd inv0 = a0.inverse();
  const int dim = a.flat(0).dimension();
  const int order = min_order(a);
  JetTensor h = a;
  for (std::size_t i = 0; i < h.size(); ++i) h.flat(i).coefficients()[0] = 0.0;
  // M = A0^-1 H
  JetTensor m(n, 2, Jet(dim, 0.0, order));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Jet s(dim, 0.0, order);
      for (int k = 0; k < n; ++k) s += inv0(i, k) * h(k, j);
      m(i, j) = std::move(s);
    }
  }
  JetTensor series(n, 2, Jet(dim, 0.0, order));
  for (int i = 0; i < n; ++i) series(i, i) = Jet(dim, 1.0, order);
  JetTensor power = m;
  double sign = -1.0;
  for (int t = 1; t <= std::max(order, 0); ++t) {
    for (std::size_t i = 0; i < series.size(); ++i) series.flat(i) += sign * power.flat(i);
    if (t < order) power = matmul(power, m);
    sign = -sign;
  }
  JetTensor out(n, 2, Jet(dim, 0.0, order));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Jet s(dim, 0.0, order);
      for (int k = 0; k < n; ++k) s += inv0(k, j) * series(i, k);
      out(i, j) = std::move(s);
    }
  }
  return out;
}

/// log|det A| as a jet, via log det(I + M) = tr(M - M^2/2 + M^3/3).
inline Jet log_abs_det(const JetTensor& a) {
  const int n = a.dim();
  const Eigen::MatrixXd a0 = to_matrix(values_of(a));
  const double det0 = a0.determinant();
  if (det0 == 0.0) throw DegeneracyError("log_abs_det of a singular matrix", std::numeric_limits<double>::infinity());
  const Eigen::MatrixXd inv0 = a0.inverse();
  const int dim = a.flat(0).dimension();
  const int order = min_order(a);
  JetTensor m(n, 2, Jet(dim, 0.0, order));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Jet s(dim, 0.0, order);
      for (int k = 0; k < n; ++k) {
        Jet hk = a(k, j);
        hk.coefficients()[0] = 0.0;
        s += inv0(i, k) * hk;
      }
      m(i, j) = std::move(s);
    }
  }
  Jet out(dim, std::log(std::abs(det0)), order);
  JetTensor power = m;
  for (int t = 1; t <= order; ++t) {
    Jet tr(dim, 0.0, order);
    for (int i = 0; i < n; ++i) tr += power(i, i);
    out += ((t % 2 == 1) ? 1.0 : -1.0) / t * tr;
    if (t < order) power = matmul(power, m);
  }
  return out;
}

}  // namespace conegeo
