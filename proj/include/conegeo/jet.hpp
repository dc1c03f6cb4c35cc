#pragma once

// Truncated multivariate Taylor expansions ("jets") of total order 3.
//
// A Jet in d variables stores the Taylor coefficients c_m = (d^m f)/m! of a
// scalar at a base point for every multi-index m with |m| <= 3, in graded
// lexicographic order: the value, then the d gradient slots, then the
// d(d+1)/2 second-order slots (i <= j), then the third-order slots
// (i <= j <= k). Mixed partials are stored once.
//
// Each jet also carries the order up to which its coefficients are exact.
// Seeds start at order 3; differentiation lowers the order by one and every
// binary operation takes the minimum. Asking for a partial above that order
// raises CapabilityError.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <boost/container/small_vector.hpp>

#include "conegeo/errors.hpp"

namespace conegeo {

inline constexpr int kJetOrder = 3;
inline constexpr int kMaxJetDimension = 8;

/// Exponent vector of a monomial; entry i is the power of variable i.
using MultiIndex = std::vector<int>;

namespace detail {

struct JetLayout {
  struct Term {
    int a;
    int b;
    int out;
  };

  int dimension = 0;
  int size = 0;
  // Slots of degree d occupy [degree_offset[d], degree_offset[d + 1]).
  std::array<int, kJetOrder + 2> degree_offset{};
  std::vector<std::array<int, kJetOrder>> vars;  // sorted variable tuple, -1 padded
  std::vector<int> degree;
  std::vector<double> factorial;  // m! of the slot's multi-index
  std::vector<int> second;        // n*n  -> slot of e_i + e_j
  std::vector<int> third;         // n^3  -> slot of e_i + e_j + e_k
  std::vector<Term> products;     // sorted by degree of `out`
  std::array<int, kJetOrder + 1> products_upto{};
  std::vector<int> raise;  // [v * size + s] -> slot of s + e_v, or -1
  std::vector<double> raise_factor;

  int slot_of_vars(std::span<const int> sorted) const {
    switch (sorted.size()) {
      case 0:
        return 0;
      case 1:
        return 1 + sorted[0];
      case 2:
        return second[sorted[0] * dimension + sorted[1]];
      case 3:
        return third[(sorted[0] * dimension + sorted[1]) * dimension + sorted[2]];
      default:
        return -1;
    }
  }

  explicit JetLayout(int n) : dimension(n) {
    degree_offset[0] = 0;
    vars.push_back({-1, -1, -1});
    degree.push_back(0);
    degree_offset[1] = 1;
    for (int i = 0; i < n; ++i) {
      vars.push_back({i, -1, -1});
      degree.push_back(1);
    }
    degree_offset[2] = static_cast<int>(vars.size());
    second.assign(static_cast<std::size_t>(n * n), -1);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        const int s = static_cast<int>(vars.size());
        second[i * n + j] = s;
        second[j * n + i] = s;
        vars.push_back({i, j, -1});
        degree.push_back(2);
      }
    }
    degree_offset[3] = static_cast<int>(vars.size());
    third.assign(static_cast<std::size_t>(n * n * n), -1);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        for (int k = j; k < n; ++k) {
          const int s = static_cast<int>(vars.size());
          std::array<int, 3> p{i, j, k};
          do {
            third[(p[0] * n + p[1]) * n + p[2]] = s;
          } while (std::next_permutation(p.begin(), p.end()));
          vars.push_back({i, j, k});
          degree.push_back(3);
        }
      }
    }
    degree_offset[4] = static_cast<int>(vars.size());
    size = static_cast<int>(vars.size());

    factorial.resize(static_cast<std::size_t>(size));
    for (int s = 0; s < size; ++s) {
      std::vector<int> counts(static_cast<std::size_t>(n), 0);
      for (int v : vars[s]) {
        if (v >= 0) ++counts[static_cast<std::size_t>(v)];
      }
      double f = 1.0;
      for (int c : counts) {
        for (int t = 2; t <= c; ++t) f *= t;
      }
      factorial[s] = f;
    }

    for (int a = 0; a < size; ++a) {
      for (int b = 0; b < size; ++b) {
        if (degree[a] + degree[b] > kJetOrder) continue;
        std::vector<int> merged;
        for (int v : vars[a]) {
          if (v >= 0) merged.push_back(v);
        }
        for (int v : vars[b]) {
          if (v >= 0) merged.push_back(v);
        }
        std::sort(merged.begin(), merged.end());
        products.push_back({a, b, slot_of_vars(merged)});
      }
    }
    std::stable_sort(products.begin(), products.end(), [this](const Term& x, const Term& y) {
      return degree[x.out] < degree[y.out];
    });
    for (int d = 0; d <= kJetOrder; ++d) {
      products_upto[d] = static_cast<int>(std::count_if(
          products.begin(), products.end(), [&](const Term& t) { return degree[t.out] <= d; }));
    }

    raise.assign(static_cast<std::size_t>(n * size), -1);
    raise_factor.assign(static_cast<std::size_t>(n * size), 0.0);
    for (int v = 0; v < n; ++v) {
      for (int s = 0; s < size; ++s) {
        if (degree[s] >= kJetOrder) continue;
        std::vector<int> merged;
        int count = 0;
        for (int w : vars[s]) {
          if (w >= 0) merged.push_back(w);
          if (w == v) ++count;
        }
        merged.push_back(v);
        std::sort(merged.begin(), merged.end());
        raise[v * size + s] = slot_of_vars(merged);
        raise_factor[v * size + s] = static_cast<double>(count + 1);
      }
    }
  }
};

inline const JetLayout& jet_layout(int dimension) {
  static const auto layouts = [] {
    std::vector<std::unique_ptr<JetLayout>> all;
    for (int d = 0; d <= kMaxJetDimension; ++d) all.push_back(std::make_unique<JetLayout>(d));
    return all;
  }();
  if (dimension < 0 || dimension > kMaxJetDimension) {
    throw ArgumentError("jet dimension " + std::to_string(dimension) + " outside [0, " +
                        std::to_string(kMaxJetDimension) + "]");
  }
  return *layouts[static_cast<std::size_t>(dimension)];
}

}  // namespace detail

/// Number of Taylor coefficients of an order-3 jet in `dimension` variables,
/// C(dimension + 3, 3).
inline int jet_size(int dimension) { return detail::jet_layout(dimension).size; }

class Jet {
 public:
  using Storage = boost::container::small_vector<double, 35>;

  /// Dimension-0 zero; dimension-0 jets act as plain constants and broadcast
  /// against jets of any dimension.
  Jet() : Jet(0, 0.0) {}

  Jet(int dimension, double value, int order = kJetOrder)
      : dim_(dimension), order_(order), c_(static_cast<std::size_t>(jet_size(dimension)), 0.0) {
    c_[0] = value;
  }

  int dimension() const noexcept { return dim_; }
  /// Highest total degree whose coefficients are exact.
  int order() const noexcept { return order_; }
  std::size_t size() const noexcept { return c_.size(); }
  double value() const noexcept { return c_[0]; }

  std::span<const double> coefficients() const noexcept { return {c_.data(), c_.size()}; }
  std::span<double> coefficients() noexcept { return {c_.data(), c_.size()}; }

  /// Raw Taylor coefficient for a multi-index given as an exponent vector.
  double coefficient(std::span<const int> exponents) const { return c_[slot(exponents)]; }

  /// Partial derivative d^m f; the coefficient times m!.
  double partial(std::span<const int> exponents) const {
    const int s = slot(exponents);
    const auto& L = detail::jet_layout(dim_);
    if (L.degree[s] > order_) {
      throw CapabilityError("partial of degree " + std::to_string(L.degree[s]) +
                            " requested from a jet exact to order " + std::to_string(order_));
    }
    return c_[s] * L.factorial[s];
  }

  /// Partial derivative with respect to the listed variables, e.g. {0, 0, 1}
  /// is d^3 f / dx0^2 dx1. At most three variables.
  double derivative(std::initializer_list<int> variables) const {
    MultiIndex m(static_cast<std::size_t>(dim_), 0);
    for (int v : variables) {
      if (v < 0 || v >= dim_) throw ArgumentError("derivative variable out of range");
      ++m[static_cast<std::size_t>(v)];
    }
    return partial(m);
  }

  /// First partial d f / dx_v.
  double d(int v) const { return derivative({v}); }

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(const Jet& o);
  Jet& operator/=(const Jet& o);
  Jet& operator+=(double s) {
    c_[0] += s;
    return *this;
  }
  Jet& operator-=(double s) {
    c_[0] -= s;
    return *this;
  }
  Jet& operator*=(double s) {
    for (double& x : c_) x *= s;
    return *this;
  }
  Jet& operator/=(double s) {
    for (double& x : c_) x /= s;
    return *this;
  }

  /// Lowers the exactness order; used by derivative operators.
  void set_order(int order) noexcept { order_ = std::min(order_, order); }

 private:
  int slot(std::span<const int> exponents) const {
    if (static_cast<int>(exponents.size()) != dim_) {
      throw ArgumentError("multi-index length " + std::to_string(exponents.size()) +
                          " does not match jet dimension " + std::to_string(dim_));
    }
    std::vector<int> vars;
    for (int i = 0; i < dim_; ++i) {
      if (exponents[static_cast<std::size_t>(i)] < 0) throw ArgumentError("negative exponent");
      for (int t = 0; t < exponents[static_cast<std::size_t>(i)]; ++t) vars.push_back(i);
    }
    if (vars.size() > static_cast<std::size_t>(kJetOrder)) {
      throw ArgumentError("multi-index of total degree " + std::to_string(vars.size()) +
                          " exceeds jet order " + std::to_string(kJetOrder));
    }
    return detail::jet_layout(dim_).slot_of_vars(vars);
  }

  int dim_;
  int order_;
  Storage c_;
};

namespace detail {

inline int common_dimension(const Jet& a, const Jet& b) {
  if (a.dimension() == b.dimension()) return a.dimension();
  if (a.dimension() == 0) return b.dimension();
  if (b.dimension() == 0) return a.dimension();
  throw ArgumentError("jet dimension mismatch: " + std::to_string(a.dimension()) + " vs " +
                      std::to_string(b.dimension()));
}

// Dimension-0 jets are constants; lift one to `dim` variables.
inline Jet broadcast(const Jet& a, int dim) {
  if (a.dimension() == dim) return a;
  Jet out(dim, a.value(), a.order());
  return out;
}

}  // namespace detail

/// Jet of the coordinate function x_index at x_index = value.
inline Jet seed_variable(int index, double value, int dimension, int order = kJetOrder) {
  if (dimension <= 0) throw ArgumentError("seed_variable: dimension must be positive");
  if (index < 0 || index >= dimension) {
    throw ArgumentError("seed_variable: index " + std::to_string(index) + " outside [0, " +
                        std::to_string(dimension) + ")");
  }
  Jet j(dimension, value, order);
  if (order >= 1) j.coefficients()[static_cast<std::size_t>(1 + index)] = 1.0;
  return j;
}

/// Seeds every coordinate of a point: the identity jets at `point`.
inline std::vector<Jet> seed_point(std::span<const double> point, int order = kJetOrder) {
  const int n = static_cast<int>(point.size());
  std::vector<Jet> out;
  out.reserve(point.size());
  for (int i = 0; i < n; ++i) out.push_back(seed_variable(i, point[static_cast<std::size_t>(i)], n, order));
  return out;
}

inline Jet& Jet::operator+=(const Jet& o) {
  const int d = detail::common_dimension(*this, o);
  if (dim_ != d) *this = detail::broadcast(*this, d);
  if (o.dim_ == 0 && d != 0) {
    c_[0] += o.c_[0];
  } else {
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  }
  order_ = std::min(order_, o.order_);
  return *this;
}

inline Jet& Jet::operator-=(const Jet& o) {
  const int d = detail::common_dimension(*this, o);
  if (dim_ != d) *this = detail::broadcast(*this, d);
  if (o.dim_ == 0 && d != 0) {
    c_[0] -= o.c_[0];
  } else {
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  }
  order_ = std::min(order_, o.order_);
  return *this;
}

inline Jet operator*(const Jet& a, const Jet& b) {
  const int d = detail::common_dimension(a, b);
  if (a.dimension() != d || b.dimension() != d) {
    // One side is a constant.
    const Jet& full = a.dimension() == d ? a : b;
    const Jet& scalar = a.dimension() == d ? b : a;
    Jet out = full;
    out *= scalar.value();
    out.set_order(scalar.order());
    return out;
  }
  const int order = std::min(a.order(), b.order());
  Jet out(d, 0.0, order);
  const auto& L = detail::jet_layout(d);
  const auto ca = a.coefficients();
  const auto cb = b.coefficients();
  auto co = out.coefficients();
  const int terms = L.products_upto[static_cast<std::size_t>(std::max(order, 0))];
  for (int t = 0; t < terms; ++t) {
    const auto& term = L.products[static_cast<std::size_t>(t)];
    co[static_cast<std::size_t>(term.out)] +=
        ca[static_cast<std::size_t>(term.a)] * cb[static_cast<std::size_t>(term.b)];
  }
  return out;
}

inline Jet& Jet::operator*=(const Jet& o) {
  *this = *this * o;
  return *this;
}

inline Jet operator+(Jet a, const Jet& b) { return a += b; }
inline Jet operator-(Jet a, const Jet& b) { return a -= b; }
inline Jet operator+(Jet a, double s) { return a += s; }
inline Jet operator+(double s, Jet a) { return a += s; }
inline Jet operator-(Jet a, double s) { return a -= s; }
inline Jet operator-(double s, Jet a) {
  a *= -1.0;
  return a += s;
}
inline Jet operator*(Jet a, double s) { return a *= s; }
inline Jet operator*(double s, Jet a) { return a *= s; }
inline Jet operator/(Jet a, double s) { return a /= s; }
inline Jet operator-(Jet a) { return a *= -1.0; }

/// Applies a scalar function given its value and first three derivatives at
/// a.value(): f(a0 + h) = sum_k f^(k)(a0) h^k / k!, with h nilpotent of
/// order 4 in the truncated algebra.
inline Jet apply_univariate(const Jet& a, const std::array<double, 4>& derivs) {
  Jet h = a;
  h.coefficients()[0] = 0.0;
  Jet out(a.dimension(), derivs[0], a.order());
  if (a.order() >= 1) {
    out += derivs[1] * h;
    if (a.order() >= 2) {
      Jet h2 = h * h;
      out += (derivs[2] / 2.0) * h2;
      if (a.order() >= 3) out += (derivs[3] / 6.0) * (h2 * h);
    }
  }
  out.set_order(a.order());
  return out;
}

inline Jet reciprocal(const Jet& a) {
  const double x = a.value();
  if (x == 0.0) throw DomainError("division by a jet whose value is zero");
  const double r = 1.0 / x;
  return apply_univariate(a, {r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r});
}

inline Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
inline Jet operator/(double s, const Jet& b) { return s * reciprocal(b); }
inline Jet& Jet::operator/=(const Jet& o) {
  *this = *this / o;
  return *this;
}

inline Jet exp(const Jet& a) {
  const double e = std::exp(a.value());
  return apply_univariate(a, {e, e, e, e});
}

inline Jet log(const Jet& a) {
  const double x = a.value();
  if (!(x > 0.0)) throw DomainError("log of a jet with nonpositive value");
  const double r = 1.0 / x;
  return apply_univariate(a, {std::log(x), r, -r * r, 2.0 * r * r * r});
}

inline Jet sin(const Jet& a) {
  const double s = std::sin(a.value());
  const double c = std::cos(a.value());
  return apply_univariate(a, {s, c, -s, -c});
}

inline Jet cos(const Jet& a) {
  const double s = std::sin(a.value());
  const double c = std::cos(a.value());
  return apply_univariate(a, {c, -s, -c, s});
}

inline Jet sqrt(const Jet& a) {
  const double x = a.value();
  if (!(x > 0.0)) throw DomainError("sqrt of a jet with nonpositive value");
  const double s = std::sqrt(x);
  return apply_univariate(a, {s, 0.5 / s, -0.25 / (s * x), 0.375 / (s * x * x)});
}

/// Integer power by repeated squaring; exact for any value.
inline Jet pow(const Jet& a, int q) {
  if (q < 0) return reciprocal(pow(a, -q));
  Jet result(a.dimension(), 1.0, a.order());
  Jet base = a;
  while (q > 0) {
    if (q & 1) result *= base;
    q >>= 1;
    if (q > 0) base *= base;
  }
  return result;
}

/// Real power. Integral exponents work for any base; otherwise the base must
/// be positive.
inline Jet pow(const Jet& a, double q) {
  if (q == std::floor(q) && std::abs(q) <= 64.0) return pow(a, static_cast<int>(q));
  const double x = a.value();
  if (!(x > 0.0)) throw DomainError("non-integral power of a jet with nonpositive value");
  const double p0 = std::pow(x, q);
  return apply_univariate(a, {p0, q * p0 / x, q * (q - 1.0) * p0 / (x * x),
                              q * (q - 1.0) * (q - 2.0) * p0 / (x * x * x)});
}

/// d a / d x_v. The result is exact to one order less than `a`.
inline Jet differentiate(const Jet& a, int v) {
  if (v < 0 || v >= a.dimension()) throw ArgumentError("differentiate: variable out of range");
  if (a.order() < 1) throw CapabilityError("differentiate: jet has no exact first derivatives");
  const auto& L = detail::jet_layout(a.dimension());
  Jet out(a.dimension(), 0.0, a.order() - 1);
  const auto ca = a.coefficients();
  auto co = out.coefficients();
  for (int s = 0; s < L.degree_offset[kJetOrder]; ++s) {
    const std::size_t k = static_cast<std::size_t>(v * L.size + s);
    co[static_cast<std::size_t>(s)] = ca[static_cast<std::size_t>(L.raise[k])] * L.raise_factor[k];
  }
  return out;
}

/// Partial derivative d^m a (coefficient times multi-index factorial).
inline double extract_partial(const Jet& a, std::span<const int> multi_index) {
  return a.partial(multi_index);
}

inline bool is_identity_seed(std::span<const Jet> inner) {
  const int n = static_cast<int>(inner.size());
  for (int i = 0; i < n; ++i) {
    const Jet& y = inner[static_cast<std::size_t>(i)];
    if (y.dimension() != n || y.order() < kJetOrder) return false;
    const auto c = y.coefficients();
    for (int s = 1; s < static_cast<int>(c.size()); ++s) {
      const double expect = (s == 1 + i) ? 1.0 : 0.0;
      if (c[static_cast<std::size_t>(s)] != expect) return false;
    }
  }
  return true;
}

/// Chain rule: `outer` is a jet in n variables expanded at the values of
/// `inner` (n jets in a common set of d variables); returns outer(inner) as a
/// jet in those d variables.
inline Jet compose(const Jet& outer, std::span<const Jet> inner) {
  const int n = outer.dimension();
  if (static_cast<int>(inner.size()) != n) throw ArgumentError("compose: arity mismatch");
  if (n == 0) return outer;
  if (is_identity_seed(inner)) return outer;
  int d = 0;
  int order = outer.order();
  for (const Jet& y : inner) {
    d = std::max(d, y.dimension());
    order = std::min(order, y.order());
  }
  std::vector<Jet> h;
  h.reserve(inner.size());
  for (const Jet& y : inner) {
    Jet t = detail::broadcast(y, d);
    t.coefficients()[0] = 0.0;
    h.push_back(std::move(t));
  }
  const auto& L = detail::jet_layout(n);
  const auto c = outer.coefficients();
  Jet out(d, c[0], order);
  if (order >= 1) {
    for (int i = 0; i < n; ++i) out += c[static_cast<std::size_t>(1 + i)] * h[static_cast<std::size_t>(i)];
  }
  if (order >= 2) {
    for (int s = L.degree_offset[2]; s < L.degree_offset[3]; ++s) {
      const double cs = c[static_cast<std::size_t>(s)];
      if (cs == 0.0) continue;
      const auto& v = L.vars[static_cast<std::size_t>(s)];
      out += cs * (h[static_cast<std::size_t>(v[0])] * h[static_cast<std::size_t>(v[1])]);
    }
  }
  if (order >= 3) {
    for (int s = L.degree_offset[3]; s < L.degree_offset[4]; ++s) {
      const double cs = c[static_cast<std::size_t>(s)];
      if (cs == 0.0) continue;
      const auto& v = L.vars[static_cast<std::size_t>(s)];
      out += cs * (h[static_cast<std::size_t>(v[0])] * h[static_cast<std::size_t>(v[1])] *
                   h[static_cast<std::size_t>(v[2])]);
    }
  }
  out.set_order(order);
  return out;
}

/// Values of a list of jets.
inline std::vector<double> values_of(std::span<const Jet> jets) {
  std::vector<double> out;
  out.reserve(jets.size());
  for (const Jet& j : jets) out.push_back(j.value());
  return out;
}

}  // namespace conegeo
