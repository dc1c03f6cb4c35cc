#pragma once

// Built-in model geometries. Every metric and field is a closed-form
// expression in the chart coordinates, so all of them carry exact jets to
// order 3 and compose with arbitrary coordinate jets.
//
// Spheres use stereographic coordinates from the south pole:
//   sigma(x) = (2x, 1 - |x|^2) / (1 + |x|^2),   g = 4 / (1 + |x|^2)^2 delta,
// so x = 0 is the north pole (0, .., 0, 1) and the missing point is the
// south pole. Samplers draw uniformly on the sphere and keep |x| < 10.

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "conegeo/chart.hpp"
#include "conegeo/cone.hpp"
#include "conegeo/errors.hpp"
#include "conegeo/jet.hpp"
#include "conegeo/tensor.hpp"

namespace conegeo {

using CaseParams = std::vector<double>;

/// Declared outcome of a named check on a case.
struct Expectation {
  std::string verdict;  // "pass", "fail" or "value"
  double value = 0.0;
};

struct CorpusCase {
  std::string id;
  ChartPtr chart;
  MetricField metric;
  std::map<std::string, ScalarField> scalars;
  std::map<std::string, VectorFieldOnChart> vectors;
  std::map<std::string, TensorField> tensors;
  std::map<std::string, MetricField> metrics;  // auxiliary metrics (e.g. projectively related ones)
  std::vector<Eigen::MatrixXd> matrices;        // finite matrix sets
  Eigen::MatrixXd form;                         // bilinear form the matrices act on
  std::map<std::string, Expectation> expected;
  std::string note;

  const ScalarField& scalar(const std::string& name) const {
    auto it = scalars.find(name);
    if (it == scalars.end()) throw ArgumentError("case '" + id + "' has no scalar field '" + name + "'");
    return it->second;
  }
  const VectorFieldOnChart& vector(const std::string& name) const {
    auto it = vectors.find(name);
    if (it == vectors.end()) throw ArgumentError("case '" + id + "' has no vector field '" + name + "'");
    return it->second;
  }
  const TensorField& tensor(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw ArgumentError("case '" + id + "' has no tensor field '" + name + "'");
    return it->second;
  }
  bool has_geometry() const { return static_cast<bool>(chart); }
};

// ---------------------------------------------------------------------------
// Sphere embedding
// ---------------------------------------------------------------------------

/// Unit-sphere point sigma(x) as n + 1 jets.
inline std::vector<Jet> sphere_embedding(JetSpan x) {
  const int n = static_cast<int>(x.size());
  Jet q = x[0] * x[0];
  for (int i = 1; i < n; ++i) q += x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
  const Jet inv = reciprocal(1.0 + q);
  std::vector<Jet> X;
  X.reserve(static_cast<std::size_t>(n + 1));
  for (int i = 0; i < n; ++i) X.push_back(2.0 * x[static_cast<std::size_t>(i)] * inv);
  X.push_back(2.0 * inv - 1.0);
  return X;
}

/// d_i sigma_a in closed form (s = 1 + |x|^2):
///   d_i (2 x_a / s) = 2 delta_ai / s - 4 x_a x_i / s^2,   d_i (2 / s - 1) = -4 x_i / s^2.
/// Returned as J(a, i) with a in [0, n], i in [0, n).
inline std::vector<std::vector<Jet>> sphere_embedding_jacobian(JetSpan x) {
  const int n = static_cast<int>(x.size());
  Jet q = x[0] * x[0];
  for (int i = 1; i < n; ++i) q += x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
  const Jet inv = reciprocal(1.0 + q);
  const Jet inv2 = inv * inv;
  std::vector<std::vector<Jet>> J(static_cast<std::size_t>(n + 1));
  for (int a = 0; a < n; ++a) {
    for (int i = 0; i < n; ++i) {
      Jet e = -4.0 * x[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(i)] * inv2;
      if (a == i) e += 2.0 * inv;
      J[static_cast<std::size_t>(a)].push_back(std::move(e));
    }
  }
  for (int i = 0; i < n; ++i) J[static_cast<std::size_t>(n)].push_back(-4.0 * x[static_cast<std::size_t>(i)] * inv2);
  return J;
}

/// Stereographic coordinates of a unit vector u (u_n != -1).
inline Point stereographic(std::span<const double> u) {
  const std::size_t n = u.size() - 1;
  Point x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = u[i] / (1.0 + u[n]);
  return x;
}

inline Point sphere_point(std::span<const double> x) { return values_of(sphere_embedding(seed_point(x, 0))); }

inline ChartPtr stereographic_chart(int n, double radius = 10.0) {
  if (n < 1) throw ArgumentError("sphere dimension must be positive");
  auto domain = [radius](const Point& p) {
    double q = 0.0;
    for (double v : p) q += v * v;
    return q < radius * radius;
  };
  auto proposal = [n](std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<double> u(static_cast<std::size_t>(n + 1));
    double norm = 0.0;
    for (double& v : u) {
      v = nd(rng);
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (double& v : u) v /= norm;
    if (u.back() <= -1.0 + 1e-12) return Point(static_cast<std::size_t>(n), 1e9);
    return stereographic(u);
  };
  return std::make_shared<const Chart>("stereographic S^" + std::to_string(n), n, std::move(domain), std::move(proposal));
}

inline MetricField round_sphere_metric(ChartPtr chart) {
  const int n = chart->dimension();
  return MetricField{chart,
                     [n](JetSpan x) {
                       Jet q = x[0] * x[0];
                       for (int i = 1; i < n; ++i) q += x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
                       const Jet s = 1.0 + q;
                       const Jet f = 4.0 * reciprocal(s * s);
                       JetTensor g(n, 2, Jet(x[0].dimension(), 0.0));
                       for (int i = 0; i < n; ++i) g(i, i) = f;
                       return g;
                     },
                     n, 0};
}

/// alpha = v . sigma(x) (degree-1 harmonic).
inline ScalarField ambient_linear(ChartPtr chart, std::vector<double> v, std::string name) {
  if (static_cast<int>(v.size()) != chart->dimension() + 1) throw ArgumentError("ambient vector has the wrong length");
  return ScalarField{chart, std::move(name), [v](JetSpan x) {
                       const auto X = sphere_embedding(x);
                       Jet s(x[0].dimension(), 0.0);
                       for (std::size_t a = 0; a < X.size(); ++a) s += v[a] * X[a];
                       return s;
                     }};
}

/// alpha = sigma^T Q sigma (degree-2 harmonic when Q is traceless).
inline ScalarField ambient_quadratic(ChartPtr chart, Eigen::MatrixXd Q, std::string name) {
  const int N = chart->dimension() + 1;
  if (Q.rows() != N || Q.cols() != N) throw ArgumentError("quadratic form has the wrong size");
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 0.0) throw ArgumentError("quadratic form must be symmetric");
  return ScalarField{chart, std::move(name), [Q, N](JetSpan x) {
                       const auto X = sphere_embedding(x);
                       Jet s(x[0].dimension(), 0.0);
                       for (int a = 0; a < N; ++a) {
                         for (int b = 0; b < N; ++b) {
                           if (Q(a, b) != 0.0) s += Q(a, b) * (X[static_cast<std::size_t>(a)] * X[static_cast<std::size_t>(b)]);
                         }
                       }
                       return s;
                     }};
}

/// Vector field on the sphere induced by the linear flow u' = B u:
///   V(u) = B u - (u^T B u) u, pushed forward to stereographic coordinates by
///   x^i = u_i / (1 + u_n):  X^i = (V_i (1 + u_n) - u_i V_n) / (1 + u_n)^2.
/// Killing for antisymmetric B; projective, non-affine for symmetric traceless B.
inline VectorFieldOnChart linear_flow_field(ChartPtr chart, Eigen::MatrixXd B, std::string name) {
  const int n = chart->dimension();
  const int N = n + 1;
  if (B.rows() != N || B.cols() != N) throw ArgumentError("flow generator has the wrong size");
  return VectorFieldOnChart{chart, std::move(name), [B, n, N](JetSpan x) {
                              const auto u = sphere_embedding(x);
                              const int d = x[0].dimension();
                              std::vector<Jet> Bu(static_cast<std::size_t>(N), Jet(d, 0.0));
                              for (int a = 0; a < N; ++a) {
                                for (int b = 0; b < N; ++b) {
                                  if (B(a, b) != 0.0) Bu[static_cast<std::size_t>(a)] += B(a, b) * u[static_cast<std::size_t>(b)];
                                }
                              }
                              Jet uBu(d, 0.0);
                              for (int a = 0; a < N; ++a) uBu += u[static_cast<std::size_t>(a)] * Bu[static_cast<std::size_t>(a)];
                              std::vector<Jet> V;
                              for (int a = 0; a < N; ++a) V.push_back(Bu[static_cast<std::size_t>(a)] - uBu * u[static_cast<std::size_t>(a)]);
                              const Jet w = 1.0 + u[static_cast<std::size_t>(n)];
                              const Jet iw2 = reciprocal(w * w);
                              std::vector<Jet> out;
                              for (int i = 0; i < n; ++i) {
                                out.push_back((V[static_cast<std::size_t>(i)] * w - u[static_cast<std::size_t>(i)] * V[static_cast<std::size_t>(n)]) * iw2);
                              }
                              return out;
                            }};
}

/// Pullback of the round metric by the projective map u -> A u / |A u|:
///   g_bar_ij = d_i Y . d_j Y,  Y = A sigma / |A sigma|,
///   d_i Y = A d_i sigma / |A sigma| - A sigma (A sigma . A d_i sigma) / |A sigma|^3.
inline MetricField projective_pullback_metric(ChartPtr chart, Eigen::MatrixXd A) {
  const int n = chart->dimension();
  const int N = n + 1;
  if (A.rows() != N || A.cols() != N) throw ArgumentError("projective element has the wrong size");
  if (std::abs(A.determinant()) < 1e-12) throw ArgumentError("projective element must be invertible");
  return MetricField{chart,
                     [A, n, N](JetSpan x) {
                       const auto X = sphere_embedding(x);
                       const auto J = sphere_embedding_jacobian(x);
                       const int d = x[0].dimension();
                       auto apply = [&](auto&& col) {
                         std::vector<Jet> out(static_cast<std::size_t>(N), Jet(d, 0.0));
                         for (int a = 0; a < N; ++a) {
                           for (int b = 0; b < N; ++b) {
                             if (A(a, b) != 0.0) out[static_cast<std::size_t>(a)] += A(a, b) * col(b);
                           }
                         }
                         return out;
                       };
                       const auto AX = apply([&](int b) -> const Jet& { return X[static_cast<std::size_t>(b)]; });
                       Jet nn(d, 0.0);
                       for (const Jet& v : AX) nn += v * v;
                       const Jet inv = reciprocal(sqrt(nn));
                       const Jet inv3 = inv * inv * inv;
                       std::vector<std::vector<Jet>> dY;
                       for (int i = 0; i < n; ++i) {
                         const auto AdX = apply([&](int b) -> const Jet& {
                           return J[static_cast<std::size_t>(b)][static_cast<std::size_t>(i)];
                         });
                         Jet dot(d, 0.0);
                         for (int a = 0; a < N; ++a) dot += AX[static_cast<std::size_t>(a)] * AdX[static_cast<std::size_t>(a)];
                         std::vector<Jet> col;
                         for (int a = 0; a < N; ++a) {
                           col.push_back(AdX[static_cast<std::size_t>(a)] * inv - AX[static_cast<std::size_t>(a)] * dot * inv3);
                         }
                         dY.push_back(std::move(col));
                       }
                       JetTensor g(n, 2);
                       for (int i = 0; i < n; ++i) {
                         for (int j = i; j < n; ++j) {
                           Jet s(d, 0.0);
                           for (int a = 0; a < N; ++a) s += dY[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] * dY[static_cast<std::size_t>(j)][static_cast<std::size_t>(a)];
                           g(i, j) = s;
                           g(j, i) = std::move(s);
                         }
                       }
                       return g;
                     },
                     n, 0};
}

// ---------------------------------------------------------------------------
// The cone over the round sphere is R^{n+1} minus the origin: (r, x) -> r sigma(x).
// ---------------------------------------------------------------------------

/// Jacobian of (r, x) -> r sigma(x), as J(a, b) with b = 0 the r column.
inline JetTensor sphere_cone_jacobian(JetSpan y) {
  const int N = static_cast<int>(y.size());
  const int n = N - 1;
  const Jet& r = y[0];
  const auto x = y.subspan(1);
  const auto X = sphere_embedding(x);
  const auto J = sphere_embedding_jacobian(x);
  JetTensor out(N, 2);
  for (int a = 0; a < N; ++a) {
    out(a, 0) = X[static_cast<std::size_t>(a)];
    for (int i = 0; i < n; ++i) out(a, i + 1) = r * J[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)];
  }
  return out;
}

/// A constant ambient symmetric tensor A pulled back to cone coordinates:
/// J^T A J. Parallel for the flat cone metric.
inline TensorField sphere_cone_cartesian_tensor(const ConeChart& c, Eigen::MatrixXd A) {
  const int N = c.dimension();
  if (A.rows() != N || A.cols() != N) throw ArgumentError("ambient tensor has the wrong size");
  return TensorField{c.chart, 2, Symmetry::symmetric, [A, N](JetSpan y) {
                       const JetTensor J = sphere_cone_jacobian(y);
                       const int d = y[0].dimension();
                       JetTensor AJ(N, 2, Jet(d, 0.0));
                       for (int a = 0; a < N; ++a) {
                         for (int k = 0; k < N; ++k) {
                           for (int b = 0; b < N; ++b) {
                             if (A(a, b) != 0.0) AJ(a, k) += A(a, b) * J(b, k);
                           }
                         }
                       }
                       JetTensor t(N, 2);
                       for (int i = 0; i < N; ++i) {
                         for (int k = i; k < N; ++k) {
                           Jet s(d, 0.0);
                           for (int a = 0; a < N; ++a) s += J(a, i) * AJ(a, k);
                           t(i, k) = s;
                           t(k, i) = std::move(s);
                         }
                       }
                       return t;
                     }};
}

/// Projector onto the span of the given ambient axes, in cone coordinates:
/// P = J^-1 E J with J^-1 = g_hat^-1 J^T.
inline std::function<JetTensor(JetSpan)> sphere_cone_axis_projector(const ConeChart& c, std::vector<int> axes) {
  const int N = c.dimension();
  for (int a : axes) {
    if (a < 0 || a >= N) throw ArgumentError("ambient axis out of range");
  }
  return [gfn = c.metric.fn, axes, N](JetSpan y) {
    const JetTensor J = sphere_cone_jacobian(y);
    const JetTensor ginv = inverse(gfn(y));
    const int d = y[0].dimension();
    // M(c, b) = sum_{a in axes} J(a, c) J(a, b) = (J^T E J)(c, b)
    JetTensor M(N, 2, Jet(d, 0.0));
    for (int cc = 0; cc < N; ++cc) {
      for (int b = 0; b < N; ++b) {
        for (int a : axes) M(cc, b) += J(a, cc) * J(a, b);
      }
    }
    return matmul(ginv, M);
  };
}

// ---------------------------------------------------------------------------
// Other model geometries
// ---------------------------------------------------------------------------

/// Constant form eta = diag(+1 x p, -1 x q) on a box chart.
inline MetricField constant_metric(ChartPtr chart, Eigen::MatrixXd form, int p, int q) {
  const int n = chart->dimension();
  return MetricField{chart,
                     [form, n](JetSpan x) {
                       const int d = x[0].dimension();
                       JetTensor g(n, 2, Jet(d, 0.0));
                       for (int i = 0; i < n; ++i) {
                         for (int j = 0; j < n; ++j) g(i, j) = Jet(d, form(i, j));
                       }
                       return g;
                     },
                     p, q};
}

inline Eigen::MatrixXd eta_matrix(int p, int q) {
  Eigen::VectorXd d(p + q);
  for (int i = 0; i < p + q; ++i) d(i) = i < p ? 1.0 : -1.0;
  return d.asDiagonal();
}

/// Graph chart of S^{p,q} = {<x,x> = 1} in R^{p+1,q}: coordinates y in R^{p+q},
/// x0 = sqrt(1 - eta(y,y)),  g = eta + (eta y)(eta y)^T / x0^2.
inline MetricField pseudo_sphere_metric(ChartPtr chart, int p, int q) {
  const int n = p + q;
  return MetricField{chart,
                     [p, n](JetSpan y) {
                       const int d = y[0].dimension();
                       std::vector<Jet> ey;
                       Jet e(d, 0.0);
                       for (int i = 0; i < n; ++i) {
                         const Jet& yi = y[static_cast<std::size_t>(i)];
                         ey.push_back(i < p ? yi : -yi);
                         e += yi * ey.back();
                       }
                       const Jet inv_x02 = reciprocal(1.0 - e);
                       JetTensor g(n, 2);
                       for (int i = 0; i < n; ++i) {
                         for (int j = i; j < n; ++j) {
                           Jet s = ey[static_cast<std::size_t>(i)] * ey[static_cast<std::size_t>(j)] * inv_x02;
                           if (i == j) s += (i < p ? 1.0 : -1.0);
                           g(i, j) = s;
                           g(j, i) = std::move(s);
                         }
                       }
                       return g;
                     },
                     p, q};
}

/// Box chart for S^{p,q}; the half-width keeps 1 - eta(y,y) >= 1 - p h^2 and the
/// metric's condition number well below 1e6.
inline ChartPtr pseudo_sphere_chart(int p, int q) {
  const int n = p + q;
  const double h = p == 0 ? 0.8 : std::min(0.8, 0.9 / std::sqrt(static_cast<double>(p)));
  std::vector<std::pair<double, double>> box(static_cast<std::size_t>(n), {-h, h});
  return Chart::box("graph S^{" + std::to_string(p) + "," + std::to_string(q) + "}", std::move(box),
                    [p](const Point& y) {
                      double e = 0.0;
                      for (int i = 0; i < static_cast<int>(y.size()); ++i) e += (i < p ? 1.0 : -1.0) * y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
                      return 1.0 - e >= 0.15;
                    });
}

/// Conformally perturbed sphere: g = exp(2 eps sigma_0 sigma_1) g_round.
inline MetricField bumpy_sphere_metric(ChartPtr chart, double eps) {
  const int n = chart->dimension();
  const MetricField round = round_sphere_metric(chart);
  return MetricField{chart,
                     [rf = round.fn, eps, n](JetSpan x) {
                       const auto X = sphere_embedding(x);
                       const Jet w = exp(2.0 * eps * (X[0] * X[1]));
                       JetTensor g = rf(x);
                       for (int i = 0; i < n; ++i) g(i, i) *= w;
                       return g;
                     },
                     n, 0};
}

// ---------------------------------------------------------------------------
// Matrix groups
// ---------------------------------------------------------------------------

/// Polarized determinant on M(2,R) ~ R^4 with basis order (a, b, c, d) of [[a, b], [c, d]].
inline Eigen::Matrix4d m2r_determinant_form() {
  Eigen::Matrix4d f = Eigen::Matrix4d::Zero();
  f(0, 3) = f(3, 0) = 0.5;
  f(1, 2) = f(2, 1) = -0.5;
  return f;
}

/// Left multiplication M -> S M as a 4x4 matrix on (a, b, c, d).
inline Eigen::Matrix4d m2r_left_multiplication(const Eigen::Matrix2d& S) {
  Eigen::Matrix4d L = Eigen::Matrix4d::Zero();
  // (SM)_00 = s00 a + s01 c, (SM)_01 = s00 b + s01 d, (SM)_10 = s10 a + s11 c, (SM)_11 = s10 b + s11 d
  L(0, 0) = S(0, 0);
  L(0, 2) = S(0, 1);
  L(1, 1) = S(0, 0);
  L(1, 3) = S(0, 1);
  L(2, 0) = S(1, 0);
  L(2, 2) = S(1, 1);
  L(3, 1) = S(1, 0);
  L(3, 3) = S(1, 1);
  return L;
}

/// Basis (columns) of V_v = {M : M v = 0}.
inline Eigen::Matrix<double, 4, 2> m2r_kernel_space(const Eigen::Vector2d& v) {
  if (v.norm() == 0.0) throw ArgumentError("V_v needs a nonzero vector");
  Eigen::Matrix<double, 4, 2> B = Eigen::Matrix<double, 4, 2>::Zero();
  B(0, 0) = v(1);
  B(1, 0) = -v(0);
  B(2, 1) = v(1);
  B(3, 1) = -v(0);
  return B;
}

/// Third singular value of [V_v | L V_v] relative to the first: zero iff L
/// maps V_v into itself.
inline double m2r_kernel_invariance_defect(const Eigen::Matrix4d& L, const Eigen::Vector2d& v) {
  const Eigen::Matrix<double, 4, 2> B = m2r_kernel_space(v);
  Eigen::Matrix4d M;
  M << B, L * B;
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(M);
  const auto& s = svd.singularValues();
  return s(2) / s(0);
}

/// Random SL(2,R) element: product of a rotation, a positive diagonal and a shear.
inline Eigen::Matrix2d random_sl2(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> lg(-1.0, 1.0);
  const double t = ang(rng);
  Eigen::Matrix2d R;
  R << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  const double e = std::exp(lg(rng));
  Eigen::Matrix2d D;
  D << e, 0.0, 0.0, 1.0 / e;
  Eigen::Matrix2d U;
  U << 1.0, lg(rng), 0.0, 1.0;
  return R * D * U;
}

inline Eigen::Matrix2d rotation2(double t) {
  Eigen::Matrix2d R;
  R << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return R;
}

/// Left multiplication by the quaternion a + b i + c j + d k on R^4 = H.
inline Eigen::Matrix4d quaternion_left(double a, double b, double c, double d) {
  Eigen::Matrix4d L;
  L << a, -b, -c, -d,  //
      b, a, -d, c,     //
      c, d, a, -b,     //
      d, -c, b, a;
  return L;
}

/// Generators of the binary icosahedral group: (1 + i + j + k)/2 and
/// (phi + phi^-1 i + j)/2, acting on R^4 by left multiplication.
inline std::vector<Eigen::MatrixXd> binary_icosahedral_generators() {
  const double phi = std::numbers::phi;
  return {quaternion_left(0.5, 0.5, 0.5, 0.5), quaternion_left(0.5 * phi, 0.5 / phi, 0.5, 0.0)};
}

inline Eigen::MatrixXd block_rotation(double theta, double phi) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(4, 4);
  M.block<2, 2>(0, 0) = rotation2(theta);
  M.block<2, 2>(2, 2) = rotation2(phi);
  return M;
}

// ---------------------------------------------------------------------------
// Case construction
// ---------------------------------------------------------------------------

namespace detail {

inline double param(const CaseParams& p, std::size_t i, double fallback) { return i < p.size() ? p[i] : fallback; }

inline int int_param(const CaseParams& p, std::size_t i, int fallback) {
  const double v = param(p, i, fallback);
  if (v != std::floor(v)) throw ArgumentError("integer parameter expected, got " + std::to_string(v));
  return static_cast<int>(v);
}

inline Eigen::MatrixXd sphere_default_quadratic(int N) {
  Eigen::MatrixXd Q = -Eigen::MatrixXd::Identity(N, N) / static_cast<double>(N);
  Q(0, 0) += 1.0;
  return Q;
}

inline Eigen::MatrixXd unit_generator(int N, int a, int b, bool symmetric) {
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(N, N);
  B(a, b) = 1.0;
  B(b, a) = symmetric ? 1.0 : -1.0;
  return B;
}

inline void add_flat_fields(CorpusCase& c) {
  const ChartPtr ch = c.chart;
  const int n = ch->dimension();
  c.scalars.emplace("const", constant_scalar(ch, 0.7, "const"));
  c.scalars.emplace("x", coordinate_scalar(ch, 0, "x"));
  c.scalars.emplace("x2", ScalarField{ch, "x2", [](JetSpan x) { return x[0] * x[0]; }});
  c.scalars.emplace("affine", ScalarField{ch, "affine", [n](JetSpan x) {
                                            Jet s = 0.3 * x[0] + 0.25;
                                            if (n > 1) s += -0.7 * x[1];
                                            return s;
                                          }});
  c.vectors.emplace("dilation", VectorFieldOnChart{ch, "dilation", [](JetSpan x) { return std::vector<Jet>(x.begin(), x.end()); }});
  if (n >= 2) {
    // Infinitesimal rotation in the (0, 1) plane; Killing for the Euclidean metric.
    c.vectors.emplace("rotation", VectorFieldOnChart{ch, "rotation", [](JetSpan x) {
                                                       std::vector<Jet> v(x.begin(), x.end());
                                                       for (Jet& e : v) e *= 0.0;
                                                       v[0] = -x[1];
                                                       v[1] = x[0];
                                                       return v;
                                                     }});
  }
}

}  // namespace detail

inline CorpusCase round_sphere_case(int n) {
  if (n < 2 || n > 6) throw ArgumentError("round_sphere: n must lie in [2, 6]");
  const int N = n + 1;
  CorpusCase c;
  c.id = "round_sphere:" + std::to_string(n);
  c.chart = stereographic_chart(n);
  c.metric = round_sphere_metric(c.chart);
  std::vector<double> e1(static_cast<std::size_t>(N), 0.0);
  e1[0] = 1.0;
  std::vector<double> e2(static_cast<std::size_t>(N), 0.0);
  e2[1] = 1.0;
  c.scalars.emplace("harmonic_deg1", ambient_linear(c.chart, e1, "harmonic_deg1"));
  c.scalars.emplace("harmonic_deg1_b", ambient_linear(c.chart, e2, "harmonic_deg1_b"));
  c.scalars.emplace("harmonic_deg2", ambient_quadratic(c.chart, detail::sphere_default_quadratic(N), "harmonic_deg2"));
  Eigen::MatrixXd Qb = Eigen::MatrixXd::Zero(N, N);
  Qb(0, 1) = Qb(1, 0) = 1.0;
  c.scalars.emplace("harmonic_deg2_b", ambient_quadratic(c.chart, Qb, "harmonic_deg2_b"));
  Eigen::MatrixXd E11 = Eigen::MatrixXd::Zero(N, N);
  E11(0, 0) = 1.0;
  c.scalars.emplace("cartesian_square", ambient_quadratic(c.chart, E11, "cartesian_square"));
  c.scalars.emplace("const", constant_scalar(c.chart, 0.7, "const"));
  c.vectors.emplace("rotation", linear_flow_field(c.chart, detail::unit_generator(N, 0, 1, false), "rotation"));
  c.vectors.emplace("rotation_b", linear_flow_field(c.chart, detail::unit_generator(N, 1, 2, false), "rotation_b"));
  Eigen::MatrixXd Bs = Eigen::MatrixXd::Zero(N, N);
  Bs(0, 0) = 1.0;
  Bs(N - 1, N - 1) = -1.0;
  c.vectors.emplace("sl3", linear_flow_field(c.chart, Bs, "sl3"));
  c.vectors.emplace("sl3_b", linear_flow_field(c.chart, detail::unit_generator(N, 0, 1, true), "sl3_b"));
  Eigen::MatrixXd A1 = Eigen::MatrixXd::Identity(N, N);
  A1(0, 0) = 2.0;
  Eigen::MatrixXd A2 = Eigen::MatrixXd::Identity(N, N);
  A2(1, 1) = 3.0;
  c.metrics.emplace("beltrami", projective_pullback_metric(c.chart, A1));
  c.metrics.emplace("beltrami_b", projective_pullback_metric(c.chart, A2));
  c.expected["harmonic_deg1.laplacian"] = {"value", -static_cast<double>(n)};
  c.expected["harmonic_deg2.laplacian"] = {"value", -2.0 * (n + 1)};
  c.expected["harmonic_deg1.obata_residual"] = {"pass", 0.0};
  c.expected["harmonic_deg2.gt_residual"] = {"pass", 0.0};
  c.expected["harmonic_deg1.gt_residual"] = {"fail", 0.0};
  c.expected["harmonic_deg2.obata_residual"] = {"fail", 0.0};
  c.expected["cone_curvature_norm"] = {"value", 0.0};
  return c;
}

/// `make_case(id, params)`. Ids and positional parameters:
///   round_sphere n | harmonic_deg1 n | harmonic_deg2 n | pseudo_sphere p q |
///   flat p q | flat_torus_chart | bumpy_sphere eps [n] |
///   beltrami_pair [a0 a1 a2] (diagonal projective element) |
///   sl3_projective_field [b0 b1 b2] (diagonal traceless generator) |
///   m2r_determinant_space | finite_group kind (0 = O(2)xO(2) blocks,
///   1 = binary icosahedral).
inline CorpusCase make_case(const std::string& id, const CaseParams& params = {}) {
  using detail::int_param;
  using detail::param;
  if (id == "round_sphere") return round_sphere_case(int_param(params, 0, 2));
  if (id == "harmonic_deg1" || id == "harmonic_deg2") {
    CorpusCase c = round_sphere_case(int_param(params, 0, 2));
    c.id = id + ":" + std::to_string(c.chart->dimension());
    c.scalars.emplace("alpha", c.scalar(id));
    return c;
  }
  if (id == "pseudo_sphere") {
    const int p = int_param(params, 0, 1);
    const int q = int_param(params, 1, 1);
    if (p < 0 || q < 0 || p + q < 2 || p + q > 6) throw ArgumentError("pseudo_sphere: need p, q >= 0 and 2 <= p + q <= 6");
    CorpusCase c;
    c.id = "pseudo_sphere:" + std::to_string(p) + "," + std::to_string(q);
    c.chart = pseudo_sphere_chart(p, q);
    c.metric = pseudo_sphere_metric(c.chart, p, q);
    c.scalars.emplace("const", constant_scalar(c.chart, 0.7, "const"));
    c.expected["sectional_curvature"] = {"value", 1.0};
    c.expected["cone_curvature_norm"] = {"value", 0.0};
    return c;
  }
  if (id == "flat") {
    const int p = int_param(params, 0, 2);
    const int q = int_param(params, 1, 0);
    if (p < 0 || q < 0 || p + q < 1 || p + q > 6) throw ArgumentError("flat: need p, q >= 0 and 1 <= p + q <= 6");
    CorpusCase c;
    c.id = "flat:" + std::to_string(p) + "," + std::to_string(q);
    c.chart = Chart::box("flat R^{" + std::to_string(p) + "," + std::to_string(q) + "}",
                         std::vector<std::pair<double, double>>(static_cast<std::size_t>(p + q), {-2.0, 2.0}));
    c.metric = constant_metric(c.chart, eta_matrix(p, q), p, q);
    detail::add_flat_fields(c);
    c.expected["const.gt_residual"] = {"pass", 0.0};
    return c;
  }
  if (id == "flat_torus_chart") {
    CorpusCase c;
    c.id = "flat_torus_chart";
    c.chart = Chart::box("torus cover [0,1]^2", {{0.0, 1.0}, {0.0, 1.0}});
    c.metric = constant_metric(c.chart, Eigen::MatrixXd::Identity(2, 2), 2, 0);
    detail::add_flat_fields(c);
    c.scalars.emplace("sin2pix", ScalarField{c.chart, "sin2pix", [](JetSpan x) { return sin(2.0 * std::numbers::pi * x[0]); }});
    c.note = "covering chart of the unit torus; only periodic fields descend to the closed torus";
    c.expected["sin2pix.gt_residual_c0"] = {"fail", 1.0};
    c.expected["affine.gt_residual_c0"] = {"pass", 0.0};
    return c;
  }
  if (id == "bumpy_sphere") {
    const double eps = param(params, 0, 0.1);
    const int n = int_param(params, 1, 2);
    if (!(std::abs(eps) <= 0.5)) throw ArgumentError("bumpy_sphere: |eps| must be at most 0.5");
    if (n < 2 || n > 6) throw ArgumentError("bumpy_sphere: n must lie in [2, 6]");
    CorpusCase c;
    std::ostringstream os;
    os << "bumpy_sphere:" << eps;
    c.id = os.str();
    c.chart = stereographic_chart(n);
    c.metric = bumpy_sphere_metric(c.chart, eps);
    c.scalars.emplace("const", constant_scalar(c.chart, 0.7, "const"));
    c.scalars.emplace("harmonic_deg1", ambient_linear(c.chart, [&] {
                                                        std::vector<double> v(static_cast<std::size_t>(n + 1), 0.0);
                                                        v[0] = 1.0;
                                                        return v;
                                                      }(), "harmonic_deg1"));
    // Every surface metric is Einstein, so the perturbation only shows from n = 3 on.
    if (n >= 3) c.expected["einstein_residual"] = {"fail", 1e-3};
    return c;
  }
  if (id == "beltrami_pair") {
    CorpusCase c = round_sphere_case(2);
    c.id = "beltrami_pair";
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(3, 3);
    A(0, 0) = param(params, 0, 2.0);
    A(1, 1) = param(params, 1, 1.0);
    A(2, 2) = param(params, 2, 1.0);
    c.metrics.insert_or_assign("beltrami", projective_pullback_metric(c.chart, A));
    c.expected["beltrami.basic1_residual"] = {"pass", 0.0};
    return c;
  }
  if (id == "sl3_projective_field") {
    CorpusCase c = round_sphere_case(2);
    c.id = "sl3_projective_field";
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(3, 3);
    B(0, 0) = param(params, 0, 1.0);
    B(1, 1) = param(params, 1, 0.0);
    B(2, 2) = param(params, 2, -1.0);
    if (std::abs(B.trace()) > 1e-12) throw ArgumentError("sl3_projective_field: generator must be traceless");
    c.vectors.insert_or_assign("sl3", linear_flow_field(c.chart, B, "sl3"));
    c.expected["sl3.basic1_residual"] = {"pass", 0.0};
    c.expected["sl3.trace_spread"] = {"value", 1e-2};
    return c;
  }
  if (id == "m2r_determinant_space") {
    CorpusCase c;
    c.id = "m2r_determinant_space";
    c.form = m2r_determinant_form();
    std::mt19937_64 rng(7);
    for (int i = 0; i < 3; ++i) c.matrices.push_back(m2r_left_multiplication(random_sl2(rng)));
    c.expected["signature"] = {"value", 2.0};
    c.expected["nondegenerate_splitting"] = {"fail", 0.0};
    return c;
  }
  if (id == "finite_group") {
    const int kind = int_param(params, 0, 1);
    CorpusCase c;
    c.form = Eigen::MatrixXd::Identity(4, 4);
    if (kind == 0) {
      c.id = "finite_group:0";
      c.matrices = {block_rotation(2.0 * std::numbers::pi / 5.0, 2.0 * std::numbers::pi / 3.0),
                    block_rotation(2.0 * std::numbers::pi / 7.0, 0.0)};
      c.expected["nondegenerate_splitting"] = {"pass", 0.0};
    } else if (kind == 1) {
      c.id = "finite_group:1";
      c.matrices = binary_icosahedral_generators();
      c.expected["nondegenerate_splitting"] = {"fail", 0.0};
    } else {
      throw ArgumentError("finite_group: kind must be 0 (O(2)xO(2)) or 1 (binary icosahedral)");
    }
    return c;
  }
  throw ArgumentError("unknown case id '" + id + "'");
}

/// Parses "id:p1,p2+field" into (id, params, field).
struct CaseSpec {
  std::string id;
  CaseParams params;
  std::string field;
};

inline CaseSpec parse_case_spec(const std::string& text) {
  CaseSpec s;
  std::string rest = text;
  const auto plus = rest.find('+');
  if (plus != std::string::npos) {
    s.field = rest.substr(plus + 1);
    rest = rest.substr(0, plus);
  }
  const auto colon = rest.find(':');
  s.id = rest.substr(0, colon);
  if (colon != std::string::npos) {
    std::stringstream ss(rest.substr(colon + 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok.empty()) continue;
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) throw ArgumentError("bad case parameter '" + tok + "'");
      s.params.push_back(v);
    }
  }
  if (s.id.empty()) throw ArgumentError("empty case id");
  return s;
}

inline std::vector<std::string> case_ids() {
  return {"round_sphere", "harmonic_deg1", "harmonic_deg2", "pseudo_sphere", "flat", "flat_torus_chart",
          "bumpy_sphere", "beltrami_pair", "sl3_projective_field", "m2r_determinant_space", "finite_group"};
}

}  // namespace conegeo
