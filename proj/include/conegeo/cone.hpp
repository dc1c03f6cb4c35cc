#pragma once

// Metric cones  g_hat = dr^2 + r^2 g  over a base chart, and the identities
// relating cone calculus to base calculus.
//
// Cone coordinates are (r, x^1 .. x^n); index 0 is r. Base fields are
// evaluated on the trailing n jets, so any closed-form base field lifts
// without loss of jet order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "conegeo/chart.hpp"
#include "conegeo/errors.hpp"
#include "conegeo/geometry.hpp"
#include "conegeo/jet.hpp"
#include "conegeo/report.hpp"
#include "conegeo/tensor.hpp"

namespace conegeo {

struct ConeChart {
  ChartPtr base;
  MetricField base_metric;
  std::pair<double, double> r_range{0.5, 2.0};
  ChartPtr chart;      // (r, x) coordinates
  MetricField metric;  // g_hat

  int dimension() const { return chart->dimension(); }

  /// Cone point (r, x).
  Point lift(double r, const Point& x) const {
    Point p{r};
    p.insert(p.end(), x.begin(), x.end());
    return p;
  }

  static Point base_point(const Point& cone_point) { return Point(cone_point.begin() + 1, cone_point.end()); }
};

inline ConeChart build_cone(const MetricField& g, std::pair<double, double> r_range = {0.5, 2.0}) {
  const auto [r0, r1] = r_range;
  if (!(r0 > 0.0) || !(r1 >= r0) || !std::isfinite(r1)) {
    throw ArgumentError("cone radius range must be a finite interval inside (0, inf)");
  }
  const ChartPtr base = g.chart;
  const int n = base->dimension();
  if (n + 1 > kMaxJetDimension) throw ArgumentError("cone dimension exceeds the jet dimension limit");
  auto domain = [base, r0, r1](const Point& p) {
    if (p.empty() || !(p[0] >= r0 && p[0] <= r1)) return false;
    return base->contains(ConeChart::base_point(p));
  };
  auto proposal = [base, r0, r1](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(r0, r1);
    Point p{u(rng)};
    const Point x = base->sample(1, rng).front();
    p.insert(p.end(), x.begin(), x.end());
    return p;
  };
  ConeChart c;
  c.base = base;
  c.base_metric = g;
  c.r_range = r_range;
  c.chart = std::make_shared<const Chart>("cone(" + base->name() + ")", n + 1, std::move(domain), std::move(proposal));
  c.metric = MetricField{c.chart,
                         [gfn = g.fn, n](JetSpan x) {
                           const Jet& r = x[0];
                           const JetTensor gb = gfn(x.subspan(1));
                           const Jet r2 = r * r;
                           const int d = r.dimension();
                           JetTensor out(n + 1, 2, Jet(d, 0.0));
                           out(0, 0) = Jet(d, 1.0);
                           for (int i = 0; i < n; ++i) {
                             for (int j = 0; j < n; ++j) out(i + 1, j + 1) = r2 * gb(i, j);
                           }
                           return out;
                         },
                         g.p + 1, g.q};
  return c;
}

/// A base scalar field lifted to the cone as A(r, m) = r^2 alpha(m).
struct LiftedFunction {
  ScalarField alpha;
  ScalarField A;
};

inline LiftedFunction lift_function(const ConeChart& c, const ScalarField& alpha) {
  if (alpha.chart != c.base) throw ArgumentError("lift_function: scalar lives on a different chart than the cone base");
  return LiftedFunction{alpha, ScalarField{c.chart, "r^2*" + alpha.name, [fn = alpha.fn](JetSpan x) {
                                             return x[0] * x[0] * fn(x.subspan(1));
                                           }}};
}

/// Restriction of a cone scalar to the slice r = r0, as a base field.
inline ScalarField restrict_to_slice(const ConeChart& c, const ScalarField& f, double r0 = 1.0) {
  return ScalarField{c.base, f.name + "|r=" + std::to_string(r0), [fn = f.fn, r0](JetSpan x) {
                       std::vector<Jet> y;
                       y.reserve(x.size() + 1);
                       y.emplace_back(x.front().dimension(), r0);
                       y.insert(y.end(), x.begin(), x.end());
                       return fn(y);
                     }};
}

/// Restriction of a cone (0,2) tensor to the slice r = r0: the full
/// (n+1)x(n+1) array as a field on the base chart.
inline TensorField restrict_to_slice(const ConeChart& c, const TensorField& t, double r0 = 1.0) {
  return TensorField{c.base, t.valence, t.symmetry, [fn = t.fn, r0](JetSpan x) {
                       std::vector<Jet> y;
                       y.reserve(x.size() + 1);
                       y.emplace_back(x.front().dimension(), r0);
                       y.insert(y.end(), x.begin(), x.end());
                       return fn(y);
                     }};
}

/// Max deviation of the cone Christoffel symbols from
///   G^r_rr = G^r_ri = G^i_rr = 0,  G^r_ij = -r g_ij,  G^i_rj = delta^i_j / r,
///   G^i_jk = base Gamma^i_jk.
inline double cone_connection_deviation(const ConeChart& c, const Point& p) {
  const int n = c.base->dimension();
  const double r = p[0];
  const Point x = ConeChart::base_point(p);
  const RealTensor gh = values_of(christoffel_at(c.metric, p));
  const Connection base = connection_at(c.base_metric, x);
  const RealTensor gb = values_of(base.gamma);
  const RealTensor g = values_of(base.g);
  double dev = std::abs(gh(0, 0, 0));
  for (int i = 0; i < n; ++i) {
    dev = std::max(dev, std::abs(gh(0, 0, i + 1)));
    dev = std::max(dev, std::abs(gh(0, i + 1, 0)));
    dev = std::max(dev, std::abs(gh(i + 1, 0, 0)));
    for (int j = 0; j < n; ++j) {
      dev = std::max(dev, std::abs(gh(0, i + 1, j + 1) + r * g(i, j)));
      const double delta = (i == j) ? 1.0 / r : 0.0;
      dev = std::max(dev, std::abs(gh(i + 1, 0, j + 1) - delta));
      dev = std::max(dev, std::abs(gh(i + 1, j + 1, 0) - delta));
      for (int k = 0; k < n; ++k) dev = std::max(dev, std::abs(gh(i + 1, j + 1, k + 1) - gb(i, j, k)));
    }
  }
  return dev;
}

inline ResidualReport verify_cone_connection(const ConeChart& c, std::span<const Point> sample, double tol = 1e-10,
                                             std::string case_id = {}) {
  ReportBuilder b(std::move(case_id), "cone_connection", tol);
  for (const Point& p : sample) b.add(p, cone_connection_deviation(c, p));
  return b.finish();
}

struct LiftHessian {
  RealTensor hessian;         // D_hat D_hat A, cone coordinates
  double residual_deriv = 0;  // |DDA(d_r, Z/r) - D alpha(Z)|
  double residual_alpha = 0;  // |DDA(d_r, d_r) - 2 alpha|
  double residual_hess = 0;   // |DDA(Y/r, Z/r) - (DD alpha(Y,Z) + 2 g(Y,Z) alpha)|

  double max_residual() const { return std::max({residual_deriv, residual_alpha, residual_hess}); }
};

inline LiftHessian hessian_of_lift(const LiftedFunction& L, const ConeChart& c, const Point& p) {
  const int n = c.base->dimension();
  const double r = p[0];
  const Point x = ConeChart::base_point(p);
  const auto cone = scalar_derivatives(c.metric, L.A, p, 2);
  const auto base = scalar_derivatives(c.base_metric, L.alpha, x, 2);
  const RealTensor H = values_of(cone.d2);
  const RealTensor da = values_of(base.d1);
  const RealTensor dda = values_of(base.d2);
  const RealTensor g = values_of(base.connection.g);
  const double a = base.alpha.value();
  LiftHessian out;
  out.hessian = H;
  out.residual_alpha = std::abs(H(0, 0) - 2.0 * a);
  for (int k = 0; k < n; ++k) {
    out.residual_deriv = std::max(out.residual_deriv, std::abs(H(0, k + 1) / r - da(k)));
    out.residual_deriv = std::max(out.residual_deriv, std::abs(H(k + 1, 0) / r - da(k)));
    for (int j = 0; j < n; ++j) {
      out.residual_hess = std::max(out.residual_hess, std::abs(H(j + 1, k + 1) / (r * r) - (dda(j, k) + 2.0 * g(j, k) * a)));
    }
  }
  return out;
}

inline ResidualReport lift_identity_report(const LiftedFunction& L, const ConeChart& c, std::span<const Point> sample,
                                           double tol = 1e-10, std::string case_id = {}) {
  ReportBuilder b(std::move(case_id), "hessian_identities", tol);
  double d = 0.0, a = 0.0, h = 0.0;
  for (const Point& p : sample) {
    const LiftHessian lh = hessian_of_lift(L, c, p);
    d = std::max(d, lh.residual_deriv);
    a = std::max(a, lh.residual_alpha);
    h = std::max(h, lh.residual_hess);
    b.add(p, lh.max_residual());
  }
  b.metric("residual_deriv", d);
  b.metric("residual_alpha", a);
  b.metric("residual_hess", h);
  return b.finish();
}

/// T_hat = D_hat D_hat A / 2 as a field on the cone, exact to first order.
inline TensorField half_hessian_field(const LiftedFunction& L, const ConeChart& c) {
  return TensorField{c.chart, 2, Symmetry::symmetric,
                     pointwise_tensor(c.chart, [gfn = c.metric.fn, afn = L.A.fn](JetSpan seeds, const Point&) {
                       const Connection conn = connection_from(gfn(seeds));
                       JetTensor t(conn.dim(), 0);
                       t.flat(0) = afn(seeds);
                       JetTensor h = covariant_derivative_jets(covariant_derivative_jets(t, conn.gamma), conn.gamma);
                       for (std::size_t f = 0; f < h.size(); ++f) h.flat(f) *= 0.5;
                       return h;
                     })};
}

/// max |D_hat D_hat D_hat A| over the sample. Vanishes iff alpha solves the
/// third-order equation with c = 1.
inline ResidualReport parallel_hessian_residual(const LiftedFunction& L, const ConeChart& c,
                                                std::span<const Point> sample, double tol = kParallelTolerance,
                                                std::string case_id = {}) {
  ReportBuilder b(std::move(case_id), "parallel_hessian", tol);
  b.dead_zone(kRejectThreshold);
  for (const Point& p : sample) b.add(p, max_abs(values_of(scalar_derivatives(c.metric, L.A, p, 3).d3)));
  return b.finish();
}

/// max |D_hat T| at one point.
inline double parallel_defect(const TensorField& t, const MetricField& g, const Point& p) {
  const auto seeds = seed_point(p);
  const Connection conn = connection_from(g.fn(seeds));
  return max_abs(values_of(covariant_derivative_jets(t.fn(seeds), conn.gamma)));
}

inline ResidualReport parallel_tensor_check(const TensorField& t, const MetricField& g, std::span<const Point> sample,
                                            double tol = kParallelTolerance, std::string case_id = {}) {
  ReportBuilder b(std::move(case_id), "parallel_tensor", tol);
  b.dead_zone(kRejectThreshold);
  for (const Point& p : sample) {
    g.chart->require(p);
    b.add(p, parallel_defect(t, g, p));
  }
  return b.finish();
}

struct Extraction {
  ScalarField alpha;           // alpha(m) = T_hat(d_r, d_r) at r = 1
  std::vector<double> values;  // alpha at the base points of the sample
  ResidualReport report;
};

/// From a parallel symmetric T_hat on the cone, recovers alpha and checks
///   (a) T_hat(d_r, d_r) does not depend on r,
///   (b) at r = 1:  2 T_hat(d_r, X) = r D alpha(X),
///                  2 T_hat(X, Y)   = r^2 (2 alpha g(X,Y) + DD alpha(X,Y)),
///                  2 DT(X,Y,Z)     = -D alpha(Y) g(X,Z) - D alpha(Z) g(X,Y)
///       where T is T_hat restricted to the slice and X is the direction,
///   (c) alpha is constant iff T_hat is proportional to g_hat.
/// The report's max_residual is the largest of all these deviations; metrics
/// break it down. If D_hat T_hat is not below `parallel_tol` nothing is extracted.
inline Extraction extract_from_parallel(const TensorField& T_hat, const ConeChart& c, std::span<const Point> sample,
                                        double tol = kParallelTolerance, double parallel_tol = 1e-10,
                                        std::string case_id = {}) {
  const int n = c.base->dimension();
  ReportBuilder b(std::move(case_id), "extract_from_parallel", tol);
  Extraction out;

  double parallel = 0.0;
  for (const Point& p : sample) parallel = std::max(parallel, parallel_defect(T_hat, c.metric, p));
  b.metric("parallel_defect", parallel);
  if (!(parallel <= parallel_tol)) {
    b.fail_with("precondition violated: D_hat T_hat is not zero, no alpha extracted");
    for (const Point& p : sample) b.add(p, parallel);
    out.report = b.finish();
    return out;
  }

  const TensorField slice = restrict_to_slice(c, T_hat, 1.0);
  out.alpha = ScalarField{c.base, "alpha", [fn = slice.fn](JetSpan x) { return fn(x)(0, 0); }};
  // T = T_hat restricted to the slice, base indices only.
  const TensorField T{c.base, 2, Symmetry::symmetric, [fn = slice.fn, n](JetSpan x) {
                        const JetTensor full = fn(x);
                        JetTensor t(n, 2);
                        for (int i = 0; i < n; ++i) {
                          for (int j = 0; j < n; ++j) t(i, j) = full(i + 1, j + 1);
                        }
                        return t;
                      }};

  const auto [r0, r1] = c.r_range;
  double r_spread = 0.0;
  double id1 = 0.0;
  double id2 = 0.0;
  double id3 = 0.0;
  double alpha_spread_lo = std::numeric_limits<double>::infinity();
  double alpha_spread_hi = -std::numeric_limits<double>::infinity();
  double proportional = 0.0;
  for (const Point& p : sample) {
    const Point x = ConeChart::base_point(p);
    double worst = 0.0;
    // (a)
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int s = 0; s < 5; ++s) {
      const double r = r0 + (r1 - r0) * s / 4.0;
      const double a = T_hat.value(c.lift(r, x))(0, 0);
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
    r_spread = std::max(r_spread, hi - lo);
    worst = std::max(worst, hi - lo);
    // (b)
    const auto sd = scalar_derivatives(c.base_metric, out.alpha, x, 2);
    const RealTensor That = slice.value(x);
    const RealTensor da = values_of(sd.d1);
    const RealTensor dda = values_of(sd.d2);
    const RealTensor g = values_of(sd.connection.g);
    const double a = sd.alpha.value();
    out.values.push_back(a);
    alpha_spread_lo = std::min(alpha_spread_lo, a);
    alpha_spread_hi = std::max(alpha_spread_hi, a);
    for (int k = 0; k < n; ++k) {
      const double e = std::abs(2.0 * That(0, k + 1) - da(k));
      id1 = std::max(id1, e);
      worst = std::max(worst, e);
      for (int j = 0; j < n; ++j) {
        const double e2 = std::abs(2.0 * That(j + 1, k + 1) - (2.0 * a * g(j, k) + dda(j, k)));
        id2 = std::max(id2, e2);
        worst = std::max(worst, e2);
      }
    }
    const JetTensor Tj = T.at(x);
    const RealTensor DT = values_of(covariant_derivative_jets(Tj, sd.connection.gamma));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
          // DT(i, j, k) = (D_k T)(i, j); direction X = k.
          const double e3 = std::abs(2.0 * DT(i, j, k) + da(i) * g(k, j) + da(j) * g(k, i));
          id3 = std::max(id3, e3);
          worst = std::max(worst, e3);
        }
      }
    }
    // (c)
    const RealTensor gh = c.metric.value(p);
    const RealTensor tp = T_hat.value(p);
    for (std::size_t f = 0; f < tp.size(); ++f) proportional = std::max(proportional, std::abs(tp.flat(f) - a * gh.flat(f)));
    b.add(p, worst);
  }
  const double alpha_spread = sample.empty() ? 0.0 : alpha_spread_hi - alpha_spread_lo;
  const bool constant = alpha_spread <= 1e-9;
  const bool prop = proportional <= 1e-9;
  b.metric("r_spread", r_spread);
  b.metric("identity_1", id1);
  b.metric("identity_2", id2);
  b.metric("identity_3", id3);
  b.metric("alpha_spread", alpha_spread);
  b.metric("proportional_defect", proportional);
  if (constant != prop) b.fail_with("alpha constancy disagrees with proportionality of T_hat to g_hat");
  out.report = b.finish();
  return out;
}

/// Compares the cone curvature with  R(X,Y)Z - g(Y,Z)X + g(X,Z)Y  built from
/// base data; components with an r index must vanish. The report's residual
/// is the identity deviation; metric "curvature_norm" is max |R_hat^l_kij|.
inline ResidualReport cone_curvature_check(const ConeChart& c, std::span<const Point> sample, double tol = 1e-9,
                                           std::string case_id = {}) {
  ReportBuilder b(std::move(case_id), "cone_curvature", tol);
  double norm = 0.0;
  for (const Point& p : sample) {
    const Point x = ConeChart::base_point(p);
    const Curvature Rh = riemann_at(c.metric, p);
    const Curvature R = riemann_at(c.base_metric, x);
    double dev = 0.0;
    for (std::size_t f = 0; f < Rh.up.size(); ++f) {
      norm = std::max(norm, std::abs(Rh.up.flat(f)));
      const auto idx = Rh.up.unflatten(f);
      const bool has_r = std::any_of(idx.begin(), idx.end(), [](int v) { return v == 0; });
      double expect = 0.0;
      if (!has_r) {
        const int l = idx[0] - 1;
        const int k = idx[1] - 1;
        const int i = idx[2] - 1;
        const int j = idx[3] - 1;
        expect = R.up(l, k, i, j) - (l == i ? R.g(j, k) : 0.0) + (l == j ? R.g(i, k) : 0.0);
      }
      dev = std::max(dev, std::abs(Rh.up.flat(f) - expect));
    }
    b.add(p, dev);
  }
  b.metric("curvature_norm", norm);
  return b.finish();
}

/// Critical points of a base scalar located by sampled gradient-norm
/// minimization followed by Newton refinement.
struct CriticalPoint {
  Point point;
  double value = 0.0;
  double gradient_norm = 0.0;
};

namespace detail {

inline double gradient_norm(const Jet& a, const Eigen::MatrixXd& ginv) {
  const int n = a.dimension();
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) d(i) = a.d(i);
  return std::sqrt(std::abs(d.dot(ginv * d)));
}

}  // namespace detail

inline std::vector<CriticalPoint> find_critical_points(const ScalarField& alpha, const MetricField& g,
                                                       std::uint64_t seed, std::size_t samples = 5000,
                                                       double gradient_tol = 1e-5, std::size_t starts = 40) {
  const ChartPtr chart = alpha.chart;
  const auto pts = chart->sample(samples, seed);
  std::vector<std::pair<double, std::size_t>> ranked;
  ranked.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Eigen::MatrixXd ginv = to_matrix(g.value(pts[i])).inverse();
    ranked.emplace_back(detail::gradient_norm(alpha.at(pts[i], 2), ginv), i);
  }
  std::sort(ranked.begin(), ranked.end());
  std::vector<CriticalPoint> out;
  const int n = chart->dimension();
  for (std::size_t s = 0; s < std::min(starts, ranked.size()); ++s) {
    Point x = pts[ranked[s].second];
    for (int it = 0; it < 60; ++it) {
      const Jet a = alpha.at(x, 2);
      Eigen::VectorXd grad(n);
      Eigen::MatrixXd hess(n, n);
      for (int i = 0; i < n; ++i) {
        grad(i) = a.d(i);
        for (int j = 0; j < n; ++j) hess(i, j) = a.derivative({i, j});
      }
      if (grad.norm() < 1e-14) break;
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(hess, Eigen::ComputeFullU | Eigen::ComputeFullV);
      svd.setThreshold(1e-8);
      const Eigen::VectorXd step = svd.solve(grad);
      Point next = x;
      for (int i = 0; i < n; ++i) next[static_cast<std::size_t>(i)] -= step(i);
      if (!chart->contains(next)) break;
      x = std::move(next);
    }
    const Eigen::MatrixXd ginv = to_matrix(g.value(x)).inverse();
    const Jet a = alpha.at(x, 1);
    const double gn = detail::gradient_norm(a, ginv);
    if (gn < gradient_tol) out.push_back({x, a.value(), gn});
  }
  return out;
}

/// Parallel splitting tensors T_1(v, u) = g_hat(P v, u), T_2 = g_hat((I - P) v, u).
struct Splitting {
  TensorField T1;
  TensorField T2;
  ResidualReport report;
};

/// `projector` returns P^a_b (row a, column b) in cone coordinates.
inline Splitting splitting_tensors(const ConeChart& c, std::function<JetTensor(JetSpan)> projector,
                                   std::span<const Point> sample, std::uint64_t seed = 42,
                                   std::string case_id = {}) {
  const int N = c.dimension();
  auto make = [&c, projector, N](bool complement) {
    return TensorField{c.chart, 2, Symmetry::symmetric, [gfn = c.metric.fn, projector, N, complement](JetSpan x) {
                         const JetTensor g = gfn(x);
                         JetTensor P = projector(x);
                         if (complement) {
                           for (int a = 0; a < N; ++a) {
                             for (int b = 0; b < N; ++b) P(a, b) = (a == b ? 1.0 : 0.0) - P(a, b);
                           }
                         }
                         JetTensor t(N, 2);
                         for (int a = 0; a < N; ++a) {
                           for (int b = 0; b < N; ++b) {
                             Jet s = g(0, b) * P(0, a);
                             for (int k = 1; k < N; ++k) s += g(k, b) * P(k, a);
                             t(a, b) = std::move(s);
                           }
                         }
                         return t;
                       }};
  };
  Splitting out{make(false), make(true), {}};
  ReportBuilder b(std::move(case_id), "splitting", 1e-12, seed);

  double sum_defect = 0.0;
  double alpha_sum = 0.0;
  double alpha_lo = std::numeric_limits<double>::infinity();
  double alpha_hi = -alpha_lo;
  double min_eig = std::numeric_limits<double>::infinity();
  double parallel = 0.0;
  for (const Point& p : sample) {
    c.chart->require(p);
    const auto seeds = seed_point(p);
    const Eigen::MatrixXd P = to_matrix(values_of(projector(seeds)));
    const Eigen::MatrixXd G = to_matrix(c.metric.value(p));
    if ((P * P - P).cwiseAbs().maxCoeff() > 1e-10) throw ArgumentError("splitting: projector is not idempotent");
    const Eigen::MatrixXd T1 = to_matrix(out.T1.value(p));
    const Eigen::MatrixXd T2 = to_matrix(out.T2.value(p));
    if ((T1 - T1.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
      throw ArgumentError("splitting: subspaces are not orthogonal for the cone metric");
    }
    // Nondegeneracy of g_hat on the image of P.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(P, Eigen::ComputeFullU);
    int rank = 0;
    for (int i = 0; i < N; ++i) rank += svd.singularValues()(i) > 1e-8 ? 1 : 0;
    if (rank == 0) throw DegeneracyError("splitting: first subspace is zero", std::numeric_limits<double>::infinity());
    const Eigen::MatrixXd B = svd.matrixU().leftCols(rank);
    const double cond = condition_number(B.transpose() * G * B);
    if (!(cond <= kDegenerateCondition)) throw DegeneracyError("splitting: cone metric degenerate on V1", cond);

    const double d_sum = (T1 + T2 - G).cwiseAbs().maxCoeff();
    const double a1 = T1(0, 0);
    const double a2 = T2(0, 0);
    sum_defect = std::max(sum_defect, d_sum);
    alpha_sum = std::max(alpha_sum, std::abs(a1 + a2 - 1.0));
    alpha_lo = std::min({alpha_lo, a1, a2});
    alpha_hi = std::max({alpha_hi, a1, a2});
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e1(T1, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e2(T2, Eigen::EigenvaluesOnly);
    min_eig = std::min({min_eig, e1.eigenvalues().minCoeff(), e2.eigenvalues().minCoeff()});
    parallel = std::max({parallel, parallel_defect(out.T1, c.metric, p), parallel_defect(out.T2, c.metric, p)});
    b.add(p, std::max(d_sum, std::abs(a1 + a2 - 1.0)));
  }
  b.metric("sum_defect", sum_defect);
  b.metric("alpha_sum_defect", alpha_sum);
  b.metric("alpha_min", alpha_lo);
  b.metric("alpha_max", alpha_hi);
  b.metric("min_eigenvalue", min_eig);
  b.metric("parallel_defect", parallel);

  std::string why;
  if (parallel <= kParallelTolerance) {
    if (alpha_lo < -1e-9 || alpha_hi > 1.0 + 1e-9) why = "alpha_i leaves [0, 1]";
    if (min_eig < -1e-10) why = "a splitting tensor is not positive semidefinite";
    // Critical values of alpha_1 (alpha_2 = 1 - alpha_1 has the same critical points).
    const ScalarField a1 = restrict_to_slice(
        c, ScalarField{c.chart, "alpha_1", [fn = out.T1.fn](JetSpan x) { return fn(x)(0, 0); }}, 1.0);
    const auto crit = find_critical_points(a1, c.base_metric, seed);
    double worst = 0.0;
    for (const auto& cp : crit) worst = std::max(worst, std::min(std::abs(cp.value), std::abs(cp.value - 1.0)));
    b.metric("critical_points", static_cast<double>(crit.size()));
    b.metric("critical_value_defect", worst);
    if (worst > 1e-4) why = "critical value of alpha_i away from {0, 1}";
  }
  if (!why.empty()) b.fail_with(why);
  out.report = b.finish();
  return out;
}

}  // namespace conegeo
