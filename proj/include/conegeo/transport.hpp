#pragma once

// Geodesics, parallel transport and Levi-Civita holonomy by fixed-step
// classical Runge-Kutta, plus the linear algebra of parallel endomorphisms
// and finite matrix sets.
//
// Holonomy here is the Levi-Civita one: transport of tangent vectors around
// loops in a chart. The holonomy morphism of a (G,X)-structure is a different
// object and is not computed; finite matrix sets are analysed directly by
// invariant_splitting_search instead.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "conegeo/chart.hpp"
#include "conegeo/cone.hpp"
#include "conegeo/errors.hpp"
#include "conegeo/geometry.hpp"
#include "conegeo/report.hpp"
#include "conegeo/tensor.hpp"

namespace conegeo {

inline constexpr int kMinSteps = 16;

// ---------------------------------------------------------------------------
// Curves
// ---------------------------------------------------------------------------

/// One smooth piece, s in [0, 1] -> (point, d point / ds).
struct CurvePiece {
  std::function<std::pair<Point, Point>(double)> eval;
};

/// Piecewise-smooth curve on [0, 1]; piece k covers [breakpoints[k], breakpoints[k+1]].
struct CurveSegment {
  ChartPtr chart;
  std::vector<CurvePiece> pieces;
  std::vector<double> breakpoints;

  Point start() const { return pieces.front().eval(0.0).first; }
  Point end() const { return pieces.back().eval(1.0).first; }

  Point point(double t) const {
    const auto [k, s] = locate(t);
    return pieces[k].eval(s).first;
  }

  /// d point / dt.
  Point velocity(double t) const {
    const auto [k, s] = locate(t);
    Point v = pieces[k].eval(s).second;
    const double w = breakpoints[k + 1] - breakpoints[k];
    for (double& x : v) x /= w;
    return v;
  }

  std::pair<std::size_t, double> locate(double t) const {
    if (pieces.empty()) throw ArgumentError("empty curve");
    t = std::clamp(t, 0.0, 1.0);
    std::size_t k = 0;
    while (k + 1 < pieces.size() && t > breakpoints[k + 1]) ++k;
    return {k, (t - breakpoints[k]) / (breakpoints[k + 1] - breakpoints[k])};
  }
};

/// Concatenates pieces with equal parameter share.
inline CurveSegment make_curve(ChartPtr chart, std::vector<CurvePiece> pieces) {
  CurveSegment c{std::move(chart), std::move(pieces), {}};
  for (std::size_t k = 0; k <= c.pieces.size(); ++k) {
    c.breakpoints.push_back(static_cast<double>(k) / static_cast<double>(c.pieces.size()));
  }
  return c;
}

inline CurveSegment concatenate(const std::vector<CurveSegment>& parts) {
  if (parts.empty()) throw ArgumentError("concatenate: no curves");
  std::vector<CurvePiece> pieces;
  for (const auto& c : parts) pieces.insert(pieces.end(), c.pieces.begin(), c.pieces.end());
  return make_curve(parts.front().chart, std::move(pieces));
}

/// Straight coordinate segment from a to b.
inline CurvePiece line_piece(const Point& a, const Point& b) {
  return CurvePiece{[a, b](double s) {
    Point x(a.size());
    Point v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      x[i] = a[i] + s * (b[i] - a[i]);
      v[i] = b[i] - a[i];
    }
    return std::pair{x, v};
  }};
}

inline CurveSegment line_segment(ChartPtr chart, const Point& a, const Point& b) {
  return make_curve(std::move(chart), {line_piece(a, b)});
}

/// Cubic Hermite interpolation of nodes (x_k, dx/ds_k) on a uniform grid.
inline CurvePiece hermite_piece(std::vector<Point> xs, std::vector<Point> vs) {
  return CurvePiece{[xs = std::move(xs), vs = std::move(vs)](double s) {
    const std::size_t m = xs.size() - 1;
    const double h = 1.0 / static_cast<double>(m);
    std::size_t k = std::min(m - 1, static_cast<std::size_t>(std::max(0.0, s) / h));
    const double t = (s - static_cast<double>(k) * h) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    const double d00 = 6 * t2 - 6 * t, d10 = 3 * t2 - 4 * t + 1, d01 = -6 * t2 + 6 * t, d11 = 3 * t2 - 2 * t;
    const std::size_t n = xs[k].size();
    Point x(n);
    Point v(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = h00 * xs[k][i] + h10 * h * vs[k][i] + h01 * xs[k + 1][i] + h11 * h * vs[k + 1][i];
      v[i] = (d00 * xs[k][i] + d01 * xs[k + 1][i]) / h + d10 * vs[k][i] + d11 * vs[k + 1][i];
    }
    return std::pair{x, v};
  }};
}

// ---------------------------------------------------------------------------
// Geodesics
// ---------------------------------------------------------------------------

namespace detail {

/// x'' = -Gamma(x)(x', x'), state (x, v) stacked.
inline Eigen::VectorXd geodesic_rhs(const MetricField& g, const Eigen::VectorXd& y) {
  const int n = static_cast<int>(y.size() / 2);
  const Point x(y.data(), y.data() + n);
  const RealTensor G = christoffel_values(g, x);
  Eigen::VectorXd out(2 * n);
  for (int k = 0; k < n; ++k) {
    out(k) = y(n + k);
    double a = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) a += G(k, i, j) * y(n + i) * y(n + j);
    }
    out(n + k) = -a;
  }
  return out;
}

inline double quadratic(const RealTensor& g, std::span<const double> v) {
  double s = 0.0;
  for (int i = 0; i < g.dim(); ++i) {
    for (int j = 0; j < g.dim(); ++j) s += g(i, j) * v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)];
  }
  return s;
}

}  // namespace detail

struct GeodesicResult {
  CurveSegment curve;      // parameter s in [0, 1], d/ds = length * d/dt
  std::vector<Point> xs;   // nodes
  std::vector<Point> vs;   // d/dt at nodes
  bool truncated = false;  // left the chart before reaching `length`
  double exit_parameter = 1.0;
  double energy_drift = 0.0;  // max |g(v,v) - g(v0,v0)| / max(|g(v0,v0)|, |v0|^2)
};

/// Classical RK4 on the geodesic equation with `steps` fixed steps of size
/// length / steps. If the trajectory leaves the chart the curve is truncated
/// at the last in-domain node.
inline GeodesicResult geodesic_integrate(const MetricField& g, const Point& p0, const Point& v0, double length,
                                         int steps) {
  if (steps < kMinSteps) throw ArgumentError("geodesic_integrate: steps must be at least " + std::to_string(kMinSteps));
  const int n = g.dimension();
  if (static_cast<int>(p0.size()) != n || static_cast<int>(v0.size()) != n) {
    throw ArgumentError("geodesic_integrate: point and velocity must have the chart dimension");
  }
  g.chart->require(p0);
  const double h = length / steps;
  Eigen::VectorXd y(2 * n);
  for (int i = 0; i < n; ++i) {
    y(i) = p0[static_cast<std::size_t>(i)];
    y(n + i) = v0[static_cast<std::size_t>(i)];
  }
  GeodesicResult out;
  const double e0 = detail::quadratic(g.value(p0), v0);
  double v0sq = 0.0;
  for (double v : v0) v0sq += v * v;
  const double scale = std::max({std::abs(e0), v0sq, 1e-300});
  auto push = [&](const Eigen::VectorXd& s) {
    out.xs.emplace_back(s.data(), s.data() + n);
    out.vs.emplace_back(s.data() + n, s.data() + 2 * n);
  };
  push(y);
  for (int k = 0; k < steps; ++k) {
    try {
      const Eigen::VectorXd k1 = detail::geodesic_rhs(g, y);
      const Eigen::VectorXd k2 = detail::geodesic_rhs(g, y + 0.5 * h * k1);
      const Eigen::VectorXd k3 = detail::geodesic_rhs(g, y + 0.5 * h * k2);
      const Eigen::VectorXd k4 = detail::geodesic_rhs(g, y + h * k3);
      const Eigen::VectorXd next = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      const Point xn(next.data(), next.data() + n);
      if (!g.chart->contains(xn)) throw DomainError("left chart");
      y = next;
    } catch (const DomainError&) {
      out.truncated = true;
      out.exit_parameter = static_cast<double>(k) / steps;
      break;
    }
    push(y);
    const Point vn(y.data() + n, y.data() + 2 * n);
    out.energy_drift = std::max(out.energy_drift, std::abs(detail::quadratic(g.value(out.xs.back()), vn) - e0) / scale);
  }
  // Piece parameter s covers the integrated part; d/ds = (covered length) d/dt.
  const double covered = length * out.exit_parameter;
  std::vector<Point> vs_s = out.vs;
  for (auto& v : vs_s) {
    for (double& c : v) c *= covered;
  }
  if (out.xs.size() >= 2) out.curve = make_curve(g.chart, {hermite_piece(out.xs, std::move(vs_s))});
  return out;
}

/// Geodesic from a to b on parameter [0, 1] by Newton shooting on the initial
/// velocity. The last node is set to b exactly so loops close.
inline GeodesicResult geodesic_between(const MetricField& g, const Point& a, const Point& b, int steps,
                                       double tol = 1e-12, int max_iter = 40) {
  const int n = g.dimension();
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = b[static_cast<std::size_t>(i)] - a[static_cast<std::size_t>(i)];
  auto endpoint = [&](const Eigen::VectorXd& w, bool* ok) {
    const Point wp(w.data(), w.data() + n);
    GeodesicResult r = geodesic_integrate(g, a, wp, 1.0, steps);
    *ok = !r.truncated;
    Eigen::VectorXd e(n);
    for (int i = 0; i < n; ++i) e(i) = r.xs.back()[static_cast<std::size_t>(i)];
    return e;
  };
  const Eigen::Map<const Eigen::VectorXd> target(b.data(), n);
  double scale = std::max(1.0, target.cwiseAbs().maxCoeff());
  for (int it = 0; it < max_iter; ++it) {
    bool ok = true;
    const Eigen::VectorXd F = endpoint(v, &ok) - target;
    if (!ok) throw DomainError("geodesic_between: shooting trajectory left the chart");
    if (F.cwiseAbs().maxCoeff() <= tol * scale) break;
    Eigen::MatrixXd J(n, n);
    const double eps = 1e-6 * std::max(1.0, v.norm());
    for (int j = 0; j < n; ++j) {
      Eigen::VectorXd vp = v;
      Eigen::VectorXd vm = v;
      vp(j) += eps;
      vm(j) -= eps;
      bool okp = true;
      bool okm = true;
      J.col(j) = (endpoint(vp, &okp) - endpoint(vm, &okm)) / (2.0 * eps);
      if (!okp || !okm) throw DomainError("geodesic_between: shooting trajectory left the chart");
    }
    v -= J.fullPivLu().solve(F);
    if (it + 1 == max_iter) throw DegeneracyError("geodesic_between: shooting did not converge", condition_number(J));
  }
  const Point vp(v.data(), v.data() + n);
  GeodesicResult r = geodesic_integrate(g, a, vp, 1.0, steps);
  double miss = 0.0;
  for (int i = 0; i < n; ++i) miss = std::max(miss, std::abs(r.xs.back()[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]));
  if (miss > 1e-9 * scale) throw DegeneracyError("geodesic_between: endpoint missed", miss);
  r.xs.back() = b;
  r.curve = make_curve(g.chart, {hermite_piece(r.xs, r.vs)});
  return r;
}

// ---------------------------------------------------------------------------
// Parallel transport
// ---------------------------------------------------------------------------

namespace detail {

/// A(s)_{kj} = Gamma^k_ij(x(s)) x'^i(s): transported vectors obey W' = -A W.
inline Eigen::MatrixXd transport_generator(const MetricField& g, const CurvePiece& piece, double s) {
  const auto [x, v] = piece.eval(s);
  const RealTensor G = christoffel_values(g, x);
  const int n = g.dimension();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      double a = 0.0;
      for (int i = 0; i < n; ++i) a += G(k, i, j) * v[static_cast<std::size_t>(i)];
      A(k, j) = a;
    }
  }
  return A;
}

/// Fundamental solution of W' = -A(s) W over all pieces (RK4, `steps_per_piece`).
inline Eigen::MatrixXd transport_matrix(const MetricField& g, const CurveSegment& curve, int steps_per_piece) {
  const int n = g.dimension();
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  const double h = 1.0 / steps_per_piece;
  for (const auto& piece : curve.pieces) {
    Eigen::MatrixXd A0 = transport_generator(g, piece, 0.0);
    for (int k = 0; k < steps_per_piece; ++k) {
      const double s = k * h;
      const Eigen::MatrixXd Am = transport_generator(g, piece, s + 0.5 * h);
      const Eigen::MatrixXd A1 = transport_generator(g, piece, s + h);
      const Eigen::MatrixXd k1 = -A0 * H;
      const Eigen::MatrixXd k2 = -Am * (H + 0.5 * h * k1);
      const Eigen::MatrixXd k3 = -Am * (H + 0.5 * h * k2);
      const Eigen::MatrixXd k4 = -A1 * (H + h * k3);
      H += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      A0 = A1;
    }
  }
  return H;
}

inline int steps_per_piece(const CurveSegment& c, int steps) {
  return std::max(kMinSteps, steps / static_cast<int>(std::max<std::size_t>(1, c.pieces.size())));
}

}  // namespace detail

/// Transport matrix H of the coordinate basis: a vector W at the start ends as H W.
inline Eigen::MatrixXd transport_operator(const MetricField& g, const CurveSegment& curve, int steps) {
  if (curve.pieces.empty()) throw ArgumentError("parallel_transport: empty curve");
  return detail::transport_matrix(g, curve, detail::steps_per_piece(curve, steps));
}

/// Vector components at the end of the curve.
inline Eigen::VectorXd parallel_transport(const MetricField& g, const CurveSegment& curve, const Eigen::VectorXd& w,
                                          int steps = 1024) {
  return transport_operator(g, curve, steps) * w;
}

/// (0,2) tensor components at the end of the curve: T_end = H^-T T H^-1.
inline Eigen::MatrixXd parallel_transport_form(const MetricField& g, const CurveSegment& curve,
                                               const Eigen::MatrixXd& t, int steps = 1024) {
  const Eigen::MatrixXd H = transport_operator(g, curve, steps);
  const Eigen::MatrixXd Hi = H.inverse();
  return Hi.transpose() * t * Hi;
}

// ---------------------------------------------------------------------------
// Holonomy
// ---------------------------------------------------------------------------

struct HolonomySample {
  CurveSegment loop;
  Eigen::MatrixXd matrix;  // transport of the coordinate basis at the base point
  int step_count = 0;
  double est_error = 0.0;        // max |H_N - H_{N/2}|, floored at 1e-14
  double isometry_defect = 0.0;  // max |H^T g H - g|
};

inline HolonomySample holonomy_loop(const MetricField& g, const CurveSegment& loop, int steps = 1024) {
  const Point a = loop.start();
  const Point b = loop.end();
  double gap = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) gap = std::max(gap, std::abs(a[i] - b[i]));
  if (gap > 1e-12) throw ArgumentError("holonomy_loop: loop is not closed (gap " + std::to_string(gap) + ")");
  const int per = detail::steps_per_piece(loop, steps);
  HolonomySample out;
  out.loop = loop;
  out.step_count = per * static_cast<int>(loop.pieces.size());
  out.matrix = detail::transport_matrix(g, loop, per);
  const Eigen::MatrixXd coarse = detail::transport_matrix(g, loop, std::max(kMinSteps / 2, per / 2));
  out.est_error = std::max(1e-14, (out.matrix - coarse).cwiseAbs().maxCoeff());
  const Eigen::MatrixXd G = to_matrix(g.value(a));
  out.isometry_defect = (out.matrix.transpose() * G * out.matrix - G).cwiseAbs().maxCoeff();
  return out;
}

/// Largest rotation angle of H in a g-orthonormal frame (Riemannian g): for
/// n = 2 the signed angle, otherwise the largest principal angle.
inline double rotation_angle(const Eigen::MatrixXd& H, const Eigen::MatrixXd& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  if (es.eigenvalues().minCoeff() <= 0.0) throw ArgumentError("rotation_angle needs a positive definite metric");
  const Eigen::MatrixXd E = es.operatorSqrt();
  const Eigen::MatrixXd R = E * H * E.inverse();
  if (R.rows() == 2) return std::atan2(R(1, 0), R(0, 0));
  Eigen::EigenSolver<Eigen::MatrixXd> ev(R, false);
  double best = 0.0;
  for (int i = 0; i < ev.eigenvalues().size(); ++i) best = std::max(best, std::abs(std::arg(ev.eigenvalues()(i))));
  return best;
}

/// Great-circle arc on the unit sphere in stereographic coordinates, from unit
/// vector a to unit vector b (not antipodal), parameter s in [0, 1].
inline CurvePiece great_circle_piece(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double theta = std::acos(std::clamp(a.dot(b), -1.0, 1.0));
  Eigen::VectorXd c = b - a.dot(b) * a;
  if (c.norm() < 1e-14) throw ArgumentError("great_circle_piece: endpoints coincide or are antipodal");
  c.normalize();
  return CurvePiece{[a, c, theta](double s) {
    const Eigen::Index N = a.size();
    const Eigen::Index n = N - 1;
    const Eigen::VectorXd u = std::cos(theta * s) * a + std::sin(theta * s) * c;
    const Eigen::VectorXd du = theta * (-std::sin(theta * s) * a + std::cos(theta * s) * c);
    const double w = 1.0 + u(n);
    Point x(static_cast<std::size_t>(n));
    Point v(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      x[static_cast<std::size_t>(i)] = u(i) / w;
      v[static_cast<std::size_t>(i)] = (du(i) * w - u(i) * du(n)) / (w * w);
    }
    return std::pair{x, v};
  }};
}

/// Boundary of the first octant of S^2: e3 -> e1 -> e2 -> e3, base point e3
/// (the stereographic origin). Encloses area pi/2.
inline CurveSegment octant_loop(ChartPtr sphere_chart) {
  const Eigen::Vector3d e1(1, 0, 0), e2(0, 1, 0), e3(0, 0, 1);
  return make_curve(std::move(sphere_chart),
                    {great_circle_piece(e3, e1), great_circle_piece(e1, e2), great_circle_piece(e2, e3)});
}

/// Closed polygon of coordinate lines through the given vertices.
inline CurveSegment coordinate_polygon(ChartPtr chart, const std::vector<Point>& vertices) {
  std::vector<CurvePiece> pieces;
  for (std::size_t i = 0; i < vertices.size(); ++i) pieces.push_back(line_piece(vertices[i], vertices[(i + 1) % vertices.size()]));
  return make_curve(std::move(chart), std::move(pieces));
}

/// Geodesic triangle through three nearby sampled points; resamples when
/// shooting fails. Vertices are drawn as p0 + spread * N(0, 1).
inline CurveSegment random_geodesic_triangle(const MetricField& g, std::mt19937_64& rng, double spread = 0.2,
                                             int steps = 256) {
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int attempt = 0; attempt < 200; ++attempt) {
    const Point p0 = g.chart->sample(1, rng).front();
    std::vector<Point> v{p0};
    bool ok = true;
    for (int k = 0; k < 2 && ok; ++k) {
      Point q = p0;
      for (double& c : q) c += spread * nd(rng);
      ok = g.chart->contains(q);
      v.push_back(std::move(q));
    }
    if (!ok) continue;
    try {
      std::vector<CurveSegment> sides;
      for (int k = 0; k < 3; ++k) sides.push_back(geodesic_between(g, v[static_cast<std::size_t>(k)], v[static_cast<std::size_t>((k + 1) % 3)], steps).curve);
      return concatenate(sides);
    } catch (const DomainError&) {
    } catch (const DegeneracyError&) {
    }
  }
  throw DomainError("random_geodesic_triangle: could not build a triangle inside the chart");
}

// ---------------------------------------------------------------------------
// Eigenstructure of g^-1 T
// ---------------------------------------------------------------------------

struct CharacteristicSpace {
  std::complex<double> eigenvalue;
  int algebraic = 0;
  int geometric = 0;
  Eigen::MatrixXd basis;      // columns span the real characteristic space
  Eigen::MatrixXd projector;  // along the other characteristic spaces
  double gram_condition = 1.0;
  bool nondegenerate = true;
  bool jordan = false;  // geometric < algebraic
};

struct EigenStructure {
  std::vector<CharacteristicSpace> spaces;
  double min_gap = std::numeric_limits<double>::infinity();  // smallest gap between distinct clusters
  bool diagonalizable = true;
  bool complete = true;  // characteristic spaces add up to the whole space
};

namespace detail {

inline Eigen::MatrixXd null_space(const Eigen::MatrixXd& M, double rel_tol) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double scale = std::max(1.0, s.size() ? s(0) : 0.0);
  int rank = 0;
  for (int i = 0; i < s.size(); ++i) rank += s(i) > rel_tol * scale ? 1 : 0;
  return svd.matrixV().rightCols(M.cols() - rank);
}

inline Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& M, int m) {
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(M.rows(), M.cols());
  for (int i = 0; i < m; ++i) P = P * M;
  return P;
}

}  // namespace detail

/// Real Jordan eigenstructure of A = g^-1 T. Eigenvalues closer than `gap`
/// are clustered; each cluster's characteristic space is null((A - lambda)^m)
/// (for complex pairs, null of the real quadratic factor to the power m).
inline EigenStructure eigen_structure(const Eigen::MatrixXd& g, const Eigen::MatrixXd& T, double gap = 1e-6) {
  const int n = static_cast<int>(g.rows());
  const double cond = condition_number(g);
  if (!(cond <= kDegenerateCondition)) throw DegeneracyError("eigen_structure: metric is degenerate", cond);
  const Eigen::MatrixXd A = g.inverse() * T;
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  const Eigen::VectorXcd ev = es.eigenvalues();

  // Single-linkage clustering.
  std::vector<int> label(static_cast<std::size_t>(n));
  std::iota(label.begin(), label.end(), 0);
  std::function<int(int)> find = [&](int i) { return label[static_cast<std::size_t>(i)] == i ? i : label[static_cast<std::size_t>(i)] = find(label[static_cast<std::size_t>(i)]); };
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (std::abs(ev(i) - ev(j)) < gap) label[static_cast<std::size_t>(find(i))] = find(j);
    }
  }
  std::vector<std::vector<int>> clusters;
  std::vector<int> root_index(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    const int r = find(i);
    if (root_index[static_cast<std::size_t>(r)] < 0) {
      root_index[static_cast<std::size_t>(r)] = static_cast<int>(clusters.size());
      clusters.emplace_back();
    }
    clusters[static_cast<std::size_t>(root_index[static_cast<std::size_t>(r)])].push_back(i);
  }

  EigenStructure out;
  std::vector<std::complex<double>> centers;
  for (const auto& cl : clusters) {
    std::complex<double> c = 0.0;
    for (int i : cl) c += ev(i);
    centers.push_back(c / static_cast<double>(cl.size()));
  }
  for (std::size_t a = 0; a < centers.size(); ++a) {
    for (std::size_t b = a + 1; b < centers.size(); ++b) out.min_gap = std::min(out.min_gap, std::abs(centers[a] - centers[b]));
  }
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  std::vector<bool> used(clusters.size(), false);
  for (std::size_t a = 0; a < clusters.size(); ++a) {
    if (used[a]) continue;
    used[a] = true;
    const std::complex<double> lam = centers[a];
    const int m = static_cast<int>(clusters[a].size());
    CharacteristicSpace cs;
    cs.eigenvalue = lam;
    if (std::abs(lam.imag()) < gap) {
      const Eigen::MatrixXd M = (A - lam.real() * I) / scale;
      cs.basis = detail::null_space(detail::matrix_power(M, m), 1e-8);
      cs.algebraic = m;
      cs.geometric = static_cast<int>(detail::null_space(M, 1e-8).cols());
    } else {
      // Pair with the conjugate cluster.
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        if (!used[b] && std::abs(centers[b] - std::conj(lam)) < gap) {
          used[b] = true;
          break;
        }
      }
      const Eigen::MatrixXd Q = (A * A - 2.0 * lam.real() * A + std::norm(lam) * I) / (scale * scale);
      cs.basis = detail::null_space(detail::matrix_power(Q, m), 1e-8);
      cs.algebraic = 2 * m;
      cs.geometric = static_cast<int>(detail::null_space(Q, 1e-8).cols());
    }
    cs.jordan = cs.geometric < cs.algebraic;
    if (cs.jordan) out.diagonalizable = false;
    const Eigen::MatrixXd gram = cs.basis.transpose() * g * cs.basis;
    cs.gram_condition = cs.basis.cols() > 0 ? condition_number(gram) : std::numeric_limits<double>::infinity();
    cs.nondegenerate = cs.gram_condition <= kDegenerateCondition;
    out.spaces.push_back(std::move(cs));
  }
  // Projectors from the direct-sum basis.
  int total = 0;
  for (const auto& cs : out.spaces) total += static_cast<int>(cs.basis.cols());
  out.complete = total == n;
  if (out.complete) {
    Eigen::MatrixXd B(n, n);
    int col = 0;
    for (const auto& cs : out.spaces) {
      B.middleCols(col, cs.basis.cols()) = cs.basis;
      col += static_cast<int>(cs.basis.cols());
    }
    const Eigen::MatrixXd Binv = B.inverse();
    col = 0;
    for (auto& cs : out.spaces) {
      const int k = static_cast<int>(cs.basis.cols());
      cs.projector = B.middleCols(col, k) * Binv.middleRows(col, k);
      col += k;
    }
  }
  std::sort(out.spaces.begin(), out.spaces.end(), [](const CharacteristicSpace& x, const CharacteristicSpace& y) {
    if (x.eigenvalue.real() != y.eigenvalue.real()) return x.eigenvalue.real() < y.eigenvalue.real();
    return x.eigenvalue.imag() < y.eigenvalue.imag();
  });
  return out;
}

// ---------------------------------------------------------------------------
// Decomposability of a cone carrying a parallel symmetric tensor
// ---------------------------------------------------------------------------

struct DecomposabilityReport {
  bool decomposable = false;
  bool trivial = false;  // single characteristic space
  std::vector<int> ranks;
  std::vector<std::complex<double>> eigenvalues;
  double eigenvalue_spread = 0.0;
  double projector_transport_defect = 0.0;
  bool all_nondegenerate = true;
  std::string verdict;
  ResidualReport report;
};

/// (a) eigenvalues of g^-1 T constant over the sample, (b) characteristic
/// projectors, transported along `paths` random coordinate segments, agree
/// with pointwise recomputation, (c) every characteristic space nondegenerate.
inline DecomposabilityReport decomposability_probe(const ConeChart& c, const TensorField& T, std::span<const Point> sample,
                                                   int paths = 10, std::uint64_t seed = 42, int steps = 1024,
                                                   std::string case_id = {}) {
  DecomposabilityReport out;
  ReportBuilder b(std::move(case_id), "decomposability", 1e-5, seed);
  double parallel = 0.0;
  for (const Point& p : sample) parallel = std::max(parallel, parallel_defect(T, c.metric, p));
  b.metric("parallel_defect", parallel);
  if (!(parallel <= kParallelTolerance)) {
    out.verdict = "precondition violated: tensor is not parallel";
    b.fail_with(out.verdict);
    for (const Point& p : sample) b.add(p, parallel);
    out.report = b.finish();
    return out;
  }
  auto structure_at = [&](const Point& p) {
    return eigen_structure(to_matrix(c.metric.value(p)), to_matrix(T.value(p)));
  };
  if (sample.empty()) throw ArgumentError("decomposability_probe: empty sample");
  const EigenStructure ref = structure_at(sample.front());
  for (const auto& cs : ref.spaces) {
    out.ranks.push_back(static_cast<int>(cs.basis.cols()));
    out.eigenvalues.push_back(cs.eigenvalue);
    out.all_nondegenerate = out.all_nondegenerate && cs.nondegenerate;
  }
  bool structure_stable = true;
  for (const Point& p : sample) {
    const EigenStructure s = structure_at(p);
    double spread = 0.0;
    if (s.spaces.size() != ref.spaces.size()) {
      structure_stable = false;
      spread = std::numeric_limits<double>::infinity();
    } else {
      for (std::size_t k = 0; k < s.spaces.size(); ++k) {
        spread = std::max(spread, std::abs(s.spaces[k].eigenvalue - ref.spaces[k].eigenvalue));
        if (s.spaces[k].basis.cols() != ref.spaces[k].basis.cols()) structure_stable = false;
        if (!s.spaces[k].nondegenerate) out.all_nondegenerate = false;
      }
    }
    out.eigenvalue_spread = std::max(out.eigenvalue_spread, spread);
  }
  b.metric("eigenvalue_spread", out.eigenvalue_spread);
  b.metric("clusters", static_cast<double>(ref.spaces.size()));

  if (ref.spaces.size() <= 1) {
    out.trivial = true;
    out.verdict = "trivial tensor, no splitting";
    for (const Point& p : sample) b.add(p, 0.0);
    b.note(out.verdict);
    out.report = b.finish();
    return out;
  }

  // (b) transport of the splitting forms g(P_k ., .) along random segments.
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, sample.size() - 1);
  int done = 0;
  for (int attempt = 0; done < paths && attempt < 50 * paths; ++attempt) {
    const Point a = sample[pick(rng)];
    const Point e = sample[pick(rng)];
    if (a == e) continue;
    const CurveSegment seg = line_segment(c.chart, a, e);
    bool inside = true;
    for (int k = 0; k <= 32 && inside; ++k) inside = c.chart->contains(seg.point(k / 32.0));
    if (!inside) continue;
    Eigen::MatrixXd H;
    try {
      H = transport_operator(c.metric, seg, steps);
    } catch (const DomainError&) {
      continue;
    }
    const Eigen::MatrixXd Hi = H.inverse();
    const EigenStructure sa = structure_at(a);
    const EigenStructure se = structure_at(e);
    if (!sa.complete || !se.complete || sa.spaces.size() != se.spaces.size()) {
      b.add(e, std::numeric_limits<double>::infinity());
      ++done;
      continue;
    }
    const Eigen::MatrixXd Ga = to_matrix(c.metric.value(a));
    const Eigen::MatrixXd Ge = to_matrix(c.metric.value(e));
    double defect = 0.0;
    for (std::size_t k = 0; k < sa.spaces.size(); ++k) {
      const Eigen::MatrixXd Fa = Ga * sa.spaces[k].projector;
      const Eigen::MatrixXd Fe = Ge * se.spaces[k].projector;
      defect = std::max(defect, (Hi.transpose() * Fa * Hi - Fe).cwiseAbs().maxCoeff());
    }
    out.projector_transport_defect = std::max(out.projector_transport_defect, defect);
    b.add(e, defect);
    ++done;
  }
  b.metric("paths", static_cast<double>(done));
  b.metric("projector_transport_defect", out.projector_transport_defect);

  std::string why;
  if (!structure_stable || out.eigenvalue_spread >= 1e-6) why = "eigenvalues of the tensor are not constant";
  if (!out.all_nondegenerate) why = "a characteristic space is degenerate";
  if (done < paths) why = "could not build enough transport paths inside the chart";
  out.report = b.finish();
  if (!why.empty()) {
    out.report.fail_with(why);
    out.verdict = why;
    return out;
  }
  out.decomposable = out.report.passed();
  std::string ranks;
  for (int r : out.ranks) ranks += (ranks.empty() ? "" : ",") + std::to_string(r);
  out.verdict = out.decomposable ? "decomposable, ranks (" + ranks + ")" : "projectors are not parallel";
  out.report.note = out.verdict;
  return out;
}

// ---------------------------------------------------------------------------
// Invariant splittings of finite matrix sets
// ---------------------------------------------------------------------------

struct SplittingSearch {
  bool found = false;
  Eigen::MatrixXd V1;  // columns: basis of an invariant nondegenerate subspace
  Eigen::MatrixXd V2;  // its form-orthogonal complement
  int samples = 0;
  int degenerate_invariant = 0;   // proper invariant subspaces met that were degenerate
  int commutant_dimension = -1;   // form-self-adjoint commutant; -1 if not computed
  bool certified_none = false;    // commutant is the scalars: no nondegenerate splitting exists
  std::string outcome;
};

namespace detail {

inline Eigen::MatrixXd orthonormal_span(const Eigen::MatrixXd& M, double rel_tol = 1e-8) {
  if (M.cols() == 0) return M;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < s.size(); ++i) rank += s(i) > rel_tol * std::max(1.0, s(0)) ? 1 : 0;
  return svd.matrixU().leftCols(rank);
}

/// Smallest subspace containing the columns of V and invariant under all matrices.
inline Eigen::MatrixXd orbit_closure(const std::vector<Eigen::MatrixXd>& mats, const Eigen::MatrixXd& V) {
  Eigen::MatrixXd W = orthonormal_span(V);
  for (int it = 0; it < 64; ++it) {
    Eigen::MatrixXd grown = W;
    for (const auto& M : mats) {
      Eigen::MatrixXd next(grown.rows(), grown.cols() + W.cols());
      next << grown, M * W;
      grown = next;
    }
    const Eigen::MatrixXd U = orthonormal_span(grown);
    if (U.cols() == W.cols()) return U;
    W = U;
  }
  return W;
}

}  // namespace detail

/// Self-adjoint (for the form) elements of the commutant of the matrix set.
inline int self_adjoint_commutant_dimension(const std::vector<Eigen::MatrixXd>& mats, const Eigen::MatrixXd& form) {
  const int n = static_cast<int>(form.rows());
  const int nn = n * n;
  // vec(X) column-major; vec(M X - X M) = (I (x) M - M^T (x) I) vec X,
  // vec(F X - X^T F) = (I (x) F) vec X - (F^T (x) I) P vec X with P the transpose permutation.
  std::vector<Eigen::MatrixXd> blocks;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  auto kron = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd k(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
    return k;
  };
  for (const auto& M : mats) blocks.push_back(kron(I, M) - kron(M.transpose(), I));
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(nn, nn);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) P(i * n + j, j * n + i) = 1.0;
  }
  blocks.push_back(kron(I, form) - kron(form.transpose(), I) * P);
  Eigen::Index rows = 0;
  for (const auto& b : blocks) rows += b.rows();
  Eigen::MatrixXd S(rows, nn);
  Eigen::Index r = 0;
  for (const auto& b : blocks) {
    S.middleRows(r, b.rows()) = b;
    r += b.rows();
  }
  return static_cast<int>(detail::null_space(S, 1e-10).cols());
}

/// Searches for V1 (+) V2 = R^n, both invariant, form-orthogonal and
/// nondegenerate. Seeds are eigenvectors of 64 random form-self-adjoint
/// elements of the algebra spanned by words of length <= 4; each seed's orbit
/// closure is tested. If nothing is found, the self-adjoint commutant is
/// computed; dimension 1 certifies that no such splitting exists.
inline SplittingSearch invariant_splitting_search(const std::vector<Eigen::MatrixXd>& mats, const Eigen::MatrixXd& form,
                                                  std::uint64_t seed = 42, int samples = 64, int max_word = 4) {
  if (mats.empty()) throw ArgumentError("invariant_splitting_search: no matrices");
  const int n = static_cast<int>(form.rows());
  if (form.cols() != n || (form - form.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw ArgumentError("invariant_splitting_search: form must be square and symmetric");
  }
  const double cond = condition_number(form);
  if (!(cond <= kDegenerateCondition)) throw DegeneracyError("invariant_splitting_search: form is degenerate", cond);
  for (const auto& M : mats) {
    if (M.rows() != n || M.cols() != n) throw ArgumentError("invariant_splitting_search: matrix of the wrong size");
    if ((M.transpose() * form * M - form).cwiseAbs().maxCoeff() > 1e-10) {
      throw ArgumentError("invariant_splitting_search: a matrix does not preserve the form");
    }
  }
  const Eigen::MatrixXd Finv = form.inverse();
  auto adjoint = [&](const Eigen::MatrixXd& X) -> Eigen::MatrixXd { return Finv * X.transpose() * form; };

  // Words of length <= max_word in the generators and their inverses.
  std::vector<Eigen::MatrixXd> letters;
  for (const auto& M : mats) {
    letters.push_back(M);
    letters.push_back(adjoint(M));  // inverse of an isometry
  }
  std::vector<Eigen::MatrixXd> words{Eigen::MatrixXd::Identity(n, n)};
  std::vector<Eigen::MatrixXd> frontier = words;
  for (int len = 1; len <= max_word; ++len) {
    std::vector<Eigen::MatrixXd> next;
    for (const auto& w : frontier) {
      for (const auto& l : letters) next.push_back(l * w);
    }
    words.insert(words.end(), next.begin(), next.end());
    frontier = std::move(next);
  }

  SplittingSearch out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int s = 0; s < samples && !out.found; ++s) {
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, n);
    for (const auto& w : words) X += nd(rng) * w;
    const Eigen::MatrixXd S = X + adjoint(X);
    ++out.samples;
    Eigen::EigenSolver<Eigen::MatrixXd> es(S, true);
    const Eigen::MatrixXcd V = es.eigenvectors();
    for (int k = 0; k < n && !out.found; ++k) {
      for (int part = 0; part < 2 && !out.found; ++part) {
        const Eigen::VectorXd v = part == 0 ? Eigen::VectorXd(V.col(k).real()) : Eigen::VectorXd(V.col(k).imag());
        if (v.norm() < 1e-10) continue;
        const Eigen::MatrixXd W = detail::orbit_closure(mats, v);
        if (W.cols() == 0 || W.cols() == n) continue;
        const double gc = condition_number(W.transpose() * form * W);
        if (!(gc <= 1e8)) {
          ++out.degenerate_invariant;
          continue;
        }
        // Complement: form-orthogonal of W, invariant because the matrices are isometries.
        const Eigen::MatrixXd C = detail::null_space(W.transpose() * form, 1e-10);
        out.found = true;
        out.V1 = W;
        out.V2 = detail::orthonormal_span(C);
      }
    }
  }
  if (out.found) {
    out.outcome = "splitting found, dimensions " + std::to_string(out.V1.cols()) + " + " + std::to_string(out.V2.cols());
    return out;
  }
  out.commutant_dimension = self_adjoint_commutant_dimension(mats, form);
  out.certified_none = out.commutant_dimension == 1;
  out.outcome = out.certified_none ? "no nondegenerate splitting (certified: self-adjoint commutant is the scalars)"
                                   : "none found up to search depth";
  return out;
}

}  // namespace conegeo
