#pragma once

// Residual operators for the third-order equation on alpha, the Obata
// equation, the geodesic-equivalence equation on symmetric T, and projective
// vector fields.
//
// Slot conventions: DDD alpha(i, j, k) has k as the outermost derivative
// (see geometry.hpp). For a (0,2) tensor, DT(i, j, k) = (D_k T)(i, j); the
// invariant form DT(X, Y, Z) used in the comments means (D_X T)(Y, Z).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "conegeo/chart.hpp"
#include "conegeo/errors.hpp"
#include "conegeo/geometry.hpp"
#include "conegeo/report.hpp"
#include "conegeo/tensor.hpp"

namespace conegeo {

/// DDD alpha + c (2 D alpha (x) g + ...) = 0 for the triple (g, alpha, c).
struct GTProblem {
  MetricField g;
  ScalarField alpha;
  double c = 1.0;
};

/// Left side of the equation at p:
///   alpha_{,ijk} + c (2 alpha_k g_ij + alpha_j g_ki + alpha_i g_kj).
inline RealTensor gt_tensor(const GTProblem& pr, const Point& p) {
  if (pr.alpha.chart != pr.g.chart) throw ArgumentError("gt_tensor: alpha and g live on different charts");
  const auto sd = scalar_derivatives(pr.g, pr.alpha, p, 3);
  const int n = sd.d3.dim();
  const RealTensor d3 = values_of(sd.d3);
  const RealTensor d1 = values_of(sd.d1);
  const RealTensor g = values_of(sd.connection.g);
  RealTensor out(n, 3, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        out(i, j, k) = d3(i, j, k) + pr.c * (2.0 * d1(k) * g(i, j) + d1(j) * g(k, i) + d1(i) * g(k, j));
      }
    }
  }
  return out;
}

inline double gt_residual(const GTProblem& pr, const Point& p) { return max_abs(gt_tensor(pr, p)); }

inline ResidualReport gt_report(const GTProblem& pr, std::span<const Point> sample, double tol = kParallelTolerance,
                                std::string case_id = {}) {
  ReportBuilder b(std::move(case_id), "gt_residual", tol);
  b.metric("c", pr.c);
  for (const Point& p : sample) b.add(p, gt_residual(pr, p));
  return b.finish();
}

/// max |DD alpha + alpha g|.
inline double obata_residual(const MetricField& g, const ScalarField& alpha, const Point& p) {
  const auto sd = scalar_derivatives(g, alpha, p, 2);
  const RealTensor h = values_of(sd.d2);
  const RealTensor gv = values_of(sd.connection.g);
  const double a = sd.alpha.value();
  double m = 0.0;
  for (std::size_t f = 0; f < h.size(); ++f) m = std::max(m, std::abs(h.flat(f) + a * gv.flat(f)));
  return m;
}

inline ResidualReport obata_report(const MetricField& g, const ScalarField& alpha, std::span<const Point> sample,
                                   double tol = kParallelTolerance, std::string case_id = {}) {
  ReportBuilder b(std::move(case_id), "obata_residual", tol);
  for (const Point& p : sample) b.add(p, obata_residual(g, alpha, p));
  return b.finish();
}

/// Laplacian eigen-law: max |Delta alpha - lambda alpha| relative to max |alpha|.
inline ResidualReport eigenfunction_report(const MetricField& g, const ScalarField& alpha, double lambda,
                                           std::span<const Point> sample, double tol = kParallelTolerance,
                                           std::string case_id = {}) {
  ReportBuilder b(std::move(case_id), "laplacian_eigen", tol);
  b.metric("lambda", lambda);
  for (const Point& p : sample) b.add(p, std::abs(laplacian_at(g, alpha, p) - lambda * alpha.value(p)));
  return b.finish();
}

/// The c = 0 case: alpha solves the equation iff its Hessian is parallel.
/// Also reports the Hessian eigenvalue range at the sampled minimum and
/// maximum of alpha (nonnegative at minima, nonpositive at maxima).
inline ResidualReport c0_parallel_check(const MetricField& g, const ScalarField& alpha, std::span<const Point> sample,
                                        double tol = kParallelTolerance, std::string case_id = {}) {
  ReportBuilder b(std::move(case_id), "c0_parallel", tol);
  const GTProblem pr{g, alpha, 0.0};
  double worst = 0.0;
  std::size_t imin = 0;
  std::size_t imax = 0;
  std::vector<double> values;
  values.reserve(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    worst = std::max(worst, gt_residual(pr, sample[i]));
    values.push_back(alpha.value(sample[i]));
    if (values[i] < values[imin]) imin = i;
    if (values[i] > values[imax]) imax = i;
  }
  if (!(worst <= tol)) {
    b.fail_with("precondition violated: alpha does not solve the equation with c = 0");
    for (const Point& p : sample) b.add(p, gt_residual(pr, p));
    return b.finish();
  }
  for (const Point& p : sample) {
    b.add(p, max_abs(values_of(scalar_derivatives(g, alpha, p, 3).d3)));
  }
  if (!sample.empty()) {
    auto eig = [&](const Point& p) {
      const Eigen::MatrixXd G = to_matrix(g.value(p));
      const Eigen::MatrixXd H = to_matrix(hessian_at(g, alpha, p));
      Eigen::EigenSolver<Eigen::MatrixXd> es(G.inverse() * H, false);
      const Eigen::VectorXd re = es.eigenvalues().real();
      return std::pair{re.minCoeff(), re.maxCoeff()};
    };
    const auto [lo_min, hi_min] = eig(sample[imin]);
    const auto [lo_max, hi_max] = eig(sample[imax]);
    b.metric("hessian_min_eig_at_min", lo_min);
    b.metric("hessian_max_eig_at_min", hi_min);
    b.metric("hessian_min_eig_at_max", lo_max);
    b.metric("hessian_max_eig_at_max", hi_max);
  }
  return b.finish();
}

/// (g, alpha, c) -> (c g, alpha, 1); the two residual tensors coincide.
inline GTProblem rescale_equivalence(const GTProblem& pr) {
  if (pr.c == 0.0) throw ArgumentError("rescale_equivalence: c must be nonzero");
  return GTProblem{scaled(pr.g, pr.c), pr.alpha, 1.0};
}

/// Metric plus symmetric (0,2) candidate for the geodesic-equivalence equation.
struct MobilityCandidate {
  MetricField g;
  TensorField T;

  /// tr T = g^{ab} T_ab, recomputed on every call.
  Jet trace_at(JetSpan x) const {
    const JetTensor gj = g.fn(x);
    const JetTensor tj = T.fn(x);
    return trace(gj, tj);
  }

  static Jet trace(const JetTensor& g, const JetTensor& t) {
    const JetTensor ginv = inverse(g);
    const int n = g.dim();
    Jet s = ginv(0, 0) * t(0, 0);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        if (a != 0 || b != 0) s += ginv(a, b) * t(b, a);
      }
    }
    return s;
  }

  double trace_value(const Point& p) const {
    g.chart->require(p);
    const auto x = seed_point(p);
    return trace_at(x).value();
  }
};

/// DT(i, j, k) - 1/2 (d_i tr T g_jk + d_j tr T g_ik); zero iff T solves the
/// geodesic-equivalence equation (D_X T)(Y, Z) = 1/2 (d tr T(Y) g(X, Z) + d tr T(Z) g(X, Y)).
inline RealTensor basic1_tensor(const MobilityCandidate& m, const Point& p) {
  if (m.T.chart != m.g.chart) throw ArgumentError("basic1: T and g live on different charts");
  m.g.chart->require(p);
  const auto seeds = seed_point(p);
  const Connection c = connection_from(m.g.fn(seeds));
  const JetTensor t = m.T.fn(seeds);
  const JetTensor DT = covariant_derivative_jets(t, c.gamma);
  const Jet tr = MobilityCandidate::trace(c.g, t);
  const int n = c.dim();
  std::vector<double> dtr(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) dtr[static_cast<std::size_t>(i)] = tr.d(i);
  const RealTensor g = values_of(c.g);
  RealTensor out(n, 3, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        out(i, j, k) = DT(i, j, k).value() -
                       0.5 * (dtr[static_cast<std::size_t>(i)] * g(j, k) + dtr[static_cast<std::size_t>(j)] * g(i, k));
      }
    }
  }
  return out;
}

inline double basic1_residual(const MobilityCandidate& m, const Point& p) { return max_abs(basic1_tensor(m, p)); }

inline ResidualReport basic1_report(const MobilityCandidate& m, std::span<const Point> sample,
                                    double tol = kParallelTolerance, std::string case_id = {}) {
  ReportBuilder b(std::move(case_id), "basic1_residual", tol);
  for (const Point& p : sample) b.add(p, basic1_residual(m, p));
  return b.finish();
}

/// T_ij = (det g_bar / det g)^{1/(n+1)} g_bar^{ab} g_ai g_bj.
inline MobilityCandidate metric_to_candidate(const MetricField& g, const MetricField& g_bar) {
  if (g.chart != g_bar.chart) throw ArgumentError("metric_to_candidate: metrics live on different charts");
  const int n = g.dimension();
  TensorField T{g.chart, 2, Symmetry::symmetric, [gf = g.fn, bf = g_bar.fn, n](JetSpan x) {
                  const JetTensor G = gf(x);
                  const JetTensor B = bf(x);
                  const JetTensor Binv = inverse(B);
                  const Jet factor = exp((log_abs_det(B) - log_abs_det(G)) / static_cast<double>(n + 1));
                  const JetTensor GBinv = matmul(G, Binv);
                  JetTensor t = matmul(GBinv, G);
                  for (std::size_t f = 0; f < t.size(); ++f) t.flat(f) *= factor;
                  return t;
                }};
  return MobilityCandidate{g, std::move(T)};
}

/// T = L_X g - tr(L_X g) g / (n + 1).
inline TensorField projective_tensor_field(const VectorFieldOnChart& X, const MetricField& g) {
  if (X.chart != g.chart) throw ArgumentError("projective_tensor: field and metric live on different charts");
  const int n = g.dimension();
  return TensorField{g.chart, 2, Symmetry::symmetric, [xf = X.fn, gf = g.fn, n](JetSpan x) {
                       const auto Xj = xf(x);
                       const JetTensor G = gf(x);
                       JetTensor L = lie_derivative_metric_jets(Xj, G);
                       const Jet tr = MobilityCandidate::trace(G, L);
                       for (int i = 0; i < n; ++i) {
                         for (int j = 0; j < n; ++j) L(i, j) -= tr * G(i, j) / static_cast<double>(n + 1);
                       }
                       return L;
                     }};
}

inline MobilityCandidate projective_tensor(const VectorFieldOnChart& X, const MetricField& g) {
  return MobilityCandidate{g, projective_tensor_field(X, g)};
}

/// Spread of tr T over the sample divided by max(1, max |tr T|). The field is
/// affine (for a projective X) when this is below 1e-8.
inline double trace_spread(const MobilityCandidate& m, std::span<const Point> sample) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double mag = 0.0;
  for (const Point& p : sample) {
    const double t = m.trace_value(p);
    lo = std::min(lo, t);
    hi = std::max(hi, t);
    mag = std::max(mag, std::abs(t));
  }
  if (sample.empty()) return 0.0;
  return (hi - lo) / std::max(1.0, mag);
}

inline bool is_affine(const MobilityCandidate& m, std::span<const Point> sample, double tol = 1e-8) {
  return trace_spread(m, sample) < tol;
}

/// T = DD alpha + 2 alpha g, the slice tensor attached to a solution alpha
/// (twice the restriction of the parallel cone tensor).
inline TensorField hessian_candidate(const MetricField& g, const ScalarField& alpha) {
  return TensorField{g.chart, 2, Symmetry::symmetric,
                     pointwise_tensor(g.chart, [g, alpha](JetSpan seeds, const Point&) {
                       const Connection c = connection_from(g.fn(seeds));
                       JetTensor t(c.dim(), 0);
                       t.flat(0) = alpha.fn(seeds);
                       const JetTensor d1 = covariant_derivative_jets(t, c.gamma);
                       JetTensor h = covariant_derivative_jets(d1, c.gamma);
                       for (std::size_t f = 0; f < h.size(); ++f) h.flat(f) += 2.0 * t.flat(0) * c.g.flat(f);
                       return h;
                     })};
}

/// For T = (DD alpha + 2 alpha g) / 2:  max |2 DT(X,Y,Z) + D alpha(Y) g(X,Z) + D alpha(Z) g(X,Y)|.
inline double eq3_residual(const MetricField& g, const ScalarField& alpha, const Point& p) {
  const auto sd = scalar_derivatives(g, alpha, p, 3);
  const int n = sd.d3.dim();
  const RealTensor d3 = values_of(sd.d3);
  const RealTensor d1 = values_of(sd.d1);
  const RealTensor gv = values_of(sd.connection.g);
  // 2 DT(i, j, k) = alpha_{,ijk} + 2 alpha_k g_ij.
  double m = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const double twoDT = d3(i, j, k) + 2.0 * d1(k) * gv(i, j);
        m = std::max(m, std::abs(twoDT + d1(i) * gv(k, j) + d1(j) * gv(k, i)));
      }
    }
  }
  return m;
}

struct KillingCombination {
  bool found = false;
  double k = 0.0;
  double k_prime = 0.0;
  double l = 0.0;
  bool killing = false;
  double fit_residual = 0.0;      // smallest relative singular value
  double verify_residual = 0.0;   // max |L_Z g - (n+1) l g| at fresh points
  ResidualReport report;
};

namespace detail {

inline Eigen::VectorXd stacked_components(const TensorField& t, std::span<const Point> sample) {
  std::vector<double> v;
  for (const Point& p : sample) {
    const RealTensor a = t.value(p);
    v.insert(v.end(), a.data().begin(), a.data().end());
  }
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Null space basis of A (columns), in reduced row-echelon form, first pivot 1.
inline Eigen::MatrixXd null_space_rref(const Eigen::MatrixXd& A, double rel_cut, Eigen::VectorXd* singular = nullptr) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::VectorXd s = svd.singularValues();
  if (singular != nullptr) *singular = s;
  const int cols = static_cast<int>(A.cols());
  const double top = s.size() > 0 ? s(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < s.size(); ++i) rank += (s(i) > rel_cut * top && top > 0.0) ? 1 : 0;
  Eigen::MatrixXd N = svd.matrixV().rightCols(cols - rank);
  // Row-reduce N^T so the basis is canonical.
  Eigen::MatrixXd R = N.transpose();
  int row = 0;
  for (int col = 0; col < cols && row < R.rows(); ++col) {
    Eigen::Index piv;
    const double best = R.col(col).tail(R.rows() - row).cwiseAbs().maxCoeff(&piv);
    if (best < 1e-12) continue;
    R.row(row).swap(R.row(row + piv));
    R.row(row) /= R(row, col);
    for (int r = 0; r < R.rows(); ++r) {
      if (r != row) R.row(r) -= R(r, col) * R.row(row);
    }
    ++row;
  }
  return R.transpose();
}

}  // namespace detail

/// Looks for k T + k' T' = l g among the projective tensors of X and Y; if
/// found, checks L_{kX + k'Y} g = (n + 1) l g at fresh points.
inline KillingCombination killing_combination_search(const VectorFieldOnChart& X, const VectorFieldOnChart& Y,
                                                     const MetricField& g, std::span<const Point> fit_sample,
                                                     std::span<const Point> fresh_sample, std::string case_id = {}) {
  const int n = g.dimension();
  const TensorField T = projective_tensor_field(X, g);
  const TensorField Tp = projective_tensor_field(Y, g);
  Eigen::MatrixXd A(static_cast<Eigen::Index>(fit_sample.size()) * n * n, 3);
  A.col(0) = detail::stacked_components(T, fit_sample);
  A.col(1) = detail::stacked_components(Tp, fit_sample);
  A.col(2) = -detail::stacked_components(metric_as_tensor(g), fit_sample);
  Eigen::VectorXd s;
  const Eigen::MatrixXd N = detail::null_space_rref(A, 1e-10, &s);

  KillingCombination out;
  ReportBuilder b(std::move(case_id), "killing_combination", 1e-8);
  out.fit_residual = s(0) > 0 ? s(s.size() - 1) / s(0) : 0.0;
  b.metric("fit_residual", out.fit_residual);
  if (N.cols() == 0 || out.fit_residual >= 1e-8) {
    b.note("no linear relation found");
    b.metric("found", 0.0);
    for (const Point& p : fresh_sample) b.add(p, 0.0);
    out.report = b.finish();
    return out;
  }
  out.found = true;
  out.k = N(0, 0);
  out.k_prime = N(1, 0);
  out.l = N(2, 0);
  out.killing = std::abs(out.l) < 1e-8;
  const double k = out.k;
  const double kp = out.k_prime;
  const VectorFieldOnChart Z{g.chart, "kX+k'Y", [xf = X.fn, yf = Y.fn, k, kp](JetSpan x) {
                               auto a = xf(x);
                               const auto c = yf(x);
                               for (std::size_t i = 0; i < a.size(); ++i) a[i] = k * a[i] + kp * c[i];
                               return a;
                             }};
  for (const Point& p : fresh_sample) {
    const RealTensor L = lie_derivative_metric(Z, g, p);
    const RealTensor G = g.value(p);
    double m = 0.0;
    for (std::size_t f = 0; f < L.size(); ++f) m = std::max(m, std::abs(L.flat(f) - (n + 1) * out.l * G.flat(f)));
    out.verify_residual = std::max(out.verify_residual, m);
    b.add(p, m);
  }
  b.metric("found", 1.0);
  b.metric("k", out.k);
  b.metric("k_prime", out.k_prime);
  b.metric("l", out.l);
  b.note(out.killing ? "combination is Killing" : "combination is homothetic");
  out.report = b.finish();
  return out;
}

struct MobilityRank {
  int rank = 0;
  std::vector<double> singular_values;
  std::vector<std::size_t> rejected;  // candidates failing the geodesic-equivalence equation
  std::vector<ResidualReport> reports;
};

/// Numerical rank of the stacked candidate components: a lower bound for the
/// degree of mobility. Candidates with basic1 residual above 1e-8 are rejected.
inline MobilityRank mobility_rank(const MetricField& g, std::span<const TensorField> candidates,
                                  std::span<const Point> sample, std::string case_id = {}) {
  MobilityRank out;
  std::vector<Eigen::VectorXd> rows;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const MobilityCandidate m{g, candidates[i]};
    ResidualReport r = basic1_report(m, sample, 1e-8, case_id);
    r.check = "mobility_candidate_" + std::to_string(i);
    if (r.passed()) {
      rows.push_back(detail::stacked_components(candidates[i], sample));
    } else {
      out.rejected.push_back(i);
      r.note = "candidate rejected";
    }
    out.reports.push_back(std::move(r));
  }
  if (rows.empty()) return out;
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) M.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const Eigen::VectorXd s = svd.singularValues();
  for (int i = 0; i < s.size(); ++i) {
    out.singular_values.push_back(s(i));
    if (s(i) > 1e-8 * s(0)) ++out.rank;
  }
  return out;
}

}  // namespace conegeo
