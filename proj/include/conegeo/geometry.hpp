#pragma once

// Levi-Civita calculus on a chart: Christoffel symbols, curvature, covariant
// derivatives of scalars and covariant tensors, Lie derivative of the metric.
//
// Conventions (fixed here and used throughout):
//  * gamma(k, i, j) = Gamma^k_ij.
//  * Covariant derivatives append the differentiation direction as the LAST
//    index: (DT)(i1..ik, m) = d_m T(i1..ik) - sum_s Gamma^p_{m i_s} T(..p..).
//    So DDD alpha(i, j, k) = alpha_{,ijk}, with k the outermost derivative.
//  * R(X,Y)Z = D_X D_Y Z - D_Y D_X Z - D_[X,Y] Z, components
//    R(d_i, d_j) d_k = R^l_{kij} d_l stored as up(l, k, i, j); the unit round
//    sphere then satisfies R(X,Y)Z = g(Y,Z)X - g(X,Z)Y.
//  * Laplacian = trace_g of the Hessian (negative spectrum on spheres).

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "conegeo/chart.hpp"
#include "conegeo/errors.hpp"
#include "conegeo/jet.hpp"
#include "conegeo/tensor.hpp"

namespace conegeo {

/// Metric, inverse metric and Christoffel symbols as jets at one point.
struct Connection {
  JetTensor g;
  JetTensor ginv;
  JetTensor gamma;  // gamma(k, i, j) = Gamma^k_ij
  double condition = 1.0;

  int dim() const { return g.dim(); }
};

/// Christoffel symbols from metric jets; one order shallower than `g`.
inline JetTensor christoffel_from(const JetTensor& g, const JetTensor& ginv) {
  const int n = g.dim();
  const int jd = g.flat(0).dimension();
  if (min_order(g) < 1) throw CapabilityError("christoffel symbols need metric jets of order >= 1");
  // dg(l, i, j) = d_l g_ij
  JetTensor dg(n, 3);
  for (int l = 0; l < n; ++l) {
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        dg(l, i, j) = differentiate(g(i, j), l);
        dg(l, j, i) = dg(l, i, j);
      }
    }
  }
  JetTensor first(n, 3);  // first(l, i, j) = Gamma_{l,ij}
  for (int l = 0; l < n; ++l) {
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        first(l, i, j) = 0.5 * (dg(i, j, l) + dg(j, i, l) - dg(l, i, j));
        first(l, j, i) = first(l, i, j);
      }
    }
  }
  JetTensor gamma(n, 3);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        Jet s(jd, 0.0);
        for (int l = 0; l < n; ++l) s += ginv(k, l) * first(l, i, j);
        gamma(k, i, j) = s;
        gamma(k, j, i) = std::move(s);
      }
    }
  }
  return gamma;
}

inline Connection connection_from(JetTensor g) {
  Connection c;
  c.ginv = inverse(g, &c.condition);
  c.gamma = christoffel_from(g, c.ginv);
  c.g = std::move(g);
  return c;
}

/// Full connection data at a point. Throws DegeneracyError (carrying the
/// condition number) when the metric matrix has condition number > 1e12.
inline Connection connection_at(const MetricField& g, const Point& p, int order = kJetOrder) {
  return connection_from(g.at(p, order));
}

/// Gamma^k_ij at p as jets (exact to order 2).
inline JetTensor christoffel_at(const MetricField& g, const Point& p) { return connection_at(g, p).gamma; }

/// Christoffel values only, for integrators: first-order jets, plain inverse
/// after the same degeneracy check as the jet path.
inline RealTensor christoffel_values(const MetricField& g, const Point& p) {
  const JetTensor gj = g.at(p, 1);
  const int n = gj.dim();
  Eigen::MatrixXd g0(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g0(i, j) = gj(i, j).value();
  }
  const double cond = condition_number(g0);
  if (!(cond <= kDegenerateCondition)) {
    throw DegeneracyError("metric is degenerate (condition number " + std::to_string(cond) + ")", cond);
  }
  const Eigen::MatrixXd inv = g0.inverse();
  RealTensor gamma(n, 3, 0.0);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) {
          s += inv(k, l) * 0.5 * (gj(j, l).d(i) + gj(i, l).d(j) - gj(i, j).d(l));
        }
        gamma(k, i, j) = s;
        gamma(k, j, i) = s;
      }
    }
  }
  return gamma;
}

/// One covariant derivative of a covariant tensor given as jets at a point.
/// The new index (the direction) is appended last.
inline JetTensor covariant_derivative_jets(const JetTensor& t, const JetTensor& gamma) {
  const int n = gamma.dim();
  const int k = t.rank();
  if (min_order(t) < 1) {
    throw CapabilityError("covariant derivative of a tensor whose jets have no exact first derivatives");
  }
  JetTensor out(n, k + 1);
  std::vector<int> idx;
  std::vector<int> sub(static_cast<std::size_t>(k));
  for (std::size_t pos = 0; pos < out.size(); ++pos) {
    idx = out.unflatten(pos);
    const int m = idx.back();
    auto t_at = [&](const std::vector<int>& ii) -> const Jet& {
      std::size_t f = 0;
      for (int r = 0; r < k; ++r) f = f * static_cast<std::size_t>(n) + static_cast<std::size_t>(ii[static_cast<std::size_t>(r)]);
      return t.flat(f);
    };
    for (int r = 0; r < k; ++r) sub[static_cast<std::size_t>(r)] = idx[static_cast<std::size_t>(r)];
    Jet acc = differentiate(t_at(sub), m);
    for (int s = 0; s < k; ++s) {
      const int is = idx[static_cast<std::size_t>(s)];
      for (int p = 0; p < n; ++p) {
        sub[static_cast<std::size_t>(s)] = p;
        acc -= gamma(p, m, is) * t_at(sub);
      }
      sub[static_cast<std::size_t>(s)] = is;
    }
    out.flat(pos) = std::move(acc);
  }
  return out;
}

/// D of a tensor field, as a field (evaluated pointwise, composable).
inline TensorField covariant_derivative(const TensorField& t, const MetricField& g) {
  if (t.chart != g.chart) throw ArgumentError("covariant_derivative: tensor and metric live on different charts");
  return TensorField{t.chart, t.valence + 1, Symmetry::none,
                     pointwise_tensor(t.chart, [t, g](JetSpan seeds, const Point&) {
                       const Connection c = connection_from(g.fn(seeds));
                       return covariant_derivative_jets(t.fn(seeds), c.gamma);
                     })};
}

inline TensorField covariant_derivative(const ScalarField& a, const MetricField& g) {
  return covariant_derivative(scalar_as_tensor(a), g);
}

/// Jets of alpha and its first three covariant derivatives at one point.
struct ScalarDerivatives {
  Connection connection;
  Jet alpha;
  JetTensor d1;  // D alpha (order 2)
  JetTensor d2;  // DD alpha (order 1)
  JetTensor d3;  // DDD alpha (order 0)
};

inline ScalarDerivatives scalar_derivatives(const MetricField& g, const ScalarField& a, const Point& p,
                                            int depth = 3) {
  if (a.chart != g.chart) throw ArgumentError("scalar and metric live on different charts");
  g.chart->require(p);
  const auto seeds = seed_point(p);
  ScalarDerivatives out;
  out.connection = connection_from(g.fn(seeds));
  out.alpha = a.fn(seeds);
  JetTensor t(p.size() > 0 ? static_cast<int>(p.size()) : 1, 0);
  t.flat(0) = out.alpha;
  if (depth >= 1) out.d1 = covariant_derivative_jets(t, out.connection.gamma);
  if (depth >= 2) out.d2 = covariant_derivative_jets(out.d1, out.connection.gamma);
  if (depth >= 3) out.d3 = covariant_derivative_jets(out.d2, out.connection.gamma);
  return out;
}

inline RealTensor hessian_at(const MetricField& g, const ScalarField& a, const Point& p) {
  return values_of(scalar_derivatives(g, a, p, 2).d2);
}

/// trace_g(DD alpha).
inline double laplacian_at(const MetricField& g, const ScalarField& a, const Point& p) {
  const auto sd = scalar_derivatives(g, a, p, 2);
  const int n = sd.d2.dim();
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) s += sd.connection.ginv(i, j).value() * sd.d2(i, j).value();
  }
  return s;
}

struct Curvature {
  RealTensor up;    // up(l, k, i, j) = R^l_{kij}
  RealTensor down;  // down(l, k, i, j) = g_{lm} R^m_{kij}
  RealTensor g;
  RealTensor ginv;
};

inline Curvature curvature_from(const Connection& c) {
  const int n = c.dim();
  const JetTensor& G = c.gamma;
  if (min_order(G) < 1) throw CapabilityError("curvature needs metric jets of order >= 2");
  // dG(i, l, j, k) = d_i Gamma^l_jk
  RealTensor dG(n, 4, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < n; ++l) {
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) dG(i, l, j, k) = G(l, j, k).d(i);
      }
    }
  }
  const RealTensor Gv = values_of(G);
  Curvature out{RealTensor(n, 4, 0.0), RealTensor(n, 4, 0.0), values_of(c.g), values_of(c.ginv)};
  for (int l = 0; l < n; ++l) {
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          double r = dG(i, l, j, k) - dG(j, l, i, k);
          for (int m = 0; m < n; ++m) r += Gv(l, i, m) * Gv(m, j, k) - Gv(l, j, m) * Gv(m, i, k);
          out.up(l, k, i, j) = r;
        }
      }
    }
  }
  for (int l = 0; l < n; ++l) {
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          double s = 0.0;
          for (int m = 0; m < n; ++m) s += out.g(l, m) * out.up(m, k, i, j);
          out.down(l, k, i, j) = s;
        }
      }
    }
  }
  return out;
}

inline Curvature riemann_at(const MetricField& g, const Point& p) { return curvature_from(connection_at(g, p)); }

/// Ric_{kj} = R^i_{kij}.
inline RealTensor ricci_from(const Curvature& R) {
  const int n = R.up.dim();
  RealTensor ric(n, 2, 0.0);
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += R.up(i, k, i, j);
      ric(k, j) = s;
    }
  }
  return ric;
}

inline double scalar_curvature_from(const Curvature& R) {
  const RealTensor ric = ricci_from(R);
  double s = 0.0;
  for (int i = 0; i < ric.dim(); ++i) {
    for (int j = 0; j < ric.dim(); ++j) s += R.ginv(i, j) * ric(i, j);
  }
  return s;
}

/// g(R(X,Y)Y, X) / (g(X,X) g(Y,Y) - g(X,Y)^2); the plane must be nondegenerate.
inline double sectional_curvature(const Curvature& R, std::span<const double> X, std::span<const double> Y) {
  const int n = R.g.dim();
  double num = 0.0;
  for (int l = 0; l < n; ++l) {
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          num += R.down(l, k, i, j) * X[l] * Y[k] * X[i] * Y[j];
        }
      }
    }
  }
  double gxx = 0.0, gyy = 0.0, gxy = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      gxx += R.g(i, j) * X[i] * X[j];
      gyy += R.g(i, j) * Y[i] * Y[j];
      gxy += R.g(i, j) * X[i] * Y[j];
    }
  }
  const double den = gxx * gyy - gxy * gxy;
  if (den == 0.0) throw DegeneracyError("sectional curvature of a degenerate plane", std::numeric_limits<double>::infinity());
  return num / den;
}

/// Max-abs norm of Ric - (scal/n) g at p; zero iff g is Einstein there.
inline double einstein_residual(const MetricField& g, const Point& p) {
  const Curvature R = riemann_at(g, p);
  const RealTensor ric = ricci_from(R);
  const double scal = scalar_curvature_from(R);
  const int n = ric.dim();
  double m = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m = std::max(m, std::abs(ric(i, j) - scal / n * R.g(i, j)));
  }
  return m;
}

/// (L_X g)_ij = X^k d_k g_ij + g_kj d_i X^k + g_ik d_j X^k, as jets one order
/// shallower than the inputs.
inline JetTensor lie_derivative_metric_jets(std::span<const Jet> X, const JetTensor& g) {
  const int n = g.dim();
  const int jd = g.flat(0).dimension();
  std::vector<std::vector<Jet>> dX(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) dX[static_cast<std::size_t>(k)].push_back(differentiate(X[static_cast<std::size_t>(k)], i));
  }
  JetTensor out(n, 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      Jet s(jd, 0.0);
      for (int k = 0; k < n; ++k) {
        s += X[static_cast<std::size_t>(k)] * differentiate(g(i, j), k);
        s += g(k, j) * dX[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
        s += g(i, k) * dX[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
      }
      out(i, j) = s;
      out(j, i) = std::move(s);
    }
  }
  return out;
}

inline RealTensor lie_derivative_metric(const VectorFieldOnChart& X, const MetricField& g, const Point& p) {
  g.chart->require(p);
  const auto seeds = seed_point(p);
  const auto Xj = X.fn(seeds);
  return values_of(lie_derivative_metric_jets(Xj, g.fn(seeds)));
}

/// L_X g as a symmetric tensor field.
inline TensorField lie_derivative_field(const VectorFieldOnChart& X, const MetricField& g) {
  return TensorField{g.chart, 2, Symmetry::symmetric, pointwise_tensor(g.chart, [X, g](JetSpan seeds, const Point&) {
                       const auto Xj = X.fn(seeds);
                       return lie_derivative_metric_jets(Xj, g.fn(seeds));
                     })};
}

/// Max over the sample of the max-abs norm of L_X g.
inline double killing_residual(const VectorFieldOnChart& X, const MetricField& g, std::span<const Point> sample) {
  double m = 0.0;
  for (const Point& p : sample) m = std::max(m, max_abs(lie_derivative_metric(X, g, p)));
  return m;
}

struct MetricDiagnostics {
  double symmetry_defect = 0.0;
  double condition = 1.0;
  std::pair<int, int> signature{0, 0};
  bool signature_matches = false;
};

inline MetricDiagnostics diagnose_metric(const MetricField& g, const Point& p) {
  const Eigen::MatrixXd m = to_matrix(g.value(p));
  MetricDiagnostics d;
  d.symmetry_defect = (m - m.transpose()).cwiseAbs().maxCoeff();
  d.condition = condition_number(m);
  d.signature = signature_of(m);
  d.signature_matches = d.signature.first == g.p && d.signature.second == g.q;
  return d;
}

/// Max-abs of D g at p (metric compatibility; zero up to rounding).
inline double metric_compatibility_defect(const MetricField& g, const Point& p) {
  const Connection c = connection_at(g, p);
  return max_abs(values_of(covariant_derivative_jets(c.g, c.gamma)));
}

}  // namespace conegeo
