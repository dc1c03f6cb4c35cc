#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "conegeo/cone.hpp"
#include "conegeo/corpus.hpp"
#include "conegeo/transport.hpp"

using namespace conegeo;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

double gnorm2(const MetricField& g, const Point& p, const Point& v) { return detail::quadratic(g.value(p), v); }

}  // namespace

TEST(Geodesics, FlatLinesAreStraight) {
  const CorpusCase cs = make_case("flat", {2, 0});
  const GeodesicResult r = geodesic_integrate(cs.metric, {-1.0, 0.5}, {0.6, -0.8}, 1.5, 64);
  EXPECT_FALSE(r.truncated);
  EXPECT_NEAR(r.xs.back()[0], -1.0 + 0.9, 1e-14);
  EXPECT_NEAR(r.xs.back()[1], 0.5 - 1.2, 1e-14);
  EXPECT_EQ(r.energy_drift, 0.0);
}

TEST(Geodesics, EquatorClosesAfterItsLength) {
  const CorpusCase cs = round_sphere_case(2);
  // The equator is the unit circle of the chart, where the conformal factor is 1.
  const GeodesicResult r = geodesic_integrate(cs.metric, {1.0, 0.0}, {0.0, 1.0}, 2.0 * std::numbers::pi, 4096);
  ASSERT_FALSE(r.truncated);
  EXPECT_NEAR(r.xs.back()[0], 1.0, 1e-7);
  EXPECT_NEAR(r.xs.back()[1], 0.0, 1e-7);
  EXPECT_LT(r.energy_drift, 1e-10);
  const Point mid = r.xs[r.xs.size() / 2];
  EXPECT_NEAR(std::hypot(mid[0], mid[1]), 1.0, 1e-7);
}

TEST(Geodesics, NullGeodesicStaysNull) {
  const CorpusCase cs = make_case("pseudo_sphere", {1, 1});
  const Point p = cs.chart->sample(1, 5).front();
  const RealTensor g = cs.metric.value(p);
  // Null direction: g00 + 2 g01 t + g11 t^2 = 0 for v = (1, t).
  const double disc = g(0, 1) * g(0, 1) - g(0, 0) * g(1, 1);
  ASSERT_GT(disc, 0.0);
  const Point v{1.0, (-g(0, 1) + std::sqrt(disc)) / g(1, 1)};
  ASSERT_NEAR(gnorm2(cs.metric, p, v), 0.0, 1e-12);
  const GeodesicResult r = geodesic_integrate(cs.metric, p, v, 0.2, 512);
  ASSERT_GE(r.xs.size(), 2u);
  for (std::size_t k = 0; k < r.xs.size(); ++k) EXPECT_NEAR(gnorm2(cs.metric, r.xs[k], r.vs[k]), 0.0, 1e-9);
}

TEST(Geodesics, EnergyDriftShrinksWithTheStepSize) {
  const CorpusCase cs = make_case("bumpy_sphere");
  const GeodesicResult coarse = geodesic_integrate(cs.metric, {0.1, 0.2}, {1.0, 0.3}, 2.0, 32);
  const GeodesicResult fine = geodesic_integrate(cs.metric, {0.1, 0.2}, {1.0, 0.3}, 2.0, 256);
  EXPECT_GT(coarse.energy_drift, 0.0);
  EXPECT_LT(fine.energy_drift, coarse.energy_drift / 100.0);
}

TEST(Geodesics, ShootingHitsTheTarget) {
  const CorpusCase cs = round_sphere_case(2);
  const GeodesicResult r = geodesic_between(cs.metric, {0.1, -0.2}, {0.4, 0.3}, 256);
  EXPECT_EQ(r.xs.back(), (Point{0.4, 0.3}));
  EXPECT_EQ(r.curve.end(), (Point{0.4, 0.3}));
}

TEST(Geodesics, TooFewStepsIsAnArgumentError) {
  const CorpusCase cs = round_sphere_case(2);
  EXPECT_THROW(geodesic_integrate(cs.metric, {0.0, 0.0}, {1.0, 0.0}, 1.0, 8), ArgumentError);
}

TEST(Transport, FlatTransportIsTheIdentity) {
  const CorpusCase cs = make_case("flat", {2, 0});
  const CurveSegment c = coordinate_polygon(cs.chart, {{0.0, 0.0}, {1.0, 0.2}, {0.3, 1.1}});
  const Eigen::MatrixXd H = transport_operator(cs.metric, c, 256);
  EXPECT_LT((H - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Transport, PreservesTheMetricAndIsLinear) {
  const CorpusCase cs = make_case("bumpy_sphere");
  const CurveSegment c = line_segment(cs.chart, {-0.3, 0.1}, {0.5, 0.4});
  const Eigen::VectorXd w1 = vec({1.0, 0.0});
  const Eigen::VectorXd w2 = vec({0.3, -2.0});
  const Eigen::VectorXd t1 = parallel_transport(cs.metric, c, w1);
  const Eigen::VectorXd t2 = parallel_transport(cs.metric, c, w2);
  const Eigen::VectorXd t12 = parallel_transport(cs.metric, c, 2.0 * w1 - 0.5 * w2);
  EXPECT_LT((t12 - (2.0 * t1 - 0.5 * t2)).cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::MatrixXd Ga = to_matrix(cs.metric.value(c.start()));
  const Eigen::MatrixXd Gb = to_matrix(cs.metric.value(c.end()));
  EXPECT_NEAR(t1.dot(Gb * t2), w1.dot(Ga * w2), 1e-10);
  EXPECT_LT((parallel_transport_form(cs.metric, c, Ga) - Gb).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Transport, ConeMetricIsParallel) {
  const CorpusCase cs = round_sphere_case(2);
  const ConeChart cone = build_cone(cs.metric);
  const Point a = cone.lift(0.8, {0.1, 0.2});
  const Point b = cone.lift(1.6, {-0.4, 0.5});
  const CurveSegment seg = line_segment(cone.chart, a, b);
  const Eigen::MatrixXd Ga = to_matrix(cone.metric.value(a));
  const Eigen::MatrixXd Gb = to_matrix(cone.metric.value(b));
  EXPECT_LT((parallel_transport_form(cone.metric, seg, Ga) - Gb).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Transport, CartesianTensorMatchesTheCoordinateChange) {
  const CorpusCase cs = round_sphere_case(2);
  const ConeChart cone = build_cone(cs.metric);
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(3, 3);
  E(0, 0) = 1.0;
  const TensorField T = sphere_cone_cartesian_tensor(cone, E);
  const Point a = cone.lift(1.0, {0.2, -0.1});
  const Point b = cone.lift(1.7, {-0.6, 0.3});
  const CurveSegment seg = line_segment(cone.chart, a, b);
  const Eigen::MatrixXd moved = parallel_transport_form(cone.metric, seg, to_matrix(T.value(a)));
  EXPECT_LT((moved - to_matrix(T.value(b))).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(Transport, OpenCurveIsNotALoop) {
  const CorpusCase cs = round_sphere_case(2);
  EXPECT_THROW(holonomy_loop(cs.metric, line_segment(cs.chart, {0.0, 0.0}, {0.5, 0.0})), ArgumentError);
}

TEST(Holonomy, OctantRotatesByItsArea) {
  const CorpusCase cs = round_sphere_case(2);
  const HolonomySample h = holonomy_loop(cs.metric, octant_loop(cs.chart), 1024);
  const double angle = rotation_angle(h.matrix, to_matrix(cs.metric.value({0.0, 0.0})));
  EXPECT_NEAR(std::abs(angle), std::numbers::pi / 2.0, 1e-6);
  EXPECT_LE(h.isometry_defect, 10.0 * h.est_error + 1e-12);
  EXPECT_GE(h.est_error, 1e-14);
  EXPECT_EQ(h.step_count, 3 * 341);
}

TEST(Holonomy, FlatLoopsAreTrivial) {
  const CorpusCase cs = make_case("flat", {2, 0});
  const HolonomySample h = holonomy_loop(cs.metric, coordinate_polygon(cs.chart, {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}}));
  EXPECT_LT((h.matrix - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Holonomy, ConeOverTheSphereIsFlat) {
  const CorpusCase cs = round_sphere_case(2);
  const ConeChart cone = build_cone(cs.metric);
  const std::vector<Point> v{cone.lift(1.0, {0.0, 0.0}), cone.lift(1.5, {0.4, 0.0}), cone.lift(0.8, {0.1, 0.5})};
  const HolonomySample h = holonomy_loop(cone.metric, coordinate_polygon(cone.chart, v));
  EXPECT_LT((h.matrix - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Holonomy, GeodesicTrianglesAreIsometries) {
  for (const char* id : {"round_sphere", "bumpy_sphere"}) {
    const CorpusCase cs = make_case(id);
    std::mt19937_64 rng(42);
    for (int k = 0; k < 3; ++k) {
      const HolonomySample h = holonomy_loop(cs.metric, random_geodesic_triangle(cs.metric, rng));
      EXPECT_LE(h.isometry_defect, 10.0 * h.est_error) << id;
    }
  }
}

TEST(EigenStructureTest, MetricItselfIsOneSpace) {
  const Eigen::MatrixXd g = Eigen::Vector3d(1.0, 2.0, 3.0).asDiagonal();
  const EigenStructure e = eigen_structure(g, g);
  ASSERT_EQ(e.spaces.size(), 1u);
  EXPECT_NEAR(e.spaces[0].eigenvalue.real(), 1.0, 1e-14);
  EXPECT_EQ(e.spaces[0].algebraic, 3);
  EXPECT_TRUE(e.diagonalizable);
}

TEST(EigenStructureTest, CoordinateSquare) {
  const Eigen::MatrixXd g = Eigen::MatrixXd::Identity(3, 3);
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(3, 3);
  T(0, 0) = 1.0;
  const EigenStructure e = eigen_structure(g, T);
  ASSERT_EQ(e.spaces.size(), 2u);
  std::vector<std::pair<double, int>> got;
  for (const auto& s : e.spaces) {
    got.emplace_back(s.eigenvalue.real(), static_cast<int>(s.basis.cols()));
    EXPECT_TRUE(s.nondegenerate);
  }
  std::sort(got.begin(), got.end());
  EXPECT_NEAR(got[0].first, 0.0, 1e-14);
  EXPECT_EQ(got[0].second, 2);
  EXPECT_NEAR(got[1].first, 1.0, 1e-14);
  EXPECT_EQ(got[1].second, 1);
  EXPECT_TRUE(e.complete);
}

TEST(EigenStructureTest, LorentzianJordanBlock) {
  // Null coordinates: g^-1 T is a nilpotent 2x2 block.
  Eigen::MatrixXd g(2, 2);
  g << 0.0, 1.0, 1.0, 0.0;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(2, 2);
  T(0, 0) = 1.0;
  const EigenStructure e = eigen_structure(g, T);
  ASSERT_EQ(e.spaces.size(), 1u);
  EXPECT_EQ(e.spaces[0].algebraic, 2);
  EXPECT_EQ(e.spaces[0].geometric, 1);
  EXPECT_TRUE(e.spaces[0].jordan);
  EXPECT_FALSE(e.diagonalizable);
}

TEST(Decomposability, CartesianSquareSplitsTheCone) {
  const CorpusCase cs = round_sphere_case(2);
  const ConeChart cone = build_cone(cs.metric);
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(3, 3);
  E(0, 0) = 1.0;
  const DecomposabilityReport d =
      decomposability_probe(cone, sphere_cone_cartesian_tensor(cone, E), cone.chart->sample(50, 42), 5, 42, 256);
  EXPECT_TRUE(d.decomposable) << d.verdict;
  std::vector<int> ranks = d.ranks;
  std::sort(ranks.begin(), ranks.end());
  EXPECT_EQ(ranks, (std::vector<int>{1, 2}));
  EXPECT_LT(d.projector_transport_defect, 1e-5);
}

TEST(Decomposability, MetricIsTrivial) {
  const CorpusCase cs = round_sphere_case(2);
  const ConeChart cone = build_cone(cs.metric);
  const DecomposabilityReport d = decomposability_probe(cone, metric_as_tensor(cone.metric), cone.chart->sample(20, 42));
  EXPECT_TRUE(d.trivial);
  EXPECT_FALSE(d.decomposable);
}

TEST(Decomposability, NonParallelInputIsRefused) {
  const CorpusCase cs = round_sphere_case(2);
  const ConeChart cone = build_cone(cs.metric);
  const TensorField T = half_hessian_field(lift_function(cone, cs.scalar("harmonic_deg1")), cone);
  const DecomposabilityReport d = decomposability_probe(cone, T, cone.chart->sample(20, 42));
  EXPECT_FALSE(d.decomposable);
  EXPECT_FALSE(d.report.passed());
}

TEST(MatrixSplitting, BlockRotationsSplit) {
  const CorpusCase cs = make_case("finite_group", {0});
  const SplittingSearch s = invariant_splitting_search(cs.matrices, cs.form);
  ASSERT_TRUE(s.found);
  EXPECT_EQ(s.V1.cols() + s.V2.cols(), 4);
  for (const auto& M : cs.matrices) {
    // Invariance: M V1 stays in span V1.
    const Eigen::MatrixXd MV = M * s.V1;
    const Eigen::MatrixXd proj = s.V1 * (s.V1.transpose() * s.V1).inverse() * s.V1.transpose();
    EXPECT_LT((proj * MV - MV).cwiseAbs().maxCoeff(), 1e-10);
  }
  EXPECT_LT((s.V1.transpose() * cs.form * s.V2).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(MatrixSplitting, BinaryIcosahedralIsIrreducible) {
  const CorpusCase cs = make_case("finite_group", {1});
  const SplittingSearch s = invariant_splitting_search(cs.matrices, cs.form);
  EXPECT_FALSE(s.found);
  EXPECT_TRUE(s.certified_none);
  EXPECT_EQ(s.commutant_dimension, 1);
}

TEST(MatrixSplitting, DeterminantSpaceOnlyHasDegenerateInvariants) {
  const CorpusCase cs = make_case("m2r_determinant_space");
  const SplittingSearch s = invariant_splitting_search(cs.matrices, cs.form);
  // Invariant subspaces exist (the kernels V_v) but all are null, and the
  // self-adjoint commutant rules out a nondegenerate splitting.
  EXPECT_FALSE(s.found);
  EXPECT_TRUE(s.certified_none);
  EXPECT_GT(s.degenerate_invariant, 0);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 5; ++k) {
    const Eigen::Vector2d v(nd(rng), nd(rng));
    for (const auto& L : cs.matrices) EXPECT_LT(m2r_kernel_invariance_defect(L, v), 1e-12);
    const Eigen::Matrix<double, 4, 2> K = m2r_kernel_space(v);
    EXPECT_LT((K.transpose() * cs.form * K).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(MatrixSplitting, FormMustBePreserved) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(2, 2);
  M(0, 0) = 2.0;
  EXPECT_THROW(invariant_splitting_search({M}, Eigen::MatrixXd::Identity(2, 2)), ArgumentError);
}
