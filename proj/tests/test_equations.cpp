#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "conegeo/corpus.hpp"
#include "conegeo/equations.hpp"

using namespace conegeo;

namespace {

double max_gt(const GTProblem& pr, std::span<const Point> pts) {
  double m = 0.0;
  for (const Point& p : pts) m = std::max(m, gt_residual(pr, p));
  return m;
}

}  // namespace

TEST(GallotTanno, SphereDegreeTwoHarmonicSolvesWithUnitConstant) {
  for (int n : {2, 3}) {
    const CorpusCase cs = round_sphere_case(n);
    const auto pts = cs.chart->sample(200, 42);
    EXPECT_LT(max_gt({cs.metric, cs.scalar("harmonic_deg2"), 1.0}, pts), 1e-9);
    EXPECT_LT(max_gt({cs.metric, cs.scalar("harmonic_deg2_b"), 1.0}, pts), 1e-9);
    EXPECT_LT(max_gt({cs.metric, cs.scalar("cartesian_square"), 1.0}, pts), 1e-9);
    EXPECT_GT(max_gt({cs.metric, cs.scalar("harmonic_deg1"), 1.0}, pts), 1e-3);
  }
}

TEST(GallotTanno, ConstantsSolveForEveryConstant) {
  for (const char* id : {"round_sphere", "pseudo_sphere", "bumpy_sphere", "flat"}) {
    const CorpusCase cs = make_case(id);
    const auto pts = cs.chart->sample(20, 1);
    for (double c : {-1.0, 0.0, 1.0, 3.5}) EXPECT_EQ(max_gt({cs.metric, cs.scalar("const"), c}, pts), 0.0) << id;
  }
}

TEST(GallotTanno, FlatCoordinateFunctionByHand) {
  // Flat metric, alpha = x: third derivatives vanish and only the c-part
  // c (2 a_k g_ij + a_j g_ki + a_i g_kj) with a = (1, 0) survives.
  const CorpusCase cs = make_case("flat", {2, 0});
  const double c = 1.0;
  const double a[2] = {1.0, 0.0};
  double oracle = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      for (int k = 0; k < 2; ++k) {
        const double t = c * (2 * a[k] * (i == j) + a[j] * (k == i) + a[i] * (k == j));
        oracle = std::max(oracle, std::abs(t));
      }
    }
  }
  EXPECT_EQ(oracle, 4.0);
  for (const Point& p : cs.chart->sample(20, 3)) {
    const RealTensor t = gt_tensor({cs.metric, cs.scalar("x"), c}, p);
    EXPECT_EQ(max_abs(t), oracle);
    EXPECT_EQ(t(0, 0, 0), 4.0);
    EXPECT_EQ(t(1, 1, 0), 2.0);
    EXPECT_EQ(t(0, 1, 1), 1.0);
  }
}

TEST(GallotTanno, LinearInAlpha) {
  const CorpusCase cs = round_sphere_case(2);
  const ScalarField& a1 = cs.scalar("harmonic_deg1");
  const ScalarField& a2 = cs.scalar("harmonic_deg2_b");
  const ScalarField sum{cs.chart, "sum", [f = a1.fn, h = a2.fn](JetSpan x) { return f(x) + h(x); }};
  for (const Point& p : cs.chart->sample(50, 6)) {
    const RealTensor t1 = gt_tensor({cs.metric, a1, 1.0}, p);
    const RealTensor t2 = gt_tensor({cs.metric, a2, 1.0}, p);
    const RealTensor ts = gt_tensor({cs.metric, sum, 1.0}, p);
    for (std::size_t f = 0; f < ts.size(); ++f) EXPECT_NEAR(ts.flat(f), t1.flat(f) + t2.flat(f), 1e-10);
  }
}

TEST(GallotTanno, RescalingMapsTheProblem) {
  const CorpusCase cs = round_sphere_case(2);
  const GTProblem pr{cs.metric, cs.scalar("harmonic_deg2"), 4.0};
  const GTProblem r = rescale_equivalence(pr);
  EXPECT_EQ(r.c, 1.0);
  const Point p{0.2, 0.5};
  const RealTensor g = cs.metric.value(p);
  const RealTensor g4 = r.g.value(p);
  for (std::size_t f = 0; f < g.size(); ++f) EXPECT_DOUBLE_EQ(g4.flat(f), 4.0 * g.flat(f));

  const GTProblem neg = rescale_equivalence({cs.metric, cs.scalar("harmonic_deg2"), -1.0});
  EXPECT_EQ(neg.g.p, 0);
  EXPECT_EQ(neg.g.q, 2);
  EXPECT_THROW(rescale_equivalence({cs.metric, cs.scalar("harmonic_deg2"), 0.0}), ArgumentError);
}

TEST(GallotTanno, RescaledProblemHasTheSameZeroSet) {
  const CorpusCase cs = round_sphere_case(2);
  const auto pts = cs.chart->sample(200, 42);
  const GTProblem pr{cs.metric, cs.scalar("harmonic_deg2"), 1.0};
  EXPECT_LT(max_gt(pr, pts), 1e-9);
  EXPECT_LT(max_gt(rescale_equivalence(pr), pts), 1e-9);
  // Constant rescaling leaves Christoffel symbols alone, so the raw tensors agree.
  for (const char* id : {"round_sphere", "bumpy_sphere", "pseudo_sphere"}) {
    const CorpusCase c2 = make_case(id);
    for (const auto& [name, a] : c2.scalars) {
      for (double c : {4.0, -1.0, 0.5}) {
        const GTProblem orig{c2.metric, a, c};
        const GTProblem resc = rescale_equivalence(orig);
        for (const Point& p : c2.chart->sample(10, 8)) {
          const RealTensor t0 = gt_tensor(orig, p);
          const RealTensor t1 = gt_tensor(resc, p);
          for (std::size_t f = 0; f < t0.size(); ++f) EXPECT_NEAR(t0.flat(f), t1.flat(f), 1e-10 * (1.0 + std::abs(t0.flat(f))));
        }
      }
    }
  }
}

TEST(Obata, DegreeOneSolvesAndDegreeTwoDoesNot) {
  const CorpusCase cs = round_sphere_case(2);
  const auto pts = cs.chart->sample(200, 42);
  EXPECT_TRUE(obata_report(cs.metric, cs.scalar("harmonic_deg1"), pts, 1e-9).passed());
  const ScalarField zero = constant_scalar(cs.chart, 0.0, "zero");
  for (const Point& p : pts) EXPECT_EQ(obata_residual(cs.metric, zero, p), 0.0);
  const ResidualReport bad = obata_report(cs.metric, cs.scalar("harmonic_deg2"), pts, 1e-9);
  EXPECT_GT(bad.max_residual, 1e-2);
  EXPECT_FALSE(bad.passed());
}

TEST(Eigenfunctions, SphereEigenvalues) {
  for (int n : {2, 3}) {
    const CorpusCase cs = round_sphere_case(n);
    const auto pts = cs.chart->sample(200, 42);
    EXPECT_TRUE(eigenfunction_report(cs.metric, cs.scalar("harmonic_deg1"), -n, pts, 1e-9).passed());
    EXPECT_TRUE(eigenfunction_report(cs.metric, cs.scalar("harmonic_deg2"), -2.0 * (n + 1), pts, 1e-9).passed());
    EXPECT_FALSE(eigenfunction_report(cs.metric, cs.scalar("harmonic_deg2"), -n, pts, 1e-9).passed());
  }
}

TEST(ZeroConstant, ParallelHessianOnTheTorusChart) {
  const CorpusCase cs = make_case("flat_torus_chart");
  const auto pts = cs.chart->sample(200, 42);
  const ResidualReport aff = c0_parallel_check(cs.metric, cs.scalar("affine"), pts, 1e-9);
  EXPECT_EQ(aff.max_residual, 0.0);
  EXPECT_TRUE(aff.passed());
  EXPECT_EQ(c0_parallel_check(cs.metric, cs.scalar("const"), pts, 1e-9).max_residual, 0.0);
  EXPECT_GT(max_gt({cs.metric, cs.scalar("sin2pix"), 0.0}, pts), 1.0);
  EXPECT_FALSE(c0_parallel_check(cs.metric, cs.scalar("sin2pix"), pts, 1e-9).passed());
}

TEST(GeodesicEquivalence, MetricItselfIsASolution) {
  const CorpusCase cs = round_sphere_case(2);
  const MobilityCandidate m{cs.metric, metric_as_tensor(cs.metric)};
  for (const Point& p : cs.chart->sample(200, 42)) EXPECT_LT(basic1_residual(m, p), 1e-12);
}

TEST(GeodesicEquivalence, BeltramiCandidates) {
  const CorpusCase cs = round_sphere_case(2);
  const auto pts = cs.chart->sample(200, 42);
  for (const char* name : {"beltrami", "beltrami_b"}) {
    const MobilityCandidate m = metric_to_candidate(cs.metric, cs.metrics.at(name));
    EXPECT_TRUE(basic1_report(m, pts, 1e-9).passed()) << name;
    EXPECT_GT(trace_spread(m, pts), 1e-2) << name;
  }
}

TEST(GeodesicEquivalence, RandomPolynomialTensorIsRejected) {
  const CorpusCase cs = round_sphere_case(2);
  const TensorField T{cs.chart, 2, Symmetry::symmetric, [](JetSpan x) {
                        JetTensor t(2, 2);
                        t(0, 0) = 1.0 + 0.3 * x[0] * x[1] - 0.2 * x[1] * x[1] * x[1];
                        t(0, 1) = t(1, 0) = 0.5 * x[0] * x[0] + 0.1 * x[1];
                        t(1, 1) = 2.0 - 0.4 * x[0] + 0.25 * x[0] * x[1] * x[1];
                        return t;
                      }};
  double worst = 0.0;
  for (const Point& p : cs.chart->sample(50, 3)) worst = std::max(worst, basic1_residual({cs.metric, T}, p));
  EXPECT_GT(worst, 1e-2);
}

TEST(Correspondence, IdenticalMetricGivesTheMetric) {
  const CorpusCase cs = round_sphere_case(2);
  const MobilityCandidate m = metric_to_candidate(cs.metric, cs.metric);
  for (const Point& p : cs.chart->sample(20, 5)) {
    const RealTensor T = m.T.value(p);
    const RealTensor g = cs.metric.value(p);
    for (std::size_t f = 0; f < T.size(); ++f) EXPECT_NEAR(T.flat(f), g.flat(f), 1e-14 * (1.0 + std::abs(g.flat(f))));
  }
}

TEST(Correspondence, ConstantMultipleGivesAPowerOfTheFactor) {
  // det(k g)/det g = k^n, (k g)^-1 = g^-1 / k, so T = k^{n/(n+1) - 1} g.
  for (int n : {2, 3}) {
    const CorpusCase cs = round_sphere_case(n);
    const double k = 2.7;
    const MobilityCandidate m = metric_to_candidate(cs.metric, scaled(cs.metric, k));
    const double factor = std::pow(k, static_cast<double>(n) / (n + 1) - 1.0);
    for (const Point& p : cs.chart->sample(20, 5)) {
      const RealTensor T = m.T.value(p);
      const RealTensor g = cs.metric.value(p);
      for (std::size_t f = 0; f < T.size(); ++f) EXPECT_NEAR(T.flat(f), factor * g.flat(f), 1e-13 * (1.0 + std::abs(g.flat(f))));
    }
  }
}

TEST(ProjectiveFields, KillingFieldsGiveZero) {
  const CorpusCase cs = round_sphere_case(2);
  for (const char* name : {"rotation", "rotation_b"}) {
    const TensorField T = projective_tensor_field(cs.vector(name), cs.metric);
    for (const Point& p : cs.chart->sample(200, 42)) EXPECT_LT(max_abs(T.value(p)), 1e-12) << name;
  }
}

TEST(ProjectiveFields, NonAffineSl3Field) {
  const CorpusCase cs = make_case("sl3_projective_field");
  const auto pts = cs.chart->sample(200, 42);
  const MobilityCandidate m = projective_tensor(cs.vector("sl3"), cs.metric);
  EXPECT_TRUE(basic1_report(m, pts, 1e-9).passed());
  EXPECT_GT(trace_spread(m, pts), 1e-2);
  EXPECT_FALSE(is_affine(m, pts));
}

TEST(ProjectiveFields, DilationIsAffineNotKilling) {
  // L_X g = 2g, so T = 2g - (1/3) tr(2g) g = (2/3) g on R^2.
  const CorpusCase cs = make_case("flat", {2, 0});
  const auto pts = cs.chart->sample(20, 5);
  const MobilityCandidate m = projective_tensor(cs.vector("dilation"), cs.metric);
  for (const Point& p : pts) {
    const RealTensor T = m.T.value(p);
    EXPECT_NEAR(T(0, 0), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(T(1, 1), 2.0 / 3.0, 1e-15);
    EXPECT_EQ(T(0, 1), 0.0);
  }
  EXPECT_TRUE(is_affine(m, pts));
  EXPECT_GT(killing_residual(cs.vector("dilation"), cs.metric, pts), 1.0);
}

TEST(SolutionTransfer, HessianCandidateSolvesBothEquations) {
  for (int n : {2, 3}) {
    const CorpusCase cs = round_sphere_case(n);
    const auto pts = cs.chart->sample(200, 42);
    for (const char* name : {"harmonic_deg2", "harmonic_deg2_b", "cartesian_square"}) {
      const ScalarField& a = cs.scalar(name);
      EXPECT_TRUE(basic1_report({cs.metric, hessian_candidate(cs.metric, a)}, pts, 1e-9).passed()) << name;
      for (const Point& p : pts) ASSERT_LT(eq3_residual(cs.metric, a, p), 1e-9) << name;
    }
  }
}

TEST(KillingCombination, FieldWithItself) {
  const CorpusCase cs = round_sphere_case(2);
  const auto fit = cs.chart->sample(50, 1);
  const auto fresh = cs.chart->sample(50, 2);
  const KillingCombination k = killing_combination_search(cs.vector("sl3"), cs.vector("sl3"), cs.metric, fit, fresh);
  ASSERT_TRUE(k.found);
  EXPECT_NEAR(k.k_prime, -k.k, 1e-10);
  EXPECT_NEAR(k.l, 0.0, 1e-10);
  EXPECT_TRUE(k.killing);
  EXPECT_TRUE(k.report.passed());
}

TEST(KillingCombination, TwoRotations) {
  const CorpusCase cs = round_sphere_case(2);
  const KillingCombination k =
      killing_combination_search(cs.vector("rotation"), cs.vector("rotation_b"), cs.metric, cs.chart->sample(50, 1), cs.chart->sample(50, 2));
  ASSERT_TRUE(k.found);
  EXPECT_EQ(k.k, 1.0);
  EXPECT_EQ(k.k_prime, 0.0);
  EXPECT_EQ(k.l, 0.0);
  EXPECT_TRUE(k.killing);
}

TEST(KillingCombination, IndependentNonAffineFieldsOnTheSphere) {
  // The sphere is the excluded case; either outcome is acceptable but the
  // fit residual is always reported.
  const CorpusCase cs = round_sphere_case(2);
  const KillingCombination k =
      killing_combination_search(cs.vector("sl3"), cs.vector("sl3_b"), cs.metric, cs.chart->sample(50, 1), cs.chart->sample(50, 2));
  EXPECT_FALSE(std::isnan(k.report.metric("fit_residual")));
  if (!k.found) {
    EXPECT_EQ(k.report.note, "no linear relation found");
  }
}

TEST(MobilityRank, SmallSets) {
  const CorpusCase cs = round_sphere_case(2);
  const auto pts = cs.chart->sample(50, 42);
  const TensorField g = metric_as_tensor(cs.metric);
  EXPECT_EQ(mobility_rank(cs.metric, std::vector<TensorField>{g}, pts).rank, 1);
  const TensorField g2 = metric_as_tensor(scaled(cs.metric, 2.0));
  EXPECT_EQ(mobility_rank(cs.metric, std::vector<TensorField>{g, g2}, pts).rank, 1);
  const std::vector<TensorField> three{g, metric_to_candidate(cs.metric, cs.metrics.at("beltrami")).T,
                                       metric_to_candidate(cs.metric, cs.metrics.at("beltrami_b")).T};
  const MobilityRank r = mobility_rank(cs.metric, three, pts);
  EXPECT_EQ(r.rank, 3);
  EXPECT_TRUE(r.rejected.empty());
}

TEST(MobilityRank, NonSolutionsAreRejected) {
  const CorpusCase cs = round_sphere_case(2);
  const auto pts = cs.chart->sample(50, 42);
  const TensorField bad = hessian_candidate(cs.metric, cs.scalar("harmonic_deg1_b"));
  // DDa + 2a g = a g for a degree-1 harmonic; the trace is not compatible.
  const MobilityRank r = mobility_rank(cs.metric, std::vector<TensorField>{metric_as_tensor(cs.metric), bad}, pts);
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_EQ(r.rejected.front(), 1u);
  EXPECT_EQ(r.rank, 1);
}
