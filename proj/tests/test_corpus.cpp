#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "conegeo/casefile.hpp"
#include "conegeo/corpus.hpp"
#include "conegeo/equations.hpp"
#include "conegeo/geometry.hpp"

using namespace conegeo;

namespace {

// Runs the residual named by an expectation key "<field>.<check>" or "<check>".
double measure(const CorpusCase& cs, const std::string& key, const std::vector<Point>& pts) {
  const auto dot = key.find('.');
  const std::string field = dot == std::string::npos ? std::string() : key.substr(0, dot);
  const std::string check = dot == std::string::npos ? key : key.substr(dot + 1);
  double m = 0.0;
  if (check == "gt_residual" || check == "gt_residual_c0") {
    const GTProblem pr{cs.metric, cs.scalar(field), check == "gt_residual" ? 1.0 : 0.0};
    for (const Point& p : pts) m = std::max(m, gt_residual(pr, p));
  } else if (check == "obata_residual") {
    for (const Point& p : pts) m = std::max(m, obata_residual(cs.metric, cs.scalar(field), p));
  } else if (check == "laplacian") {
    // Ratio Laplacian / alpha at a point where alpha is far from zero.
    double best = 0.0;
    for (const Point& p : pts) {
      const double a = cs.scalar(field).value(p);
      if (std::abs(a) > std::abs(best)) {
        best = a;
        m = laplacian_at(cs.metric, cs.scalar(field), p) / a;
      }
    }
  } else if (check == "einstein_residual") {
    for (const Point& p : pts) m = std::max(m, einstein_residual(cs.metric, p));
  } else if (check == "basic1_residual") {
    const MobilityCandidate c = cs.vectors.count(field) ? projective_tensor(cs.vector(field), cs.metric)
                                                        : metric_to_candidate(cs.metric, cs.metrics.at(field));
    for (const Point& p : pts) m = std::max(m, basic1_residual(c, p));
  } else if (check == "sectional_curvature") {
    const Curvature R = riemann_at(cs.metric, pts.front());
    // Plane of the first two coordinate directions, nondegenerate on this sample.
    const std::vector<double> X{1.0, 0.0};
    const std::vector<double> Y{0.0, 1.0};
    m = sectional_curvature(R, X, Y);
  } else {
    return std::nan("");
  }
  return m;
}

}  // namespace

TEST(Corpus, EveryIdBuilds) {
  for (const auto& id : case_ids()) {
    const CorpusCase cs = make_case(id);
    EXPECT_FALSE(cs.id.empty());
    if (cs.has_geometry()) {
      const auto pts = cs.chart->sample(5, 1);
      EXPECT_EQ(pts.size(), 5u);
      for (const Point& p : pts) EXPECT_EQ(cs.metric.value(p).dim(), cs.chart->dimension());
    } else {
      EXPECT_FALSE(cs.matrices.empty());
    }
  }
  EXPECT_THROW(make_case("no_such_case"), ArgumentError);
  EXPECT_THROW(make_case("round_sphere", {9}), ArgumentError);
  EXPECT_THROW(make_case("finite_group", {3}), ArgumentError);
}

TEST(Corpus, ExpectationsAreReproduced) {
  std::vector<std::pair<std::string, CaseParams>> cases;
  for (const auto& id : case_ids()) cases.emplace_back(id, CaseParams{});
  cases.emplace_back("round_sphere", CaseParams{3});
  cases.emplace_back("pseudo_sphere", CaseParams{2, 1});
  cases.emplace_back("bumpy_sphere", CaseParams{0.1, 3});
  int checked = 0;
  for (const auto& [id, params] : cases) {
    const CorpusCase cs = make_case(id, params);
    if (!cs.has_geometry()) continue;
    const auto pts = cs.chart->sample(100, 42);
    for (const auto& [key, e] : cs.expected) {
      const double m = measure(cs, key, pts);
      if (std::isnan(m)) continue;
      ++checked;
      if (e.verdict == "pass") {
        EXPECT_LT(m, 1e-9) << id << " " << key;
      } else if (e.verdict == "fail") {
        EXPECT_GT(m, std::max(e.value, 1e-3)) << id << " " << key;
      } else {
        EXPECT_NEAR(m, e.value, 1e-8 * (1.0 + std::abs(e.value))) << id << " " << key;
      }
    }
  }
  EXPECT_GT(checked, 10);
}

TEST(Corpus, DefinitePseudoSphereIsTheRoundSphere) {
  for (int n : {2, 3}) {
    const CorpusCase ps = make_case("pseudo_sphere", {static_cast<double>(n), 0});
    const CorpusCase rs = round_sphere_case(n);
    EXPECT_EQ(ps.metric.p, n);
    EXPECT_EQ(ps.metric.q, 0);
    const double scal = n * (n - 1.0);
    for (const Point& p : ps.chart->sample(20, 4)) EXPECT_NEAR(scalar_curvature_from(riemann_at(ps.metric, p)), scal, 1e-9);
    for (const Point& p : rs.chart->sample(20, 4)) EXPECT_NEAR(scalar_curvature_from(riemann_at(rs.metric, p)), scal, 1e-9);
  }
}

TEST(Corpus, DegreeTwoQuadraticIsTraceless) {
  for (int N : {3, 4, 5}) EXPECT_NEAR(detail::sphere_default_quadratic(N).trace(), 0.0, 1e-15);
}

TEST(Corpus, DeterminantSpaceForm) {
  const CorpusCase cs = make_case("m2r_determinant_space");
  EXPECT_EQ(signature_of(cs.form), (std::pair<int, int>{2, 2}));
  for (const auto& L : cs.matrices) {
    EXPECT_LT((L.transpose() * cs.form * L - cs.form).cwiseAbs().maxCoeff(), 1e-12);
  }
  // det(v w^T) = 0: rank-one matrices are null for the form.
  Eigen::Vector4d x(2.0, 3.0, 4.0, 6.0);
  EXPECT_NEAR(x.dot(cs.form * x), 0.0, 1e-14);
}

TEST(Corpus, CaseSpecParsing) {
  const CaseSpec s = parse_case_spec("pseudo_sphere:2,1+alpha");
  EXPECT_EQ(s.id, "pseudo_sphere");
  EXPECT_EQ(s.params, (CaseParams{2.0, 1.0}));
  EXPECT_EQ(s.field, "alpha");
  EXPECT_EQ(parse_case_spec("flat").params.size(), 0u);
  EXPECT_THROW(parse_case_spec("flat:2,x"), ArgumentError);
  EXPECT_THROW(parse_case_spec(""), ArgumentError);
}

TEST(CaseFile, MetricScalarsAndVectors) {
  const CorpusCase cs = case_from_json_text(R"json({
    "id": "warped",
    "coordinates": ["x", "y"],
    "domain": {"box": [[0.5, 2], [-1, 1]]},
    "metric": [["1", "0"], ["0", "x^2"]],
    "scalars": {"f": "x*cos(y)"},
    "vectors": {"rot": ["0", "1"]},
    "expected": {"f.gt_residual": {"verdict": "fail"}}
  })json");
  EXPECT_EQ(cs.id, "warped");
  EXPECT_EQ(cs.metric.p, 2);
  const RealTensor g = cs.metric.value({1.5, 0.2});
  EXPECT_DOUBLE_EQ(g(1, 1), 2.25);
  // The polar metric is flat and d/dy is Killing.
  for (const Point& p : cs.chart->sample(20, 2)) {
    const Curvature R = riemann_at(cs.metric, p);
    for (std::size_t f = 0; f < R.up.size(); ++f) EXPECT_NEAR(R.up.flat(f), 0.0, 1e-12);
  }
  EXPECT_LT(killing_residual(cs.vector("rot"), cs.metric, cs.chart->sample(20, 2)), 1e-12);
  EXPECT_NEAR(cs.scalar("f").value({1.5, 0.2}), 1.5 * std::cos(0.2), 1e-15);
  EXPECT_EQ(cs.expected.at("f.gt_residual").verdict, "fail");
}

TEST(CaseFile, MatricesOnly) {
  const CorpusCase cs = case_from_json_text(R"json({"id": "swap", "matrices": [[[0, 1], [1, 0]]]})json");
  EXPECT_FALSE(cs.has_geometry());
  ASSERT_EQ(cs.matrices.size(), 1u);
  EXPECT_EQ(cs.form, Eigen::MatrixXd::Identity(2, 2));
}

TEST(CaseFile, Errors) {
  EXPECT_THROW(case_from_json_text("{"), ArgumentError);
  EXPECT_THROW(case_from_json_text("[]"), ArgumentError);
  EXPECT_THROW(case_from_json_text(R"json({"metric": [["1"]]})json"), ArgumentError);
  EXPECT_THROW(case_from_json_text(R"json({"coordinates": ["x"], "domain": {"box": [[1, 0]]}, "metric": [["1"]]})json"), ArgumentError);
  EXPECT_THROW(case_from_json_text(R"json({"coordinates": ["x", "y"], "domain": {"box": [[0, 1], [0, 1]]},
                                       "metric": [["1", "x"], ["y", "1"]]})json"),
               ArgumentError);
  EXPECT_THROW(case_from_json_text(R"json({"coordinates": ["x"], "domain": {"box": [[0, 1]]}, "metric": [["z"]]})json"), ArgumentError);
  EXPECT_THROW(load_case_file("/nonexistent/case.json"), ArgumentError);
}
