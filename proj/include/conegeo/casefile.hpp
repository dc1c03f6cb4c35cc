#pragma once

// User-supplied cases in JSON, mirroring CorpusCase.
//
//   {
//     "id": "paraboloid",
//     "coordinates": ["x", "y"],
//     "domain": {"box": [[-1, 1], [-1, 1]], "positive": "1 - x^2 - y^2"},
//     "signature": [2, 0],
//     "metric": [["1 + 4*x^2", "4*x*y"], ["4*x*y", "1 + 4*y^2"]],
//     "scalars": {"alpha": "x^2 - y^2"},
//     "vectors": {"rot": ["-y", "x"]},
//     "tensors": {"T": [["1", "0"], ["0", "2"]]},
//     "metrics": {"gbar": [["2", "0"], ["0", "2"]]},
//     "form": [[1, 0], [0, 1]],
//     "matrices": [[[0, -1], [1, 0]]],
//     "expected": {"alpha.gt_residual": {"verdict": "fail"}}
//   }
//
// Every entry except "id" is optional, but a geometric case needs
// "coordinates", "domain" and "metric". Entries are expressions in the
// grammar of expr.hpp; "positive" narrows the box to where it is > 0.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "conegeo/chart.hpp"
#include "conegeo/corpus.hpp"
#include "conegeo/errors.hpp"
#include "conegeo/expr.hpp"
#include "json.hpp"

namespace conegeo {

namespace detail {

using nlohmann::json;

inline std::string expr_text(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number()) {
    std::ostringstream os;
    os.precision(17);
    os << j.get<double>();
    return os.str();
  }
  throw ArgumentError("case file: expected an expression string or a number");
}

inline std::vector<std::vector<Expression>> expr_matrix(const json& j, const std::vector<std::string>& vars,
                                                        const std::string& what) {
  const std::size_t n = vars.size();
  if (!j.is_array() || j.size() != n) throw ArgumentError("case file: " + what + " must be a " + std::to_string(n) + "x" + std::to_string(n) + " array");
  std::vector<std::vector<Expression>> m(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!j[i].is_array() || j[i].size() != n) throw ArgumentError("case file: row " + std::to_string(i) + " of " + what + " has the wrong length");
    for (std::size_t k = 0; k < n; ++k) m[i].push_back(Expression::parse(expr_text(j[i][k]), vars));
  }
  return m;
}

inline std::function<JetTensor(JetSpan)> tensor_fn(std::vector<std::vector<Expression>> m) {
  return [m = std::move(m)](JetSpan x) {
    const int n = static_cast<int>(m.size());
    JetTensor t(n, 2);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < n; ++k) t(i, k) = m[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)](x);
    }
    return t;
  };
}

inline Eigen::MatrixXd number_matrix(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ArgumentError("case file: " + what + " must be a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(i)].size()) != cols) throw ArgumentError("case file: ragged " + what);
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

}  // namespace detail

inline CorpusCase case_from_json(const nlohmann::json& j) {
  using detail::json;
  if (!j.is_object()) throw ArgumentError("case file: top level must be an object");
  CorpusCase c;
  c.id = j.value("id", std::string("case_file"));
  c.note = j.value("note", std::string());

  if (j.contains("metric")) {
    if (!j.contains("coordinates") || !j.contains("domain")) {
      throw ArgumentError("case file: a metric needs \"coordinates\" and \"domain\"");
    }
    const auto vars = j.at("coordinates").get<std::vector<std::string>>();
    const int n = static_cast<int>(vars.size());
    if (n < 1) throw ArgumentError("case file: no coordinates");
    const json& dom = j.at("domain");
    if (!dom.contains("box")) throw ArgumentError("case file: domain needs a \"box\"");
    std::vector<std::pair<double, double>> box;
    for (const auto& b : dom.at("box")) {
      if (b.size() != 2) throw ArgumentError("case file: box entries are [lo, hi]");
      box.emplace_back(b[0].get<double>(), b[1].get<double>());
      if (!(box.back().first < box.back().second)) throw ArgumentError("case file: empty box interval");
    }
    if (static_cast<int>(box.size()) != n) throw ArgumentError("case file: box dimension differs from the coordinates");
    Chart::Domain extra = nullptr;
    if (dom.contains("positive")) {
      const Expression pos = Expression::parse(detail::expr_text(dom.at("positive")), vars);
      extra = [pos](const Point& p) { return pos.value(p) > 0.0; };
    }
    c.chart = Chart::box(c.id, std::move(box), std::move(extra));

    int p = n;
    int q = 0;
    if (j.contains("signature")) {
      const auto s = j.at("signature").get<std::vector<int>>();
      if (s.size() != 2 || s[0] < 0 || s[1] < 0 || s[0] + s[1] != n) throw ArgumentError("case file: signature must be [p, q] with p + q = n");
      p = s[0];
      q = s[1];
    }
    auto gm = detail::expr_matrix(j.at("metric"), vars, "metric");
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        if (gm[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)].text() != gm[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)].text()) {
          throw ArgumentError("case file: metric entries (" + std::to_string(a) + "," + std::to_string(b) + ") and its transpose differ");
        }
      }
    }
    c.metric = MetricField{c.chart, detail::tensor_fn(std::move(gm)), p, q};

    if (j.contains("scalars")) {
      for (const auto& [name, e] : j.at("scalars").items()) {
        const Expression ex = Expression::parse(detail::expr_text(e), vars);
        c.scalars.emplace(name, ScalarField{c.chart, name, [ex](JetSpan x) { return ex(x); }});
      }
    }
    if (j.contains("vectors")) {
      for (const auto& [name, e] : j.at("vectors").items()) {
        if (!e.is_array() || static_cast<int>(e.size()) != n) throw ArgumentError("case file: vector '" + name + "' needs n components");
        std::vector<Expression> comps;
        for (const auto& v : e) comps.push_back(Expression::parse(detail::expr_text(v), vars));
        c.vectors.emplace(name, VectorFieldOnChart{c.chart, name, [comps](JetSpan x) {
                                                     std::vector<Jet> out;
                                                     for (const auto& ex : comps) out.push_back(ex(x));
                                                     return out;
                                                   }});
      }
    }
    if (j.contains("tensors")) {
      for (const auto& [name, e] : j.at("tensors").items()) {
        auto m = detail::expr_matrix(e, vars, "tensor '" + name + "'");
        bool symmetric = true;
        for (int a = 0; a < n; ++a) {
          for (int b = a + 1; b < n; ++b) symmetric = symmetric && m[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)].text() == m[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)].text();
        }
        c.tensors.emplace(name, TensorField{c.chart, 2, symmetric ? Symmetry::symmetric : Symmetry::none, detail::tensor_fn(std::move(m))});
      }
    }
    if (j.contains("metrics")) {
      for (const auto& [name, e] : j.at("metrics").items()) {
        c.metrics.insert_or_assign(name, MetricField{c.chart, detail::tensor_fn(detail::expr_matrix(e, vars, "metric '" + name + "'")), p, q});
      }
    }
  }
  if (j.contains("form")) c.form = detail::number_matrix(j.at("form"), "form");
  if (j.contains("matrices")) {
    for (const auto& m : j.at("matrices")) c.matrices.push_back(detail::number_matrix(m, "matrix"));
    if (c.form.size() == 0 && !c.matrices.empty()) c.form = Eigen::MatrixXd::Identity(c.matrices.front().rows(), c.matrices.front().rows());
  }
  if (j.contains("expected")) {
    for (const auto& [name, e] : j.at("expected").items()) {
      c.expected[name] = Expectation{e.value("verdict", std::string("pass")), e.value("value", 0.0)};
    }
  }
  return c;
}

inline CorpusCase case_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("case file: ") + e.what());
  }
  try {
    return case_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("case file: ") + e.what());
  }
}

inline CorpusCase load_case_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open case file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return case_from_json_text(ss.str());
}

}  // namespace conegeo
