#pragma once

// Coordinate charts and the fields that live on them.
//
// Every field is a function from coordinate jets to component jets. Passing
// the identity seeds at a point yields exact derivatives there; passing other
// jets composes the field with a coordinate map. Fields built from closed-form
// expressions are full order 3 on any input.

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "conegeo/errors.hpp"
#include "conegeo/jet.hpp"
#include "conegeo/tensor.hpp"

namespace conegeo {

using Point = std::vector<double>;
using JetSpan = std::span<const Jet>;

/// A named coordinate patch with a domain predicate and a seeded sampler.
class Chart {
 public:
  using Domain = std::function<bool(const Point&)>;
  /// Draws one candidate point; the chart rejects candidates outside its domain.
  using Proposal = std::function<Point(std::mt19937_64&)>;

  Chart(std::string name, int dimension, Domain domain, Proposal proposal)
      : name_(std::move(name)),
        dimension_(dimension),
        domain_(std::move(domain)),
        proposal_(std::move(proposal)) {
    if (dimension_ <= 0 || dimension_ > kMaxJetDimension) {
      throw ArgumentError("chart dimension must lie in [1, " + std::to_string(kMaxJetDimension) + "]");
    }
  }

  /// Axis-aligned box chart; an optional extra predicate narrows the domain.
  static std::shared_ptr<const Chart> box(std::string name, std::vector<std::pair<double, double>> bounds,
                                          Domain extra = nullptr) {
    const int n = static_cast<int>(bounds.size());
    auto domain = [bounds, extra](const Point& p) {
      if (p.size() != bounds.size()) return false;
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(p[i] >= bounds[i].first && p[i] <= bounds[i].second)) return false;
      }
      return extra ? extra(p) : true;
    };
    auto proposal = [bounds](std::mt19937_64& rng) {
      Point p(bounds.size());
      for (std::size_t i = 0; i < bounds.size(); ++i) {
        std::uniform_real_distribution<double> u(bounds[i].first, bounds[i].second);
        p[i] = u(rng);
      }
      return p;
    };
    return std::make_shared<const Chart>(std::move(name), n, std::move(domain), std::move(proposal));
  }

  const std::string& name() const noexcept { return name_; }
  int dimension() const noexcept { return dimension_; }

  bool contains(const Point& p) const {
    return static_cast<int>(p.size()) == dimension_ && domain_(p);
  }

  void require(const Point& p) const {
    if (!contains(p)) throw DomainError("point outside the domain of chart '" + name_ + "'");
  }

  /// `count` in-domain points, reproducible from `seed`.
  std::vector<Point> sample(std::size_t count, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    return sample(count, rng);
  }

  std::vector<Point> sample(std::size_t count, std::mt19937_64& rng) const {
    std::vector<Point> out;
    out.reserve(count);
    std::size_t attempts = 0;
    while (out.size() < count) {
      if (++attempts > 1000 * (count + 10)) {
        throw DomainError("sampler of chart '" + name_ + "' keeps proposing points outside its domain");
      }
      Point p = proposal_(rng);
      if (contains(p)) out.push_back(std::move(p));
    }
    return out;
  }

 private:
  std::string name_;
  int dimension_;
  Domain domain_;
  Proposal proposal_;
};

using ChartPtr = std::shared_ptr<const Chart>;

namespace detail {

inline void check_arity(const ChartPtr& chart, JetSpan x) {
  if (static_cast<int>(x.size()) != chart->dimension()) {
    throw ArgumentError("field on chart '" + chart->name() + "' evaluated with " + std::to_string(x.size()) +
                        " coordinates");
  }
}

}  // namespace detail

/// A scalar function on a chart.
struct ScalarField {
  ChartPtr chart;
  std::string name;
  std::function<Jet(JetSpan)> fn;

  Jet operator()(JetSpan x) const {
    detail::check_arity(chart, x);
    return fn(x);
  }

  /// Exact jet at a point; DomainError outside the chart.
  Jet at(const Point& p, int order = kJetOrder) const {
    chart->require(p);
    const auto x = seed_point(p, order);
    return fn(x);
  }

  double value(const Point& p) const { return at(p).value(); }
};

/// Symmetric, nondegenerate (0,2) field with a declared signature.
struct MetricField {
  ChartPtr chart;
  std::function<JetTensor(JetSpan)> fn;
  int p = 0;  // positive directions
  int q = 0;  // negative directions

  JetTensor operator()(JetSpan x) const {
    detail::check_arity(chart, x);
    return fn(x);
  }

  JetTensor at(const Point& pt, int order = kJetOrder) const {
    chart->require(pt);
    const auto x = seed_point(pt, order);
    return fn(x);
  }

  RealTensor value(const Point& pt) const { return values_of(at(pt)); }
  int dimension() const { return chart->dimension(); }
};

enum class Symmetry { none, symmetric };

/// Covariant tensor field of valence k (k = 0 stores a scalar as a rank-0 array).
struct TensorField {
  ChartPtr chart;
  int valence = 0;
  Symmetry symmetry = Symmetry::none;
  std::function<JetTensor(JetSpan)> fn;

  JetTensor operator()(JetSpan x) const {
    detail::check_arity(chart, x);
    return fn(x);
  }

  JetTensor at(const Point& pt, int order = kJetOrder) const {
    chart->require(pt);
    const auto x = seed_point(pt, order);
    return fn(x);
  }

  RealTensor value(const Point& pt) const { return values_of(at(pt)); }
};

struct VectorFieldOnChart {
  ChartPtr chart;
  std::string name;
  std::function<std::vector<Jet>(JetSpan)> fn;

  std::vector<Jet> operator()(JetSpan x) const {
    detail::check_arity(chart, x);
    return fn(x);
  }

  std::vector<Jet> at(const Point& pt, int order = kJetOrder) const {
    chart->require(pt);
    const auto x = seed_point(pt, order);
    return fn(x);
  }
};

/// Wraps a pointwise construction (one that needs seeded coordinates, e.g.
/// because it differentiates) as a field usable on arbitrary input jets:
/// evaluate at the seeded point, then compose with the input jets.
template <class Build>
std::function<JetTensor(JetSpan)> pointwise_tensor(ChartPtr chart, Build build) {
  return [chart, build](JetSpan x) {
    const Point p = values_of(x);
    chart->require(p);
    const auto seeds = seed_point(p);
    JetTensor at_point = build(JetSpan(seeds), p);
    if (is_identity_seed(x)) return at_point;
    for (std::size_t i = 0; i < at_point.size(); ++i) at_point.flat(i) = compose(at_point.flat(i), x);
    return at_point;
  };
}

inline ScalarField constant_scalar(ChartPtr chart, double c, std::string name = "const") {
  return ScalarField{chart, std::move(name), [c](JetSpan x) { return Jet(x.front().dimension(), c); }};
}

/// The scalar field x -> x[index].
inline ScalarField coordinate_scalar(ChartPtr chart, int index, std::string name) {
  return ScalarField{chart, std::move(name), [index](JetSpan x) { return x[static_cast<std::size_t>(index)]; }};
}

/// Metric multiplied by a nonzero constant; the signature swaps for negative factors.
inline MetricField scaled(const MetricField& g, double factor) {
  if (factor == 0.0) throw ArgumentError("metric scale factor must be nonzero");
  MetricField out{g.chart, [fn = g.fn, factor](JetSpan x) {
                    JetTensor t = fn(x);
                    for (std::size_t i = 0; i < t.size(); ++i) t.flat(i) *= factor;
                    return t;
                  },
                  factor > 0 ? g.p : g.q, factor > 0 ? g.q : g.p};
  return out;
}

inline TensorField metric_as_tensor(const MetricField& g) {
  return TensorField{g.chart, 2, Symmetry::symmetric, g.fn};
}

inline TensorField scalar_as_tensor(const ScalarField& f) {
  return TensorField{f.chart, 0, Symmetry::none, [fn = f.fn](JetSpan x) {
                       JetTensor t(static_cast<int>(x.size()), 0);
                       t.flat(0) = fn(x);
                       return t;
                     }};
}

}  // namespace conegeo
