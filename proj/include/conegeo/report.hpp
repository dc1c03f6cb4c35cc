#pragma once

// Per-check verification records and their serialization.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "conegeo/chart.hpp"

namespace conegeo {

enum class Verdict { pass, fail, inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "pass";
    case Verdict::fail:
      return "fail";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "fail";
}

/// Band used for "is parallel" style claims: pass at or below 1e-9, a clear
/// rejection above 1e-3, inconclusive in between.
inline constexpr double kParallelTolerance = 1e-9;
inline constexpr double kRejectThreshold = 1e-3;

struct Offender {
  Point point;
  double value = 0.0;
};

struct ResidualReport {
  std::string case_id;
  std::string check;
  std::size_t points_sampled = 0;
  double max_residual = 0.0;
  double tolerance = 0.0;
  Verdict verdict = Verdict::pass;
  std::uint64_t seed = 0;
  std::int64_t runtime_ms = 0;
  std::vector<Offender> details;  // worst points, largest first
  std::vector<std::pair<std::string, double>> metrics;
  std::string note;
  /// Residuals strictly between `tolerance` and this value are inconclusive;
  /// zero means the check has no dead zone.
  double reject_threshold = 0.0;

  bool passed() const { return verdict == Verdict::pass; }

  double metric(const std::string& name) const {
    for (const auto& [k, v] : metrics) {
      if (k == name) return v;
    }
    return std::numeric_limits<double>::quiet_NaN();
  }

  void set_metric(const std::string& name, double value) {
    for (auto& [k, v] : metrics) {
      if (k == name) {
        v = value;
        return;
      }
    }
    metrics.emplace_back(name, value);
  }

  /// Recomputes the verdict from max_residual.
  void finalize() {
    if (std::isnan(max_residual)) {
      verdict = Verdict::fail;
    } else if (max_residual <= tolerance) {
      verdict = Verdict::pass;
    } else if (reject_threshold > tolerance && max_residual <= reject_threshold) {
      verdict = Verdict::inconclusive;
    } else {
      verdict = Verdict::fail;
    }
  }

  /// Marks a failed precondition: the check did not run to completion.
  void fail_with(std::string why) {
    note = std::move(why);
    verdict = Verdict::fail;
  }
};

/// Folds per-point residuals into a report, keeping the five worst points.
class ReportBuilder {
 public:
  static constexpr std::size_t kKeep = 5;

  ReportBuilder(std::string case_id, std::string check, double tolerance, std::uint64_t seed = 0)
      : start_(std::chrono::steady_clock::now()) {
    r_.case_id = std::move(case_id);
    r_.check = std::move(check);
    r_.tolerance = tolerance;
    r_.seed = seed;
  }

  ReportBuilder& dead_zone(double reject_threshold) {
    r_.reject_threshold = reject_threshold;
    return *this;
  }

  void add(const Point& p, double value) {
    ++r_.points_sampled;
    // NaN is sticky: a single NaN residual fails the report.
    if (std::isnan(value)) {
      r_.max_residual = value;
    } else if (!std::isnan(r_.max_residual)) {
      r_.max_residual = std::max(r_.max_residual, value);
    }
    auto& d = r_.details;
    if (d.size() < kKeep || value > d.back().value || std::isnan(value)) {
      d.push_back({p, value});
      std::stable_sort(d.begin(), d.end(), [](const Offender& a, const Offender& b) {
        if (std::isnan(a.value) != std::isnan(b.value)) return std::isnan(a.value);
        return a.value > b.value;
      });
      if (d.size() > kKeep) d.pop_back();
    }
  }

  void metric(const std::string& name, double value) { r_.set_metric(name, value); }
  void note(std::string text) { r_.note = std::move(text); }

  ResidualReport& report() { return r_; }

  ResidualReport finish() {
    r_.runtime_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_).count();
    if (!failed_) r_.finalize();
    return r_;
  }

  /// Precondition failure; finish() keeps the fail verdict.
  void fail_with(std::string why) {
    failed_ = true;
    r_.fail_with(std::move(why));
  }

 private:
  ResidualReport r_;
  std::chrono::steady_clock::time_point start_;
  bool failed_ = false;
};

namespace detail {

inline std::string json_number(double x) {
  if (std::isnan(x)) return "null";
  if (std::isinf(x)) return x > 0 ? "1e999" : "-1e999";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string json_string(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    switch (ch) {
      case '"':
        out += "\\\"";
        break;
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\t':
        out += "\\t";
        break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", ch);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  return out + "\"";
}

}  // namespace detail

/// One JSON object per report; floats with 17 significant digits. With
/// `with_runtime` false the runtime field is written as 0 so that identical
/// runs give byte-identical output.
inline std::string to_json(const ResidualReport& r, bool with_runtime = false) {
  using detail::json_number;
  using detail::json_string;
  std::string s = "{";
  s += "\"case_id\":" + json_string(r.case_id);
  s += ",\"check\":" + json_string(r.check);
  s += ",\"points_sampled\":" + std::to_string(r.points_sampled);
  s += ",\"max_residual\":" + json_number(r.max_residual);
  s += ",\"tolerance\":" + json_number(r.tolerance);
  s += ",\"verdict\":" + json_string(to_string(r.verdict));
  s += ",\"seed\":" + std::to_string(r.seed);
  s += ",\"runtime_ms\":" + std::to_string(with_runtime ? r.runtime_ms : 0);
  s += ",\"details\":[";
  for (std::size_t i = 0; i < r.details.size(); ++i) {
    if (i) s += ",";
    s += "{\"point\":[";
    for (std::size_t k = 0; k < r.details[i].point.size(); ++k) {
      if (k) s += ",";
      s += json_number(r.details[i].point[k]);
    }
    s += "],\"value\":" + json_number(r.details[i].value) + "}";
  }
  s += "]";
  if (!r.metrics.empty()) {
    s += ",\"metrics\":{";
    for (std::size_t i = 0; i < r.metrics.size(); ++i) {
      if (i) s += ",";
      s += json_string(r.metrics[i].first) + ":" + json_number(r.metrics[i].second);
    }
    s += "}";
  }
  if (!r.note.empty()) s += ",\"note\":" + json_string(r.note);
  s += "}";
  return s;
}

inline std::string to_json(const std::vector<ResidualReport>& rs, bool with_runtime = false) {
  std::string s = "[";
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (i) s += ",\n ";
    s += to_json(rs[i], with_runtime);
  }
  return s + "]";
}

inline std::string to_text(const ResidualReport& r, bool with_runtime = false) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-13s %-28s %-32s n=%-5zu max=%.3e tol=%.1e", to_string(r.verdict),
                r.case_id.c_str(), r.check.c_str(), r.points_sampled, r.max_residual, r.tolerance);
  std::string s = buf;
  if (with_runtime) s += " " + std::to_string(r.runtime_ms) + "ms";
  for (const auto& [k, v] : r.metrics) {
    std::snprintf(buf, sizeof buf, " %s=%.6g", k.c_str(), v);
    s += buf;
  }
  if (!r.note.empty()) s += "  (" + r.note + ")";
  return s;
}

/// All reports pass.
inline bool all_passed(const std::vector<ResidualReport>& rs) {
  return std::all_of(rs.begin(), rs.end(), [](const ResidualReport& r) { return r.passed(); });
}

}  // namespace conegeo
