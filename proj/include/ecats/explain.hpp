#pragma once

// Explanations from attention: per-trajectory (local) rankings of concepts,
// per-class (global) summaries, and the threshold-shift post-processing that
// makes a formula's robustness sign line up with class membership.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ecats/error.hpp"
#include "ecats/io.hpp"
#include "ecats/stl.hpp"
#include "ecats/stl_eval.hpp"
#include "ecats/stl_text.hpp"
#include "ecats/stl_transform.hpp"
#include "ecats/trajectory.hpp"

namespace ecats::explain {

using stl::Formula;

/// The concept set explanations draw from.
struct Concepts {
  std::span<const Formula> formulas;
  const Eigen::MatrixXd& embeddings;  // one row per formula
};

struct Entry {
  std::size_t concept_index = 0;
  Formula formula;
  double attention = 0.0;
  double robustness = 0.0;  // of the formula on the explained trajectory at t = 0
};

struct LocalExplanation {
  std::string trajectory_id;
  int label = 0;                    // class the explanation is filed under
  std::vector<std::size_t> ranking; // all concepts, attention descending
  std::vector<double> attention;    // the attention record, by concept index
  std::vector<Entry> entries;       // the selected subset, attention descending
  Formula formula;                  // conjunction of the selected formulas
};

namespace detail {

// Cosine of two embedding rows; a zero row is treated as dissimilar to everything.
inline double similarity(const Eigen::MatrixXd& e, std::size_t i, std::size_t j) {
  const double a = e.row(static_cast<Eigen::Index>(i)).squaredNorm();
  const double b = e.row(static_cast<Eigen::Index>(j)).squaredNorm();
  if (a == 0.0 || b == 0.0) return 0.0;
  return e.row(static_cast<Eigen::Index>(i)).dot(e.row(static_cast<Eigen::Index>(j))) / std::sqrt(a * b);
}

// Greedy pass over `order`: keep an index iff its similarity to every kept one is < threshold.
inline std::vector<std::size_t> similarity_filter(const std::vector<std::size_t>& order, const Eigen::MatrixXd& e,
                                                  double threshold, std::size_t limit) {
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    if (kept.size() == limit) break;
    if (std::all_of(kept.begin(), kept.end(), [&](std::size_t k) { return similarity(e, i, k) < threshold; }))
      kept.push_back(i);
  }
  return kept;
}

}  // namespace detail

/// Concepts ranked by attention (ties by index); the top ones that are
/// mutually less similar than `sim_threshold` are kept, up to `k_top`.
inline LocalExplanation explain_local(const Eigen::VectorXd& attention, const Trajectory& xi, const Concepts& bank,
                                      std::size_t k_top = 3, double sim_threshold = 0.9, int label = 0,
                                      std::string trajectory_id = {}) {
  if (bank.formulas.empty()) throw ConfigError("explain_local: empty concept bank");
  if (k_top < 1) throw ConfigError("explain_local: k_top must be >= 1");
  if (!(sim_threshold >= -1.0 && sim_threshold <= 1.0)) throw ConfigError("explain_local: sim_threshold must lie in [-1, 1]");
  if (static_cast<std::size_t>(attention.size()) != bank.formulas.size() ||
      static_cast<std::size_t>(bank.embeddings.rows()) != bank.formulas.size())
    throw ShapeError("explain_local: attention, formulas and embeddings disagree in size");
  LocalExplanation out;
  out.trajectory_id = std::move(trajectory_id);
  out.label = label;
  out.attention.assign(attention.data(), attention.data() + attention.size());
  out.ranking.resize(bank.formulas.size());
  std::iota(out.ranking.begin(), out.ranking.end(), 0);
  std::stable_sort(out.ranking.begin(), out.ranking.end(),
                   [&](std::size_t a, std::size_t b) { return attention[static_cast<Eigen::Index>(a)] > attention[static_cast<Eigen::Index>(b)]; });
  const auto kept = detail::similarity_filter(out.ranking, bank.embeddings, sim_threshold, k_top);
  std::vector<Formula> parts;
  for (std::size_t i : kept) {
    out.entries.push_back({i, bank.formulas[i], attention[static_cast<Eigen::Index>(i)], stl::robustness(bank.formulas[i], xi, 0)});
    parts.push_back(bank.formulas[i]);
  }
  out.formula = stl::conjunction(parts);
  return out;
}

struct SignSummary {
  std::size_t target_positive = 0, target_negative = 0, target_zero = 0;
  std::size_t other_positive = 0, other_negative = 0, other_zero = 0;
};

struct ShiftResult {
  Formula formula;                 // shifted, possibly negated, simplified; phi itself on failure
  std::optional<double> epsilon;   // empty when no grid value qualified
  bool negated = false;
  SignSummary signs;               // of the returned formula
};

inline SignSummary sign_summary(const Formula& phi, std::span<const Trajectory> target, std::span<const Trajectory> other) {
  SignSummary s;
  for (const auto& xi : target) {
    const double r = stl::robustness(phi, xi, 0);
    (r > 0 ? s.target_positive : r < 0 ? s.target_negative : s.target_zero)++;
  }
  for (const auto& xi : other) {
    const double r = stl::robustness(phi, xi, 0);
    (r > 0 ? s.other_positive : r < 0 ? s.other_negative : s.other_zero)++;
  }
  return s;
}

/// `points` values spanning [-range/2, range/2] evenly, ordered by |eps|
/// (negative first on ties).
inline std::vector<double> epsilon_grid(double range, std::size_t points = 41) {
  if (points < 1) throw ConfigError("epsilon grid needs at least one point");
  std::vector<double> g;
  if (points == 1 || !(range > 0)) return {0.0};
  const double half = static_cast<double>(points - 1) / 2.0;
  for (std::size_t k = 0; k < points; ++k) g.push_back((static_cast<double>(k) - half) / half * range / 2.0);
  std::stable_sort(g.begin(), g.end(), [](double a, double b) {
    return std::abs(a) < std::abs(b) || (std::abs(a) == std::abs(b) && a < b);
  });
  return g;
}

/// Default grid for two sets: the pooled value range over every sample and dimension.
inline std::vector<double> epsilon_grid(std::span<const Trajectory> a, std::span<const Trajectory> b,
                                        std::size_t points = 41) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (auto set : {a, b})
    for (const auto& xi : set)
      for (double v : xi.values()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  return epsilon_grid(hi > lo ? hi - lo : 0.0, points);
}

inline constexpr double kDefaultOutlierFraction = 0.05;

/// Tries grid values in order; accepts the first eps for which shifting every
/// threshold by eps gives one robustness sign on `target` and the opposite on
/// `other`, up to floor(outlier_fraction * total) exceptions (a zero counts as
/// an exception). The accepted formula is negated when it is negative on the
/// target class, then simplified.
inline ShiftResult postprocess(const Formula& phi, std::span<const Trajectory> target, std::span<const Trajectory> other,
                               std::span<const double> grid, double outlier_fraction = kDefaultOutlierFraction) {
  if (target.empty() || other.empty()) throw ConfigError("postprocess: both classes need trajectories");
  if (grid.empty()) throw ConfigError("postprocess: empty epsilon grid");
  const auto allowed = static_cast<std::size_t>(
      std::floor(outlier_fraction * static_cast<double>(target.size() + other.size()) + 1e-9));
  for (double eps : grid) {
    const Formula shifted = stl::shift_thresholds(phi, eps);
    const SignSummary s = sign_summary(shifted, target, other);
    const std::size_t bad_pos = s.target_negative + s.target_zero + s.other_positive + s.other_zero;
    const std::size_t bad_neg = s.target_positive + s.target_zero + s.other_negative + s.other_zero;
    if (std::min(bad_pos, bad_neg) > allowed) continue;
    ShiftResult r;
    r.epsilon = eps;
    r.negated = bad_neg < bad_pos;
    r.formula = stl::simplify(r.negated ? stl::negate(shifted) : shifted);
    r.signs = sign_summary(r.formula, target, other);
    return r;
  }
  return {phi, std::nullopt, false, sign_summary(phi, target, other)};
}

struct GlobalExplanation {
  int label = 0;
  std::size_t trajectories = 0;              // local explanations that contributed
  std::vector<std::size_t> batch;            // distinct argmax concepts, frequency then attention order
  std::vector<std::size_t> batch_counts;
  std::vector<std::size_t> survivors;        // after the similarity filter
  std::vector<ShiftResult> processed;        // one per survivor
  std::vector<Formula> parts;                // post-processed survivors that were kept
  Formula formula;                           // disjunction of `parts`
};

/// Collects the argmax concept of every local explanation filed under
/// `label`, orders the distinct ones by frequency and then mean attention,
/// removes near-duplicates by embedding similarity, post-processes each
/// survivor against (target = class trajectories, other = the rest) and
/// disjoins the result. Survivors whose post-processing found no separating
/// shift are left out unless none succeeded.
inline GlobalExplanation explain_global(std::span<const LocalExplanation> locals, int label, const Concepts& bank,
                                        std::span<const Trajectory> target, std::span<const Trajectory> other,
                                        double sim_threshold = 0.9, std::span<const double> grid = {},
                                        double outlier_fraction = kDefaultOutlierFraction) {
  GlobalExplanation g;
  g.label = label;
  std::map<std::size_t, std::pair<std::size_t, double>> stats;  // concept -> (count, attention sum)
  for (const auto& l : locals) {
    if (l.label != label || l.ranking.empty()) continue;
    ++g.trajectories;
    const std::size_t top = l.ranking.front();
    stats[top].first++;
    stats[top].second += l.attention[top];
  }
  if (g.trajectories == 0) throw ConfigError("explain_global: no local explanations for class " + std::to_string(label));
  for (const auto& [i, s] : stats) g.batch.push_back(i);
  std::stable_sort(g.batch.begin(), g.batch.end(), [&](std::size_t a, std::size_t b) {
    const auto& sa = stats[a];
    const auto& sb = stats[b];
    if (sa.first != sb.first) return sa.first > sb.first;
    return sa.second / static_cast<double>(sa.first) > sb.second / static_cast<double>(sb.first);
  });
  for (std::size_t i : g.batch) g.batch_counts.push_back(stats[i].first);
  g.survivors = detail::similarity_filter(g.batch, bank.embeddings, sim_threshold, g.batch.size());

  std::vector<double> default_grid;
  if (grid.empty()) {
    default_grid = epsilon_grid(target, other);
    grid = default_grid;
  }
  for (std::size_t i : g.survivors) g.processed.push_back(postprocess(bank.formulas[i], target, other, grid, outlier_fraction));
  for (const auto& r : g.processed)
    if (r.epsilon) g.parts.push_back(r.formula);
  if (g.parts.empty())
    for (const auto& r : g.processed) g.parts.push_back(r.formula);
  g.formula = stl::simplify(stl::disjunction(g.parts));
  return g;
}

struct ReportRow {
  std::string trajectory_id;
  int label = 0;
  double robustness = 0.0;
};

/// Robustness of phi at t = 0 on every trajectory of the set.
inline std::vector<ReportRow> robustness_report(const Formula& phi, const LabeledSet& set) {
  std::vector<ReportRow> rows;
  for (std::size_t k = 0; k < set.size(); ++k)
    rows.push_back({k < set.ids.size() ? set.ids[k] : std::to_string(k), set.labels[k],
                    stl::robustness(phi, set.trajectories[k], 0)});
  return rows;
}

inline std::string report_csv(std::span<const ReportRow> rows) {
  std::string out = "traj_id,label,robustness\n";
  for (const auto& r : rows) out += r.trajectory_id + "," + std::to_string(r.label) + "," + io::fmt(r.robustness) + "\n";
  return out;
}

struct Separation {
  double own = 0.0;    // fraction of class rows with robustness > 0
  double other = 0.0;  // fraction of remaining rows with robustness < 0
};

inline Separation separation(std::span<const ReportRow> rows, int label) {
  std::size_t own = 0, own_ok = 0, other = 0, other_ok = 0;
  for (const auto& r : rows) {
    if (r.label == label) {
      ++own;
      own_ok += r.robustness > 0;
    } else {
      ++other;
      other_ok += r.robustness < 0;
    }
  }
  return {own ? static_cast<double>(own_ok) / static_cast<double>(own) : 0.0,
          other ? static_cast<double>(other_ok) / static_cast<double>(other) : 0.0};
}

/// Scatter of robustness against trajectory index, one colour per class,
/// with the zero line marked.
inline std::string report_svg(std::span<const ReportRow> rows, const std::string& title) {
  const double w = 640, h = 360, left = 60, right = 20, top = 40, bottom = 40;
  double lo = 0, hi = 0;
  for (const auto& r : rows) {
    if (!std::isfinite(r.robustness)) continue;
    lo = std::min(lo, r.robustness);
    hi = std::max(hi, r.robustness);
  }
  if (hi == lo) hi = lo + 1;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  auto x = [&](std::size_t i) {
    return left + (rows.size() > 1 ? static_cast<double>(i) / static_cast<double>(rows.size() - 1) : 0.5) * (w - left - right);
  };
  auto y = [&](double v) { return top + (hi - std::clamp(v, lo, hi)) / (hi - lo) * (h - top - bottom); };
  auto esc = [](const std::string& s) {
    std::string o;
    for (char c : s) {
      if (c == '<') o += "&lt;";
      else if (c == '>') o += "&gt;";
      else if (c == '&') o += "&amp;";
      else o += c;
    }
    return o;
  };
  const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + io::fmt(w) + "\" height=\"" + io::fmt(h) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + io::fmt(left) + "\" y=\"24\" font-family=\"sans-serif\" font-size=\"13\">" + esc(title) + "</text>\n";
  s += "<line x1=\"" + io::fmt(left) + "\" x2=\"" + io::fmt(w - right) + "\" y1=\"" + io::fmt(y(0)) + "\" y2=\"" +
       io::fmt(y(0)) + "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
  s += "<line x1=\"" + io::fmt(left) + "\" x2=\"" + io::fmt(left) + "\" y1=\"" + io::fmt(top) + "\" y2=\"" +
       io::fmt(h - bottom) + "\" stroke=\"black\"/>\n";
  char buf[64];
  for (double v : {lo, 0.0, hi}) {
    std::snprintf(buf, sizeof buf, "%.3g", v);
    s += "<text x=\"" + io::fmt(left - 6) + "\" y=\"" + io::fmt(y(v) + 4) +
         "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" + buf + "</text>\n";
  }
  s += "<text x=\"" + io::fmt((w + left) / 2) + "\" y=\"" + io::fmt(h - 10) +
       "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">trajectory</text>\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const char* c = colours[static_cast<std::size_t>(std::abs(rows[i].label)) % 4];
    s += "<circle cx=\"" + io::fmt(x(i)) + "\" cy=\"" + io::fmt(y(rows[i].robustness)) + "\" r=\"2.5\" fill=\"" + c +
         "\"><title>" + esc(rows[i].trajectory_id) + "</title></circle>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace ecats::explain
