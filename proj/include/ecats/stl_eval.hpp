#pragma once

// Quantitative (robustness) and qualitative (Boolean) STL semantics over
// discretely sampled trajectories. Interval bounds are sampling-step offsets.
//
// Temporal windows are clipped to the trajectory end. A window that is empty
// after clipping folds to the identity of its operator (-inf for F and U,
// +inf for G) when it occurs inside a formula; an empty window at the
// queried time of the root operator is an error.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

#include "ecats/error.hpp"
#include "ecats/stl.hpp"
#include "ecats/trajectory.hpp"

namespace ecats::stl {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct RobustnessValue {
  double value = 0.0;
  std::size_t time = 0;
};

namespace detail {

// Last index (exclusive) of the window [t + lo, t + hi] clipped to length T.
inline std::size_t window_end(std::size_t t, const Interval& i, std::size_t T) {
  if (i.unbounded()) return T;
  return std::min(T, t + static_cast<std::size_t>(i.hi) + 1);
}

// Samples a child must provide so that its parent can be evaluated on [0, need).
inline std::size_t child_need(std::size_t need, const Interval& i, std::size_t T) {
  if (need == 0) return 0;
  return window_end(need - 1, i, T);
}

inline void check_vars(const Formula& f, const Trajectory& xi) {
  if (num_vars(f) > xi.dims())
    throw EvalError("formula references x_" + std::to_string(num_vars(f) - 1) + " but the trajectory has " +
                    std::to_string(xi.dims()) + " dimension(s)");
}

inline void check_root_window(const Formula& f, const Trajectory& xi, std::size_t t) {
  const Interval* i = nullptr;
  if (auto n = f.as<node::Eventually>()) i = &n->interval;
  if (auto n = f.as<node::Globally>()) i = &n->interval;
  if (auto n = f.as<node::Until>()) i = &n->interval;
  if (i && t + static_cast<std::size_t>(i->lo) >= xi.length())
    throw EvalError("degenerate interval: window [" + std::to_string(t + i->lo) + ", ...] starts past the trajectory end");
}

// Robustness on t = 0 .. need-1.
inline std::vector<double> robustness_prefix(const Formula& f, const Trajectory& xi, std::size_t need) {
  const std::size_t T = xi.length();
  return f.visit(overloaded{
      [&](const node::True&) { return std::vector<double>(need, kInf); },
      [&](const node::Atom& a) {
        std::vector<double> out(need);
        for (std::size_t t = 0; t < need; ++t) {
          const double x = xi.at(t, a.var);
          out[t] = a.cmp == Cmp::Ge ? x - a.threshold : a.threshold - x;
        }
        return out;
      },
      [&](const node::Not& n) {
        auto out = robustness_prefix(n.arg, xi, need);
        for (auto& v : out) v = -v;
        return out;
      },
      [&](const node::And& n) {
        auto a = robustness_prefix(n.lhs, xi, need);
        auto b = robustness_prefix(n.rhs, xi, need);
        for (std::size_t t = 0; t < need; ++t) a[t] = std::min(a[t], b[t]);
        return a;
      },
      [&](const node::Or& n) {
        auto a = robustness_prefix(n.lhs, xi, need);
        auto b = robustness_prefix(n.rhs, xi, need);
        for (std::size_t t = 0; t < need; ++t) a[t] = std::max(a[t], b[t]);
        return a;
      },
      [&](const node::Eventually& n) {
        auto c = robustness_prefix(n.arg, xi, child_need(need, n.interval, T));
        std::vector<double> out(need, -kInf);
        for (std::size_t t = 0; t < need; ++t)
          for (std::size_t s = t + n.interval.lo, e = window_end(t, n.interval, T); s < e; ++s)
            out[t] = std::max(out[t], c[s]);
        return out;
      },
      [&](const node::Globally& n) {
        auto c = robustness_prefix(n.arg, xi, child_need(need, n.interval, T));
        std::vector<double> out(need, kInf);
        for (std::size_t t = 0; t < need; ++t)
          for (std::size_t s = t + n.interval.lo, e = window_end(t, n.interval, T); s < e; ++s)
            out[t] = std::min(out[t], c[s]);
        return out;
      },
      [&](const node::Until& n) {
        const std::size_t cn = child_need(need, n.interval, T);
        auto a = robustness_prefix(n.lhs, xi, cn);
        auto b = robustness_prefix(n.rhs, xi, cn);
        std::vector<double> out(need, -kInf);
        for (std::size_t t = 0; t < need; ++t) {
          double hold = kInf;  // min of lhs over [t, s]
          const std::size_t e = window_end(t, n.interval, T);
          for (std::size_t s = t; s < e; ++s) {
            hold = std::min(hold, a[s]);
            if (s >= t + n.interval.lo) out[t] = std::max(out[t], std::min(b[s], hold));
          }
        }
        return out;
      },
  });
}

inline std::vector<bool> satisfaction_prefix(const Formula& f, const Trajectory& xi, std::size_t need) {
  const std::size_t T = xi.length();
  return f.visit(overloaded{
      [&](const node::True&) { return std::vector<bool>(need, true); },
      [&](const node::Atom& a) {
        std::vector<bool> out(need);
        for (std::size_t t = 0; t < need; ++t)
          out[t] = a.cmp == Cmp::Ge ? xi.at(t, a.var) >= a.threshold : xi.at(t, a.var) <= a.threshold;
        return out;
      },
      [&](const node::Not& n) {
        auto out = satisfaction_prefix(n.arg, xi, need);
        out.flip();
        return out;
      },
      [&](const node::And& n) {
        auto a = satisfaction_prefix(n.lhs, xi, need);
        auto b = satisfaction_prefix(n.rhs, xi, need);
        for (std::size_t t = 0; t < need; ++t) a[t] = a[t] && b[t];
        return a;
      },
      [&](const node::Or& n) {
        auto a = satisfaction_prefix(n.lhs, xi, need);
        auto b = satisfaction_prefix(n.rhs, xi, need);
        for (std::size_t t = 0; t < need; ++t) a[t] = a[t] || b[t];
        return a;
      },
      [&](const node::Eventually& n) {
        auto c = satisfaction_prefix(n.arg, xi, child_need(need, n.interval, T));
        std::vector<bool> out(need, false);
        for (std::size_t t = 0; t < need; ++t)
          for (std::size_t s = t + n.interval.lo, e = window_end(t, n.interval, T); s < e && !out[t]; ++s)
            out[t] = c[s];
        return out;
      },
      [&](const node::Globally& n) {
        auto c = satisfaction_prefix(n.arg, xi, child_need(need, n.interval, T));
        std::vector<bool> out(need, true);
        for (std::size_t t = 0; t < need; ++t)
          for (std::size_t s = t + n.interval.lo, e = window_end(t, n.interval, T); s < e && out[t]; ++s)
            out[t] = c[s];
        return out;
      },
      // Some s in the window satisfies rhs while lhs holds on all of [t, s].
      [&](const node::Until& n) {
        const std::size_t cn = child_need(need, n.interval, T);
        auto a = satisfaction_prefix(n.lhs, xi, cn);
        auto b = satisfaction_prefix(n.rhs, xi, cn);
        std::vector<bool> out(need, false);
        for (std::size_t t = 0; t < need; ++t) {
          const std::size_t e = window_end(t, n.interval, T);
          for (std::size_t s = t; s < e && a[s]; ++s) {
            if (s >= t + n.interval.lo && b[s]) {
              out[t] = true;
              break;
            }
          }
        }
        return out;
      },
  });
}

}  // namespace detail

/// Robustness of `f` on `xi` at every time index.
inline std::vector<double> robustness_signal(const Formula& f, const Trajectory& xi) {
  detail::check_vars(f, xi);
  return detail::robustness_prefix(f, xi, xi.length());
}

inline RobustnessValue eval_robustness(const Formula& f, const Trajectory& xi, std::size_t t = 0) {
  if (t >= xi.length()) throw EvalError("time index " + std::to_string(t) + " out of range");
  detail::check_vars(f, xi);
  detail::check_root_window(f, xi, t);
  return {detail::robustness_prefix(f, xi, t + 1)[t], t};
}

inline double robustness(const Formula& f, const Trajectory& xi, std::size_t t = 0) {
  return eval_robustness(f, xi, t).value;
}

inline bool eval_boolean(const Formula& f, const Trajectory& xi, std::size_t t = 0) {
  if (t >= xi.length()) throw EvalError("time index " + std::to_string(t) + " out of range");
  detail::check_vars(f, xi);
  detail::check_root_window(f, xi, t);
  return detail::satisfaction_prefix(f, xi, t + 1)[t];
}

}  // namespace ecats::stl
