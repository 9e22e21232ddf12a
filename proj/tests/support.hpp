#pragma once

// Shared test helpers: random formula/trajectory generators and a
// brute-force STL robustness oracle that evaluates the recursive definition
// point by point, independently of the library's vectorized evaluator.

#include <algorithm>
#include <limits>
#include <random>

#include "ecats/stl.hpp"
#include "ecats/trajectory.hpp"

namespace ecats::testing {

using stl::Formula;
namespace node = stl::node;

inline stl::Interval random_interval(std::mt19937_64& rng, int max_bound) {
  std::uniform_int_distribution<int> bound(0, max_bound);
  int a = bound(rng), b = bound(rng);
  if (a > b) std::swap(a, b);
  if (std::bernoulli_distribution(0.1)(rng)) return stl::Interval::from(a);
  return stl::Interval(a, b);
}

/// Random formula with exactly `nodes` nodes (nodes >= 1).
inline Formula random_formula(std::mt19937_64& rng, std::size_t nodes, std::size_t n_vars, int max_bound,
                              double threshold_scale = 2.0) {
  std::uniform_real_distribution<double> thr(-threshold_scale, threshold_scale);
  std::uniform_int_distribution<std::size_t> var(0, n_vars - 1);
  if (nodes <= 1) {
    if (std::bernoulli_distribution(0.05)(rng)) return stl::top();
    return stl::atom(var(rng), std::bernoulli_distribution(0.5)(rng) ? stl::Cmp::Le : stl::Cmp::Ge, thr(rng));
  }
  if (nodes == 2 || std::bernoulli_distribution(0.5)(rng)) {
    Formula arg = random_formula(rng, nodes - 1, n_vars, max_bound, threshold_scale);
    switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
      case 0: return stl::lnot(arg);
      case 1: return stl::eventually(random_interval(rng, max_bound), arg);
      default: return stl::globally(random_interval(rng, max_bound), arg);
    }
  }
  const std::size_t left = std::uniform_int_distribution<std::size_t>(1, nodes - 2)(rng);
  Formula a = random_formula(rng, left, n_vars, max_bound, threshold_scale);
  Formula b = random_formula(rng, nodes - 1 - left, n_vars, max_bound, threshold_scale);
  switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
    case 0: return stl::land(a, b);
    case 1: return stl::lor(a, b);
    default: return stl::until(random_interval(rng, max_bound), a, b);
  }
}

inline Trajectory random_trajectory(std::mt19937_64& rng, std::size_t length, std::size_t dims) {
  Trajectory xi(length, dims);
  std::normal_distribution<double> step(0.0, 0.7);
  for (std::size_t i = 0; i < dims; ++i) {
    double x = std::normal_distribution<double>(0.0, 1.0)(rng);
    for (std::size_t t = 0; t < length; ++t) {
      xi.at(t, i) = x;
      x += step(rng);
    }
  }
  return xi;
}

/// Robustness from the textbook recursion, one time point at a time.
inline double oracle_robustness(const Formula& f, const Trajectory& xi, std::size_t t) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t T = xi.length();
  auto last = [&](const stl::Interval& i) -> std::size_t {
    if (i.unbounded()) return T - 1;
    return std::min<std::size_t>(T - 1, t + static_cast<std::size_t>(i.hi));
  };
  if (f.is<node::True>()) return inf;
  if (auto a = f.as<node::Atom>()) {
    const double x = xi.at(t, a->var);
    return a->cmp == stl::Cmp::Ge ? x - a->threshold : a->threshold - x;
  }
  if (auto n = f.as<node::Not>()) return -oracle_robustness(n->arg, xi, t);
  if (auto n = f.as<node::And>())
    return std::min(oracle_robustness(n->lhs, xi, t), oracle_robustness(n->rhs, xi, t));
  if (auto n = f.as<node::Or>())
    return std::max(oracle_robustness(n->lhs, xi, t), oracle_robustness(n->rhs, xi, t));
  if (auto n = f.as<node::Eventually>()) {
    double best = -inf;
    for (std::size_t s = t + n->interval.lo; s <= last(n->interval) && s < T; ++s)
      best = std::max(best, oracle_robustness(n->arg, xi, s));
    return best;
  }
  if (auto n = f.as<node::Globally>()) {
    double best = inf;
    for (std::size_t s = t + n->interval.lo; s <= last(n->interval) && s < T; ++s)
      best = std::min(best, oracle_robustness(n->arg, xi, s));
    return best;
  }
  const auto& u = *f.as<node::Until>();
  double best = -inf;
  for (std::size_t s = t + u.interval.lo; s <= last(u.interval) && s < T; ++s) {
    double hold = inf;
    for (std::size_t r = t; r <= s; ++r) hold = std::min(hold, oracle_robustness(u.lhs, xi, r));
    best = std::max(best, std::min(oracle_robustness(u.rhs, xi, s), hold));
  }
  return best;
}

}  // namespace ecats::testing
