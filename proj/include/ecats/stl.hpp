#pragma once

// Signal Temporal Logic abstract syntax.
//
// Formulae are immutable trees with shared structure: copying a Formula is a
// pointer copy, and sub-formulae may be shared freely between trees and
// threads.

#include <algorithm>
#include <climits>
#include <cstddef>
#include <iterator>
#include <memory>
#include <type_traits>
#include <utility>
#include <variant>

#include "ecats/error.hpp"

namespace ecats::stl {

enum class Cmp { Le, Ge };

/// Closed interval of sampling-step offsets. `hi == kUnbounded` runs to the
/// end of whatever trajectory the formula is evaluated on.
struct Interval {
  static constexpr int kUnbounded = INT_MAX;

  int lo = 0;
  int hi = 0;

  constexpr Interval() = default;
  constexpr Interval(int lo_, int hi_) : lo(lo_), hi(hi_) {
    if (lo < 0 || hi < lo) throw ConfigError("malformed interval: need 0 <= lo <= hi");
  }
  static constexpr Interval from(int lo) { return Interval(lo, kUnbounded); }

  constexpr bool unbounded() const noexcept { return hi == kUnbounded; }
  friend constexpr bool operator==(const Interval&, const Interval&) = default;
};

struct Node;

class Formula {
 public:
  /// Defaults to `true`.
  Formula();
  explicit Formula(Node node);

  const Node& node() const noexcept { return *node_; }

  template <class T>
  const T* as() const noexcept;
  template <class T>
  bool is() const noexcept {
    return as<T>() != nullptr;
  }

  template <class Visitor>
  decltype(auto) visit(Visitor&& vis) const;

 private:
  std::shared_ptr<const Node> node_;
};

namespace node {
struct True {};
struct Atom {
  std::size_t var = 0;
  Cmp cmp = Cmp::Le;
  double threshold = 0.0;
};
struct Not {
  Formula arg;
};
struct And {
  Formula lhs, rhs;
};
struct Or {
  Formula lhs, rhs;
};
struct Eventually {
  Interval interval;
  Formula arg;
};
struct Globally {
  Interval interval;
  Formula arg;
};
struct Until {
  Interval interval;
  Formula lhs, rhs;
};
}  // namespace node

struct Node {
  std::variant<node::True, node::Atom, node::Not, node::And, node::Or, node::Eventually,
               node::Globally, node::Until>
      value;
};

inline Formula::Formula() : node_(std::make_shared<const Node>(Node{node::True{}})) {}
inline Formula::Formula(Node node) : node_(std::make_shared<const Node>(std::move(node))) {}

template <class T>
const T* Formula::as() const noexcept {
  return std::get_if<T>(&node_->value);
}

template <class Visitor>
decltype(auto) Formula::visit(Visitor&& vis) const {
  return std::visit(std::forward<Visitor>(vis), node_->value);
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Builders.
inline Formula top() { return Formula(Node{node::True{}}); }
inline Formula atom(std::size_t var, Cmp cmp, double threshold) {
  return Formula(Node{node::Atom{var, cmp, threshold}});
}
inline Formula le(std::size_t var, double threshold) { return atom(var, Cmp::Le, threshold); }
inline Formula ge(std::size_t var, double threshold) { return atom(var, Cmp::Ge, threshold); }
inline Formula lnot(Formula f) { return Formula(Node{node::Not{std::move(f)}}); }
inline Formula land(Formula a, Formula b) {
  return Formula(Node{node::And{std::move(a), std::move(b)}});
}
inline Formula lor(Formula a, Formula b) {
  return Formula(Node{node::Or{std::move(a), std::move(b)}});
}
inline Formula eventually(Interval i, Formula f) {
  return Formula(Node{node::Eventually{i, std::move(f)}});
}
inline Formula globally(Interval i, Formula f) {
  return Formula(Node{node::Globally{i, std::move(f)}});
}
inline Formula until(Interval i, Formula a, Formula b) {
  return Formula(Node{node::Until{i, std::move(a), std::move(b)}});
}

inline std::size_t node_count(const Formula& f) {
  return f.visit(overloaded{
      [](const node::True&) -> std::size_t { return 1; },
      [](const node::Atom&) -> std::size_t { return 1; },
      [](const node::Not& n) { return 1 + node_count(n.arg); },
      [](const node::And& n) { return 1 + node_count(n.lhs) + node_count(n.rhs); },
      [](const node::Or& n) { return 1 + node_count(n.lhs) + node_count(n.rhs); },
      [](const node::Eventually& n) { return 1 + node_count(n.arg); },
      [](const node::Globally& n) { return 1 + node_count(n.arg); },
      [](const node::Until& n) { return 1 + node_count(n.lhs) + node_count(n.rhs); },
  });
}

/// Largest variable index referenced, plus one (0 for variable-free formulae).
inline std::size_t num_vars(const Formula& f) {
  return f.visit(overloaded{
      [](const node::True&) -> std::size_t { return 0; },
      [](const node::Atom& a) -> std::size_t { return a.var + 1; },
      [](const node::Not& n) { return num_vars(n.arg); },
      [](const node::And& n) { return std::max(num_vars(n.lhs), num_vars(n.rhs)); },
      [](const node::Or& n) { return std::max(num_vars(n.lhs), num_vars(n.rhs)); },
      [](const node::Eventually& n) { return num_vars(n.arg); },
      [](const node::Globally& n) { return num_vars(n.arg); },
      [](const node::Until& n) { return std::max(num_vars(n.lhs), num_vars(n.rhs)); },
  });
}

/// Structural equality; thresholds are compared exactly.
inline bool operator==(const Formula& a, const Formula& b) {
  if (&a.node() == &b.node()) return true;
  if (a.node().value.index() != b.node().value.index()) return false;
  return a.visit(overloaded{
      [](const node::True&) { return true; },
      [&](const node::Atom& x) {
        const auto& y = *b.as<node::Atom>();
        return x.var == y.var && x.cmp == y.cmp && x.threshold == y.threshold;
      },
      [&](const node::Not& x) { return x.arg == b.as<node::Not>()->arg; },
      [&](const node::And& x) {
        const auto& y = *b.as<node::And>();
        return x.lhs == y.lhs && x.rhs == y.rhs;
      },
      [&](const node::Or& x) {
        const auto& y = *b.as<node::Or>();
        return x.lhs == y.lhs && x.rhs == y.rhs;
      },
      [&](const node::Eventually& x) {
        const auto& y = *b.as<node::Eventually>();
        return x.interval == y.interval && x.arg == y.arg;
      },
      [&](const node::Globally& x) {
        const auto& y = *b.as<node::Globally>();
        return x.interval == y.interval && x.arg == y.arg;
      },
      [&](const node::Until& x) {
        const auto& y = *b.as<node::Until>();
        return x.interval == y.interval && x.lhs == y.lhs && x.rhs == y.rhs;
      },
  });
}

/// Conjunction of a non-empty list, left-folded.
template <class Range>
Formula conjunction(const Range& formulas) {
  auto it = std::begin(formulas);
  if (it == std::end(formulas)) throw ConfigError("conjunction of an empty list");
  Formula out = *it++;
  for (; it != std::end(formulas); ++it) out = land(out, *it);
  return out;
}

/// Disjunction of a non-empty list, left-folded.
template <class Range>
Formula disjunction(const Range& formulas) {
  auto it = std::begin(formulas);
  if (it == std::end(formulas)) throw ConfigError("disjunction of an empty list");
  Formula out = *it++;
  for (; it != std::end(formulas); ++it) out = lor(out, *it);
  return out;
}

}  // namespace ecats::stl
