#pragma once

// Structure-preserving rewrites of STL formulae.

#include <functional>

#include "ecats/stl.hpp"

namespace ecats::stl {

/// Logical negation with double-negation collapse.
inline Formula negate(const Formula& f) {
  if (auto n = f.as<node::Not>()) return n->arg;
  return lnot(f);
}

/// Rebuilds `f` with every atom replaced by `fn(atom)`.
inline Formula map_atoms(const Formula& f, const std::function<node::Atom(const node::Atom&)>& fn) {
  return f.visit(overloaded{
      [&](const node::True&) { return f; },
      [&](const node::Atom& a) { return Formula(Node{fn(a)}); },
      [&](const node::Not& n) { return lnot(map_atoms(n.arg, fn)); },
      [&](const node::And& n) { return land(map_atoms(n.lhs, fn), map_atoms(n.rhs, fn)); },
      [&](const node::Or& n) { return lor(map_atoms(n.lhs, fn), map_atoms(n.rhs, fn)); },
      [&](const node::Eventually& n) { return eventually(n.interval, map_atoms(n.arg, fn)); },
      [&](const node::Globally& n) { return globally(n.interval, map_atoms(n.arg, fn)); },
      [&](const node::Until& n) { return until(n.interval, map_atoms(n.lhs, fn), map_atoms(n.rhs, fn)); },
  });
}

/// Adds `eps` to every atom threshold, whatever the comparison direction.
inline Formula shift_thresholds(const Formula& f, double eps) {
  return map_atoms(f, [eps](const node::Atom& a) { return node::Atom{a.var, a.cmp, a.threshold + eps}; });
}

/// Maps thresholds through the per-variable affine map c -> offset[i] + scale[i] * c
/// (scale > 0), e.g. from standardized units back to raw signal units.
template <class Vec>
Formula affine_thresholds(const Formula& f, const Vec& offset, const Vec& scale) {
  return map_atoms(f, [&](const node::Atom& a) {
    return node::Atom{a.var, a.cmp, offset[a.var] + scale[a.var] * a.threshold};
  });
}

namespace detail {

inline Formula flip_atom(const node::Atom& a) {
  return atom(a.var, a.cmp == Cmp::Le ? Cmp::Ge : Cmp::Le, a.threshold);
}

inline Formula simplify_node(const Formula& f);

// and/or of already simplified operands.
inline Formula simplified_and(const Formula& a, const Formula& b) {
  if (a.is<node::True>()) return b;
  if (b.is<node::True>()) return a;
  if (a == b) return a;
  return land(a, b);
}

inline Formula simplified_or(const Formula& a, const Formula& b) {
  if (a.is<node::True>() || b.is<node::True>()) return top();
  if (a == b) return a;
  return lor(a, b);
}

// Simplified form of not(f).
inline Formula simplify_not(const Formula& f) {
  const Formula inner = simplify_node(f);
  const Formula plain = negate(inner);
  const Formula pushed = inner.visit(overloaded{
      [&](const node::Atom& a) { return flip_atom(a); },
      [&](const node::Not& n) { return n.arg; },
      [&](const node::And& n) { return simplified_or(simplify_not(n.lhs), simplify_not(n.rhs)); },
      [&](const node::Or& n) { return simplified_and(simplify_not(n.lhs), simplify_not(n.rhs)); },
      [&](const node::Globally& n) { return eventually(n.interval, simplify_not(n.arg)); },
      [&](const node::Eventually& n) { return globally(n.interval, simplify_not(n.arg)); },
      [&](const auto&) { return plain; },
  });
  return node_count(pushed) <= node_count(plain) ? pushed : plain;
}

inline Formula simplify_node(const Formula& f) {
  return f.visit(overloaded{
      [&](const node::True&) { return f; },
      [&](const node::Atom&) { return f; },
      [&](const node::Not& n) { return simplify_not(n.arg); },
      [&](const node::And& n) { return simplified_and(simplify_node(n.lhs), simplify_node(n.rhs)); },
      [&](const node::Or& n) { return simplified_or(simplify_node(n.lhs), simplify_node(n.rhs)); },
      [&](const node::Eventually& n) { return eventually(n.interval, simplify_node(n.arg)); },
      [&](const node::Globally& n) { return globally(n.interval, simplify_node(n.arg)); },
      [&](const node::Until& n) { return until(n.interval, simplify_node(n.lhs), simplify_node(n.rhs)); },
  });
}

}  // namespace detail

/// Applies robustness-preserving logical equivalences: negations are pushed
/// inward through and/or/F/G and absorbed into atoms (x <= c becomes x >= c),
/// double negations vanish, `true` is absorbed by and/or, and identical
/// operands of and/or are merged. Never increases node_count.
inline Formula simplify(const Formula& f) { return detail::simplify_node(f); }

}  // namespace ecats::stl
