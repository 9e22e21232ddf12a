#pragma once

// Text form of STL formulae.
//
//   true | x_<k> <= <num> | x_<k> >= <num> | not f | f and f | f or f
//   F[lo,hi] f | G[lo,hi] f | f U[lo,hi] f | ( f )          hi may be `inf`
//
// Precedence, tightest first: prefix operators (not, F, G), U (right
// associative), and, or (both left associative).

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <system_error>

#include "ecats/stl.hpp"

namespace ecats::stl {

struct ParseOptions {
  /// Atoms may reference x_0 .. x_{num_vars-1}.
  std::size_t num_vars = std::numeric_limits<std::size_t>::max();
};

namespace detail {

class Parser {
 public:
  Parser(std::string_view text, ParseOptions opts) : text_(text), opts_(opts) {}

  Formula parse() {
    Formula f = parse_or();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }
  [[noreturn]] void fail_at(const std::string& msg, std::size_t at) const {
    throw ParseError(msg, at);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  }

  // Peeks an identifier without consuming it.
  std::string_view peek_word() {
    skip_ws();
    std::size_t end = pos_;
    if (end < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[end])) || text_[end] == '_')) {
      while (end < text_.size() && ident_char(text_[end])) ++end;
    }
    return text_.substr(pos_, end - pos_);
  }

  bool accept_word(std::string_view w) {
    if (peek_word() != w) return false;
    pos_ += w.size();
    return true;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  Formula parse_or() {
    Formula f = parse_and();
    while (accept_word("or")) f = lor(f, parse_and());
    return f;
  }

  Formula parse_and() {
    Formula f = parse_until();
    while (accept_word("and")) f = land(f, parse_until());
    return f;
  }

  Formula parse_until() {
    Formula lhs = parse_unary();
    if (accept_word("U")) {
      Interval i = parse_interval();
      return until(i, lhs, parse_until());
    }
    return lhs;
  }

  Formula parse_unary() {
    if (accept_word("not")) return lnot(parse_unary());
    if (accept_word("F")) {
      Interval i = parse_interval();
      return eventually(i, parse_unary());
    }
    if (accept_word("G")) {
      Interval i = parse_interval();
      return globally(i, parse_unary());
    }
    return parse_primary();
  }

  Formula parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (accept('(')) {
      Formula f = parse_or();
      expect(')');
      return f;
    }
    if (accept_word("true")) return top();
    std::string_view word = peek_word();
    if (word.empty()) fail("expected a formula");
    if (word == "and" || word == "or" || word == "U" || word == "inf") fail("unexpected keyword '" + std::string(word) + "'");
    return parse_atom();
  }

  Formula parse_atom() {
    const std::size_t start = pos_;
    std::string_view word = peek_word();
    std::size_t var = 0;
    bool ok = word.size() > 2 && word.substr(0, 2) == "x_";
    if (ok) {
      auto digits = word.substr(2);
      auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), var);
      ok = ec == std::errc() && p == digits.data() + digits.size();
    }
    if (!ok || var >= opts_.num_vars) fail_at("unknown variable name '" + std::string(word) + "'", start);
    pos_ += word.size();

    skip_ws();
    Cmp cmp;
    if (text_.substr(pos_, 2) == "<=") {
      cmp = Cmp::Le;
    } else if (text_.substr(pos_, 2) == ">=") {
      cmp = Cmp::Ge;
    } else {
      fail("expected '<=' or '>='");
    }
    pos_ += 2;
    return atom(var, cmp, parse_number());
  }

  double parse_number() {
    skip_ws();
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    // from_chars rejects a leading '+'.
    if (first != last && *first == '+') ++first;
    double v = 0.0;
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || p == first) fail("expected a number");
    if (!std::isfinite(v)) fail("threshold must be finite");
    pos_ = static_cast<std::size_t>(p - text_.data());
    return v;
  }

  int parse_int() {
    skip_ws();
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    int v = 0;
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || p == first) fail("expected an integer time bound");
    if (v < 0) fail("negative time bound");
    pos_ = static_cast<std::size_t>(p - text_.data());
    return v;
  }

  Interval parse_interval() {
    skip_ws();
    const std::size_t start = pos_;
    expect('[');
    int lo = parse_int();
    expect(',');
    int hi = 0;
    if (accept_word("inf")) {
      hi = Interval::kUnbounded;
    } else {
      hi = parse_int();
    }
    expect(']');
    if (lo > hi) fail_at("malformed interval (lo > hi)", start);
    return Interval(lo, hi);
  }

  std::string_view text_;
  ParseOptions opts_;
  std::size_t pos_ = 0;
};

inline std::string format_number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

inline std::string render_interval(const Interval& i) {
  return "[" + std::to_string(i.lo) + "," + (i.unbounded() ? std::string("inf") : std::to_string(i.hi)) + "]";
}

// Binding strength; higher binds tighter.
enum Prec { kOr = 1, kAnd = 2, kUntil = 3, kPrefix = 4, kPrimary = 5 };

inline int precedence(const Formula& f) {
  return f.visit(overloaded{
      [](const node::True&) { return int(kPrimary); },
      [](const node::Atom&) { return int(kPrimary); },
      [](const node::Not&) { return int(kPrefix); },
      [](const node::Eventually&) { return int(kPrefix); },
      [](const node::Globally&) { return int(kPrefix); },
      [](const node::Until&) { return int(kUntil); },
      [](const node::And&) { return int(kAnd); },
      [](const node::Or&) { return int(kOr); },
  });
}

inline std::string render_node(const Formula& f);

inline std::string paren(const std::string& s) { return "(" + s + ")"; }

// Operand of a prefix operator: atoms are parenthesized for readability,
// anything looser than a prefix operator must be.
inline std::string render_prefix_operand(const Formula& f) {
  std::string s = render_node(f);
  if (f.is<node::Atom>() || precedence(f) < kPrefix) return paren(s);
  return s;
}

inline std::string render_operand(const Formula& f, int min_prec) {
  std::string s = render_node(f);
  return precedence(f) < min_prec ? paren(s) : s;
}

inline std::string render_node(const Formula& f) {
  return f.visit(overloaded{
      [](const node::True&) -> std::string { return "true"; },
      [](const node::Atom& a) -> std::string {
        return "x_" + std::to_string(a.var) + (a.cmp == Cmp::Le ? " <= " : " >= ") +
               format_number(a.threshold);
      },
      [](const node::Not& n) { return "not " + render_prefix_operand(n.arg); },
      [](const node::Eventually& n) {
        return "F" + render_interval(n.interval) + " " + render_prefix_operand(n.arg);
      },
      [](const node::Globally& n) {
        return "G" + render_interval(n.interval) + " " + render_prefix_operand(n.arg);
      },
      // U operands are always parenthesized when they are themselves U.
      [](const node::Until& n) {
        return render_operand(n.lhs, kPrefix) + " U" + render_interval(n.interval) + " " +
               render_operand(n.rhs, kPrefix);
      },
      // Left-associative: a same-operator left child needs no parentheses.
      [](const node::And& n) {
        return render_operand(n.lhs, kAnd) + " and " + render_operand(n.rhs, kUntil);
      },
      [](const node::Or& n) {
        return render_operand(n.lhs, kOr) + " or " + render_operand(n.rhs, kAnd);
      },
  });
}

}  // namespace detail

inline Formula parse(std::string_view text, ParseOptions opts = {}) {
  return detail::Parser(text, opts).parse();
}

/// Canonical text; `parse(render(f)) == f` for every formula.
inline std::string render(const Formula& f) { return detail::render_node(f); }

}  // namespace ecats::stl
