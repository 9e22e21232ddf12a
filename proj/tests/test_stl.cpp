#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ecats/stl.hpp"
#include "ecats/stl_eval.hpp"
#include "ecats/stl_text.hpp"
#include "ecats/stl_transform.hpp"
#include "support.hpp"

using namespace ecats;
using namespace ecats::stl;
using Catch::Approx;

TEST_CASE("parse builds the expected AST", "[stl][parse]") {
  SECTION("globally over an atom") {
    REQUIRE(parse("G[0,24] (x_0 <= 37.3)") == globally(Interval(0, 24), le(0, 37.3)));
  }
  SECTION("negated until") {
    REQUIRE(parse("not (x_0 <= 35.9 U[11,36] x_0 >= 31.5)") ==
            lnot(until(Interval(11, 36), le(0, 35.9), ge(0, 31.5))));
  }
  SECTION("constant") { REQUIRE(parse("true") == top()); }
  SECTION("unbounded interval") {
    REQUIRE(parse("G[35,inf] x_0 <= 18.8") == globally(Interval::from(35), le(0, 18.8)));
  }
  SECTION("precedence: prefix > U > and > or") {
    REQUIRE(parse("not x_0 <= 1 U[0,2] x_1 >= 2 and true or x_0 >= -3e-1") ==
            lor(land(until(Interval(0, 2), lnot(le(0, 1)), ge(1, 2)), top()), ge(0, -0.3)));
  }
  SECTION("whitespace-insensitive") {
    REQUIRE(parse("  F[0,2](x_0>=4)and   x_1<=+2 ") == land(eventually(Interval(0, 2), ge(0, 4)), le(1, 2)));
  }
}

TEST_CASE("parse reports errors with byte offsets", "[stl][parse]") {
  SECTION("syntax error") {
    try {
      parse("x_0 <= 1 and");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      REQUIRE(e.offset() == 12);
    }
  }
  SECTION("unknown variable") {
    try {
      parse("G[0,1] (speed <= 3)");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      REQUIRE(e.offset() == 8);
      REQUIRE(std::string(e.what()).find("unknown variable") != std::string::npos);
    }
    REQUIRE_THROWS_AS(parse("x_2 <= 1", {.num_vars = 2}), ParseError);
  }
  SECTION("malformed interval") {
    try {
      parse("F[5,2] x_0 <= 1");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      REQUIRE(e.offset() == 1);
      REQUIRE(std::string(e.what()).find("lo > hi") != std::string::npos);
    }
  }
  SECTION("garbage") {
    REQUIRE_THROWS_AS(parse(""), ParseError);
    REQUIRE_THROWS_AS(parse("(x_0 <= 1"), ParseError);
    REQUIRE_THROWS_AS(parse("x_0 < 1"), ParseError);
    REQUIRE_THROWS_AS(parse("x_0 <= 1)"), ParseError);
  }
}

TEST_CASE("render produces canonical text", "[stl][render]") {
  REQUIRE(render(globally(Interval(0, 24), le(0, 37.3))) == "G[0,24] (x_0 <= 37.3)");
  REQUIRE(render(top()) == "true");
  REQUIRE(render(lnot(top())) == "not true");
  REQUIRE(render(lnot(until(Interval(11, 36), le(0, 35.9), ge(0, 31.5)))) ==
          "not (x_0 <= 35.9 U[11,36] x_0 >= 31.5)");
  REQUIRE(render(globally(Interval(0, 24), eventually(Interval(0, 12), le(0, 37.26)))) ==
          "G[0,24] F[0,12] (x_0 <= 37.26)");
  REQUIRE(render(land(eventually(Interval(21, 51), ge(1, 28.38)), globally(Interval::from(35), le(0, 18.8)))) ==
          "F[21,51] (x_1 >= 28.38) and G[35,inf] (x_0 <= 18.8)");
}

TEST_CASE("parse and render round-trip on random formulae", "[stl][render][property]") {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 2000; ++k) {
    const auto nodes = std::uniform_int_distribution<std::size_t>(1, 9)(rng);
    Formula f = testing::random_formula(rng, nodes, 3, 20, 1e3);
    const std::string text = render(f);
    INFO(text);
    Formula g = parse(text);
    REQUIRE(g == f);
    REQUIRE(render(g) == text);
  }
}

TEST_CASE("node_count", "[stl]") {
  REQUIRE(node_count(top()) == 1);
  REQUIRE(node_count(le(0, 1)) == 1);
  REQUIRE(node_count(globally(Interval(0, 3), le(0, 1))) == 2);
  REQUIRE(node_count(parse("not (x_0 <= 35.9 U[11,36] x_0 >= 31.5)")) == 4);
}

TEST_CASE("Boolean semantics", "[stl][eval]") {
  const auto xi = Trajectory::from_values({1, 5, 2});
  REQUIRE(eval_boolean(parse("F[0,2] x_0 >= 4"), xi, 0));
  REQUIRE_FALSE(eval_boolean(parse("G[0,2] x_0 >= 4"), xi, 0));
  for (std::size_t t = 0; t < 3; ++t) REQUIRE(eval_boolean(top(), xi, t));
  REQUIRE(eval_boolean(parse("x_0 <= 1"), xi, 0));  // boundary counts as satisfied
  // The left operand must also hold at the instant the right one does.
  REQUIRE(eval_boolean(parse("x_0 >= 3 U[1,2] x_0 <= 3"), Trajectory::from_values({4, 3, 3}), 0));
  REQUIRE_FALSE(eval_boolean(parse("x_0 >= 3 U[1,2] x_0 <= 2"), Trajectory::from_values({4, 3, 2}), 0));
  REQUIRE_FALSE(eval_boolean(parse("x_0 >= 3 U[1,2] x_0 <= 3"), Trajectory::from_values({4, 1, 2}), 0));
}

TEST_CASE("robustness semantics", "[stl][eval]") {
  const auto constant = Trajectory::from_values({3, 3, 3, 3});
  REQUIRE(robustness(parse("x_0 >= 0"), constant) == 3.0);
  REQUIRE(robustness(parse("not (x_0 >= 0)"), constant) == -3.0);
  REQUIRE(robustness(parse("x_0 <= 5"), constant) == 2.0);

  const auto xi = Trajectory::from_values({1, 5, 2});
  REQUIRE(robustness(parse("F[0,2] x_0 >= 4"), xi) == 1.0);
  REQUIRE(robustness(parse("G[0,2] x_0 >= 4"), xi) == -3.0);
  REQUIRE(robustness(top(), xi) == kInf);
  REQUIRE(eval_robustness(parse("F[0,2] x_0 >= 4"), xi, 1).time == 1);
  // Window clipped at the trajectory end.
  REQUIRE(robustness(parse("F[1,inf] x_0 >= 4"), xi) == 1.0);
  REQUIRE(robustness(parse("G[1,10] x_0 >= 4"), xi) == -2.0);
  // Until: max over s in [1,2] of min(rhs(s), min lhs on [0,s]).
  REQUIRE(robustness(parse("x_0 >= 0 U[1,2] x_0 >= 4"), xi) == 1.0);
}

TEST_CASE("evaluation errors", "[stl][eval]") {
  const auto xi = Trajectory::from_values({1, 5, 2});
  REQUIRE_THROWS_AS(robustness(parse("x_1 >= 0"), xi), EvalError);
  REQUIRE_THROWS_AS(eval_boolean(parse("x_1 >= 0"), xi), EvalError);
  REQUIRE_THROWS_AS(robustness(parse("x_0 >= 0"), xi, 3), EvalError);
  REQUIRE_THROWS_AS(robustness(parse("F[3,5] x_0 >= 0"), xi), EvalError);
  // Empty windows below the root fold to the operator identity.
  REQUIRE(robustness(parse("G[0,2] F[2,2] x_0 >= 0"), xi) == -kInf);
  REQUIRE(robustness(parse("F[0,2] G[2,2] x_0 >= 0"), xi) == kInf);
}

TEST_CASE("vectorized evaluator matches the brute-force oracle", "[stl][eval][property]") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 300; ++k) {
    const auto nodes = std::uniform_int_distribution<std::size_t>(1, 5)(rng);
    const auto len = std::uniform_int_distribution<std::size_t>(2, 20)(rng);
    Formula f = testing::random_formula(rng, nodes, 2, 12);
    Trajectory xi = testing::random_trajectory(rng, len, 2);
    const auto signal = robustness_signal(f, xi);
    for (std::size_t t = 0; t < len; ++t) {
      const double expected = testing::oracle_robustness(f, xi, t);
      INFO(render(f) << " at t=" << t);
      if (std::isinf(expected)) {
        REQUIRE(signal[t] == expected);
      } else {
        REQUIRE(std::abs(signal[t] - expected) <= 1e-12);
      }
    }
  }
}

TEST_CASE("soundness: robustness sign agrees with satisfaction", "[stl][eval][property]") {
  std::mt19937_64 rng(13);
  int checked = 0;
  for (int k = 0; k < 2000; ++k) {
    Formula f = testing::random_formula(rng, std::uniform_int_distribution<std::size_t>(1, 6)(rng), 2, 10);
    Trajectory xi = testing::random_trajectory(rng, 25, 2);
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, 5)(rng);
    double rho;
    try {
      rho = robustness(f, xi, t);
    } catch (const EvalError&) {
      continue;
    }
    if (std::abs(rho) <= 1e-9) continue;
    ++checked;
    REQUIRE((rho > 0) == eval_boolean(f, xi, t));
  }
  REQUIRE(checked > 1000);
}

TEST_CASE("negate", "[stl][transform]") {
  const Formula phi = parse("G[0,24] (x_0 <= 37.3)");
  REQUIRE(negate(phi) == lnot(phi));
  REQUIRE(negate(lnot(phi)) == phi);
  REQUIRE(render(negate(phi)) == "not G[0,24] (x_0 <= 37.3)");

  std::mt19937_64 rng(17);
  for (int k = 0; k < 300; ++k) {
    Formula f = testing::random_formula(rng, 4, 1, 8);
    Trajectory xi = testing::random_trajectory(rng, 15, 1);
    REQUIRE(robustness_signal(negate(f), xi) == [&] {
      auto r = robustness_signal(f, xi);
      for (auto& v : r) v = -v;
      return r;
    }());
  }
}

TEST_CASE("shift_thresholds", "[stl][transform]") {
  const Formula shifted = shift_thresholds(parse("G[0,24] (x_0 <= 37.3)"), -8.6);
  const auto* g = shifted.as<node::Globally>();
  REQUIRE(g);
  REQUIRE(g->interval == Interval(0, 24));
  REQUIRE(g->arg.as<node::Atom>()->threshold == Approx(28.7).epsilon(1e-12));
  REQUIRE(g->arg.as<node::Atom>()->cmp == Cmp::Le);

  const Formula phi = parse("not (x_0 <= 35.9 U[11,36] x_0 >= 31.5)");
  REQUIRE(shift_thresholds(phi, 0.0) == phi);
  REQUIRE(shift_thresholds(parse("x_0 >= 31.5 and x_0 <= 35.9"), 1.0) == parse("x_0 >= 32.5 and x_0 <= 36.9"));
}

TEST_CASE("simplify examples", "[stl][transform]") {
  REQUIRE(simplify(parse("not not (x_0 <= 5)")) == parse("x_0 <= 5"));
  REQUIRE(simplify(parse("not G[0,24] (x_0 <= 28.7)")) == parse("F[0,24] (x_0 >= 28.7)"));
  REQUIRE(simplify(parse("x_0 <= 1 and true")) == parse("x_0 <= 1"));
  REQUIRE(simplify(parse("true and x_0 <= 1")) == parse("x_0 <= 1"));
  REQUIRE(simplify(parse("x_0 <= 1 or true")) == top());
  REQUIRE(simplify(parse("not (x_0 <= 1 and x_1 >= 2)")) == parse("x_0 >= 1 or x_1 <= 2"));
  REQUIRE(simplify(parse("not (x_0 <= 1 or F[0,3] x_1 >= 2)")) == parse("x_0 >= 1 and G[0,3] x_1 <= 2"));
  REQUIRE(simplify(parse("not F[0,3] G[1,2] x_0 >= 0")) == parse("G[0,3] F[1,2] x_0 <= 0"));
  // Negated until has no smaller equivalent.
  REQUIRE(simplify(parse("not (x_0 <= 35.9 U[11,36] x_0 >= 31.5)")) ==
          parse("not (x_0 <= 35.9 U[11,36] x_0 >= 31.5)"));
}

TEST_CASE("simplify preserves robustness exactly and never grows", "[stl][transform][property]") {
  std::mt19937_64 rng(19);
  for (int k = 0; k < 1000; ++k) {
    Formula f = testing::random_formula(rng, std::uniform_int_distribution<std::size_t>(1, 8)(rng), 2, 8);
    Trajectory xi = testing::random_trajectory(rng, 20, 2);
    Formula g = simplify(f);
    INFO(render(f) << "  ->  " << render(g));
    REQUIRE(node_count(g) <= node_count(f));
    REQUIRE(robustness_signal(g, xi) == robustness_signal(f, xi));
    REQUIRE(simplify(g) == g);
  }
}
