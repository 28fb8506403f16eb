#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>

#include "chp/expectation.hpp"

using namespace chp;

namespace {

DomainBounds small_bounds() { return make_bounds({"x", "y"}, -1, 1, {0, 1}, 2); }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("text forms round-trip to the same interned node") {
  const char* sources[] = {
      "[emp]",
      "emp",
      "[x = 0]",
      "1/2",
      "1/2 ** max([x |-> 0], [x |-> -1])",
      "(x |-> -) ** ((x |-> y) -* 1/2 * [x |-> -])",
      "min([x = 0], [y = 1]) + [x = 1] * [y = 0]",
      "sup v. [v = x]",
      "inf v. [v = x]",
      "bigstar i in [0, 1]. [0 + i |-> 0]",
      "[x = 0][x := 0]",
      "(1/2) ^ y",
      "[x |-> - || emp]",
      "[!(x = 0) && y < 1]",
  };
  for (const char* src : sources) {
    CAPTURE(src);
    EId e = parse_expectation(src);
    std::string printed = pretty_exp(e);
    CHECK(parse_expectation(printed) == e);
    CHECK(pretty_exp(parse_expectation(printed)) == printed);
  }
  for (const char* name : {"x_eq_0.exp", "y_eq_0.exp", "a_eq_b.exp", "one.exp"}) {
    std::string src = slurp(std::string(CHP_FIXTURES_DIR) + "/" + name);
    EId e = parse_expectation(src);
    CHECK(parse_expectation(pretty_exp(e)) == e);
  }
  CHECK_THROWS_AS(parse_expectation("((("), ParseError);
  CHECK_THROWS_AS(parse_expectation("[x = ]"), ParseError);
  CHECK_THROWS_AS(parse_expectation("2"), ParseError);  // constants live in [0,1]
}

TEST_CASE("cell-transfer product collapses to half the cell bracket") {
  EvalCtx ctx(small_bounds());
  EId f = parse_expectation("(x |-> -) ** ((x |-> y) -* 1/2 * [x |-> -])");
  EId y = parse_expectation("1/2 * [x |-> -]");
  CHECK(ctx.equivalent(f, y));
}

TEST_CASE("wand with no admissible extension is one") {
  EvalCtx ctx(small_bounds());
  EId w = parse_expectation("(x |-> 0) -* 0");
  Stack s = make_stack(ctx.bounds(), {{"x", 0}});
  Heap occupied;
  occupied.cells = {{0, 1}};
  CHECK(ctx.eval(w, s, occupied) == 1);   // cell x already taken: no extension
  CHECK(ctx.eval(w, s, Heap{}) == 0);     // extension exists and the body is 0
}

TEST_CASE("empty-heap bracket is the unit of the separating product") {
  EvalCtx ctx(small_bounds());
  EId f = parse_expectation("max([x |-> 0], 1/2 * [y = 1])");
  CHECK(ctx.equivalent(parse_expectation("emp") , x_iverson(p_emp())));
  CHECK(ctx.equivalent(x_sep(x_iverson(p_emp()), f), f));
  CHECK(ctx.equivalent(x_sep(f, x_iverson(p_emp())), f));
}

TEST_CASE("qualitative and precise classification") {
  EvalCtx ctx(small_bounds());
  CHECK(ctx.is_qualitative(parse_expectation("[x |-> 0]")));
  CHECK(ctx.is_qualitative(parse_expectation("[x = 0 || y = 1]")));
  CHECK(!ctx.is_qualitative(parse_expectation("1/2")));
  CHECK(!ctx.is_qualitative(parse_expectation("1/2 * [x = 0]")));

  CHECK(ctx.is_precise(parse_expectation("emp")));
  CHECK(ctx.is_precise(parse_expectation("[x |-> 0]")));
  CHECK(ctx.is_precise(parse_expectation("max([x |-> 0], [x |-> -1])")));
  CHECK(!ctx.is_precise(parse_expectation("[x |-> - || emp]")));
}

TEST_CASE("entailment failures carry a replayable counterexample") {
  EvalCtx ctx(small_bounds());
  Counterexample cex;
  CHECK(!ctx.entails(parse_expectation("3/5"), parse_expectation("1/2"), &cex));
  CHECK(cex.lhs == Rat(3, 5));
  CHECK(cex.rhs == Rat(1, 2));
  CHECK(ctx.eval(parse_expectation("3/5"), cex.stack, cex.heap) == cex.lhs);
  CHECK(ctx.entails(parse_expectation("1/2"), parse_expectation("3/5")));
}

TEST_CASE("iterated separating product over an index interval") {
  EvalCtx ctx(small_bounds());
  EId b = parse_expectation("bigstar i in [0, 1]. [0 + i |-> 0]");
  Stack s = make_stack(ctx.bounds(), {});
  Heap full, partial;
  full.cells = {{0, 0}, {1, 0}};
  partial.cells = {{0, 0}};
  CHECK(ctx.eval(b, s, full) == 1);
  CHECK(ctx.eval(b, s, partial) == 0);
  EId empty_range = parse_expectation("bigstar i in [0, -1]. [0 + i |-> 0]");
  CHECK(ctx.eval(empty_range, s, Heap{}) == 1);  // empty product is the unit
  CHECK(ctx.eval(empty_range, s, full) == 0);
}

TEST_CASE("substitution, powers, and binders evaluate pointwise") {
  EvalCtx ctx(small_bounds());
  Stack s = make_stack(ctx.bounds(), {{"x", 1}, {"y", 1}});
  CHECK(ctx.eval(parse_expectation("[x = 0][x := 0]"), s, Heap{}) == 1);
  CHECK(ctx.eval(parse_expectation("[x = 0][x := y - 1]"), s, Heap{}) == 1);
  CHECK(ctx.eval(parse_expectation("(1/2) ^ y"), s, Heap{}) == Rat(1, 2));
  Stack s0 = make_stack(ctx.bounds(), {});
  CHECK(ctx.eval(parse_expectation("(1/2) ^ y"), s0, Heap{}) == 1);
  CHECK(ctx.eval(parse_expectation("sup v. [v = x]"), s, Heap{}) == 1);
  CHECK(ctx.eval(parse_expectation("inf v. [v = x]"), s, Heap{}) == 0);
}

TEST_CASE("well-formedness rejects unbounded or ill-typed constructions") {
  EvalCtx ctx(small_bounds());
  CHECK_THROWS_AS(ctx.check_well_formed(parse_expectation("1/2 + 2/3")),
                  EvalError);
  CHECK_THROWS_AS(
      ctx.check_well_formed(x_wand(x_const(Rat(1, 2)), x_const(Rat(1)))),
      EvalError);
  // y ranges over [-1, 1], so the exponent can go negative.
  CHECK_THROWS_AS(ctx.check_well_formed(parse_expectation("(1/2) ^ y")),
                  EvalError);
  ctx.check_well_formed(parse_expectation("1/2 * [x = 0] + 1/2 * [x = 1]"));
  ctx.check_well_formed(parse_expectation("(x |-> 0) -* [y = 1]"));
}

TEST_CASE("wand adjointness and modus ponens on concrete instances") {
  EvalCtx ctx(small_bounds());
  EId x = parse_expectation("[x = 0] * 1/2");
  EId phi = parse_expectation("[x |-> 1]");
  EId y = parse_expectation("(x |-> 1) ** 1/2");
  CHECK(ctx.entails(x_sep(x, phi), y) == ctx.entails(x, x_wand(phi, y)));
  CHECK(ctx.entails(x_sep(x, phi), y));
  CHECK(ctx.entails(parse_expectation("[x |-> 1] ** ([x |-> 1] -* [y = 0])"),
                    parse_expectation("[y = 0]")));
  EId f = parse_expectation("max(1/2, [y = 0])");
  CHECK(ctx.entails(f, x_wand(phi, x_sep(phi, f))));
}

TEST_CASE("free variables and the varying-stack helper") {
  auto fv = fv_exp(parse_expectation("[x = 0] ** (sup v. [v = y])"));
  CHECK(fv == std::set<Sym>{sym("x"), sym("y")});
  CHECK(fv_exp(parse_expectation("sup v. [v = 0]")).empty());
  CHECK(fv_pred(p_points_to(aadd(avar("x"), alit(1)), {avar("y")})) ==
        std::set<Sym>{sym("x"), sym("y")});

  EvalCtx ctx(small_bounds());
  auto stacks = ctx.stacks_for({parse_expectation("[x = 0]")});
  CHECK(stacks.size() == 3);  // x varies, y pinned
  for (const Stack& s : stacks) CHECK(s.vals.at(sym("y")) == 0);
}

TEST_CASE("evaluation caches across repeated queries") {
  EvalCtx ctx(small_bounds());
  EId e = parse_expectation("(x |-> -) ** ((x |-> y) -* 1/2 * [x |-> -])");
  Stack s = make_stack(ctx.bounds(), {{"x", 0}});
  Heap h;
  h.cells = {{0, 0}};
  Rat first = ctx.eval(e, s, h);
  for (int i = 0; i < 1000; ++i) CHECK(ctx.eval(e, s, h) == first);
  CHECK(first == Rat(1, 2));
}

TEST_CASE("universe enumerates every bounded heap once") {
  EvalCtx ctx(small_bounds());
  CHECK(ctx.universe().size() == 16);
}
