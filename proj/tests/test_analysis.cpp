#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>

#include "chp/analysis.hpp"

using namespace chp;

namespace {

const Rat kEps(1, 1000000);

std::string slurp(const std::string& name) {
  std::ifstream in(std::string(CHP_FIXTURES_DIR) + "/" + name, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("fair coin: both outcome probabilities are met exactly") {
  CId prog = parse_program(slurp("fair_coin.chp"));
  DomainBounds b = make_bounds({"x"}, 0, 1, {}, 0);
  ProgState st{make_stack(b, {}), Heap{}};

  Bracket b0 = wlp_bracket(prog, parse_expectation("[x = 0]"), st, b, kEps, 100000);
  CHECK(b0.lower == Rat(1, 2));
  CHECK(b0.upper == Rat(1, 2));
  CHECK(b0.exact);
  CHECK(!b0.truncated);
  CHECK(b0.iterations == 2);

  Bracket b1 = wlp_bracket(prog, parse_expectation("[x = 1]"), st, b, kEps, 100000);
  CHECK(b1.lower == Rat(1, 2));
  CHECK(b1.exact);
  CHECK(b0.upper + b1.upper == 1);

  // A post covering both outcomes is certain; a scaled post scales.
  Bracket both =
      wlp_bracket(prog, parse_expectation("max([x = 0], [x = 1])"), st, b, kEps, 100000);
  CHECK(both.lower == 1);
  CHECK(both.exact);
  Bracket half =
      wlp_bracket(prog, parse_expectation("1/2 * [x = 0]"), st, b, kEps, 100000);
  CHECK(half.lower == Rat(1, 4));
  CHECK(half.exact);
}

TEST_CASE("divergence counts fully toward the liberal value") {
  DomainBounds b = make_bounds({}, 0, 0, {}, 0);
  ProgState st{make_stack(b, {}), Heap{}};
  Bracket r = wlp_bracket(c_diverge(), parse_expectation("1"), st, b, kEps, 100000);
  CHECK(r.lower == 1);
  CHECK(r.upper == 1);
  CHECK(r.exact);
}

TEST_CASE("handshake program: the reader ends on zero half the time") {
  CId prog = parse_program(slurp("running.chp"));
  DomainBounds b = make_bounds({"r", "y"}, -1, 1, {7}, 1);
  EId post = parse_expectation("[y = 0]");

  ProgState ok{make_stack(b, {{"r", 7}}), Heap{}.with(7, -1)};
  Bracket br = wlp_bracket(prog, post, ok, b, kEps, 100000);
  CHECK(br.lower == Rat(1, 2));
  CHECK(br.upper == Rat(1, 2));
  CHECK(br.exact);
  CHECK(!br.truncated);

  // Without the cell the very first mutation aborts: value 0.
  ProgState unalloc{make_stack(b, {{"r", 7}}), Heap{}};
  Bracket ba = wlp_bracket(prog, post, unalloc, b, kEps, 100000);
  CHECK(ba.lower == 0);
  CHECK(ba.upper == 0);
  CHECK(ba.exact);

  // Shared state space, same answers.
  auto multi = wlp_bracket_multi(prog, post, {ok, unalloc}, b, kEps, 100000);
  REQUIRE(multi.size() == 2);
  CHECK(multi[0].lower == Rat(1, 2));
  CHECK(multi[1].upper == 0);
}

TEST_CASE("atomic geometric loop certainly lands on zero") {
  CId prog = parse_program(slurp("geometric_atomic.chp"));
  DomainBounds b = make_bounds({"x"}, 0, 1, {}, 0);
  ProgState st{make_stack(b, {}), Heap{}};
  Bracket r = wlp_bracket(prog, parse_expectation("[x = 0]"), st, b, kEps, 100000);
  CHECK(r.lower == 1);
  CHECK(r.exact);
}

TEST_CASE("truncated exploration keeps the enclosure sound but wide") {
  CId prog = parse_program(slurp("running.chp"));
  DomainBounds b = make_bounds({"r", "y"}, -1, 1, {7}, 1);
  ProgState st{make_stack(b, {{"r", 7}}), Heap{}.with(7, -1)};
  Bracket r = wlp_bracket(prog, parse_expectation("[y = 0]"), st, b, kEps, 100000,
                          /*step_cap=*/3);
  CHECK(r.truncated);
  CHECK(r.lower <= Rat(1, 2));
  CHECK(r.upper >= Rat(1, 2));
  CHECK(r.upper - r.lower == 1);  // nothing resolves within three steps
}

TEST_CASE("one-step minimum operator") {
  DomainBounds b = make_bounds({"x"}, 0, 1, {}, 0);
  Stack s1 = make_stack(b, {{"x", 1}});
  Config after = Config::running(c_term(), {make_stack(b, {}), Heap{}});
  Config before = Config::running(c_assign(sym("x"), alit(0)), {s1, Heap{}});

  ValueTable t;
  t[after] = Rat(1);
  CHECK(step_op(t, before, b) == 1);
  t[after] = Rat(1, 3);
  CHECK(step_op(t, before, b) == Rat(1, 3));

  // Final configs have no actions: the empty minimum is one.
  CHECK(step_op(t, after, b) == 1);

  ValueTable empty;
  CHECK_THROWS_AS(step_op(empty, before, b), EvalError);
}

TEST_CASE("almost-sure termination check with witnesses") {
  DomainBounds jb = make_bounds({"x"}, 0, 1, {}, 0);
  CId coin = parse_program(slurp("fair_coin.chp"));
  ProgState jst{make_stack(jb, {}), Heap{}};
  AstResult jr = check_ast(coin, {jst}, jb);
  CHECK(jr.ast);
  CHECK(!jr.witness.has_value());
  CHECK(!jr.truncated);
  CHECK(check_ast(coin, jb).ast);  // every bounded seed

  DomainBounds db = make_bounds({}, 0, 0, {}, 0);
  ProgState dst{make_stack(db, {}), Heap{}};
  AstResult dr = check_ast(c_diverge(), {dst}, db);
  CHECK(!dr.ast);
  REQUIRE(dr.witness.has_value());
  CHECK(*dr.witness == Config::running(c_diverge(), dst));

  // The handshake can busy-wait forever under a hostile scheduler.
  CId running = parse_program(slurp("running.chp"));
  DomainBounds rb = make_bounds({"r", "y"}, -1, 1, {7}, 1);
  ProgState rst{make_stack(rb, {{"r", 7}}), Heap{}.with(7, -1)};
  AstResult rr = check_ast(running, {rst}, rb);
  CHECK(!rr.ast);
  REQUIRE(rr.witness.has_value());
  CHECK(*rr.witness == Config::running(running, rst));
}

TEST_CASE("exact liberal value of one fixed scheduler") {
  CId running = parse_program(slurp("running.chp"));
  DomainBounds rb = make_bounds({"r", "y"}, -1, 1, {7}, 1);
  ProgState rst{make_stack(rb, {{"r", 7}}), Heap{}.with(7, -1)};
  EId post = parse_expectation("[y = 0]");

  auto first = [](const Config&, const std::vector<std::string>&) -> std::size_t {
    return 0;
  };
  auto prefer = [](const std::string& pfx) {
    return [pfx](const Config&, const std::vector<std::string>& acts) -> std::size_t {
      for (std::size_t i = 0; i < acts.size(); ++i) {
        if (acts[i].rfind(pfx, 0) == 0) return i;
      }
      return 0;
    };
  };

  Rat v_first = scheduler_value(running, post, rst, rb, first);
  CHECK(v_first == Rat(1, 2));
  // Running only the reader starves the writer: the run diverges and the
  // liberal value credits it in full.
  CHECK(scheduler_value(running, post, rst, rb, prefer("C2,")) == 1);
  CHECK(scheduler_value(running, post, rst, rb, prefer("C1,")) == Rat(1, 2));

  // Every scheduler is at least the adversarial lower side.
  Bracket br = wlp_bracket(running, post, rst, rb, kEps, 100000);
  CHECK(v_first >= br.lower);
}

TEST_CASE("resource-safe stepwise values against the trivial invariant") {
  CId coin = parse_program(slurp("fair_coin.chp"));
  DomainBounds b = make_bounds({"x"}, 0, 1, {}, 0);
  EvalCtx ctx(b);
  WslpEngine eng(parse_expectation("[x = 0]"), x_iverson(p_emp()), ctx);
  ProgState st{make_stack(b, {}), Heap{}};

  CHECK(eng.value(0, coin, st) == 1);
  CHECK(eng.value(1, coin, st) == 1);
  CHECK(eng.value(3, coin, st) == Rat(1, 2));
  CHECK(eng.value(10, coin, st) == Rat(1, 2));

  // Antitone in the step count.
  Rat prev(2);
  for (std::size_t n = 0; n <= 6; ++n) {
    Rat v = eng.value(n, coin, st);
    CHECK(v <= prev);
    prev = v;
  }

  auto table = wslp_table(coin, parse_expectation("[x = 0]"),
                          x_iverson(p_emp()), b, 4);
  REQUIRE(table.size() == 2);
  for (const auto& [state, v] : table) CHECK(v == Rat(1, 2));
}

TEST_CASE("an invariant cell can carry a lookup that would otherwise abort") {
  DomainBounds b = make_bounds({"x"}, 0, 1, {5}, 1);
  EvalCtx ctx(b);
  CId look = c_lookup(sym("x"), alit(5));
  ProgState st{make_stack(b, {}), Heap{}};
  EId inv = x_iverson(p_points_to(alit(5), {alit(1)}));

  WslpEngine reads_one(parse_expectation("[x = 1]"), inv, ctx);
  CHECK(reads_one.value(3, look, st) == 1);
  WslpEngine reads_zero(parse_expectation("[x = 0]"), inv, ctx);
  CHECK(reads_zero.value(3, look, st) == 0);
  // Without the invariant the bare lookup aborts.
  WslpEngine no_cell(parse_expectation("[x = 1]"), x_iverson(p_emp()), ctx);
  CHECK(no_cell.value(3, look, st) == 0);
}

TEST_CASE("non-qualitative invariants are rejected up front") {
  DomainBounds b = make_bounds({"x"}, 0, 1, {}, 0);
  EvalCtx ctx(b);
  CHECK_THROWS_AS(
      WslpEngine(parse_expectation("[x = 0]"), x_const(Rat(1, 2)), ctx),
      EvalError);
}
