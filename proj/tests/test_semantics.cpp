#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>

#include "chp/semantics.hpp"

using namespace chp;

namespace {

std::string slurp(const std::string& name) {
  std::ifstream in(std::string(CHP_FIXTURES_DIR) + "/" + name, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Every action's successor probabilities must sum to exactly one.
void check_distributions(const StateSpace& sp) {
  for (std::size_t i = 0; i < sp.configs.size(); ++i) {
    for (const auto& [label, dist] : sp.actions[i]) {
      CAPTURE(i);
      CAPTURE(label);
      Rat total(0);
      for (const auto& [succ, p] : dist) {
        CHECK(p > 0);
        CHECK(succ < sp.configs.size());
        total += p;
      }
      CHECK(total == 1);
    }
  }
}

}  // namespace

TEST_CASE("fair-coin program unrolls to a five-config chain") {
  CId prog = parse_program(slurp("fair_coin.chp"));
  DomainBounds b = make_bounds({"x"}, 0, 1, {}, 0);
  ProgState st{make_stack(b, {}), Heap{}};

  StateSpace sp = build_state_space(prog, st, b, 1000, 1000);
  CHECK(sp.configs.size() == 5);
  CHECK(!sp.truncated);
  check_distributions(sp);

  CHECK(dump_mdp(sp) ==
        "0 prob 1/2 1\n"
        "0 prob 1/2 2\n"
        "1 assign 1 3\n"
        "2 assign 1 4\n");
  CHECK(is_final(sp.configs[3]));
  CHECK(is_final(sp.configs[4]));
  CHECK(sp.configs[3].state.stack.get(sym("x")) == 0);
  CHECK(sp.configs[4].state.stack.get(sym("x")) == 1);
  CHECK(sp.actions[3].empty());

  CHECK(dump_config_table(sp) ==
        "0\t-\t<{ x := 0 } [1/2] { x := 1 } | {x=0} | {}>\n"
        "1\t-\t<x := 0 | {x=0} | {}>\n"
        "2\t-\t<x := 1 | {x=0} | {}>\n"
        "3\tfinal\t<skip | {x=0} | {}>\n"
        "4\tfinal\t<skip | {x=1} | {}>\n");
}

TEST_CASE("single actions report their rule labels") {
  DomainBounds b = make_bounds({"x"}, 0, 1, {5}, 1);
  Stack s = make_stack(b, {});

  SUBCASE("lookup on an allocated cell reads it") {
    Config c = Config::running(c_lookup(sym("x"), alit(5)),
                               {s, Heap{}.with(5, 1)});
    auto steps = step_all(c, b);
    REQUIRE(steps.size() == 1);
    CHECK(steps[0].first == "lookup");
    REQUIRE(steps[0].second.size() == 1);
    const Config& succ = steps[0].second[0].first;
    CHECK(steps[0].second[0].second == 1);
    CHECK(is_final(succ));
    CHECK(succ.state.stack.get(sym("x")) == 1);
  }

  SUBCASE("lookup on a dangling address aborts") {
    Config c = Config::running(c_lookup(sym("x"), alit(5)), {s, Heap{}});
    auto steps = step_all(c, b);
    REQUIRE(steps.size() == 1);
    CHECK(steps[0].first == "lookup-abt");
    REQUIRE(steps[0].second.size() == 1);
    CHECK(steps[0].second[0].first.abort);
    CHECK(is_final(steps[0].second[0].first));
  }

  SUBCASE("mutation and free abort exactly on dangling addresses") {
    Config mut = Config::running(c_mutate(alit(5), alit(0)), {s, Heap{}});
    CHECK(step_all(mut, b)[0].first == "mutation-abt");
    Config mut_ok =
        Config::running(c_mutate(alit(5), alit(0)), {s, Heap{}.with(5, 1)});
    auto steps = step_all(mut_ok, b);
    CHECK(steps[0].first == "mutation");
    CHECK(steps[0].second[0].first.state.heap.get(5) == 0);

    Config fr = Config::running(c_free(alit(5)), {s, Heap{}.with(5, 1)});
    auto fsteps = step_all(fr, b);
    CHECK(fsteps[0].first == "free");
    CHECK(fsteps[0].second[0].first.state.heap.empty());
    Config fr_bad = Config::running(c_free(alit(5)), {s, Heap{}});
    CHECK(step_all(fr_bad, b)[0].first == "free-abt");
  }

  SUBCASE("divergence self-loops") {
    Config c = Config::running(c_diverge(), {s, Heap{}});
    auto steps = step_all(c, b);
    REQUIRE(steps.size() == 1);
    CHECK(steps[0].first == "div");
    REQUIRE(steps[0].second.size() == 1);
    CHECK(steps[0].second[0].first == c);
  }

  SUBCASE("branching labels distinguish the taken side") {
    GId g = gcmp(CmpOp::Eq, avar("x"), alit(0));
    Config t = Config::running(c_if(g, c_term(), c_diverge()), {s, Heap{}});
    CHECK(step_all(t, b)[0].first == "if-t");
    Config f = Config::running(c_if(g, c_term(), c_diverge()),
                               {s.with(sym("x"), 1), Heap{}});
    CHECK(step_all(f, b)[0].first == "if-f");
    Config lt = Config::running(c_while(g, c_assign(sym("x"), alit(1))),
                                {s, Heap{}});
    CHECK(step_all(lt, b)[0].first == "loop-t");
    Config lf = Config::running(c_while(g, c_assign(sym("x"), alit(1))),
                                {s.with(sym("x"), 1), Heap{}});
    CHECK(step_all(lf, b)[0].first == "loop-f");
  }
}

TEST_CASE("allocation nondeterminism ranges over the free declared locations") {
  DomainBounds b = make_bounds({"x"}, 0, 1, {5, 6}, 2);
  Stack s = make_stack(b, {});
  CId alloc = c_alloc(sym("x"), {alit(0)});

  SUBCASE("every free location is one action") {
    Config c = Config::running(alloc, {s, Heap{}});
    auto names = enabled_actions(c, b);
    REQUIRE(names.size() == 2);
    CHECK(names[0] == "alloc-5");
    CHECK(names[1] == "alloc-6");
    auto dist = transition(c, "alloc-6", b);
    REQUIRE(dist.size() == 1);
    CHECK(dist[0].first.state.stack.get(sym("x")) == 6);
    CHECK(dist[0].first.state.heap.get(6) == 0);
  }

  SUBCASE("occupied locations drop out") {
    Config c = Config::running(alloc, {s, Heap{}.with(5, 1)});
    auto names = enabled_actions(c, b);
    REQUIRE(names.size() == 1);
    CHECK(names[0] == "alloc-6");
  }

  SUBCASE("a fully occupied location pool blocks allocation") {
    Config c = Config::running(alloc, {s, Heap{}.with(5, 1).with(6, 0)});
    CHECK(enabled_actions(c, b).empty());
    CHECK(step_all(c, b).empty());
    CHECK(!is_final(c));  // blocked, not finished
  }

  SUBCASE("multi-cell allocation needs a contiguous free block") {
    CId pair_alloc = c_alloc(sym("x"), {alit(0), alit(1)});
    Config c = Config::running(pair_alloc, {s, Heap{}});
    auto names = enabled_actions(c, b);
    REQUIRE(names.size() == 1);  // only 5,6 are adjacent and declared
    CHECK(names[0] == "alloc-5");
    auto dist = transition(c, "alloc-5", b);
    CHECK(dist[0].first.state.heap.get(5) == 0);
    CHECK(dist[0].first.state.heap.get(6) == 1);
  }

  CHECK_THROWS_AS(
      transition(Config::running(alloc, {s, Heap{}}), "alloc-7", b), EvalError);
}

TEST_CASE("parallel composition interleaves with prefixed labels") {
  DomainBounds b = make_bounds({"x", "y"}, 0, 1, {}, 0);
  Stack s = make_stack(b, {});
  CId par = c_par(c_assign(sym("x"), alit(1)), c_assign(sym("y"), alit(1)));
  Config c = Config::running(par, {s, Heap{}});

  auto steps = step_all(c, b);
  REQUIRE(steps.size() == 2);
  CHECK(steps[0].first == "C1,assign");
  CHECK(steps[1].first == "C2,assign");

  // After both sides finish, a dedicated action collapses the pair.
  Config done = Config::running(c_par(c_term(), c_term()), {s, Heap{}});
  auto dsteps = step_all(done, b);
  REQUIRE(dsteps.size() == 1);
  CHECK(dsteps[0].first == "con-end");
  CHECK(is_final(dsteps[0].second[0].first));

  // One finished side still leaves the other running.
  Config half = Config::running(c_par(c_term(), c_assign(sym("y"), alit(1))),
                                {s, Heap{}});
  auto hsteps = step_all(half, b);
  REQUIRE(hsteps.size() == 1);
  CHECK(hsteps[0].first == "C2,assign");
}

TEST_CASE("atomic blocks absorb their body in one step") {
  DomainBounds b = make_bounds({"x"}, 0, 1, {}, 0);
  ProgState st{make_stack(b, {}), Heap{}};

  SUBCASE("a geometric loop terminates with probability one") {
    CId prog = parse_program(slurp("geometric_atomic.chp"));
    REQUIRE(cmd(prog).kind == CKind::Atomic);
    AtomicOutcome out = atomic_outcome(cmd(prog).c1, st, b);
    CHECK(out.p_div == 0);
    REQUIRE(out.finals.size() == 1);
    CHECK(out.finals[0].second == 1);
    CHECK(out.finals[0].first.state.stack.get(sym("x")) == 0);

    auto steps = step_all(Config::running(prog, st), b);
    REQUIRE(steps.size() == 1);
    CHECK(steps[0].first == "atomic");
    CHECK(is_final(steps[0].second[0].first));
  }

  SUBCASE("divergent bodies put all mass on divergence") {
    for (const char* src :
         {"atomic { diverge }", "atomic { while (true) { skip } }"}) {
      CAPTURE(src);
      CId prog = parse_program(src);
      AtomicOutcome out = atomic_outcome(cmd(prog).c1, st, b);
      CHECK(out.p_div == 1);
      CHECK(out.finals.empty());
      // The enclosing step routes the divergence mass to a diverge config.
      auto steps = step_all(Config::running(prog, st), b);
      REQUIRE(steps.size() == 1);
      CHECK(steps[0].first == "atomic");
      REQUIRE(steps[0].second.size() == 1);
      CHECK(steps[0].second[0].first ==
            Config::running(c_diverge(), st));
    }
  }

  SUBCASE("non-tame bodies are rejected") {
    DomainBounds bl = make_bounds({"x"}, 0, 1, {5}, 1);
    CHECK_THROWS_AS(
        atomic_outcome(c_alloc(sym("x"), {alit(0)}), ProgState{make_stack(bl, {}), Heap{}}, bl),
        EvalError);
    CHECK_THROWS_AS(atomic_outcome(c_par(c_term(), c_term()), st, b), EvalError);
  }
}

TEST_CASE("exploration caps surface as truncation or a hard error") {
  CId prog = parse_program(slurp("running.chp"));
  DomainBounds b = make_bounds({"r", "y"}, -1, 1, {7}, 1);
  ProgState st{make_stack(b, {{"r", 7}}), Heap{}.with(7, -1)};

  SUBCASE("the full space fits comfortably") {
    StateSpace sp = build_state_space(prog, st, b, 1u << 20, 4000000);
    CHECK(!sp.truncated);
    CHECK(sp.configs.size() > 10);
    check_distributions(sp);
    for (bool f : sp.frontier) CHECK(!f);
  }

  SUBCASE("a small step cap leaves marked frontier configs") {
    StateSpace sp = build_state_space(prog, st, b, 3, 4000000);
    CHECK(sp.truncated);
    bool any = false;
    for (std::size_t i = 0; i < sp.configs.size(); ++i) {
      if (!sp.frontier[i]) continue;
      any = true;
      CHECK(sp.actions[i].empty());
      CHECK(!is_final(sp.configs[i]));
    }
    CHECK(any);
  }

  SUBCASE("a tiny node cap throws with the offending count") {
    try {
      build_state_space(prog, st, b, 1u << 20, 5);
      FAIL("expected StateSpaceError");
    } catch (const StateSpaceError& e) {
      CHECK(e.count >= 5);
      CHECK(std::string(e.what()).find("node cap") != std::string::npos);
    }
  }
}

TEST_CASE("config ids are stable across identical builds") {
  CId prog = parse_program(slurp("coin_pair.chp"));
  DomainBounds b = make_bounds({"a", "b"}, 0, 1, {}, 0);
  ProgState st{make_stack(b, {}), Heap{}};
  StateSpace s1 = build_state_space(prog, st, b, 1000, 100000);
  StateSpace s2 = build_state_space(prog, st, b, 1000, 100000);
  CHECK(dump_mdp(s1) == dump_mdp(s2));
  CHECK(dump_config_table(s1) == dump_config_table(s2));
  check_distributions(s1);
  // Both coins land in four equally likely final stacks.
  std::size_t finals = 0;
  for (const Config& c : s1.configs) finals += is_final(c) && !c.abort;
  CHECK(finals == 4);
}
