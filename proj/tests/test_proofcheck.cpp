#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "chp/proofcheck.hpp"

using namespace chp;

namespace {

std::string slurp(const std::string& name) {
  std::ifstream in(std::string(CHP_FIXTURES_DIR) + "/" + name, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

EId emp_inv() { return x_iverson(p_emp()); }

ProofNode leaf(Rule r, EId pre, CId c, EId post, EId inv) {
  ProofNode n;
  n.rule = r;
  n.concl = {pre, c, post, inv};
  return n;
}

}  // namespace

TEST_CASE("rule names round-trip through the registry") {
  for (Rule r : {Rule::Term, Rule::Assign, Rule::Look, Rule::Alloc, Rule::Mut,
                 Rule::Disp, Rule::Seq, Rule::If, Rule::While, Rule::Div,
                 Rule::PChoice, Rule::Atomic, Rule::Share, Rule::Concur,
                 Rule::Superlin, Rule::WlpWrlp, Rule::Frame, Rule::Atom,
                 Rule::Monotonic, Rule::Max, Rule::Min, Rule::Convex}) {
    auto back = rule_from_name(rule_name(r));
    REQUIRE(back.has_value());
    CHECK(*back == r);
  }
  CHECK(!rule_from_name("bogus").has_value());
}

TEST_CASE("handoff derivation certifies and survives a JSON round trip") {
  DomainBounds rb = running_example_bounds();
  ProofNode good = running_example_proof();

  CheckResult res = check_proof(good, rb);
  if (!res.ok) MESSAGE(describe_failure(*res.failure));
  REQUIRE(res.ok);
  CHECK(res.certificate.entries.size() == 18);
  CHECK(!res.certificate.ast_asserted_anywhere);

  const auto& e = res.certificate.entries;
  CHECK(e[0].path == "root");
  CHECK(e[0].rule == Rule::WlpWrlp);
  CHECK(e[1].path == "root.0");
  CHECK(e[1].rule == Rule::Monotonic);
  CHECK(e[2].path == "root.0.0");
  CHECK(e[2].rule == Rule::Share);
  CHECK(e[3].path == "root.0.0.0");
  CHECK(e[3].rule == Rule::Seq);
  CHECK(e[4].path == "root.0.0.0.0");
  CHECK(e[4].rule == Rule::Atom);
  CHECK(e[5].path == "root.0.0.0.0.0");
  CHECK(e[5].rule == Rule::Mut);
  CHECK(e[6].path == "root.0.0.0.1");
  CHECK(e[6].rule == Rule::Concur);
  for (const CertEntry& entry : e) {
    CAPTURE(entry.path);
    CHECK(!entry.discharged.empty());
  }

  std::string js = proof_to_json(good);
  ProofNode re = parse_proof_json(js);
  CheckResult res2 = check_proof(re, rb);
  CHECK(res2.ok);
  CHECK(proof_to_json(re) == js);  // serializer is a parse fixed point

  // The checked-in script is exactly the builder's output.
  CHECK(slurp("running_example.proof") == js);
  CHECK(slurp("running_example_bad.proof") ==
        proof_to_json(running_example_proof(Rat(3, 5))));
}

TEST_CASE("an inflated bound fails with an exactly replayable witness") {
  DomainBounds rb = running_example_bounds();
  ProofNode bad = running_example_proof(Rat(3, 5));
  CheckResult res = check_proof(bad, rb);
  REQUIRE(!res.ok);
  REQUIRE(res.failure.has_value());
  const CheckFailure& f = *res.failure;

  CHECK(f.path == "root.0.0.0.1.0");
  CHECK(f.rule == Rule::PChoice);
  CHECK(f.kind == FailKind::EntailmentFails);
  REQUIRE(f.witness.has_value());
  REQUIRE(f.lhs.has_value());
  REQUIRE(f.rhs.has_value());
  CHECK(f.witness->lhs == Rat(3, 5));
  CHECK(f.witness->rhs == Rat(1, 2));
  CHECK(f.witness->heap.empty());

  EvalCtx ctx(rb);
  CHECK(ctx.eval(*f.lhs, f.witness->stack, f.witness->heap) == f.witness->lhs);
  CHECK(ctx.eval(*f.rhs, f.witness->stack, f.witness->heap) == f.witness->rhs);

  std::string msg = describe_failure(f);
  CHECK(msg.find("EntailmentFails at root.0.0.0.1.0 (p-choice)") != std::string::npos);
  CHECK(msg.find("lhs = 3/5") != std::string::npos);
}

TEST_CASE("schema violations throw instead of failing softly") {
  CHECK_THROWS_AS(parse_proof_json("not json"), ProofSchemaError);
  CHECK_THROWS_AS(
      parse_proof_json("{\"rule\": \"nope\", \"judgement\": "
                       "{\"pre\": \"1\", \"cmd\": \"skip\", \"post\": \"1\"}}"),
      ProofSchemaError);
  CHECK_THROWS_AS(
      parse_proof_json("{\"rule\": \"term\", \"judgement\": "
                       "{\"pre\": \"(((\", \"cmd\": \"skip\", \"post\": \"1\"}}"),
      ProofSchemaError);
  try {
    parse_proof_json("{\"judgement\": "
                     "{\"pre\": \"1\", \"cmd\": \"skip\", \"post\": \"1\"}}");
    FAIL("expected ProofSchemaError");
  } catch (const ProofSchemaError& e) {
    CHECK(std::string(e.what()).find("missing field 'rule'") != std::string::npos);
  }
}

TEST_CASE("parallel rule rejects a cross-thread variable clash") {
  DomainBounds b = make_bounds({"y", "z"}, 0, 1, {}, 0);
  CId ca = c_assign(sym("y"), alit(1));
  CId cb = c_assign(sym("z"), alit(0));
  EId posty = x_iverson(p_guard(gcmp(CmpOp::Eq, avar("y"), alit(1))));

  ProofNode pa = leaf(Rule::Assign, x_const(Rat(1)), ca, x_const(Rat(1)), emp_inv());
  ProofNode pb = leaf(Rule::Assign, x_subst(posty, sym("z"), alit(0)), cb, posty,
                      emp_inv());
  ProofNode pc = leaf(Rule::Concur, x_sep(pa.concl.pre, pb.concl.pre),
                      c_par(ca, cb), x_sep(x_const(Rat(1)), posty), emp_inv());
  pc.premises = {pa, pb};

  CheckResult res = check_proof(pc, b);
  REQUIRE(!res.ok);
  CHECK(res.failure->kind == FailKind::SideConditionFails);
  CHECK(res.failure->rule == Rule::Concur);
}

TEST_CASE("single-node failures map to their dedicated kinds") {
  DomainBounds b = make_bounds({"x"}, 0, 1, {5}, 1);
  EId one = x_const(Rat(1));
  EId half = x_const(Rat(1, 2));

  SUBCASE("skip cannot lower the value") {
    ProofNode t = leaf(Rule::Term, one, c_term(), half, emp_inv());
    CheckResult res = check_proof(t, b);
    REQUIRE(!res.ok);
    CHECK(res.failure->kind == FailKind::EntailmentFails);
    CHECK(res.failure->witness.has_value());
  }

  SUBCASE("resource invariants must be qualitative") {
    ProofNode t = leaf(Rule::Term, one, c_term(), one, half);
    CheckResult res = check_proof(t, b);
    REQUIRE(!res.ok);
    CHECK(res.failure->kind == FailKind::NonQualitativeInvariant);
    CHECK(res.failure->path == "root");
  }

  SUBCASE("the minimum rule additionally needs a precise invariant") {
    // Holds on the empty heap and on the singleton at 5: two positive
    // subheaps of {5}, so not precise, though still qualitative.
    EId loose = x_iverson(p_or(p_allocated(alit(5)), p_emp()));
    ProofNode p0 = leaf(Rule::Term, one, c_term(), one, loose);
    ProofNode p1 = leaf(Rule::Term, one, c_term(), one, loose);
    ProofNode m = leaf(Rule::Min, x_min(one, one), c_term(), x_min(one, one), loose);
    m.premises = {p0, p1};
    CheckResult res = check_proof(m, b);
    REQUIRE(!res.ok);
    CHECK(res.failure->kind == FailKind::NonPreciseInvariant);
    CHECK(res.failure->rule == Rule::Min);
  }

  SUBCASE("atomic blocks must have tame bodies") {
    CId body = c_alloc(sym("x"), {alit(0)});
    ProofNode pr = leaf(Rule::Term, one, c_term(), one, emp_inv());
    ProofNode a = leaf(Rule::Atomic, one, c_atomic(body), one, emp_inv());
    a.premises = {pr};
    CheckResult res = check_proof(a, b);
    REQUIRE(!res.ok);
    CHECK(res.failure->kind == FailKind::NotTame);
  }

  SUBCASE("the atom rule only covers single heap/stack primitives") {
    CId loop = c_while(glit(true), c_term());
    ProofNode pr = leaf(Rule::Term, one, c_term(), one, emp_inv());
    ProofNode a = leaf(Rule::Atom, one, loop, one, emp_inv());
    a.premises = {pr};
    CheckResult res = check_proof(a, b);
    REQUIRE(!res.ok);
    CHECK(res.failure->kind == FailKind::NotTerminatingAtom);
  }

  SUBCASE("premise counts are enforced") {
    ProofNode s = leaf(Rule::Seq, one,
                       c_seq(c_assign(sym("x"), alit(0)), c_assign(sym("x"), alit(1))),
                       one, emp_inv());
    CheckResult res = check_proof(s, b);
    REQUIRE(!res.ok);
    CHECK(res.failure->kind == FailKind::SideConditionFails);
    CHECK(res.failure->detail.find("takes 2 premise(s), got 0") != std::string::npos);
  }
}

TEST_CASE("scaled-sum rule verifies termination or demands an assertion") {
  DomainBounds b = make_bounds({"x"}, 0, 1, {}, 0);
  EId half = x_const(Rat(1, 2));

  ProofNode d0 = leaf(Rule::Div, half, c_diverge(), half, emp_inv());
  ProofNode sl = leaf(Rule::Superlin, x_const(Rat(1)), c_diverge(),
                      x_const(Rat(1)), emp_inv());
  sl.superlin_a = Rat(1);
  sl.premises = {d0, d0};

  CheckResult res = check_proof(sl, b);
  REQUIRE(!res.ok);
  CHECK(res.failure->kind == FailKind::ASTUnverified);

  sl.ast_asserted = true;
  CheckResult res2 = check_proof(sl, b);
  REQUIRE(res2.ok);
  CHECK(res2.certificate.ast_asserted_anywhere);

  ProofNode missing = sl;
  missing.superlin_a.reset();
  CheckResult res3 = check_proof(missing, b);
  REQUIRE(!res3.ok);
  CHECK(res3.failure->kind == FailKind::SideConditionFails);
}

TEST_CASE("scaled-sum rule on the fair coin adds both outcome bounds") {
  DomainBounds b = make_bounds({"x"}, 0, 1, {}, 0);
  CId a0 = c_assign(sym("x"), alit(0));
  CId a1 = c_assign(sym("x"), alit(1));
  CId coin = c_prob(a0, Rat(1, 2), a1);
  EId iv0 = x_iverson(p_guard(gcmp(CmpOp::Eq, avar("x"), alit(0))));
  EId iv1 = x_iverson(p_guard(gcmp(CmpOp::Eq, avar("x"), alit(1))));
  EId half = x_const(Rat(1, 2));

  auto branch_pair = [&](EId post, bool zero_wins) {
    ProofNode l0 = leaf(Rule::Assign, x_const(Rat(zero_wins ? 1 : 0)), a0, post,
                        emp_inv());
    ProofNode l1 = leaf(Rule::Assign, x_const(Rat(zero_wins ? 0 : 1)), a1, post,
                        emp_inv());
    ProofNode p = leaf(Rule::PChoice, half, coin, post, emp_inv());
    p.premises = {l0, l1};
    return p;
  };

  ProofNode sl = leaf(Rule::Superlin, x_const(Rat(1)), coin, x_add(iv0, iv1),
                      emp_inv());
  sl.superlin_a = Rat(1);
  sl.premises = {branch_pair(iv0, true), branch_pair(iv1, false)};

  CheckResult res = check_proof(sl, b);
  if (!res.ok) MESSAGE(describe_failure(*res.failure));
  REQUIRE(res.ok);
  CHECK(res.certificate.entries.size() == 7);
  CHECK(!res.certificate.ast_asserted_anywhere);  // termination machine-checked
}

TEST_CASE("lossy transmission: closed-form bounds for single-slot arrays") {
  struct Case {
    Rat p;
    std::set<long long> J;
    Rat expect;
  };
  for (const Case& c : {Case{Rat(1, 2), {}, Rat(1, 2)},
                        Case{Rat(1, 2), {0}, Rat(1, 2)},
                        Case{Rat(1, 3), {}, Rat(2, 3)},
                        Case{Rat(1, 3), {0}, Rat(1, 3)}}) {
    CAPTURE(show_rat(c.p));
    CAPTURE(c.J.size());
    ProducerConsumerResult res = check_producer_consumer(0, c.p, c.J);
    if (!res.check.ok) MESSAGE(describe_failure(*res.check.failure));
    CHECK(res.check.ok);
    CHECK(res.bound_value == c.expect);
    CHECK(res.claim.invariant == x_iverson(p_emp()));
    CHECK(res.claim.cmd == res.program);
    CHECK(!res.check.certificate.entries.empty());
  }
  CHECK_THROWS_AS(check_producer_consumer(-1, Rat(1, 2), {}), EvalError);
  CHECK_THROWS_AS(check_producer_consumer(0, Rat(1), {}), EvalError);
  CHECK_THROWS_AS(check_producer_consumer(0, Rat(0), {}), EvalError);
}
