#pragma once

// Machine-checker for derivations of lower-bound judgements
// "I |= {X} c {Y}": under resource invariant I, X lower-bounds the
// resource-safe liberal preexpectation of c with respect to Y. Every
// structural rule is re-validated and every entailment side condition
// is discharged by exact enumeration over the supplied domain bounds.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chp/expectation.hpp"
#include "chp/syntax.hpp"

namespace chp {

enum class Rule {
  Term,
  Assign,
  Look,
  Alloc,
  Mut,
  Disp,
  Seq,
  If,
  While,
  Div,
  PChoice,
  Atomic,
  Share,
  Concur,
  Superlin,
  WlpWrlp,
  Frame,
  Atom,
  Monotonic,
  Max,
  Min,
  Convex,
};

const char* rule_name(Rule r);
std::optional<Rule> rule_from_name(const std::string& name);

struct Judgement {
  EId pre;
  CId cmd;
  EId post;
  EId invariant;
};

// A derivation tree node. Payloads beyond the premises themselves:
// share carries the split-off invariant part, frame the framed-on
// expectation, convex the weight, superlin the scalar and whether the
// termination premise is machine-verified or user-asserted.
struct ProofNode {
  Rule rule = Rule::Term;
  Judgement concl{};
  std::vector<ProofNode> premises;
  std::optional<EId> share_pi;
  std::optional<EId> frame_z;
  std::optional<EId> convex_weight;
  std::optional<Rat> superlin_a;
  bool ast_asserted = false;
};

enum class FailKind {
  EntailmentFails,
  SideConditionFails,
  NonQualitativeInvariant,
  NonPreciseInvariant,
  NotTame,
  NotTerminatingAtom,
  ASTUnverified,
};

const char* fail_kind_name(FailKind k);

// First failing condition, with a replayable witness when the failure
// is an entailment: re-evaluating lhs/rhs at the witness state
// reproduces the strict inequality.
struct CheckFailure {
  std::string path;
  Rule rule = Rule::Term;
  FailKind kind = FailKind::SideConditionFails;
  std::string detail;
  std::optional<Counterexample> witness;
  std::optional<EId> lhs;
  std::optional<EId> rhs;
};

struct CertEntry {
  std::string path;
  Rule rule;
  std::vector<std::string> discharged;
};

struct Certificate {
  std::vector<CertEntry> entries;  // pre-order over the tree
  bool ast_asserted_anywhere = false;
};

struct CheckResult {
  bool ok = false;
  Certificate certificate;
  std::optional<CheckFailure> failure;
};

CheckResult check_proof(const ProofNode& root, const DomainBounds& bounds);

// JSON (de)serialization of proof scripts. Commands and expectations
// are embedded in their textual grammars. Schema or embedded-syntax
// errors throw ProofSchemaError.
struct ProofSchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ProofNode parse_proof_json(const std::string& text);
std::string proof_to_json(const ProofNode& root);

std::string describe_failure(const CheckFailure& f);

// The lossy-transmission system: producer fills a shared array with
// random payloads, a channel copies each written slot but replaces the
// value by -1 with probability 1-p, a consumer counts delivered
// payloads. J names the slots required to arrive intact; the builder
// instantiates the derivation certifying the closed-form lower bound
// for reaching l = |J ∩ [0,k]|.
struct ProducerConsumerResult {
  CheckResult check;
  CId program = 0;
  Judgement claim{};      // final [emp]-invariant judgement
  EId resource = 0;       // the array-shape invariant threaded through
  Rat bound_value = 0;    // p^|J∩[0,k]| (1-p)^(k+1-|J∩[0,k]|)
  DomainBounds bounds;
};

ProducerConsumerResult check_producer_consumer(long long k, const Rat& p,
                                               const std::set<long long>& J);

// The shared-cell handoff fixture: one thread flips a fair coin into a
// shared cell, the other polls the cell until it changes. Returns the
// derivation certifying 1/2 * max(cell is 0, cell is -1) as a lower
// bound for ending with y = 0. `claimed` overrides the certified
// constant; any value other than 1/2 yields a checkable-to-fail tree.
ProofNode running_example_proof(const Rat& claimed = Rat(1, 2));
DomainBounds running_example_bounds();
CId running_example_program();

}  // namespace chp
