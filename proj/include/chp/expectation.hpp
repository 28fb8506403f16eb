#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "chp/rational.hpp"
#include "chp/state.hpp"
#include "chp/syntax.hpp"

namespace chp {

using PId = std::uint32_t;
using EId = std::uint32_t;

enum class PKind { Emp, PointsTo, Allocated, EqExpr, StackGuard, And, Or, Not };

// Qualitative heap/stack assertions. PointsTo and Allocated pin the heap
// domain exactly: PointsTo(e, [e0..en]) holds only on the heap whose
// domain is precisely {e, .., e+n}, Allocated(e) only on singleton heaps
// at e. EqExpr and StackGuard ignore the heap.
struct Predicate {
  PKind kind = PKind::Emp;
  AId e1 = 0, e2 = 0;      // PointsTo/Allocated address; EqExpr operands
  std::vector<AId> cells;  // PointsTo cell values
  GId g = 0;               // StackGuard
  PId p1 = 0, p2 = 0;      // And / Or / Not operands
};

enum class EKind {
  Const,
  Iverson,
  Add,
  Mul,
  Max,
  Min,
  Pow,
  SepMul,
  GuardedWand,
  SupVal,
  InfVal,
  Subst,
  BigSepMul,
};

// One-bounded expectations, the quantitative assertion language. SepMul
// maximizes over heap splits, GuardedWand minimizes over disjoint
// extensions drawn from the bounded heap universe, SupVal/InfVal range
// over the bounded value interval. Subst is lazy: it evaluates the body
// in an updated stack.
struct Expectation {
  EKind kind = EKind::Const;
  Rat c;               // Const
  PId pred = 0;        // Iverson
  EId a = 0, b = 0;    // operands; quantifier and Subst bodies in a
  AId e1 = 0, e2 = 0;  // Pow exponent / Subst replacement in e1; BigSepMul range e1..e2
  Sym var = 0;         // SupVal / InfVal / Subst / BigSepMul binder
};

// Interned constructors; structurally equal nodes share an id.
PId p_emp();
PId p_points_to(AId e, const std::vector<AId>& cells);
PId p_allocated(AId e);
PId p_eq(AId l, AId r);
PId p_guard(GId g);
PId p_and(PId a, PId b);
PId p_or(PId a, PId b);
PId p_not(PId a);
const Predicate& pred(PId id);

EId x_const(const Rat& c);  // requires c in [0,1]
EId x_iverson(PId p);
EId x_add(EId a, EId b);
EId x_mul(EId a, EId b);
EId x_max(EId a, EId b);
EId x_min(EId a, EId b);
EId x_pow(EId base, AId exponent);
EId x_sep(EId a, EId b);
EId x_wand(EId guard, EId body);
EId x_sup(Sym x, EId body);
EId x_inf(Sym x, EId body);
EId x_subst(EId body, Sym x, AId e);
EId x_bigsep(Sym x, AId lo, AId hi, EId body);
const Expectation& expn(EId id);

// Syntactic free variables; a sound over-approximation of semantic
// dependence. Binders remove their variable; Subst removes the
// substituted variable and adds the replacement's variables when the
// body mentions it.
std::set<Sym> fv_pred(PId p);
std::set<Sym> fv_exp(EId e);

EId subst_exp(EId e, Sym x, AId repl);

// One state the entailment check found violating X <= Y.
struct Counterexample {
  Stack stack;
  Heap heap;
  Rat lhs, rhs;
};

// Exact evaluator over one bounded domain. Caches evaluations keyed on
// (node, stack restricted to the node's free variables, heap), so
// repeated queries against large expectations stay cheap. Not
// thread-safe; use one per thread.
class EvalCtx {
 public:
  explicit EvalCtx(DomainBounds bounds);

  const DomainBounds& bounds() const { return bounds_; }
  // All heaps of the bounded universe, enumerated once on demand.
  const std::vector<Heap>& universe();

  Rat eval(EId e, const Stack& s, const Heap& h);
  Rat eval(EId e, const ProgState& st) { return eval(e, st.stack, st.heap); }

  // True iff the value is 0 or 1 at every bounded state.
  bool is_qualitative(EId e);
  // True iff every bounded state (s,h) has at most one subheap of h on
  // which the expectation is positive.
  bool is_precise(EId e);
  // Pointwise X <= Y over every bounded state; on failure fills `cex`
  // with the first violating state in enumeration order.
  bool entails(EId x, EId y, Counterexample* cex = nullptr);
  bool equivalent(EId x, EId y) { return entails(x, y) && entails(y, x); }

  // Rejects Add nodes that exceed 1 somewhere in the bounded domain,
  // non-qualitative wand guards, and Pow exponents that go negative.
  // Throws EvalError describing the offending subterm.
  void check_well_formed(EId e);

  // Stacks varying exactly the free variables of the given nodes (other
  // declared variables pinned to 0).
  std::vector<Stack> stacks_for(const std::vector<EId>& nodes);

 private:
  struct Key {
    EId e;
    std::vector<Val> stack_proj;
    std::vector<std::pair<Val, Val>> heap;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };

  Rat eval_raw(EId id, const Expectation& n, const Stack& s, const Heap& h);
  bool eval_pred(PId p, const Stack& s, const Heap& h);
  Rat eval_wand(const Expectation& n, const Stack& s, const Heap& h);
  Rat eval_bigsep(const Expectation& n, Val v, Val last, const Stack& s, const Heap& h);
  const std::vector<Sym>& fv_sorted(EId e);

  DomainBounds bounds_;
  std::vector<Heap> universe_;
  bool universe_ready_ = false;
  std::unordered_map<Key, Rat, KeyHash> memo_;
  std::unordered_map<EId, std::vector<Sym>> fv_cache_;
};

// Convenience wrappers that build a throwaway context.
Rat eval_exp(EId e, const ProgState& st, const DomainBounds& bounds);
bool is_qualitative(EId e, const DomainBounds& bounds);
bool is_precise(EId e, const DomainBounds& bounds);
bool entails(EId x, EId y, const DomainBounds& bounds, Counterexample* cex = nullptr);

// Text form. parse_expectation accepts the grammar produced by
// pretty_exp (see README for the full syntax) and throws ParseError with
// a position on malformed input.
EId parse_expectation(const std::string& src);
std::string pretty_exp(EId e);
std::string pretty_pred(PId p);

}  // namespace chp
