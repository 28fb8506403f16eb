#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "chp/rational.hpp"

namespace chp {

// All AST nodes (arithmetic expressions, guards, commands) are interned in
// a global arena: structurally equal trees always get the same id. That
// makes structural equality an integer compare, which the state-space
// construction depends on (loop bodies are rebuilt on every unrolling and
// must land on the same node).
using Sym = std::uint32_t;
using AId = std::uint32_t;
using GId = std::uint32_t;
using CId = std::uint32_t;

enum class AKind { Lit, Var, Add, Sub, Mul };

struct AExp {
  AKind kind;
  long long lit = 0;
  Sym var = 0;
  AId lhs = 0, rhs = 0;
};

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };
enum class GKind { Lit, Cmp, And, Or, Not };

struct Guard {
  GKind kind;
  bool b = false;
  CmpOp op = CmpOp::Eq;
  AId lhs = 0, rhs = 0;
  GId g1 = 0, g2 = 0;
};

enum class CKind {
  Terminated,  // written "skip"; also the result of finished execution
  Diverge,
  Assign,
  ProbChoice,
  Seq,
  Atomic,
  If,
  While,
  Concurrent,
  Alloc,
  Free,
  Lookup,
  Mutate
};

struct Command {
  CKind kind = CKind::Terminated;
  Sym var = 0;              // Assign / Lookup / Alloc target
  AId e1 = 0, e2 = 0;       // address and value operands
  std::vector<AId> inits;   // Alloc initializers
  Rat prob;                 // ProbChoice left-branch probability
  GId guard = 0;            // If / While
  CId c1 = 0, c2 = 0;       // subcommands; loop and atomic bodies in c1
};

// Interned variable names.
Sym sym(const std::string& name);
const std::string& sym_name(Sym s);

// Arithmetic expression constructors and accessor.
AId alit(long long v);
AId avar(Sym x);
AId avar(const std::string& name);
AId aadd(AId a, AId b);
AId asub(AId a, AId b);
AId amul(AId a, AId b);
const AExp& aexp(AId id);

// Guard constructors and accessor.
GId glit(bool b);
GId gcmp(CmpOp op, AId a, AId b);
GId gand(GId a, GId b);
GId gor(GId a, GId b);
GId gnot(GId g);
const Guard& guard(GId id);

// Command constructors and accessor.
CId c_term();
CId c_diverge();
CId c_assign(Sym x, AId e);
CId c_prob(CId left, const Rat& p, CId right);
CId c_seq(CId a, CId b);
CId c_atomic(CId body);
CId c_if(GId g, CId then_cmd, CId else_cmd);
CId c_while(GId g, CId body);
CId c_par(CId a, CId b);
CId c_alloc(Sym x, const std::vector<AId>& inits);
CId c_free(AId e);
CId c_lookup(Sym x, AId e);
CId c_mutate(AId e, AId val);
const Command& cmd(CId id);

// Variable analyses. written_vars collects assignment targets (Assign,
// Lookup, Alloc); free_vars_* collect every occurring variable, a sound
// syntactic over-approximation of semantic dependence.
std::set<Sym> free_vars_arith(AId e);
std::set<Sym> free_vars_guard(GId g);
std::set<Sym> written_vars(CId c);
std::set<Sym> free_vars_cmd(CId c);

// Tame commands contain neither allocation nor concurrency; only they may
// run inside atomic blocks without blocking the enclosing program.
bool is_tame(CId c);

// The syntactic class of single-step heap/stack primitives accepted by the
// atom proof rule.
bool is_terminating_atom(CId c);

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, int line, int col);
  int line, col;
};

// Parses a whole .chp program. Throws ParseError with 1-based position.
CId parse_program(const std::string& text);

// Warnings that do not prevent execution, currently only non-tame atomic
// bodies (their configs will have no enabled action).
std::vector<std::string> lint_program(CId c);

// Canonical text forms; parse_program(pretty_cmd(c)) reproduces c exactly.
std::string pretty_arith(AId e);
std::string pretty_guard(GId g);
std::string pretty_cmd(CId c);

}  // namespace chp
