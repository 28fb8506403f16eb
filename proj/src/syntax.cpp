#include "chp/syntax.hpp"

#include <deque>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include "parser_base.hpp"

namespace chp {

namespace {

// Global intern tables. Nodes live in deques so references stay valid as
// the arena grows; construction is serialized by the mutex, and ids only
// escape after the node is fully built.
struct Arena {
  std::mutex mu;
  std::deque<std::string> sym_names;
  std::unordered_map<std::string, Sym> sym_ids;
  std::deque<AExp> aexps;
  std::unordered_map<std::string, AId> aexp_ids;
  std::deque<Guard> guards;
  std::unordered_map<std::string, GId> guard_ids;
  std::deque<Command> cmds;
  std::unordered_map<std::string, CId> cmd_ids;

  static Arena& get() {
    static Arena a;
    return a;
  }
};

AId intern_aexp(const std::string& key, const AExp& node) {
  Arena& a = Arena::get();
  std::lock_guard<std::mutex> lock(a.mu);
  auto it = a.aexp_ids.find(key);
  if (it != a.aexp_ids.end()) return it->second;
  AId id = static_cast<AId>(a.aexps.size());
  a.aexps.push_back(node);
  a.aexp_ids.emplace(key, id);
  return id;
}

GId intern_guard(const std::string& key, const Guard& node) {
  Arena& a = Arena::get();
  std::lock_guard<std::mutex> lock(a.mu);
  auto it = a.guard_ids.find(key);
  if (it != a.guard_ids.end()) return it->second;
  GId id = static_cast<GId>(a.guards.size());
  a.guards.push_back(node);
  a.guard_ids.emplace(key, id);
  return id;
}

CId intern_cmd(const std::string& key, const Command& node) {
  Arena& a = Arena::get();
  std::lock_guard<std::mutex> lock(a.mu);
  auto it = a.cmd_ids.find(key);
  if (it != a.cmd_ids.end()) return it->second;
  CId id = static_cast<CId>(a.cmds.size());
  a.cmds.push_back(node);
  a.cmd_ids.emplace(key, id);
  return id;
}

}  // namespace

Sym sym(const std::string& name) {
  Arena& a = Arena::get();
  std::lock_guard<std::mutex> lock(a.mu);
  auto it = a.sym_ids.find(name);
  if (it != a.sym_ids.end()) return it->second;
  Sym id = static_cast<Sym>(a.sym_names.size());
  a.sym_names.push_back(name);
  a.sym_ids.emplace(name, id);
  return id;
}

const std::string& sym_name(Sym s) { return Arena::get().sym_names[s]; }

AId alit(long long v) {
  AExp n{AKind::Lit};
  n.lit = v;
  return intern_aexp("L" + std::to_string(v), n);
}

AId avar(Sym x) {
  AExp n{AKind::Var};
  n.var = x;
  return intern_aexp("V" + std::to_string(x), n);
}

AId avar(const std::string& name) { return avar(sym(name)); }

namespace {
AId intern_abin(AKind k, char tag, AId l, AId r) {
  AExp n{k};
  n.lhs = l;
  n.rhs = r;
  return intern_aexp(std::string(1, tag) + std::to_string(l) + "," + std::to_string(r), n);
}
}  // namespace

AId aadd(AId a, AId b) { return intern_abin(AKind::Add, 'A', a, b); }
AId asub(AId a, AId b) { return intern_abin(AKind::Sub, 'S', a, b); }
AId amul(AId a, AId b) { return intern_abin(AKind::Mul, 'M', a, b); }

const AExp& aexp(AId id) { return Arena::get().aexps[id]; }

GId glit(bool b) {
  Guard n{GKind::Lit};
  n.b = b;
  return intern_guard(b ? "T" : "F", n);
}

GId gcmp(CmpOp op, AId a, AId b) {
  Guard n{GKind::Cmp};
  n.op = op;
  n.lhs = a;
  n.rhs = b;
  return intern_guard("C" + std::to_string(static_cast<int>(op)) + ":" + std::to_string(a) +
                          "," + std::to_string(b),
                      n);
}

namespace {
GId intern_gbin(GKind k, char tag, GId a, GId b) {
  Guard n{k};
  n.g1 = a;
  n.g2 = b;
  return intern_guard(std::string(1, tag) + std::to_string(a) + "," + std::to_string(b), n);
}
}  // namespace

GId gand(GId a, GId b) { return intern_gbin(GKind::And, 'A', a, b); }
GId gor(GId a, GId b) { return intern_gbin(GKind::Or, 'O', a, b); }

GId gnot(GId g) {
  Guard n{GKind::Not};
  n.g1 = g;
  return intern_guard("N" + std::to_string(g), n);
}

const Guard& guard(GId id) { return Arena::get().guards[id]; }

CId c_term() { return intern_cmd("term", Command{}); }
CId c_diverge() { return intern_cmd("div", [] { Command n; n.kind = CKind::Diverge; return n; }()); }

CId c_assign(Sym x, AId e) {
  Command n;
  n.kind = CKind::Assign;
  n.var = x;
  n.e1 = e;
  return intern_cmd("asn" + std::to_string(x) + "," + std::to_string(e), n);
}

CId c_prob(CId left, const Rat& p, CId right) {
  Command n;
  n.kind = CKind::ProbChoice;
  n.c1 = left;
  n.c2 = right;
  n.prob = p;
  return intern_cmd("pc" + std::to_string(left) + "," + show_rat(p) + "," +
                        std::to_string(right),
                    n);
}

CId c_seq(CId a, CId b) {
  // A terminated first component contributes nothing: its sequence has
  // exactly the actions and transitions of the continuation. Folding it
  // away here keeps "is final" a syntactic check on the command.
  if (cmd(a).kind == CKind::Terminated) return b;
  Command n;
  n.kind = CKind::Seq;
  n.c1 = a;
  n.c2 = b;
  return intern_cmd("seq" + std::to_string(a) + "," + std::to_string(b), n);
}

CId c_atomic(CId body) {
  Command n;
  n.kind = CKind::Atomic;
  n.c1 = body;
  return intern_cmd("atm" + std::to_string(body), n);
}

CId c_if(GId g, CId then_cmd, CId else_cmd) {
  Command n;
  n.kind = CKind::If;
  n.guard = g;
  n.c1 = then_cmd;
  n.c2 = else_cmd;
  return intern_cmd("if" + std::to_string(g) + "," + std::to_string(then_cmd) + "," +
                        std::to_string(else_cmd),
                    n);
}

CId c_while(GId g, CId body) {
  Command n;
  n.kind = CKind::While;
  n.guard = g;
  n.c1 = body;
  return intern_cmd("whl" + std::to_string(g) + "," + std::to_string(body), n);
}

CId c_par(CId a, CId b) {
  Command n;
  n.kind = CKind::Concurrent;
  n.c1 = a;
  n.c2 = b;
  return intern_cmd("par" + std::to_string(a) + "," + std::to_string(b), n);
}

CId c_alloc(Sym x, const std::vector<AId>& inits) {
  Command n;
  n.kind = CKind::Alloc;
  n.var = x;
  n.inits = inits;
  std::string key = "new" + std::to_string(x);
  for (AId e : inits) key += "," + std::to_string(e);
  return intern_cmd(key, n);
}

CId c_free(AId e) {
  Command n;
  n.kind = CKind::Free;
  n.e1 = e;
  return intern_cmd("fre" + std::to_string(e), n);
}

CId c_lookup(Sym x, AId e) {
  Command n;
  n.kind = CKind::Lookup;
  n.var = x;
  n.e1 = e;
  return intern_cmd("lkp" + std::to_string(x) + "," + std::to_string(e), n);
}

CId c_mutate(AId e, AId val) {
  Command n;
  n.kind = CKind::Mutate;
  n.e1 = e;
  n.e2 = val;
  return intern_cmd("mut" + std::to_string(e) + "," + std::to_string(val), n);
}

const Command& cmd(CId id) { return Arena::get().cmds[id]; }

std::set<Sym> free_vars_arith(AId e) {
  std::set<Sym> out;
  const AExp& n = aexp(e);
  switch (n.kind) {
    case AKind::Lit:
      break;
    case AKind::Var:
      out.insert(n.var);
      break;
    default: {
      out = free_vars_arith(n.lhs);
      auto r = free_vars_arith(n.rhs);
      out.insert(r.begin(), r.end());
    }
  }
  return out;
}

std::set<Sym> free_vars_guard(GId g) {
  std::set<Sym> out;
  const Guard& n = guard(g);
  switch (n.kind) {
    case GKind::Lit:
      break;
    case GKind::Cmp: {
      out = free_vars_arith(n.lhs);
      auto r = free_vars_arith(n.rhs);
      out.insert(r.begin(), r.end());
      break;
    }
    case GKind::Not:
      out = free_vars_guard(n.g1);
      break;
    default: {
      out = free_vars_guard(n.g1);
      auto r = free_vars_guard(n.g2);
      out.insert(r.begin(), r.end());
    }
  }
  return out;
}

namespace {
void collect_vars(CId c, std::set<Sym>& written, std::set<Sym>& free) {
  const Command& n = cmd(c);
  auto add_arith = [&](AId e) {
    auto v = free_vars_arith(e);
    free.insert(v.begin(), v.end());
  };
  switch (n.kind) {
    case CKind::Terminated:
    case CKind::Diverge:
      break;
    case CKind::Assign:
      written.insert(n.var);
      free.insert(n.var);
      add_arith(n.e1);
      break;
    case CKind::Lookup:
      written.insert(n.var);
      free.insert(n.var);
      add_arith(n.e1);
      break;
    case CKind::Alloc:
      written.insert(n.var);
      free.insert(n.var);
      for (AId e : n.inits) add_arith(e);
      break;
    case CKind::Free:
      add_arith(n.e1);
      break;
    case CKind::Mutate:
      add_arith(n.e1);
      add_arith(n.e2);
      break;
    case CKind::Atomic:
      collect_vars(n.c1, written, free);
      break;
    case CKind::While:
      for (Sym s : free_vars_guard(n.guard)) free.insert(s);
      collect_vars(n.c1, written, free);
      break;
    case CKind::If:
      for (Sym s : free_vars_guard(n.guard)) free.insert(s);
      collect_vars(n.c1, written, free);
      collect_vars(n.c2, written, free);
      break;
    default:  // ProbChoice, Seq, Concurrent
      collect_vars(n.c1, written, free);
      collect_vars(n.c2, written, free);
  }
}
}  // namespace

std::set<Sym> written_vars(CId c) {
  std::set<Sym> w, f;
  collect_vars(c, w, f);
  return w;
}

std::set<Sym> free_vars_cmd(CId c) {
  std::set<Sym> w, f;
  collect_vars(c, w, f);
  return f;
}

bool is_tame(CId c) {
  const Command& n = cmd(c);
  switch (n.kind) {
    case CKind::Alloc:
    case CKind::Concurrent:
      return false;
    case CKind::Terminated:
    case CKind::Diverge:
    case CKind::Assign:
    case CKind::Lookup:
    case CKind::Free:
    case CKind::Mutate:
      return true;
    case CKind::Atomic:
    case CKind::While:
      return is_tame(n.c1);
    default:  // ProbChoice, Seq, If
      return is_tame(n.c1) && is_tame(n.c2);
  }
}

bool is_terminating_atom(CId c) {
  switch (cmd(c).kind) {
    case CKind::Assign:
    case CKind::Lookup:
    case CKind::Alloc:
    case CKind::Free:
    case CKind::Mutate:
      return true;
    default:
      return false;
  }
}

ParseError::ParseError(const std::string& msg, int l, int c)
    : std::runtime_error(msg + " at line " + std::to_string(l) + ", column " +
                         std::to_string(c)),
      line(l),
      col(c) {}

namespace {

class CmdParser : public ParserBase {
 public:
  explicit CmdParser(const std::string& src) : ParserBase(src) {}

  CId parse() {
    CId c = parse_par();
    if (lx_.peek().kind != Token::End) lx_.fail("expected end of program");
    return c;
  }

 private:
  Rat parse_prob() {
    Rat p = parse_rat_literal();
    if (p < 0 || p > 1) lx_.fail("probability out of [0,1]");
    return p;
  }

  CId parse_par() {
    CId left = parse_seq();
    while (lx_.eat_punct("|||")) left = c_par(left, parse_seq());
    return left;
  }

  CId parse_seq() {
    CId first = parse_stmt();
    if (lx_.eat_punct(";")) {
      // tolerate a dangling separator at the end of a block
      if (lx_.at_punct("}") || lx_.peek().kind == Token::End) return first;
      return c_seq(first, parse_seq());
    }
    return first;
  }

  CId parse_block() {
    lx_.expect_punct("{");
    CId c = parse_par();
    lx_.expect_punct("}");
    return c;
  }

  CId parse_stmt() {
    if (lx_.eat_ident("skip")) return c_term();
    if (lx_.eat_ident("diverge")) return c_diverge();
    if (lx_.eat_ident("free")) {
      lx_.expect_punct("(");
      AId e = parse_aexp();
      lx_.expect_punct(")");
      return c_free(e);
    }
    if (lx_.eat_ident("atomic")) return c_atomic(parse_block());
    if (lx_.eat_ident("if")) {
      lx_.expect_punct("(");
      GId g = parse_guard();
      lx_.expect_punct(")");
      CId t = parse_block();
      CId e = lx_.eat_ident("else") ? parse_block() : c_term();
      return c_if(g, t, e);
    }
    if (lx_.eat_ident("while")) {
      lx_.expect_punct("(");
      GId g = parse_guard();
      lx_.expect_punct(")");
      return c_while(g, parse_block());
    }
    if (lx_.at_punct("<")) {
      lx_.next();
      AId addr = parse_aexp();
      lx_.expect_punct(">");
      lx_.expect_punct(":=");
      return c_mutate(addr, parse_aexp());
    }
    if (lx_.at_punct("{")) {
      CId left = parse_block();
      if (lx_.eat_punct("[")) {
        Rat p = parse_prob();
        lx_.expect_punct("]");
        return c_prob(left, p, parse_block());
      }
      return left;  // plain grouping
    }
    if (lx_.peek().kind == Token::Ident && !is_chp_keyword(lx_.peek().text)) {
      Sym x = sym(lx_.next().text);
      lx_.expect_punct(":=");
      if (lx_.eat_ident("new")) {
        lx_.expect_punct("(");
        std::vector<AId> inits{parse_aexp()};
        while (lx_.eat_punct(",")) inits.push_back(parse_aexp());
        lx_.expect_punct(")");
        return c_alloc(x, inits);
      }
      if (lx_.eat_punct("<")) {
        AId e = parse_aexp();
        lx_.expect_punct(">");
        return c_lookup(x, e);
      }
      return c_assign(x, parse_aexp());
    }
    lx_.fail("expected a command");
  }
};

}  // namespace

CId parse_program(const std::string& text) { return CmdParser(text).parse(); }

std::vector<std::string> lint_program(CId c) {
  std::vector<std::string> out;
  const Command& n = cmd(c);
  if (n.kind == CKind::Atomic && !is_tame(n.c1)) {
    out.push_back("atomic body is not tame (contains new or |||): atomic { " +
                  pretty_cmd(n.c1) + " } will block");
  }
  switch (n.kind) {
    case CKind::ProbChoice:
    case CKind::Seq:
    case CKind::Concurrent:
    case CKind::If: {
      for (const auto& w : lint_program(n.c1)) out.push_back(w);
      for (const auto& w : lint_program(n.c2)) out.push_back(w);
      break;
    }
    case CKind::Atomic:
    case CKind::While: {
      for (const auto& w : lint_program(n.c1)) out.push_back(w);
      break;
    }
    default:
      break;
  }
  return out;
}

namespace {

// Precedence levels for printing: additive 0, multiplicative 1, atom 2.
void print_arith(std::ostringstream& os, AId e, int level) {
  const AExp& n = aexp(e);
  switch (n.kind) {
    case AKind::Lit:
      os << n.lit;
      return;
    case AKind::Var:
      os << sym_name(n.var);
      return;
    case AKind::Add:
    case AKind::Sub: {
      if (level > 0) os << "(";
      print_arith(os, n.lhs, 0);
      os << (n.kind == AKind::Add ? " + " : " - ");
      print_arith(os, n.rhs, 1);
      if (level > 0) os << ")";
      return;
    }
    case AKind::Mul: {
      if (level > 1) os << "(";
      print_arith(os, n.lhs, 1);
      os << " * ";
      print_arith(os, n.rhs, 2);
      if (level > 1) os << ")";
      return;
    }
  }
}

const char* cmp_text(CmpOp op) {
  switch (op) {
    case CmpOp::Eq:
      return "=";
    case CmpOp::Ne:
      return "!=";
    case CmpOp::Lt:
      return "<";
    case CmpOp::Le:
      return "<=";
    case CmpOp::Gt:
      return ">";
    default:
      return ">=";
  }
}

// Levels: or 0, and 1, atom 2.
void print_guard(std::ostringstream& os, GId g, int level) {
  const Guard& n = guard(g);
  switch (n.kind) {
    case GKind::Lit:
      os << (n.b ? "true" : "false");
      return;
    case GKind::Cmp:
      print_arith(os, n.lhs, 0);
      os << " " << cmp_text(n.op) << " ";
      print_arith(os, n.rhs, 0);
      return;
    case GKind::Not:
      os << "!";
      if (guard(n.g1).kind == GKind::Cmp) {
        os << "(";
        print_guard(os, n.g1, 0);
        os << ")";
      } else {
        print_guard(os, n.g1, 2);
      }
      return;
    case GKind::And: {
      if (level > 1) os << "(";
      print_guard(os, n.g1, 1);
      os << " && ";
      print_guard(os, n.g2, 2);
      if (level > 1) os << ")";
      return;
    }
    case GKind::Or: {
      if (level > 0) os << "(";
      print_guard(os, n.g1, 0);
      os << " || ";
      print_guard(os, n.g2, 1);
      if (level > 0) os << ")";
      return;
    }
  }
}

// Levels: parallel 0, sequence 1, unit 2. Parallel operands and all rule
// bodies are always braced, matching the grammar.
void print_cmd(std::ostringstream& os, CId c, int level) {
  const Command& n = cmd(c);
  switch (n.kind) {
    case CKind::Terminated:
      os << "skip";
      return;
    case CKind::Diverge:
      os << "diverge";
      return;
    case CKind::Assign:
      os << sym_name(n.var) << " := ";
      print_arith(os, n.e1, 0);
      return;
    case CKind::Lookup:
      os << sym_name(n.var) << " := <";
      print_arith(os, n.e1, 0);
      os << ">";
      return;
    case CKind::Mutate:
      os << "<";
      print_arith(os, n.e1, 0);
      os << "> := ";
      print_arith(os, n.e2, 0);
      return;
    case CKind::Free:
      os << "free(";
      print_arith(os, n.e1, 0);
      os << ")";
      return;
    case CKind::Alloc: {
      os << sym_name(n.var) << " := new(";
      for (std::size_t i = 0; i < n.inits.size(); ++i) {
        if (i) os << ", ";
        print_arith(os, n.inits[i], 0);
      }
      os << ")";
      return;
    }
    case CKind::Atomic:
      os << "atomic { ";
      print_cmd(os, n.c1, 0);
      os << " }";
      return;
    case CKind::If: {
      os << "if (";
      print_guard(os, n.guard, 0);
      os << ") { ";
      print_cmd(os, n.c1, 0);
      os << " }";
      if (cmd(n.c2).kind != CKind::Terminated) {
        os << " else { ";
        print_cmd(os, n.c2, 0);
        os << " }";
      }
      return;
    }
    case CKind::While:
      os << "while (";
      print_guard(os, n.guard, 0);
      os << ") { ";
      print_cmd(os, n.c1, 0);
      os << " }";
      return;
    case CKind::ProbChoice:
      os << "{ ";
      print_cmd(os, n.c1, 0);
      os << " } [" << show_rat(n.prob) << "] { ";
      print_cmd(os, n.c2, 0);
      os << " }";
      return;
    case CKind::Seq: {
      if (level > 1) os << "{ ";
      print_cmd(os, n.c1, 2);
      os << "; ";
      print_cmd(os, n.c2, 1);
      if (level > 1) os << " }";
      return;
    }
    case CKind::Concurrent: {
      if (level > 0) os << "{ ";
      os << "{ ";
      print_cmd(os, n.c1, 0);
      os << " } ||| { ";
      print_cmd(os, n.c2, 0);
      os << " }";
      if (level > 0) os << " }";
      return;
    }
  }
}

}  // namespace

std::string pretty_arith(AId e) {
  std::ostringstream os;
  print_arith(os, e, 0);
  return os.str();
}

std::string pretty_guard(GId g) {
  std::ostringstream os;
  print_guard(os, g, 0);
  return os.str();
}

std::string pretty_cmd(CId c) {
  std::ostringstream os;
  print_cmd(os, c, 1);
  return os.str();
}

}  // namespace chp
