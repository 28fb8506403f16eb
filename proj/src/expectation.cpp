#include "chp/expectation.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <mutex>
#include <sstream>

#include "parser_base.hpp"

namespace chp {

namespace {

// Interning pool for predicates and expectations, mirroring the command
// arena: one canonical id per structurally distinct node, so semantic
// caches can key on ids and equality is an integer compare.
struct ExpArena {
  std::mutex mu;
  std::deque<Predicate> preds;
  std::deque<Expectation> exps;
  std::unordered_map<std::string, PId> pred_ids;
  std::unordered_map<std::string, EId> exp_ids;

  static ExpArena& get() {
    static ExpArena a;
    return a;
  }
};

PId intern_pred(const std::string& key, Predicate n) {
  ExpArena& a = ExpArena::get();
  std::lock_guard<std::mutex> lock(a.mu);
  auto it = a.pred_ids.find(key);
  if (it != a.pred_ids.end()) return it->second;
  PId id = static_cast<PId>(a.preds.size());
  a.preds.push_back(std::move(n));
  a.pred_ids.emplace(key, id);
  return id;
}

EId intern_exp(const std::string& key, Expectation n) {
  ExpArena& a = ExpArena::get();
  std::lock_guard<std::mutex> lock(a.mu);
  auto it = a.exp_ids.find(key);
  if (it != a.exp_ids.end()) return it->second;
  EId id = static_cast<EId>(a.exps.size());
  a.exps.push_back(std::move(n));
  a.exp_ids.emplace(key, id);
  return id;
}

}  // namespace

PId p_emp() { return intern_pred("E", Predicate{}); }

PId p_points_to(AId e, const std::vector<AId>& cells) {
  if (cells.empty()) throw EvalError("points-to needs at least one cell");
  Predicate n;
  n.kind = PKind::PointsTo;
  n.e1 = e;
  n.cells = cells;
  std::string key = "P" + std::to_string(e) + ":";
  for (AId c : cells) key += std::to_string(c) + ",";
  return intern_pred(key, n);
}

PId p_allocated(AId e) {
  Predicate n;
  n.kind = PKind::Allocated;
  n.e1 = e;
  return intern_pred("A" + std::to_string(e), n);
}

PId p_eq(AId l, AId r) {
  Predicate n;
  n.kind = PKind::EqExpr;
  n.e1 = l;
  n.e2 = r;
  return intern_pred("Q" + std::to_string(l) + "," + std::to_string(r), n);
}

PId p_guard(GId g) {
  // Canonicalize: composite guards become predicate connectives and
  // equalities become EqExpr, so StackGuard only ever wraps a literal
  // or a single non-equality comparison. Keeps printing unambiguous.
  const Guard& gd = guard(g);
  switch (gd.kind) {
    case GKind::And:
      return p_and(p_guard(gd.g1), p_guard(gd.g2));
    case GKind::Or:
      return p_or(p_guard(gd.g1), p_guard(gd.g2));
    case GKind::Not:
      return p_not(p_guard(gd.g1));
    case GKind::Cmp:
      if (gd.op == CmpOp::Eq) return p_eq(gd.lhs, gd.rhs);
      break;
    case GKind::Lit:
      break;
  }
  Predicate n;
  n.kind = PKind::StackGuard;
  n.g = g;
  return intern_pred("G" + std::to_string(g), n);
}

PId p_and(PId a, PId b) {
  Predicate n;
  n.kind = PKind::And;
  n.p1 = a;
  n.p2 = b;
  return intern_pred("&" + std::to_string(a) + "," + std::to_string(b), n);
}

PId p_or(PId a, PId b) {
  Predicate n;
  n.kind = PKind::Or;
  n.p1 = a;
  n.p2 = b;
  return intern_pred("|" + std::to_string(a) + "," + std::to_string(b), n);
}

PId p_not(PId a) {
  Predicate n;
  n.kind = PKind::Not;
  n.p1 = a;
  return intern_pred("~" + std::to_string(a), n);
}

const Predicate& pred(PId id) { return ExpArena::get().preds[id]; }

EId x_const(const Rat& c) {
  if (c < 0 || c > 1) throw EvalError("constant " + show_rat(c) + " outside [0,1]");
  Expectation n;
  n.c = c;
  return intern_exp("k" + show_rat(c), n);
}

namespace {
EId binary_exp(EKind k, char tag, EId a, EId b) {
  Expectation n;
  n.kind = k;
  n.a = a;
  n.b = b;
  return intern_exp(tag + std::to_string(a) + "," + std::to_string(b), n);
}
}  // namespace

EId x_iverson(PId p) {
  Expectation n;
  n.kind = EKind::Iverson;
  n.pred = p;
  return intern_exp("i" + std::to_string(p), n);
}

EId x_add(EId a, EId b) { return binary_exp(EKind::Add, '+', a, b); }
EId x_mul(EId a, EId b) { return binary_exp(EKind::Mul, '*', a, b); }
EId x_max(EId a, EId b) { return binary_exp(EKind::Max, 'M', a, b); }
EId x_min(EId a, EId b) { return binary_exp(EKind::Min, 'm', a, b); }
EId x_sep(EId a, EId b) { return binary_exp(EKind::SepMul, 'S', a, b); }
EId x_wand(EId guard, EId body) { return binary_exp(EKind::GuardedWand, 'W', guard, body); }

EId x_pow(EId base, AId exponent) {
  Expectation n;
  n.kind = EKind::Pow;
  n.a = base;
  n.e1 = exponent;
  return intern_exp("^" + std::to_string(base) + "," + std::to_string(exponent), n);
}

EId x_sup(Sym x, EId body) {
  Expectation n;
  n.kind = EKind::SupVal;
  n.var = x;
  n.a = body;
  return intern_exp("U" + std::to_string(x) + "," + std::to_string(body), n);
}

EId x_inf(Sym x, EId body) {
  Expectation n;
  n.kind = EKind::InfVal;
  n.var = x;
  n.a = body;
  return intern_exp("L" + std::to_string(x) + "," + std::to_string(body), n);
}

EId x_subst(EId body, Sym x, AId e) {
  Expectation n;
  n.kind = EKind::Subst;
  n.var = x;
  n.a = body;
  n.e1 = e;
  return intern_exp("s" + std::to_string(body) + "," + std::to_string(x) + "," +
                        std::to_string(e),
                    n);
}

EId x_bigsep(Sym x, AId lo, AId hi, EId body) {
  Expectation n;
  n.kind = EKind::BigSepMul;
  n.var = x;
  n.e1 = lo;
  n.e2 = hi;
  n.a = body;
  return intern_exp("B" + std::to_string(x) + "," + std::to_string(lo) + "," +
                        std::to_string(hi) + "," + std::to_string(body),
                    n);
}

const Expectation& expn(EId id) { return ExpArena::get().exps[id]; }

std::set<Sym> fv_pred(PId p) {
  const Predicate& n = pred(p);
  std::set<Sym> out;
  auto add = [&](std::set<Sym> s) { out.insert(s.begin(), s.end()); };
  switch (n.kind) {
    case PKind::Emp:
      break;
    case PKind::PointsTo:
      add(free_vars_arith(n.e1));
      for (AId c : n.cells) add(free_vars_arith(c));
      break;
    case PKind::Allocated:
      add(free_vars_arith(n.e1));
      break;
    case PKind::EqExpr:
      add(free_vars_arith(n.e1));
      add(free_vars_arith(n.e2));
      break;
    case PKind::StackGuard:
      add(free_vars_guard(n.g));
      break;
    case PKind::And:
    case PKind::Or:
      add(fv_pred(n.p1));
      add(fv_pred(n.p2));
      break;
    case PKind::Not:
      add(fv_pred(n.p1));
      break;
  }
  return out;
}

std::set<Sym> fv_exp(EId e) {
  const Expectation& n = expn(e);
  std::set<Sym> out;
  auto add = [&](std::set<Sym> s) { out.insert(s.begin(), s.end()); };
  switch (n.kind) {
    case EKind::Const:
      break;
    case EKind::Iverson:
      add(fv_pred(n.pred));
      break;
    case EKind::Add:
    case EKind::Mul:
    case EKind::Max:
    case EKind::Min:
    case EKind::SepMul:
    case EKind::GuardedWand:
      add(fv_exp(n.a));
      add(fv_exp(n.b));
      break;
    case EKind::Pow:
      add(fv_exp(n.a));
      add(free_vars_arith(n.e1));
      break;
    case EKind::SupVal:
    case EKind::InfVal:
      add(fv_exp(n.a));
      out.erase(n.var);
      break;
    case EKind::Subst: {
      std::set<Sym> body = fv_exp(n.a);
      bool mentions = body.count(n.var) > 0;
      body.erase(n.var);
      add(std::move(body));
      if (mentions) add(free_vars_arith(n.e1));
      break;
    }
    case EKind::BigSepMul:
      add(fv_exp(n.a));
      out.erase(n.var);
      add(free_vars_arith(n.e1));
      add(free_vars_arith(n.e2));
      break;
  }
  return out;
}

EId subst_exp(EId e, Sym x, AId repl) { return x_subst(e, x, repl); }

// ---------------------------------------------------------------------
// Evaluation

EvalCtx::EvalCtx(DomainBounds bounds) : bounds_(std::move(bounds)) {}

const std::vector<Heap>& EvalCtx::universe() {
  if (!universe_ready_) {
    universe_ = enumerate_heaps(bounds_);
    universe_ready_ = true;
  }
  return universe_;
}

std::size_t EvalCtx::KeyHash::operator()(const Key& k) const {
  std::size_t h = 1469598103934665603ull;
  auto mix = [&h](std::size_t v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  mix(k.e);
  for (Val v : k.stack_proj) mix(static_cast<std::size_t>(v) + 0x9e3779b9);
  for (const auto& [l, v] : k.heap) {
    mix(static_cast<std::size_t>(l));
    mix(static_cast<std::size_t>(v) + 0x85ebca6b);
  }
  return h;
}

const std::vector<Sym>& EvalCtx::fv_sorted(EId e) {
  auto it = fv_cache_.find(e);
  if (it != fv_cache_.end()) return it->second;
  std::set<Sym> fv = fv_exp(e);
  std::vector<Sym> v(fv.begin(), fv.end());
  return fv_cache_.emplace(e, std::move(v)).first->second;
}

namespace {

// Kinds worth caching; the rest are cheap relative to a lookup.
bool memo_worthy(EKind k) {
  switch (k) {
    case EKind::SepMul:
    case EKind::GuardedWand:
    case EKind::SupVal:
    case EKind::InfVal:
    case EKind::BigSepMul:
    case EKind::Subst:
      return true;
    default:
      return false;
  }
}

std::vector<Val> project_stack(const std::vector<Sym>& fv, const Stack& s) {
  std::vector<Val> out;
  out.reserve(fv.size());
  for (Sym x : fv) {
    auto it = s.vals.find(x);
    if (it == s.vals.end()) {
      throw EvalError("read of undeclared variable '" + sym_name(x) + "'");
    }
    out.push_back(it->second);
  }
  return out;
}

}  // namespace

Rat EvalCtx::eval(EId e, const Stack& s, const Heap& h) {
  const Expectation& n = expn(e);
  if (n.kind == EKind::Const) return n.c;
  bool cache = memo_worthy(n.kind);
  Key key;
  if (cache) {
    key = Key{e, project_stack(fv_sorted(e), s), h.cells};
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
  }
  Rat v = eval_raw(e, n, s, h);
  if (v < 0 || v > 1) {
    throw EvalError("value " + show_rat(v) + " outside [0,1] in " + pretty_exp(e));
  }
  if (cache) memo_.emplace(std::move(key), v);
  return v;
}

bool EvalCtx::eval_pred(PId p, const Stack& s, const Heap& h) {
  const Predicate& n = pred(p);
  switch (n.kind) {
    case PKind::Emp:
      return h.empty();
    case PKind::PointsTo: {
      if (h.size() != n.cells.size()) return false;
      Val base = eval_arith(n.e1, s);
      for (std::size_t i = 0; i < n.cells.size(); ++i) {
        auto cell = h.get(base + static_cast<Val>(i));
        if (!cell || *cell != eval_arith(n.cells[i], s)) return false;
      }
      return true;
    }
    case PKind::Allocated:
      return h.size() == 1 && h.contains(eval_arith(n.e1, s));
    case PKind::EqExpr:
      return eval_arith(n.e1, s) == eval_arith(n.e2, s);
    case PKind::StackGuard:
      return eval_guard(n.g, s);
    case PKind::And:
      return eval_pred(n.p1, s, h) && eval_pred(n.p2, s, h);
    case PKind::Or:
      return eval_pred(n.p1, s, h) || eval_pred(n.p2, s, h);
    case PKind::Not:
      return !eval_pred(n.p1, s, h);
  }
  throw EvalError("corrupt predicate node");
}

Rat EvalCtx::eval_wand(const Expectation& n, const Stack& s, const Heap& h) {
  // The extension ranges over the bounded heap universe, so a guard
  // that pins the extension exactly (points-to shapes) avoids the full
  // enumeration.
  const Expectation& g = expn(n.a);
  if (g.kind == EKind::Iverson) {
    const Predicate& gp = pred(g.pred);
    if (gp.kind == PKind::Emp) return eval(n.b, s, h);
    if (gp.kind == PKind::PointsTo) {
      if (gp.cells.size() > bounds_.heap_cap) return 1;
      Val base = eval_arith(gp.e1, s);
      Heap ext;
      for (std::size_t i = 0; i < gp.cells.size(); ++i) {
        Val loc = base + static_cast<Val>(i);
        Val v = eval_arith(gp.cells[i], s);
        if (!bounds_.is_location(loc) || v < bounds_.lo || v > bounds_.hi ||
            h.contains(loc)) {
          return 1;  // no admissible extension
        }
        ext = ext.with(loc, v);
      }
      return eval(n.b, s, *heap_union(h, ext));
    }
    if (gp.kind == PKind::Allocated) {
      if (bounds_.heap_cap < 1) return 1;
      Val loc = eval_arith(gp.e1, s);
      if (!bounds_.is_location(loc) || h.contains(loc)) return 1;
      Rat best = 1;
      for (Val v = bounds_.lo; v <= bounds_.hi; ++v) {
        best = std::min(best, eval(n.b, s, h.with(loc, v)));
        if (best == 0) break;
      }
      return best;
    }
  }
  Rat best = 1;
  for (const Heap& ext : universe()) {
    if (!ext.disjoint(h)) continue;
    Rat gv = eval(n.a, s, ext);
    if (gv != 0 && gv != 1) {
      throw EvalError("non-qualitative wand guard " + pretty_exp(n.a));
    }
    if (gv != 1) continue;
    best = std::min(best, eval(n.b, s, *heap_union(h, ext)));
    if (best == 0) break;
  }
  return best;
}

Rat EvalCtx::eval_bigsep(const Expectation& n, Val v, Val last, const Stack& s,
                         const Heap& h) {
  Stack sv = s;
  sv.vals[n.var] = v;
  if (v == last) return eval(n.a, sv, h);
  // Give the current index some sub-heap and recurse on the rest; the
  // fold keeps the cover strict, so the parts partition h exactly.
  Rat best = 0;
  std::size_t cells = h.cells.size();
  for (std::size_t mask = 0; mask < (1u << cells); ++mask) {
    Heap mine, rest;
    for (std::size_t i = 0; i < cells; ++i) {
      if (mask & (1u << i)) {
        mine.cells.push_back(h.cells[i]);
      } else {
        rest.cells.push_back(h.cells[i]);
      }
    }
    Rat left = eval(n.a, sv, mine);
    if (left == 0) continue;
    Rat val = left * eval_bigsep(n, v + 1, last, s, rest);
    best = std::max(best, val);
    if (best == 1) break;
  }
  return best;
}

Rat EvalCtx::eval_raw(EId id, const Expectation& n, const Stack& s, const Heap& h) {
  switch (n.kind) {
    case EKind::Const:
      return n.c;
    case EKind::Iverson:
      return eval_pred(n.pred, s, h) ? 1 : 0;
    case EKind::Add:
      return eval(n.a, s, h) + eval(n.b, s, h);
    case EKind::Mul:
      return eval(n.a, s, h) * eval(n.b, s, h);
    case EKind::Max:
      return std::max(eval(n.a, s, h), eval(n.b, s, h));
    case EKind::Min:
      return std::min(eval(n.a, s, h), eval(n.b, s, h));
    case EKind::Pow: {
      Val k = eval_arith(n.e1, s);
      if (k < 0) {
        throw EvalError("negative exponent " + std::to_string(k) + " in " +
                        pretty_exp(id));
      }
      return pow_rat(eval(n.a, s, h), static_cast<unsigned long>(k));
    }
    case EKind::SepMul: {
      // Maximize the product over all two-way splits of the heap.
      Rat best = 0;
      std::size_t cells = h.cells.size();
      for (std::size_t mask = 0; mask < (1u << cells); ++mask) {
        Heap h1, h2;
        for (std::size_t i = 0; i < cells; ++i) {
          if (mask & (1u << i)) {
            h1.cells.push_back(h.cells[i]);
          } else {
            h2.cells.push_back(h.cells[i]);
          }
        }
        Rat left = eval(n.a, s, h1);
        if (left == 0) continue;
        Rat val = left * eval(n.b, s, h2);
        best = std::max(best, val);
        if (best == 1) break;
      }
      return best;
    }
    case EKind::GuardedWand:
      return eval_wand(n, s, h);
    case EKind::SupVal: {
      Rat best = 0;
      for (Val v = bounds_.lo; v <= bounds_.hi; ++v) {
        Stack sv = s;
        sv.vals[n.var] = v;
        best = std::max(best, eval(n.a, sv, h));
        if (best == 1) break;
      }
      return best;
    }
    case EKind::InfVal: {
      Rat best = 1;
      for (Val v = bounds_.lo; v <= bounds_.hi; ++v) {
        Stack sv = s;
        sv.vals[n.var] = v;
        best = std::min(best, eval(n.a, sv, h));
        if (best == 0) break;
      }
      return best;
    }
    case EKind::Subst: {
      Stack sv = s;
      sv.vals[n.var] = eval_arith(n.e1, s);
      return eval(n.a, sv, h);
    }
    case EKind::BigSepMul: {
      Val lo = eval_arith(n.e1, s);
      Val hi = eval_arith(n.e2, s);
      // An empty index interval is the unit of the separating product,
      // i.e. the empty-heap predicate, so the fold identity
      // bigstar [a,b] = body[a] ** bigstar [a+1,b] holds at a = b too.
      if (lo > hi) return h.empty() ? 1 : 0;
      return eval_bigsep(n, lo, hi, s, h);
    }
  }
  throw EvalError("corrupt expectation node");
}

std::vector<Stack> EvalCtx::stacks_for(const std::vector<EId>& nodes) {
  std::set<Sym> vary;
  for (EId e : nodes) {
    auto fv = fv_exp(e);
    vary.insert(fv.begin(), fv.end());
  }
  return enumerate_stacks(bounds_, vary);
}

bool EvalCtx::is_qualitative(EId e) {
  for (const Stack& s : stacks_for({e})) {
    for (const Heap& h : universe()) {
      Rat v = eval(e, s, h);
      if (v != 0 && v != 1) return false;
    }
  }
  return true;
}

bool EvalCtx::is_precise(EId e) {
  for (const Stack& s : stacks_for({e})) {
    for (const Heap& h : universe()) {
      int positive = 0;
      std::size_t cells = h.cells.size();
      for (std::size_t mask = 0; mask < (1u << cells); ++mask) {
        Heap sub;
        for (std::size_t i = 0; i < cells; ++i) {
          if (mask & (1u << i)) sub.cells.push_back(h.cells[i]);
        }
        if (eval(e, s, sub) > 0 && ++positive > 1) return false;
      }
    }
  }
  return true;
}

bool EvalCtx::entails(EId x, EId y, Counterexample* cex) {
  for (const Stack& s : stacks_for({x, y})) {
    for (const Heap& h : universe()) {
      Rat lx = eval(x, s, h);
      Rat ly = eval(y, s, h);
      if (lx > ly) {
        if (cex) *cex = Counterexample{s, h, lx, ly};
        return false;
      }
    }
  }
  return true;
}

void EvalCtx::check_well_formed(EId root) {
  std::set<EId> seen;
  std::function<void(EId)> walk = [&](EId e) {
    if (!seen.insert(e).second) return;
    const Expectation& n = expn(e);
    switch (n.kind) {
      case EKind::Add:
        // Evaluating the node everywhere triggers the [0,1] range
        // check, which is exactly the no-overflow condition.
        for (const Stack& s : stacks_for({e})) {
          for (const Heap& h : universe()) eval(e, s, h);
        }
        break;
      case EKind::GuardedWand:
        if (!is_qualitative(n.a)) {
          throw EvalError("non-qualitative wand guard " + pretty_exp(n.a));
        }
        break;
      case EKind::Pow:
        for (const Stack& s : enumerate_stacks(bounds_, free_vars_arith(n.e1))) {
          if (eval_arith(n.e1, s) < 0) {
            throw EvalError("exponent of " + pretty_exp(e) + " can go negative");
          }
        }
        break;
      default:
        break;
    }
    switch (n.kind) {
      case EKind::Const:
      case EKind::Iverson:
        break;
      case EKind::Pow:
      case EKind::SupVal:
      case EKind::InfVal:
      case EKind::Subst:
      case EKind::BigSepMul:
        walk(n.a);
        break;
      default:
        walk(n.a);
        walk(n.b);
        break;
    }
  };
  walk(root);
}

Rat eval_exp(EId e, const ProgState& st, const DomainBounds& bounds) {
  EvalCtx ctx(bounds);
  return ctx.eval(e, st);
}

bool is_qualitative(EId e, const DomainBounds& bounds) {
  EvalCtx ctx(bounds);
  return ctx.is_qualitative(e);
}

bool is_precise(EId e, const DomainBounds& bounds) {
  EvalCtx ctx(bounds);
  return ctx.is_precise(e);
}

bool entails(EId x, EId y, const DomainBounds& bounds, Counterexample* cex) {
  EvalCtx ctx(bounds);
  return ctx.entails(x, y, cex);
}

// ---------------------------------------------------------------------
// Text form

namespace {

// Precedence levels, weakest first: quantifiers and -* at 0, ** at 1,
// + at 2, * at 3, postfix (^ and substitution) at 4, atoms at 5.
class ExpParser : public ParserBase {
 public:
  using ParserBase::ParserBase;

  EId parse() {
    EId e = parse_exp();
    if (lx_.peek().kind != Token::End) lx_.fail("unexpected trailing input");
    return e;
  }

 private:
  EId parse_exp() {
    if (lx_.at_ident("sup") || lx_.at_ident("inf")) {
      bool is_sup = lx_.next().text == "sup";
      Sym x = parse_binder();
      lx_.expect_punct(".");
      EId body = parse_exp();
      return is_sup ? x_sup(x, body) : x_inf(x, body);
    }
    if (lx_.eat_ident("bigstar")) {
      Sym x = parse_binder();
      if (!lx_.eat_ident("in")) lx_.fail("expected 'in'");
      lx_.expect_punct("[");
      AId lo = parse_aexp();
      lx_.expect_punct(",");
      AId hi = parse_aexp();
      lx_.expect_punct("]");
      lx_.expect_punct(".");
      return x_bigsep(x, lo, hi, parse_exp());
    }
    EId l = parse_sep();
    if (lx_.eat_punct("-*")) return x_wand(l, parse_exp());
    return l;
  }

  Sym parse_binder() {
    const Token& t = lx_.peek();
    if (t.kind != Token::Ident || is_chp_keyword(t.text)) lx_.fail("expected a variable");
    return sym(lx_.next().text);
  }

  EId parse_sep() {
    EId e = parse_sum();
    while (lx_.eat_punct("**")) e = x_sep(e, parse_sum());
    return e;
  }

  EId parse_sum() {
    EId e = parse_prod();
    while (lx_.eat_punct("+")) e = x_add(e, parse_prod());
    return e;
  }

  EId parse_prod() {
    EId e = parse_postfix();
    while (lx_.eat_punct("*")) e = x_mul(e, parse_postfix());
    return e;
  }

  EId parse_postfix() {
    EId e = parse_atom();
    for (;;) {
      if (lx_.at_punct("[")) {
        // After a complete operand, brackets are a substitution.
        lx_.next();
        Sym x = parse_binder();
        lx_.expect_punct(":=");
        AId a = parse_aexp();
        lx_.expect_punct("]");
        e = x_subst(e, x, a);
      } else if (lx_.eat_punct("^")) {
        e = x_pow(e, parse_factor());
      } else {
        return e;
      }
    }
  }

  EId parse_atom() {
    if (lx_.eat_ident("emp")) return x_iverson(p_emp());
    if (lx_.at_ident("max") || lx_.at_ident("min")) {
      bool is_max = lx_.next().text == "max";
      lx_.expect_punct("(");
      EId e = parse_exp();
      do {
        lx_.expect_punct(",");
        EId r = parse_exp();
        e = is_max ? x_max(e, r) : x_min(e, r);
      } while (lx_.at_punct(","));
      lx_.expect_punct(")");
      return e;
    }
    if (lx_.at_punct("[")) {
      lx_.next();
      PId p = parse_pred();
      lx_.expect_punct("]");
      return x_iverson(p);
    }
    if (lx_.peek().kind == Token::Number) {
      // A number opens either a constant or a points-to address such
      // as `10 |-> 0`; try the address reading first.
      std::size_t save = lx_.save();
      try {
        AId addr = parse_aexp();
        if (lx_.eat_punct("|->")) return x_iverson(parse_points_to_tail(addr));
      } catch (const ParseError&) {
      }
      lx_.restore(save);
      Rat c = parse_rat_literal();
      if (c < 0 || c > 1) lx_.fail("constant outside [0,1]");
      return x_const(c);
    }
    if (lx_.at_punct("(")) {
      std::size_t save = lx_.save();
      lx_.next();
      try {
        EId e = parse_exp();
        lx_.expect_punct(")");
        return e;
      } catch (const ParseError&) {
        lx_.restore(save);
      }
    }
    // What remains is the bare points-to sugar `e |-> ...`.
    AId addr = parse_aexp();
    if (!lx_.eat_punct("|->")) lx_.fail("expected an expectation");
    return x_iverson(parse_points_to_tail(addr));
  }

  PId parse_points_to_tail(AId addr) {
    // `-` alone is the any-value form; a `-` starting an arithmetic
    // expression (as in `x |-> -1`) is a cell value.
    if (lx_.at_punct("-") && lx_.peek(1).kind != Token::Number &&
        lx_.peek(1).kind != Token::Ident && !(lx_.peek(1).kind == Token::Punct && lx_.peek(1).text == "(")) {
      lx_.next();
      return p_allocated(addr);
    }
    std::vector<AId> cells{parse_aexp()};
    while (lx_.eat_punct(",")) cells.push_back(parse_aexp());
    return p_points_to(addr, cells);
  }

  PId parse_pred() {
    PId p = parse_pand();
    while (lx_.eat_punct("||")) p = p_or(p, parse_pand());
    return p;
  }

  PId parse_pand() {
    PId p = parse_patom();
    while (lx_.eat_punct("&&")) p = p_and(p, parse_patom());
    return p;
  }

  PId parse_patom() {
    if (lx_.eat_punct("!")) {
      lx_.expect_punct("(");
      PId p = parse_pred();
      lx_.expect_punct(")");
      return p_not(p);
    }
    if (lx_.eat_ident("emp")) return p_emp();
    if (lx_.eat_ident("true")) return p_guard(glit(true));
    if (lx_.eat_ident("false")) return p_guard(glit(false));
    if (lx_.at_punct("(")) {
      std::size_t save = lx_.save();
      lx_.next();
      try {
        PId p = parse_pred();
        lx_.expect_punct(")");
        return p;
      } catch (const ParseError&) {
        lx_.restore(save);
      }
    }
    AId l = parse_aexp();
    if (lx_.eat_punct("|->")) return parse_points_to_tail(l);
    CmpOp op = parse_cmp();
    AId r = parse_aexp();
    if (op == CmpOp::Eq) return p_eq(l, r);
    return p_guard(gcmp(op, l, r));
  }
};

void print_pred(std::ostringstream& out, PId id, int level);

// level 0 allows ||, 1 allows &&, 2 is an atom.
void print_pred(std::ostringstream& out, PId id, int level) {
  const Predicate& n = pred(id);
  auto open = [&](int own) {
    if (level > own) out << "(";
    return level > own;
  };
  switch (n.kind) {
    case PKind::Emp:
      out << "emp";
      break;
    case PKind::PointsTo:
      out << pretty_arith(n.e1) << " |-> ";
      for (std::size_t i = 0; i < n.cells.size(); ++i) {
        if (i) out << ", ";
        out << pretty_arith(n.cells[i]);
      }
      break;
    case PKind::Allocated:
      out << pretty_arith(n.e1) << " |-> -";
      break;
    case PKind::EqExpr:
      out << pretty_arith(n.e1) << " = " << pretty_arith(n.e2);
      break;
    case PKind::StackGuard:
      out << pretty_guard(n.g);
      break;
    case PKind::And: {
      bool closed = open(1);
      print_pred(out, n.p1, 1);
      out << " && ";
      print_pred(out, n.p2, 2);
      if (closed) out << ")";
      break;
    }
    case PKind::Or: {
      bool closed = open(0);
      print_pred(out, n.p1, 0);
      out << " || ";
      print_pred(out, n.p2, 1);
      if (closed) out << ")";
      break;
    }
    case PKind::Not:
      out << "!(";
      print_pred(out, n.p1, 0);
      out << ")";
      break;
  }
}

void print_exp(std::ostringstream& out, EId id, int level) {
  const Expectation& n = expn(id);
  auto wrap = [&](int own, auto body) {
    if (level > own) out << "(";
    body();
    if (level > own) out << ")";
  };
  switch (n.kind) {
    case EKind::Const:
      out << show_rat(n.c);
      break;
    case EKind::Iverson:
      out << "[";
      print_pred(out, n.pred, 0);
      out << "]";
      break;
    case EKind::Add:
      wrap(2, [&] {
        print_exp(out, n.a, 2);
        out << " + ";
        print_exp(out, n.b, 3);
      });
      break;
    case EKind::Mul:
      wrap(3, [&] {
        print_exp(out, n.a, 3);
        out << " * ";
        print_exp(out, n.b, 4);
      });
      break;
    case EKind::Max:
    case EKind::Min:
      out << (n.kind == EKind::Max ? "max(" : "min(");
      print_exp(out, n.a, 0);
      out << ", ";
      print_exp(out, n.b, 0);
      out << ")";
      break;
    case EKind::Pow:
      wrap(4, [&] {
        print_exp(out, n.a, 4);
        out << " ^ ";
        const AExp& ex = aexp(n.e1);
        if (ex.kind == AKind::Var || (ex.kind == AKind::Lit && ex.lit >= 0)) {
          out << pretty_arith(n.e1);
        } else {
          out << "(" << pretty_arith(n.e1) << ")";
        }
      });
      break;
    case EKind::SepMul:
      wrap(1, [&] {
        print_exp(out, n.a, 1);
        out << " ** ";
        print_exp(out, n.b, 2);
      });
      break;
    case EKind::GuardedWand:
      wrap(0, [&] {
        print_exp(out, n.a, 1);
        out << " -* ";
        print_exp(out, n.b, 0);
      });
      break;
    case EKind::SupVal:
    case EKind::InfVal:
      wrap(0, [&] {
        out << (n.kind == EKind::SupVal ? "sup " : "inf ") << sym_name(n.var) << ". ";
        print_exp(out, n.a, 0);
      });
      break;
    case EKind::Subst:
      wrap(4, [&] {
        print_exp(out, n.a, 4);
        out << "[" << sym_name(n.var) << " := " << pretty_arith(n.e1) << "]";
      });
      break;
    case EKind::BigSepMul:
      wrap(0, [&] {
        out << "bigstar " << sym_name(n.var) << " in [" << pretty_arith(n.e1) << ", "
            << pretty_arith(n.e2) << "]. ";
        print_exp(out, n.a, 0);
      });
      break;
  }
}

}  // namespace

EId parse_expectation(const std::string& src) { return ExpParser(src).parse(); }

std::string pretty_exp(EId e) {
  std::ostringstream out;
  print_exp(out, e, 0);
  return out.str();
}

std::string pretty_pred(PId p) {
  std::ostringstream out;
  print_pred(out, p, 0);
  return out.str();
}

}  // namespace chp
