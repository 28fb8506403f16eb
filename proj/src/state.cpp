#include "chp/state.hpp"

#include <algorithm>
#include <sstream>

namespace chp {

Val Stack::get(Sym x) const {
  auto it = vals.find(x);
  if (it == vals.end()) {
    throw EvalError("read of undeclared variable '" + sym_name(x) + "'");
  }
  return it->second;
}

Stack Stack::with(Sym x, Val v) const {
  if (!declared(x)) {
    throw EvalError("write to undeclared variable '" + sym_name(x) + "'");
  }
  Stack out = *this;
  out.vals[x] = v;
  return out;
}

bool Heap::contains(Val loc) const { return get(loc).has_value(); }

std::optional<Val> Heap::get(Val loc) const {
  auto it = std::lower_bound(cells.begin(), cells.end(), loc,
                             [](const auto& cell, Val l) { return cell.first < l; });
  if (it != cells.end() && it->first == loc) return it->second;
  return std::nullopt;
}

Heap Heap::with(Val loc, Val v) const {
  Heap out = *this;
  auto it = std::lower_bound(out.cells.begin(), out.cells.end(), loc,
                             [](const auto& cell, Val l) { return cell.first < l; });
  if (it != out.cells.end() && it->first == loc) {
    it->second = v;
  } else {
    out.cells.insert(it, {loc, v});
  }
  return out;
}

Heap Heap::without(Val loc) const {
  Heap out = *this;
  auto it = std::lower_bound(out.cells.begin(), out.cells.end(), loc,
                             [](const auto& cell, Val l) { return cell.first < l; });
  if (it != out.cells.end() && it->first == loc) out.cells.erase(it);
  return out;
}

bool Heap::disjoint(const Heap& other) const {
  // Both cell lists are sorted; a single merge pass finds collisions.
  auto a = cells.begin();
  auto b = other.cells.begin();
  while (a != cells.end() && b != other.cells.end()) {
    if (a->first < b->first) {
      ++a;
    } else if (b->first < a->first) {
      ++b;
    } else {
      return false;
    }
  }
  return true;
}

std::optional<Heap> heap_union(const Heap& a, const Heap& b) {
  Heap out;
  out.cells.reserve(a.cells.size() + b.cells.size());
  auto ia = a.cells.begin();
  auto ib = b.cells.begin();
  while (ia != a.cells.end() && ib != b.cells.end()) {
    if (ia->first < ib->first) {
      out.cells.push_back(*ia++);
    } else if (ib->first < ia->first) {
      out.cells.push_back(*ib++);
    } else {
      return std::nullopt;
    }
  }
  out.cells.insert(out.cells.end(), ia, a.cells.end());
  out.cells.insert(out.cells.end(), ib, b.cells.end());
  return out;
}

bool DomainBounds::declared(Sym x) const {
  return std::binary_search(vars.begin(), vars.end(), x,
                            [](Sym a, Sym b) { return sym_name(a) < sym_name(b); });
}

bool DomainBounds::is_location(Val l) const {
  return std::binary_search(locations.begin(), locations.end(), l);
}

DomainBounds make_bounds(std::vector<std::string> var_names, Val lo, Val hi,
                         std::vector<Val> locations, std::size_t heap_cap) {
  if (hi < lo) throw EvalError("empty value interval");
  std::sort(var_names.begin(), var_names.end());
  var_names.erase(std::unique(var_names.begin(), var_names.end()), var_names.end());
  std::sort(locations.begin(), locations.end());
  locations.erase(std::unique(locations.begin(), locations.end()), locations.end());
  if (heap_cap > locations.size()) {
    throw EvalError("heap cap exceeds number of locations");
  }
  DomainBounds b;
  b.vars.reserve(var_names.size());
  for (const auto& n : var_names) b.vars.push_back(sym(n));
  b.lo = lo;
  b.hi = hi;
  b.locations = std::move(locations);
  b.heap_cap = heap_cap;
  return b;
}

Val eval_arith(AId e, const Stack& s) {
  const AExp& a = aexp(e);
  switch (a.kind) {
    case AKind::Lit:
      return a.lit;
    case AKind::Var:
      return s.get(a.var);
    case AKind::Add:
      return eval_arith(a.lhs, s) + eval_arith(a.rhs, s);
    case AKind::Sub:
      return eval_arith(a.lhs, s) - eval_arith(a.rhs, s);
    case AKind::Mul:
      return eval_arith(a.lhs, s) * eval_arith(a.rhs, s);
  }
  throw EvalError("corrupt arithmetic node");
}

bool eval_guard(GId g, const Stack& s) {
  const Guard& gd = guard(g);
  switch (gd.kind) {
    case GKind::Lit:
      return gd.b;
    case GKind::Cmp: {
      Val l = eval_arith(gd.lhs, s);
      Val r = eval_arith(gd.rhs, s);
      switch (gd.op) {
        case CmpOp::Eq: return l == r;
        case CmpOp::Ne: return l != r;
        case CmpOp::Lt: return l < r;
        case CmpOp::Le: return l <= r;
        case CmpOp::Gt: return l > r;
        case CmpOp::Ge: return l >= r;
      }
      throw EvalError("corrupt comparison node");
    }
    case GKind::And:
      return eval_guard(gd.g1, s) && eval_guard(gd.g2, s);
    case GKind::Or:
      return eval_guard(gd.g1, s) || eval_guard(gd.g2, s);
    case GKind::Not:
      return !eval_guard(gd.g1, s);
  }
  throw EvalError("corrupt guard node");
}

std::vector<Stack> enumerate_stacks(const DomainBounds& b) {
  std::set<Sym> all(b.vars.begin(), b.vars.end());
  return enumerate_stacks(b, all);
}

std::vector<Stack> enumerate_stacks(const DomainBounds& b, const std::set<Sym>& vary) {
  for (Sym x : vary) {
    if (!b.declared(x)) {
      throw EvalError("enumerating undeclared variable '" + sym_name(x) + "'");
    }
  }
  Stack base;
  for (Sym x : b.vars) base.vals[x] = 0;
  std::vector<Sym> varying;
  for (Sym x : b.vars) {
    if (vary.count(x)) varying.push_back(x);
  }
  std::vector<Stack> out;
  std::size_t n_vals = b.value_count();
  std::size_t total = 1;
  for (std::size_t i = 0; i < varying.size(); ++i) total *= n_vals;
  out.reserve(total);
  std::vector<Val> digits(varying.size(), b.lo);
  for (std::size_t i = 0; i < total; ++i) {
    Stack s = base;
    for (std::size_t j = 0; j < varying.size(); ++j) s.vals[varying[j]] = digits[j];
    out.push_back(std::move(s));
    for (std::size_t j = varying.size(); j-- > 0;) {
      if (digits[j] < b.hi) {
        ++digits[j];
        break;
      }
      digits[j] = b.lo;
    }
  }
  return out;
}

namespace {

// Emits all heaps with the given domain, cycling cell values with the
// last cell fastest.
void emit_heaps_for_domain(const std::vector<Val>& domain, const DomainBounds& b,
                           std::vector<Heap>& out) {
  std::size_t n = domain.size();
  std::vector<Val> vals(n, b.lo);
  for (;;) {
    Heap h;
    h.cells.reserve(n);
    for (std::size_t i = 0; i < n; ++i) h.cells.emplace_back(domain[i], vals[i]);
    out.push_back(std::move(h));
    std::size_t j = n;
    while (j-- > 0) {
      if (vals[j] < b.hi) {
        ++vals[j];
        break;
      }
      vals[j] = b.lo;
    }
    if (j == static_cast<std::size_t>(-1)) break;
  }
}

void emit_domains(const DomainBounds& b, std::size_t k, std::size_t start,
                  std::vector<Val>& domain, std::vector<Heap>& out) {
  if (domain.size() == k) {
    emit_heaps_for_domain(domain, b, out);
    return;
  }
  for (std::size_t i = start; i < b.locations.size(); ++i) {
    domain.push_back(b.locations[i]);
    emit_domains(b, k, i + 1, domain, out);
    domain.pop_back();
  }
}

}  // namespace

std::vector<Heap> enumerate_heaps(const DomainBounds& b) {
  std::vector<Heap> out;
  for (std::size_t k = 0; k <= b.heap_cap; ++k) {
    std::vector<Val> domain;
    emit_domains(b, k, 0, domain, out);
  }
  return out;
}

InitialState parse_initial_state(const std::string& text) {
  InitialState init;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    auto bad = [&](const std::string& why) -> ParseError {
      return ParseError(why, lineno, 1);
    };
    std::string eq;
    Val value = 0;
    if (first == "heap") {
      Val loc = 0;
      if (!(ls >> loc >> eq >> value) || eq != "=") {
        throw bad("expected 'heap <loc> = <int>'");
      }
      if (init.heap.contains(loc)) throw bad("duplicate heap location");
      init.heap = init.heap.with(loc, value);
    } else {
      if (!(ls >> eq >> value) || eq != "=") {
        throw bad("expected '<var> = <int>'");
      }
      if (init.vars.count(first)) throw bad("duplicate variable '" + first + "'");
      init.vars[first] = value;
    }
    std::string rest;
    if (ls >> rest) throw bad("trailing input '" + rest + "'");
  }
  return init;
}

Stack make_stack(const DomainBounds& b, const std::map<std::string, Val>& assignments) {
  Stack s;
  for (Sym x : b.vars) s.vals[x] = 0;
  for (const auto& [name, v] : assignments) {
    Sym x = sym(name);
    if (!s.vals.count(x)) {
      throw EvalError("initial value for undeclared variable '" + name + "'");
    }
    s.vals[x] = v;
  }
  return s;
}

std::string show_stack(const Stack& s) {
  std::ostringstream out;
  out << "{";
  bool first = true;
  for (const auto& [x, v] : s.vals) {
    if (!first) out << ", ";
    first = false;
    out << sym_name(x) << "=" << v;
  }
  out << "}";
  return out.str();
}

std::string show_heap(const Heap& h) {
  std::ostringstream out;
  out << "{";
  bool first = true;
  for (const auto& [loc, v] : h.cells) {
    if (!first) out << ", ";
    first = false;
    out << loc << "|->" << v;
  }
  out << "}";
  return out.str();
}

}  // namespace chp
