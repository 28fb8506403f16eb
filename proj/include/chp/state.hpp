#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "chp/syntax.hpp"

namespace chp {

using Val = long long;

struct EvalError : std::runtime_error {
  explicit EvalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Total map over the declared variables; reading an undeclared variable
// throws. Values are plain integers, locations are values used as heap
// addresses.
struct Stack {
  std::map<Sym, Val> vals;

  Val get(Sym x) const;
  bool declared(Sym x) const { return vals.count(x) > 0; }
  Stack with(Sym x, Val v) const;

  auto operator<=>(const Stack&) const = default;
};

// Finite partial map location -> value, kept sorted by location.
struct Heap {
  std::vector<std::pair<Val, Val>> cells;

  bool contains(Val loc) const;
  std::optional<Val> get(Val loc) const;
  Heap with(Val loc, Val v) const;
  Heap without(Val loc) const;
  std::size_t size() const { return cells.size(); }
  bool empty() const { return cells.empty(); }
  bool disjoint(const Heap& other) const;

  auto operator<=>(const Heap&) const = default;
};

// Union of disjoint heaps; nullopt when the domains overlap.
std::optional<Heap> heap_union(const Heap& a, const Heap& b);

struct ProgState {
  Stack stack;
  Heap heap;

  auto operator<=>(const ProgState&) const = default;
};

// The finite universe every quantifier ranges over: declared variables,
// an integer value interval, a location set and a cap on heap size. All
// semantic judgements computed by this toolkit are relative to one of
// these.
struct DomainBounds {
  std::vector<Sym> vars;       // sorted by name, unique
  Val lo = 0, hi = 0;          // value interval [lo, hi]
  std::vector<Val> locations;  // sorted, unique
  std::size_t heap_cap = 0;    // at most |locations|

  bool declared(Sym x) const;
  bool is_location(Val l) const;
  std::size_t value_count() const { return static_cast<std::size_t>(hi - lo + 1); }
};

// Validates and normalizes (sorts, dedups, checks hi >= lo and
// heap_cap <= |locations|). Throws EvalError on violation.
DomainBounds make_bounds(std::vector<std::string> var_names, Val lo, Val hi,
                         std::vector<Val> locations, std::size_t heap_cap);

Val eval_arith(AId e, const Stack& s);
bool eval_guard(GId g, const Stack& s);

// All stacks over the declared variables with values in [lo, hi]; the
// second form varies only `vary` (which must be declared) and pins the
// remaining variables to 0. Deterministic order: odometer over the
// variable list, last variable fastest.
std::vector<Stack> enumerate_stacks(const DomainBounds& b);
std::vector<Stack> enumerate_stacks(const DomainBounds& b, const std::set<Sym>& vary);

// All heaps with domain a subset of `locations` of size at most heap_cap
// and values in [lo, hi]. Order: by domain size, then domain, then cell
// values. Count: sum over k <= cap of C(|locs|, k) * |values|^k.
std::vector<Heap> enumerate_heaps(const DomainBounds& b);

// Initial-state files: one `var = int` line per variable and one
// `heap loc = int` line per cell.
struct InitialState {
  std::map<std::string, Val> vars;
  Heap heap;
};

InitialState parse_initial_state(const std::string& text);

// Builds a stack over exactly the declared variables, taking values from
// `assignments` (unknown names there are an error) and 0 elsewhere.
Stack make_stack(const DomainBounds& b, const std::map<std::string, Val>& assignments);

std::string show_stack(const Stack& s);
std::string show_heap(const Heap& h);

}  // namespace chp
