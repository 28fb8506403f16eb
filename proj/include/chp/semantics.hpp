#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "chp/rational.hpp"
#include "chp/state.hpp"
#include "chp/syntax.hpp"

namespace chp {

// A point of the execution MDP: a program with its state, or the
// dedicated abort sink (which carries no state).
struct Config {
  bool abort = false;
  CId cmd = 0;
  ProgState state;

  static Config make_abort() { return Config{true, 0, {}}; }
  static Config running(CId c, ProgState st) { return Config{false, c, std::move(st)}; }

  auto operator<=>(const Config&) const = default;
};

bool is_final(const Config& c);

// Successor distribution of one enabled action; probabilities are
// positive and sum to exactly 1.
using TransitionDist = std::vector<std::pair<Config, Rat>>;

// All enabled actions with their distributions, in a fixed rule order.
// Final configs and blocked configs yield the empty list. Labels:
// assign, lookup(-abt), mutation(-abt), free(-abt), alloc-<loc>, prob,
// if-t/if-f, loop-t/loop-f, div, atomic, con-end; sequencing keeps the
// inner label, the two sides of a parallel prefix it with "C1," / "C2,".
std::vector<std::pair<std::string, TransitionDist>> step_all(const Config& c,
                                                             const DomainBounds& bounds);

std::vector<std::string> enabled_actions(const Config& c, const DomainBounds& bounds);

// Distribution of the given action; throws EvalError if not enabled.
TransitionDist transition(const Config& c, const std::string& action,
                          const DomainBounds& bounds);

// Exact absorption analysis of a tame command run to completion in one
// indivisible step: probability mass of every final configuration plus
// the divergence mass, summing to 1. Throws EvalError if the command is
// not tame or its reachable chain is not finite.
struct AtomicOutcome {
  std::vector<std::pair<Config, Rat>> finals;
  Rat p_div;
};

AtomicOutcome atomic_outcome(CId c, const ProgState& st, const DomainBounds& bounds);

struct StateSpaceError : std::runtime_error {
  std::size_t count;
  explicit StateSpaceError(std::size_t n)
      : std::runtime_error("state space exceeds node cap (" + std::to_string(n) +
                           " configs)"),
        count(n) {}
};

// The reachable MDP fragment, materialized. Config ids are BFS order
// from the seeds; `frontier[i]` marks non-final configs whose outgoing
// transitions were cut off by the step cap (their `actions` entry is
// empty). Distributions reference config ids.
struct StateSpace {
  std::vector<Config> configs;
  std::map<Config, std::size_t> index;
  std::vector<std::vector<std::pair<std::string, std::vector<std::pair<std::size_t, Rat>>>>>
      actions;
  std::vector<bool> frontier;
  bool truncated = false;  // any frontier nodes present
};

StateSpace build_state_space(const std::vector<Config>& seeds, const DomainBounds& bounds,
                             std::size_t step_cap, std::size_t node_cap);

StateSpace build_state_space(CId c0, const ProgState& st0, const DomainBounds& bounds,
                             std::size_t step_cap, std::size_t node_cap);

// One line per transition: `config_id action prob config_id'`.
std::string dump_mdp(const StateSpace& sp);
// Sidecar table: `config_id <tab> pretty config`, with frontier and
// final markers.
std::string dump_config_table(const StateSpace& sp);
std::string show_config(const Config& c);

}  // namespace chp
