#pragma once

// Monte Carlo executor: samples runs of the execution MDP under
// pluggable action-resolution policies and aggregates statistical
// estimates of liberal values. Policies are probes, not semantics: a
// randomized policy is a mixture of deterministic schedulers, so its
// estimated value can only sit above the scheduler infimum computed by
// the exact engine.

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "chp/expectation.hpp"
#include "chp/semantics.hpp"

namespace chp {

// Chooses uniformly among all enabled actions.
struct UniformRandom {};

// Picks the enabled action whose label matches the earliest class in
// the list (by prefix, e.g. "C1," or "assign"); unmatched labels rank
// last, ties resolve to the first enabled action in rule order.
struct FixedPriority {
  std::vector<std::string> classes;
};

// Alternates between the two outermost threads ("C1,"/"C2," label
// prefixes) step by step, falling back to all actions when the
// preferred side has none; ties inside the chosen side resolve by the
// seeded generator.
struct RoundRobinThreads {};

using SimPolicy = std::variant<UniformRandom, FixedPriority, RoundRobinThreads>;

enum class RunKind { Terminated, Aborted, Cutoff };

struct RunOutcome {
  RunKind kind = RunKind::Cutoff;
  ProgState final;    // meaningful for Terminated
  std::size_t steps = 0;
  bool blocked = false;  // non-final config with no enabled action
};

// Replays one trajectory: actions resolved by the policy, probabilistic
// branches by the seeded generator (atomic blocks carry their exact
// outcome distribution in the single "atomic" action). Identical
// (seed, inputs) give identical runs.
RunOutcome sample_run(CId c, const ProgState& st0, const DomainBounds& bounds,
                      const SimPolicy& policy, std::uint64_t seed,
                      std::size_t step_cap);

struct SimStats {
  std::size_t trials = 0;
  Rat mean;          // exact average of per-run scores
  double stderr_est = 0.0;
  std::size_t aborted = 0;
  std::size_t cutoff = 0;   // includes blocked runs
  std::size_t blocked = 0;
};

// Per-run scores: Terminated evaluates the postexpectation at the final
// state, Aborted scores 0, Cutoff and blocked runs score 1 (divergence
// is credited by the liberal semantics, so censoring toward 1 keeps
// estimates one-sided above the scheduler infimum). Trial i uses the
// derived seed mix(seed, i), so aggregation is order-independent.
SimStats estimate_liberal(CId c, EId post, const ProgState& st0,
                          const DomainBounds& bounds, const SimPolicy& policy,
                          std::size_t trials, std::size_t step_cap,
                          std::uint64_t seed);

// Two TSV lines: "trials mean stderr aborted% cutoff%" header + row.
std::string stats_tsv(const SimStats& s);

// "uniform", "round-robin", or "priority:<class>;<class>;...".
// Returns nullopt on anything else.
std::optional<SimPolicy> parse_policy(const std::string& text);

}  // namespace chp
