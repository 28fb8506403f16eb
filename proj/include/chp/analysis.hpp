#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "chp/expectation.hpp"
#include "chp/semantics.hpp"

namespace chp {

using ValueTable = std::map<Config, Rat>;

// Minimum over enabled actions of the expected table value; 1 when no
// action is enabled (the empty infimum in [0,1]). Throws EvalError when
// a successor is missing from the table.
Rat step_op(const ValueTable& t, const Config& c, const DomainBounds& bounds);

// n-step resource-safe liberal preexpectation: 1 at n=0, the
// postexpectation at terminated configs, and otherwise the invariant-
// extension infimum over one step, with the invariant split off again
// in every successor. Values are antitone in n and approach the
// liberal preexpectation from above.
class WslpEngine {
 public:
  // Requires I qualitative over the context's bounds.
  WslpEngine(EId post, EId invariant, EvalCtx& ctx);

  Rat value(std::size_t n, CId c, const ProgState& st);

 private:
  struct Key {
    std::size_t n;
    CId c;
    std::vector<Val> stack_proj;
    std::vector<std::pair<Val, Val>> heap;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };

  const std::vector<Sym>& proj_vars(CId c);

  EId post_;
  EId invariant_;
  bool trivial_invariant_;  // invariant is the empty-heap bracket
  EvalCtx& ctx_;
  std::unordered_map<Key, Rat, KeyHash> memo_;
  std::unordered_map<CId, std::vector<Sym>> proj_cache_;
};

// Table of wslp values over every bounded initial state.
std::vector<std::pair<ProgState, Rat>> wslp_table(CId c, EId post, EId invariant,
                                                  const DomainBounds& bounds,
                                                  std::size_t n);

// Two-sided enclosure of the liberal preexpectation (infimum over all
// schedulers, divergence counting in full). The upper side iterates the
// one-step minimum downward from 1; the lower side bounds the maximal
// expected loss from above, after pinning states that provably cannot
// lose, and reports 1 minus it. Both sides are sound at every
// iteration; `exact` marks the two meeting, `converged` the width
// reaching eps. Truncated (frontier) states widen the enclosure to
// their full ignorance interval.
struct Bracket {
  Rat lower = 0, upper = 1;
  bool exact = false;
  bool converged = false;
  bool truncated = false;
  std::size_t iterations = 0;
};

Bracket wlp_bracket(CId c, EId post, const ProgState& st0, const DomainBounds& bounds,
                    const Rat& eps, std::size_t n_max, std::size_t step_cap = 1u << 20,
                    std::size_t node_cap = 4000000);

// Same enclosure for several initial states sharing one state space.
std::vector<Bracket> wlp_bracket_multi(CId c, EId post,
                                       const std::vector<ProgState>& inits,
                                       const DomainBounds& bounds, const Rat& eps,
                                       std::size_t n_max, std::size_t step_cap = 1u << 20,
                                       std::size_t node_cap = 4000000);

// Almost-sure termination under every scheduler, decided qualitatively
// on the bounded reachable space: false iff some reachable non-final
// config can keep the run away from final configs forever (greatest
// fixpoint of sure confinement; blocked and frontier configs count as
// confined). `witness` is such a config when the answer is false.
struct AstResult {
  bool ast = false;
  std::optional<Config> witness;
  bool truncated = false;
};

AstResult check_ast(CId c, const std::vector<ProgState>& inits, const DomainBounds& bounds,
                    std::size_t step_cap = 1u << 20, std::size_t node_cap = 4000000);

// Seeds every stack/heap of the bounded universe.
AstResult check_ast(CId c, const DomainBounds& bounds, std::size_t step_cap = 1u << 20,
                    std::size_t node_cap = 4000000);

// Deterministic memoryless scheduler: picks one enabled action index at
// each config it visits.
using SchedulerPolicy =
    std::function<std::size_t(const Config&, const std::vector<std::string>& actions)>;

// Exact liberal value of the Markov chain induced by the policy:
// terminal mass weighted by the postexpectation plus the full
// divergence mass. Always at least the bracket's lower side.
Rat scheduler_value(CId c, EId post, const ProgState& st0, const DomainBounds& bounds,
                    const SchedulerPolicy& policy, std::size_t node_cap = 4000000);

}  // namespace chp
