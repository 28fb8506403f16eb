#include "chp/analysis.hpp"

#include <algorithm>
#include <deque>

#include "chp/linsolve.hpp"

namespace chp {

Rat step_op(const ValueTable& t, const Config& c, const DomainBounds& bounds) {
  auto steps = step_all(c, bounds);
  if (steps.empty()) return 1;
  Rat best = 1;
  bool first = true;
  for (const auto& [label, dist] : steps) {
    Rat sum = 0;
    for (const auto& [succ, p] : dist) {
      auto it = t.find(succ);
      if (it == t.end()) throw EvalError("successor missing from value table");
      sum += p * it->second;
    }
    best = first ? sum : std::min(best, sum);
    first = false;
  }
  return best;
}

// ---------------------------------------------------------------------
// wslp

WslpEngine::WslpEngine(EId post, EId invariant, EvalCtx& ctx)
    : post_(post), invariant_(invariant), ctx_(ctx) {
  trivial_invariant_ = invariant == x_iverson(p_emp());
  if (!trivial_invariant_ && !ctx_.is_qualitative(invariant)) {
    throw EvalError("resource invariant is not qualitative: " + pretty_exp(invariant));
  }
}

std::size_t WslpEngine::KeyHash::operator()(const Key& k) const {
  std::size_t h = 1469598103934665603ull;
  auto mix = [&h](std::size_t v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  mix(k.n);
  mix(k.c);
  for (Val v : k.stack_proj) mix(static_cast<std::size_t>(v) + 0x9e3779b9);
  for (const auto& [l, v] : k.heap) {
    mix(static_cast<std::size_t>(l));
    mix(static_cast<std::size_t>(v) + 0x85ebca6b);
  }
  return h;
}

const std::vector<Sym>& WslpEngine::proj_vars(CId c) {
  auto it = proj_cache_.find(c);
  if (it != proj_cache_.end()) return it->second;
  std::set<Sym> vars = free_vars_cmd(c);
  auto px = fv_exp(post_);
  auto pi = fv_exp(invariant_);
  vars.insert(px.begin(), px.end());
  vars.insert(pi.begin(), pi.end());
  std::vector<Sym> v(vars.begin(), vars.end());
  return proj_cache_.emplace(c, std::move(v)).first->second;
}

Rat WslpEngine::value(std::size_t n, CId c, const ProgState& st) {
  if (n == 0) return 1;
  if (cmd(c).kind == CKind::Terminated) return ctx_.eval(post_, st);

  Key key;
  key.n = n;
  key.c = c;
  key.heap = st.heap.cells;
  for (Sym x : proj_vars(c)) {
    auto it = st.stack.vals.find(x);
    if (it == st.stack.vals.end()) {
      throw EvalError("read of undeclared variable '" + sym_name(x) + "'");
    }
    key.stack_proj.push_back(it->second);
  }
  auto hit = memo_.find(key);
  if (hit != memo_.end()) return hit->second;

  // (invariant extension ⋆-value after one step) helper: the expected
  // value of one action where each successor gives the best split of
  // its heap into a part satisfying the invariant and a rest carried
  // into level n-1.
  auto successor_value = [&](const Config& succ) -> Rat {
    if (succ.abort) return 0;
    if (trivial_invariant_) return value(n - 1, succ.cmd, succ.state);
    Rat best = 0;
    const auto& cells = succ.state.heap.cells;
    for (std::size_t mask = 0; mask < (std::size_t{1} << cells.size()); ++mask) {
      Heap keep, inv;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (mask & (std::size_t{1} << i)) {
          inv.cells.push_back(cells[i]);
        } else {
          keep.cells.push_back(cells[i]);
        }
      }
      if (ctx_.eval(invariant_, succ.state.stack, inv) != 1) continue;
      best = std::max(best, value(n - 1, succ.cmd, {succ.state.stack, keep}));
      if (best == 1) break;
    }
    return best;
  };

  auto after_extension = [&](const Heap& combined) -> Rat {
    auto steps = step_all(Config::running(c, {st.stack, combined}), ctx_.bounds());
    if (steps.empty()) return 1;
    Rat best = 1;
    bool first = true;
    for (const auto& [label, dist] : steps) {
      Rat sum = 0;
      for (const auto& [succ, p] : dist) sum += p * successor_value(succ);
      best = first ? sum : std::min(best, sum);
      first = false;
      if (best == 0) break;
    }
    return best;
  };

  Rat result = 1;
  if (trivial_invariant_) {
    result = after_extension(st.heap);
  } else {
    for (const Heap& ext : ctx_.universe()) {
      if (!ext.disjoint(st.heap)) continue;
      if (ctx_.eval(invariant_, st.stack, ext) != 1) continue;
      result = std::min(result, after_extension(*heap_union(st.heap, ext)));
      if (result == 0) break;
    }
  }
  memo_.emplace(std::move(key), result);
  return result;
}

std::vector<std::pair<ProgState, Rat>> wslp_table(CId c, EId post, EId invariant,
                                                  const DomainBounds& bounds,
                                                  std::size_t n) {
  EvalCtx ctx(bounds);
  WslpEngine engine(post, invariant, ctx);
  std::vector<std::pair<ProgState, Rat>> out;
  for (const Stack& s : enumerate_stacks(bounds)) {
    for (const Heap& h : enumerate_heaps(bounds)) {
      ProgState st{s, h};
      out.push_back({st, engine.value(n, c, st)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------
// Bracket machinery

namespace {

// Unlabelled view of a state space: per node, the list of available
// one-step distributions.
using Dist = std::vector<std::pair<std::size_t, Rat>>;
using NodeActions = std::vector<std::vector<Dist>>;

NodeActions strip_labels(const StateSpace& sp) {
  NodeActions acts(sp.configs.size());
  for (std::size_t i = 0; i < sp.configs.size(); ++i) {
    for (const auto& [label, dist] : sp.actions[i]) acts[i].push_back(dist);
  }
  return acts;
}

std::vector<std::vector<std::size_t>> distinct_successors(const NodeActions& acts) {
  std::vector<std::vector<std::size_t>> adj(acts.size());
  for (std::size_t i = 0; i < acts.size(); ++i) {
    for (const Dist& d : acts[i]) {
      for (const auto& [j, p] : d) adj[i].push_back(j);
    }
    std::sort(adj[i].begin(), adj[i].end());
    adj[i].erase(std::unique(adj[i].begin(), adj[i].end()), adj[i].end());
  }
  return adj;
}

// Strongly connected components, emitted with every successor component
// before its predecessors (so one pass in emission order suffices for
// backward value propagation).
std::vector<std::vector<std::size_t>> tarjan_sccs(
    const std::vector<std::vector<std::size_t>>& adj) {
  const std::size_t n = adj.size();
  std::vector<std::size_t> index(n, 0), low(n, 0);
  std::vector<char> state(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> sccs;
  std::size_t counter = 1;
  struct Frame {
    std::size_t v, child;
  };
  std::vector<Frame> frames;
  for (std::size_t root = 0; root < n; ++root) {
    if (state[root]) continue;
    frames.push_back({root, 0});
    index[root] = low[root] = counter++;
    state[root] = 1;
    stack.push_back(root);
    on_stack[root] = true;
    while (!frames.empty()) {
      Frame& f = frames.back();
      if (f.child < adj[f.v].size()) {
        std::size_t w = adj[f.v][f.child++];
        if (!state[w]) {
          index[w] = low[w] = counter++;
          state[w] = 1;
          stack.push_back(w);
          on_stack[w] = true;
          frames.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
      } else {
        std::size_t v = f.v;
        frames.pop_back();
        if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
        if (low[v] == index[v]) {
          sccs.emplace_back();
          for (;;) {
            std::size_t w = stack.back();
            stack.pop_back();
            on_stack[w] = false;
            sccs.back().push_back(w);
            if (w == v) break;
          }
        }
      }
    }
  }
  return sccs;
}

// Gauss-Seidel sweeps per component until stationary or the sweep cap;
// returns (all components stationary, max sweeps used anywhere).
std::pair<bool, std::size_t> solve_sweeps(const NodeActions& acts,
                                          const std::vector<std::vector<std::size_t>>& sccs,
                                          const std::vector<bool>& fixed,
                                          std::vector<Rat>& v, bool maximize,
                                          const Rat& empty_action_value,
                                          std::size_t n_max) {
  bool all_stationary = true;
  std::size_t max_sweeps = 0;
  for (const auto& scc : sccs) {
    std::vector<std::size_t> members;
    for (std::size_t i : scc) {
      if (!fixed[i]) members.push_back(i);
    }
    if (members.empty()) continue;
    bool stationary = false;
    std::size_t sweeps = 0;
    while (sweeps < n_max) {
      ++sweeps;
      bool changed = false;
      for (std::size_t i : members) {
        Rat nv;
        if (acts[i].empty()) {
          nv = empty_action_value;
        } else {
          bool first = true;
          for (const Dist& dist : acts[i]) {
            Rat sum = 0;
            for (const auto& [j, p] : dist) sum += p * v[j];
            if (first) {
              nv = sum;
              first = false;
            } else {
              nv = maximize ? std::max(nv, sum) : std::min(nv, sum);
            }
          }
        }
        if (nv != v[i]) {
          v[i] = std::move(nv);
          changed = true;
        }
      }
      if (!changed) {
        stationary = true;
        break;
      }
    }
    all_stationary = all_stationary && stationary;
    max_sweeps = std::max(max_sweeps, sweeps);
  }
  return {all_stationary, max_sweeps};
}

// Maximal end components among `eligible` nodes: maximal sets where
// every member has an action whose whole support stays in the set and
// the restricted graph is strongly connected. Within one, a scheduler
// can stay forever or steer to any member with probability 1.
std::vector<std::vector<std::size_t>> find_mecs(const NodeActions& acts,
                                                const std::vector<bool>& eligible) {
  const std::size_t n = acts.size();
  std::vector<std::vector<std::size_t>> mecs;
  std::vector<std::vector<std::size_t>> work;
  {
    std::vector<std::size_t> all;
    for (std::size_t i = 0; i < n; ++i) {
      if (eligible[i] && !acts[i].empty()) all.push_back(i);
    }
    if (!all.empty()) work.push_back(std::move(all));
  }
  std::vector<std::size_t> local(n, 0);
  std::vector<bool> in(n, false);
  while (!work.empty()) {
    std::vector<std::size_t> T = std::move(work.back());
    work.pop_back();
    for (std::size_t s : T) in[s] = true;
    for (std::size_t k = 0; k < T.size(); ++k) local[T[k]] = k;

    // Keep only actions fully inside T; drop members left without one.
    std::vector<std::vector<std::size_t>> adj(T.size());
    std::vector<std::size_t> dropped;
    for (std::size_t k = 0; k < T.size(); ++k) {
      bool has_inside = false;
      for (const Dist& d : acts[T[k]]) {
        bool inside = true;
        for (const auto& [j, p] : d) {
          if (!in[j]) {
            inside = false;
            break;
          }
        }
        if (!inside) continue;
        has_inside = true;
        for (const auto& [j, p] : d) adj[k].push_back(local[j]);
      }
      if (!has_inside) dropped.push_back(T[k]);
      std::sort(adj[k].begin(), adj[k].end());
      adj[k].erase(std::unique(adj[k].begin(), adj[k].end()), adj[k].end());
    }
    for (std::size_t s : T) in[s] = false;

    if (!dropped.empty()) {
      std::vector<bool> gone(n, false);
      for (std::size_t s : dropped) gone[s] = true;
      std::vector<std::size_t> rest;
      for (std::size_t s : T) {
        if (!gone[s]) rest.push_back(s);
      }
      if (!rest.empty()) work.push_back(std::move(rest));
      continue;
    }
    auto sccs = tarjan_sccs(adj);
    if (sccs.size() == 1) {
      // Closed and strongly connected. A singleton only counts if its
      // surviving action self-loops (it does: it is inside T = {s}).
      mecs.push_back(std::move(T));
    } else {
      for (auto& scc : sccs) {
        for (std::size_t& k : scc) k = T[k];
        work.push_back(std::move(scc));
      }
    }
  }
  return mecs;
}

}  // namespace

std::vector<Bracket> wlp_bracket_multi(CId c, EId post,
                                       const std::vector<ProgState>& inits,
                                       const DomainBounds& bounds, const Rat& eps,
                                       std::size_t n_max, std::size_t step_cap,
                                       std::size_t node_cap) {
  std::vector<Config> seeds;
  seeds.reserve(inits.size());
  for (const ProgState& st : inits) seeds.push_back(Config::running(c, st));
  StateSpace sp = build_state_space(seeds, bounds, step_cap, node_cap);
  const std::size_t n = sp.configs.size();

  EvalCtx ctx(bounds);
  std::vector<bool> is_fin(n, false);
  std::vector<Rat> post_val(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (is_final(sp.configs[i])) {
      is_fin[i] = true;
      if (!sp.configs[i].abort) post_val[i] = ctx.eval(post, sp.configs[i].state);
    }
  }

  NodeActions acts = strip_labels(sp);
  auto adj = distinct_successors(acts);
  auto sccs = tarjan_sccs(adj);

  // Upper side: one-step minimum, iterated downward from 1. The liberal
  // value is the greatest fixpoint of that operator, so every iterate
  // is a sound upper bound. Final and frontier values are pinned;
  // blocked configs settle at the empty infimum 1.
  std::vector<bool> fixed_u(n, false);
  std::vector<Rat> upper(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (is_fin[i]) {
      fixed_u[i] = true;
      upper[i] = post_val[i];
    } else if (sp.frontier[i]) {
      fixed_u[i] = true;
    }
  }
  auto [u_stat, u_sweeps] = solve_sweeps(acts, sccs, fixed_u, upper, false, 1, n_max);
  (void)u_stat;

  // Lower side: bound the maximal expected loss from above; 1 - loss
  // then climbs to the value from below. The max-loss operator has the
  // loss as its least fixpoint, so iterating downward needs the
  // spurious greater fixpoints removed first: collapse end components
  // (inside one, max-loss is constant, and only leaving actions
  // matter), then pin loss 0 where no losing final is reachable. On the
  // quotient the fixpoint is unique and downward iterates stay above
  // it.
  std::vector<bool> eligible(n, false);
  for (std::size_t i = 0; i < n; ++i) eligible[i] = !is_fin[i] && !sp.frontier[i];
  auto mecs = find_mecs(acts, eligible);
  std::vector<std::size_t> qid(n);
  std::size_t qn = 0;
  {
    std::vector<bool> in_mec(n, false);
    for (const auto& mec : mecs) {
      for (std::size_t i : mec) in_mec[i] = true;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_mec[i]) qid[i] = qn++;
    }
    for (const auto& mec : mecs) {
      for (std::size_t i : mec) qid[i] = qn;
      ++qn;
    }
  }
  NodeActions q_acts(qn);
  for (std::size_t i = 0; i < n; ++i) {
    for (const Dist& d : acts[i]) {
      bool internal = true;
      std::map<std::size_t, Rat> merged;
      for (const auto& [j, p] : d) {
        if (qid[j] != qid[i]) internal = false;
        merged[qid[j]] += p;
      }
      if (internal) continue;  // staying forever never increases the loss
      q_acts[qid[i]].push_back(Dist(merged.begin(), merged.end()));
    }
  }
  std::vector<bool> fixed_l(qn, false);
  std::vector<Rat> loss(qn, 1);
  std::deque<std::size_t> losing;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_fin[i]) {
      fixed_l[qid[i]] = true;
      loss[qid[i]] = sp.configs[i].abort ? Rat(1) : 1 - post_val[i];
      if (loss[qid[i]] > 0) losing.push_back(qid[i]);
    } else if (sp.frontier[i]) {
      fixed_l[qid[i]] = true;
      loss[qid[i]] = 1;
      losing.push_back(qid[i]);
    }
  }
  std::vector<std::vector<std::size_t>> q_preds(qn);
  for (std::size_t q = 0; q < qn; ++q) {
    for (const Dist& d : q_acts[q]) {
      for (const auto& [r, p] : d) q_preds[r].push_back(q);
    }
  }
  std::vector<bool> can_lose(qn, false);
  for (std::size_t q : losing) can_lose[q] = true;
  while (!losing.empty()) {
    std::size_t r = losing.front();
    losing.pop_front();
    for (std::size_t q : q_preds[r]) {
      if (!can_lose[q]) {
        can_lose[q] = true;
        losing.push_back(q);
      }
    }
  }
  for (std::size_t q = 0; q < qn; ++q) {
    if (!fixed_l[q] && !can_lose[q]) {
      fixed_l[q] = true;
      loss[q] = 0;
    }
  }
  auto q_sccs = tarjan_sccs(distinct_successors(q_acts));
  auto [l_stat, l_sweeps] = solve_sweeps(q_acts, q_sccs, fixed_l, loss, true, 0, n_max);
  (void)l_stat;

  std::vector<Bracket> out;
  out.reserve(inits.size());
  for (const ProgState& st : inits) {
    std::size_t i = sp.index.at(Config::running(c, st));
    Bracket b;
    b.lower = 1 - loss[qid[i]];
    b.upper = upper[i];
    b.exact = b.lower == b.upper;
    b.converged = b.upper - b.lower <= eps;
    b.truncated = sp.truncated;
    b.iterations = std::max(u_sweeps, l_sweeps);
    out.push_back(std::move(b));
  }
  return out;
}

Bracket wlp_bracket(CId c, EId post, const ProgState& st0, const DomainBounds& bounds,
                    const Rat& eps, std::size_t n_max, std::size_t step_cap,
                    std::size_t node_cap) {
  return wlp_bracket_multi(c, post, {st0}, bounds, eps, n_max, step_cap, node_cap)[0];
}

// ---------------------------------------------------------------------
// Almost-sure termination

AstResult check_ast(CId c, const std::vector<ProgState>& inits, const DomainBounds& bounds,
                    std::size_t step_cap, std::size_t node_cap) {
  std::vector<Config> seeds;
  seeds.reserve(inits.size());
  for (const ProgState& st : inits) seeds.push_back(Config::running(c, st));
  StateSpace sp = build_state_space(seeds, bounds, step_cap, node_cap);
  const std::size_t n = sp.configs.size();

  // Greatest fixpoint of "some action keeps all probability mass inside
  // the set": the set of configs from which a scheduler confines the
  // run in non-final configs forever. Blocked and frontier configs stay
  // unconditionally (the latter conservatively, pending larger caps).
  std::vector<bool> in_b(n);
  for (std::size_t i = 0; i < n; ++i) in_b[i] = !is_final(sp.configs[i]);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_b[i] || sp.frontier[i] || sp.actions[i].empty()) continue;
      bool keep = false;
      for (const auto& [label, dist] : sp.actions[i]) {
        bool all_in = true;
        for (const auto& [j, p] : dist) {
          if (!in_b[j]) {
            all_in = false;
            break;
          }
        }
        if (all_in) {
          keep = true;
          break;
        }
      }
      if (!keep) {
        in_b[i] = false;
        changed = true;
      }
    }
  }

  AstResult res;
  res.truncated = sp.truncated;
  res.ast = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (in_b[i]) {
      res.ast = false;
      res.witness = sp.configs[i];
      break;
    }
  }
  return res;
}

AstResult check_ast(CId c, const DomainBounds& bounds, std::size_t step_cap,
                    std::size_t node_cap) {
  std::vector<ProgState> inits;
  for (const Stack& s : enumerate_stacks(bounds)) {
    for (const Heap& h : enumerate_heaps(bounds)) inits.push_back({s, h});
  }
  return check_ast(c, inits, bounds, step_cap, node_cap);
}

// ---------------------------------------------------------------------
// Policy-induced chain value

Rat scheduler_value(CId c, EId post, const ProgState& st0, const DomainBounds& bounds,
                    const SchedulerPolicy& policy, std::size_t node_cap) {
  EvalCtx ctx(bounds);
  std::vector<Config> configs{Config::running(c, st0)};
  std::map<Config, std::size_t> index{{configs[0], 0}};
  std::vector<std::vector<std::pair<std::size_t, Rat>>> succ;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    succ.emplace_back();
    if (is_final(configs[i])) continue;
    auto steps = step_all(configs[i], bounds);
    if (steps.empty()) continue;  // stuck: full liberal credit below
    std::vector<std::string> labels;
    labels.reserve(steps.size());
    for (const auto& [label, dist] : steps) labels.push_back(label);
    std::size_t pick = policy(configs[i], labels);
    if (pick >= steps.size()) {
      throw EvalError("policy selected an action that is not enabled");
    }
    for (const auto& [cfg, p] : steps[pick].second) {
      auto [it, fresh] = index.try_emplace(cfg, configs.size());
      if (fresh) {
        configs.push_back(cfg);
        if (configs.size() > node_cap) throw StateSpaceError(configs.size());
      }
      succ[i].push_back({it->second, p});
    }
  }

  const std::size_t n = configs.size();
  std::vector<std::vector<std::size_t>> preds(n);
  std::vector<std::size_t> final_ids;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_final(configs[i])) final_ids.push_back(i);
    for (const auto& [j, p] : succ[i]) preds[j].push_back(i);
  }
  if (is_final(configs[0])) {
    return configs[0].abort ? Rat(0) : ctx.eval(post, configs[0].state);
  }
  std::vector<bool> reaches(n, false);
  std::deque<std::size_t> queue;
  for (std::size_t f : final_ids) {
    reaches[f] = true;
    queue.push_back(f);
  }
  while (!queue.empty()) {
    std::size_t j = queue.front();
    queue.pop_front();
    for (std::size_t i : preds[j]) {
      if (!reaches[i]) {
        reaches[i] = true;
        queue.push_back(i);
      }
    }
  }
  if (!reaches[0]) return 1;  // absorption unreachable: pure divergence

  std::vector<std::size_t> transient;
  std::vector<std::size_t> col_of(n, static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i < n; ++i) {
    if (reaches[i] && !is_final(configs[i])) {
      col_of[i] = transient.size();
      transient.push_back(i);
    }
  }
  const std::size_t m = transient.size();
  const std::size_t k = final_ids.size();
  std::vector<std::size_t> fcol(n, static_cast<std::size_t>(-1));
  for (std::size_t fi = 0; fi < k; ++fi) fcol[final_ids[fi]] = fi;
  std::vector<std::vector<Rat>> A(m, std::vector<Rat>(m, 0));
  std::vector<std::vector<Rat>> B(m, std::vector<Rat>(k, 0));
  for (std::size_t r = 0; r < m; ++r) {
    A[r][r] = 1;
    for (const auto& [j, p] : succ[transient[r]]) {
      if (is_final(configs[j])) {
        B[r][fcol[j]] += p;
      } else if (col_of[j] != static_cast<std::size_t>(-1)) {
        A[r][col_of[j]] -= p;
      }
    }
  }
  if (!solve_linear(A, B)) {
    throw std::logic_error("induced chain absorption system unexpectedly singular");
  }
  Rat absorbed = 0;
  Rat value = 0;
  for (std::size_t fi = 0; fi < k; ++fi) {
    const Rat& mass = B[col_of[0]][fi];
    if (mass == 0) continue;
    absorbed += mass;
    const Config& f = configs[final_ids[fi]];
    if (!f.abort) value += mass * ctx.eval(post, f.state);
  }
  value += 1 - absorbed;  // divergence counts in full
  return value;
}

}  // namespace chp
