#include "chp/semantics.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include "chp/linsolve.hpp"

namespace chp {

bool is_final(const Config& c) {
  return c.abort || cmd(c.cmd).kind == CKind::Terminated;
}

namespace {

using Steps = std::vector<std::pair<std::string, TransitionDist>>;

TransitionDist checked(TransitionDist d) {
  Rat sum = 0;
  for (const auto& [cfg, p] : d) sum += p;
  if (sum != 1) throw std::logic_error("transition distribution does not sum to 1");
  return d;
}

Steps step_cmd(CId id, const ProgState& st, const DomainBounds& b) {
  const Command& n = cmd(id);
  const Stack& s = st.stack;
  const Heap& h = st.heap;
  Steps out;
  auto one = [&](std::string label, Config succ) {
    out.push_back({std::move(label), checked({{std::move(succ), 1}})});
  };
  switch (n.kind) {
    case CKind::Terminated:
      break;
    case CKind::Diverge:
      one("div", Config::running(id, st));
      break;
    case CKind::Assign:
      one("assign", Config::running(c_term(), {s.with(n.var, eval_arith(n.e1, s)), h}));
      break;
    case CKind::Lookup: {
      if (auto v = h.get(eval_arith(n.e1, s))) {
        one("lookup", Config::running(c_term(), {s.with(n.var, *v), h}));
      } else {
        one("lookup-abt", Config::make_abort());
      }
      break;
    }
    case CKind::Mutate: {
      Val loc = eval_arith(n.e1, s);
      if (h.contains(loc)) {
        one("mutation", Config::running(c_term(), {s, h.with(loc, eval_arith(n.e2, s))}));
      } else {
        one("mutation-abt", Config::make_abort());
      }
      break;
    }
    case CKind::Free: {
      Val loc = eval_arith(n.e1, s);
      if (h.contains(loc)) {
        one("free", Config::running(c_term(), {s, h.without(loc)}));
      } else {
        one("free-abt", Config::make_abort());
      }
      break;
    }
    case CKind::Alloc: {
      // One action per contiguous block of free locations inside the
      // bounded location set; blocked if none fits.
      std::vector<Val> vals;
      vals.reserve(n.inits.size());
      for (AId e : n.inits) vals.push_back(eval_arith(e, s));
      for (Val base : b.locations) {
        bool ok = true;
        for (std::size_t i = 0; ok && i < vals.size(); ++i) {
          Val loc = base + static_cast<Val>(i);
          ok = b.is_location(loc) && !h.contains(loc);
        }
        if (!ok) continue;
        Heap h2 = h;
        for (std::size_t i = 0; i < vals.size(); ++i) {
          h2 = h2.with(base + static_cast<Val>(i), vals[i]);
        }
        one("alloc-" + std::to_string(base),
            Config::running(c_term(), {s.with(n.var, base), h2}));
      }
      break;
    }
    case CKind::ProbChoice: {
      TransitionDist d;
      if (n.c1 == n.c2) {
        d.push_back({Config::running(n.c1, st), 1});
      } else {
        if (n.prob > 0) d.push_back({Config::running(n.c1, st), n.prob});
        if (n.prob < 1) d.push_back({Config::running(n.c2, st), 1 - n.prob});
      }
      out.push_back({"prob", checked(std::move(d))});
      break;
    }
    case CKind::Seq: {
      // Construction normalizes a terminated first component away, but
      // stay total: such a sequence acts exactly as its continuation.
      if (cmd(n.c1).kind == CKind::Terminated) {
        out = step_cmd(n.c2, st, b);
        break;
      }
      for (auto& [label, dist] : step_cmd(n.c1, st, b)) {
        TransitionDist lifted;
        lifted.reserve(dist.size());
        for (auto& [succ, p] : dist) {
          if (succ.abort) {
            lifted.push_back({succ, p});
          } else {
            lifted.push_back({Config::running(c_seq(succ.cmd, n.c2), succ.state), p});
          }
        }
        out.push_back({std::move(label), checked(std::move(lifted))});
      }
      break;
    }
    case CKind::Atomic: {
      if (!is_tame(n.c1)) break;  // blocked; the lint warns at load time
      AtomicOutcome oc = atomic_outcome(n.c1, st, b);
      TransitionDist d = std::move(oc.finals);
      if (oc.p_div > 0) d.push_back({Config::running(c_diverge(), st), oc.p_div});
      out.push_back({"atomic", checked(std::move(d))});
      break;
    }
    case CKind::If:
      if (eval_guard(n.guard, s)) {
        one("if-t", Config::running(n.c1, st));
      } else {
        one("if-f", Config::running(n.c2, st));
      }
      break;
    case CKind::While:
      if (eval_guard(n.guard, s)) {
        one("loop-t", Config::running(c_seq(n.c1, id), st));
      } else {
        one("loop-f", Config::running(c_term(), st));
      }
      break;
    case CKind::Concurrent: {
      if (cmd(n.c1).kind == CKind::Terminated && cmd(n.c2).kind == CKind::Terminated) {
        one("con-end", Config::running(c_term(), st));
        break;
      }
      auto lift = [&](const char* prefix, CId active, bool left) {
        for (auto& [label, dist] : step_cmd(active, st, b)) {
          TransitionDist lifted;
          lifted.reserve(dist.size());
          for (auto& [succ, p] : dist) {
            if (succ.abort) {
              lifted.push_back({succ, p});
            } else {
              CId next = left ? c_par(succ.cmd, n.c2) : c_par(n.c1, succ.cmd);
              lifted.push_back({Config::running(next, succ.state), p});
            }
          }
          out.push_back({prefix + label, checked(std::move(lifted))});
        }
      };
      lift("C1,", n.c1, true);
      lift("C2,", n.c2, false);
      break;
    }
  }
  return out;
}

}  // namespace

Steps step_all(const Config& c, const DomainBounds& bounds) {
  if (c.abort) return {};
  return step_cmd(c.cmd, c.state, bounds);
}

std::vector<std::string> enabled_actions(const Config& c, const DomainBounds& bounds) {
  std::vector<std::string> out;
  for (auto& [label, dist] : step_all(c, bounds)) out.push_back(label);
  return out;
}

TransitionDist transition(const Config& c, const std::string& action,
                          const DomainBounds& bounds) {
  for (auto& [label, dist] : step_all(c, bounds)) {
    if (label == action) return dist;
  }
  throw EvalError("action '" + action + "' not enabled");
}

AtomicOutcome atomic_outcome(CId c, const ProgState& st, const DomainBounds& bounds) {
  if (!is_tame(c)) throw EvalError("atomic region is not tame: " + pretty_cmd(c));
  constexpr std::size_t kChainCap = 200000;

  // The tame chain has at most one action per config; materialize it.
  std::vector<Config> configs{Config::running(c, st)};
  std::map<Config, std::size_t> index{{configs[0], 0}};
  std::vector<std::vector<std::pair<std::size_t, Rat>>> succ;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    succ.emplace_back();
    if (is_final(configs[i])) continue;
    Steps steps = step_all(configs[i], bounds);
    if (steps.size() > 1) {
      throw std::logic_error("tame region offered a scheduling choice");
    }
    if (steps.empty()) continue;  // stuck; mass counts as divergence
    for (auto& [cfg, p] : steps[0].second) {
      auto [it, fresh] = index.try_emplace(cfg, configs.size());
      if (fresh) {
        configs.push_back(cfg);
        if (configs.size() > kChainCap) {
          throw EvalError("atomic region reaches more than " +
                          std::to_string(kChainCap) + " configurations");
        }
      }
      succ[i].push_back({it->second, p});
    }
  }

  // Restrict to states that can reach absorption; everything else only
  // contributes to the divergence mass and would make I - Q singular.
  std::size_t n = configs.size();
  std::vector<std::vector<std::size_t>> preds(n);
  std::vector<std::size_t> final_ids;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_final(configs[i])) final_ids.push_back(i);
    for (auto& [j, p] : succ[i]) preds[j].push_back(i);
  }
  std::vector<bool> reaches(n, false);
  std::deque<std::size_t> queue(final_ids.begin(), final_ids.end());
  for (std::size_t f : final_ids) reaches[f] = true;
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

  AtomicOutcome out;
  out.p_div = 0;
  if (is_final(configs[0])) {
    out.finals.push_back({configs[0], 1});
    return out;
  }
  if (!reaches[0]) {
    out.p_div = 1;
    return out;
  }

  std::vector<std::size_t> transient;  // non-final states that reach absorption
  std::vector<std::size_t> col_of(n, static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i < n; ++i) {
    if (reaches[i] && !is_final(configs[i])) {
      col_of[i] = transient.size();
      transient.push_back(i);
    }
  }
  std::size_t m = transient.size();
  std::size_t k = final_ids.size();
  std::vector<std::size_t> fcol(n, static_cast<std::size_t>(-1));
  for (std::size_t fi = 0; fi < k; ++fi) fcol[final_ids[fi]] = fi;

  std::vector<std::vector<Rat>> A(m, std::vector<Rat>(m, 0));
  std::vector<std::vector<Rat>> B(m, std::vector<Rat>(k, 0));
  for (std::size_t r = 0; r < m; ++r) {
    A[r][r] = 1;
    for (auto& [j, p] : succ[transient[r]]) {
      if (is_final(configs[j])) {
        B[r][fcol[j]] += p;
      } else if (col_of[j] != static_cast<std::size_t>(-1)) {
        A[r][col_of[j]] -= p;
      }
      // Successors that cannot reach absorption are dropped; their
      // mass surfaces as p_div below.
    }
  }
  if (!solve_linear(A, B)) {
    throw std::logic_error("absorption system unexpectedly singular");
  }
  Rat total = 0;
  for (std::size_t fi = 0; fi < k; ++fi) {
    Rat mass = B[col_of[0]][fi];
    if (mass > 0) {
      out.finals.push_back({configs[final_ids[fi]], mass});
      total += mass;
    }
  }
  out.p_div = 1 - total;
  return out;
}

StateSpace build_state_space(const std::vector<Config>& seeds, const DomainBounds& bounds,
                             std::size_t step_cap, std::size_t node_cap) {
  StateSpace sp;
  std::vector<std::size_t> depth;
  for (const Config& seed : seeds) {
    if (sp.index.try_emplace(seed, sp.configs.size()).second) {
      sp.configs.push_back(seed);
      depth.push_back(0);
    }
  }
  for (std::size_t i = 0; i < sp.configs.size(); ++i) {
    sp.actions.emplace_back();
    sp.frontier.push_back(false);
    if (is_final(sp.configs[i])) continue;
    if (depth[i] >= step_cap) {
      sp.frontier[i] = true;
      sp.truncated = true;
      continue;
    }
    for (auto& [label, dist] : step_all(sp.configs[i], bounds)) {
      std::vector<std::pair<std::size_t, Rat>> row;
      row.reserve(dist.size());
      for (auto& [cfg, p] : dist) {
        auto [it, fresh] = sp.index.try_emplace(cfg, sp.configs.size());
        if (fresh) {
          sp.configs.push_back(cfg);
          depth.push_back(depth[i] + 1);
          if (sp.configs.size() > node_cap) throw StateSpaceError(sp.configs.size());
        }
        row.push_back({it->second, p});
      }
      sp.actions[i].push_back({label, std::move(row)});
    }
  }
  return sp;
}

StateSpace build_state_space(CId c0, const ProgState& st0, const DomainBounds& bounds,
                             std::size_t step_cap, std::size_t node_cap) {
  return build_state_space({Config::running(c0, st0)}, bounds, step_cap, node_cap);
}

std::string dump_mdp(const StateSpace& sp) {
  std::ostringstream out;
  for (std::size_t i = 0; i < sp.configs.size(); ++i) {
    for (const auto& [label, dist] : sp.actions[i]) {
      for (const auto& [j, p] : dist) {
        out << i << " " << label << " " << show_rat(p) << " " << j << "\n";
      }
    }
  }
  return out.str();
}

std::string show_config(const Config& c) {
  if (c.abort) return "abort";
  return "<" + pretty_cmd(c.cmd) + " | " + show_stack(c.state.stack) + " | " +
         show_heap(c.state.heap) + ">";
}

std::string dump_config_table(const StateSpace& sp) {
  std::ostringstream out;
  for (std::size_t i = 0; i < sp.configs.size(); ++i) {
    out << i << "\t";
    if (is_final(sp.configs[i])) {
      out << "final";
    } else if (sp.frontier[i]) {
      out << "frontier";
    } else if (sp.actions[i].empty()) {
      out << "blocked";
    } else {
      out << "-";
    }
    out << "\t" << show_config(sp.configs[i]) << "\n";
  }
  return out.str();
}

}  // namespace chp
