#include "chp/simulate.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace chp {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Exact uniform draw in [0,1) with 64-bit resolution; enough to resolve
// any probability the program text can express.
Rat uniform_rat(std::mt19937_64& rng) {
  static const Rat denom = [] {
    mpz_class two64 = 1;
    two64 <<= 64;
    return Rat(two64);
  }();
  mpz_class num = 0;
  std::uint64_t x = rng();
  num = static_cast<unsigned long>(x >> 32);
  num <<= 32;
  num += static_cast<unsigned long>(x & 0xffffffffULL);
  Rat r = Rat(num) / denom;
  r.canonicalize();
  return r;
}

const Config& sample_dist(const TransitionDist& d, std::mt19937_64& rng) {
  Rat u = uniform_rat(rng);
  Rat acc = 0;
  for (const auto& [succ, p] : d) {
    acc += p;
    if (u < acc) return succ;
  }
  return d.back().first;  // guard against the impossible (mass sums to 1)
}

bool has_prefix(const std::string& s, const std::string& pre) {
  return s.rfind(pre, 0) == 0;
}

std::size_t pick_action(const SimPolicy& policy,
                        const std::vector<std::pair<std::string, TransitionDist>>& acts,
                        std::mt19937_64& rng, std::size_t step) {
  if (acts.size() == 1) return 0;
  struct Visitor {
    const std::vector<std::pair<std::string, TransitionDist>>& acts;
    std::mt19937_64& rng;
    std::size_t step;

    std::size_t operator()(const UniformRandom&) {
      return std::uniform_int_distribution<std::size_t>(0, acts.size() - 1)(rng);
    }
    std::size_t operator()(const FixedPriority& fp) {
      std::size_t best = 0, best_rank = fp.classes.size();
      for (std::size_t i = 0; i < acts.size(); ++i) {
        std::size_t rank = fp.classes.size();
        for (std::size_t c = 0; c < fp.classes.size(); ++c) {
          if (has_prefix(acts[i].first, fp.classes[c])) {
            rank = c;
            break;
          }
        }
        if (rank < best_rank) {
          best_rank = rank;
          best = i;
        }
      }
      return best;
    }
    std::size_t operator()(const RoundRobinThreads&) {
      const std::string want = (step % 2 == 0) ? "C1," : "C2,";
      std::vector<std::size_t> cands;
      for (std::size_t i = 0; i < acts.size(); ++i) {
        if (has_prefix(acts[i].first, want)) cands.push_back(i);
      }
      if (cands.empty()) {
        cands.resize(acts.size());
        for (std::size_t i = 0; i < acts.size(); ++i) cands[i] = i;
      }
      return cands[std::uniform_int_distribution<std::size_t>(
          0, cands.size() - 1)(rng)];
    }
  };
  return std::visit(Visitor{acts, rng, step}, policy);
}

}  // namespace

RunOutcome sample_run(CId c, const ProgState& st0, const DomainBounds& bounds,
                      const SimPolicy& policy, std::uint64_t seed,
                      std::size_t step_cap) {
  std::mt19937_64 rng(splitmix64(seed));
  Config cur = Config::running(c, st0);
  RunOutcome out;
  for (std::size_t step = 0; step < step_cap; ++step) {
    if (is_final(cur)) {
      out.kind = cur.abort ? RunKind::Aborted : RunKind::Terminated;
      out.final = cur.state;
      out.steps = step;
      return out;
    }
    auto acts = step_all(cur, bounds);
    if (acts.empty()) {
      out.kind = RunKind::Cutoff;
      out.blocked = true;
      out.steps = step;
      return out;
    }
    std::size_t pick = pick_action(policy, acts, rng, step);
    cur = sample_dist(acts[pick].second, rng);
    out.steps = step + 1;
  }
  if (is_final(cur)) {
    out.kind = cur.abort ? RunKind::Aborted : RunKind::Terminated;
    out.final = cur.state;
    return out;
  }
  out.kind = RunKind::Cutoff;
  return out;
}

SimStats estimate_liberal(CId c, EId post, const ProgState& st0,
                          const DomainBounds& bounds, const SimPolicy& policy,
                          std::size_t trials, std::size_t step_cap,
                          std::uint64_t seed) {
  EvalCtx ctx(bounds);
  SimStats stats;
  stats.trials = trials;
  Rat sum = 0, sum_sq = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    std::uint64_t trial_seed = splitmix64(seed ^ splitmix64(i));
    RunOutcome run = sample_run(c, st0, bounds, policy, trial_seed, step_cap);
    Rat score;
    switch (run.kind) {
      case RunKind::Terminated:
        score = ctx.eval(post, run.final);
        break;
      case RunKind::Aborted:
        score = 0;
        ++stats.aborted;
        break;
      case RunKind::Cutoff:
        score = 1;
        ++stats.cutoff;
        if (run.blocked) ++stats.blocked;
        break;
    }
    sum += score;
    sum_sq += score * score;
  }
  if (trials > 0) {
    stats.mean = sum / Rat(static_cast<unsigned long>(trials));
    if (trials > 1) {
      Rat n(static_cast<unsigned long>(trials));
      Rat var = (sum_sq - sum * sum / n) / (n - 1);
      if (var < 0) var = 0;  // exact arithmetic keeps this at >= 0 already
      stats.stderr_est = std::sqrt(to_double(var) / static_cast<double>(trials));
    }
  }
  return stats;
}

std::string stats_tsv(const SimStats& s) {
  std::ostringstream os;
  os << "trials\tmean\tstderr\taborted%\tcutoff%\n";
  double n = s.trials > 0 ? static_cast<double>(s.trials) : 1.0;
  os << s.trials << '\t' << show_rat(s.mean) << '\t' << s.stderr_est << '\t'
     << 100.0 * static_cast<double>(s.aborted) / n << '\t'
     << 100.0 * static_cast<double>(s.cutoff) / n << '\n';
  return os.str();
}

std::optional<SimPolicy> parse_policy(const std::string& text) {
  if (text == "uniform") return SimPolicy{UniformRandom{}};
  if (text == "round-robin") return SimPolicy{RoundRobinThreads{}};
  const std::string tag = "priority:";
  if (text.rfind(tag, 0) == 0) {
    FixedPriority fp;
    std::string rest = text.substr(tag.size());
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      std::size_t semi = rest.find(';', pos);
      std::string cls = rest.substr(pos, semi == std::string::npos ? std::string::npos
                                                                   : semi - pos);
      if (!cls.empty()) fp.classes.push_back(cls);
      if (semi == std::string::npos) break;
      pos = semi + 1;
    }
    if (fp.classes.empty()) return std::nullopt;
    return SimPolicy{std::move(fp)};
  }
  return std::nullopt;
}

}  // namespace chp
