// chpv: command-line front end for parsing, evaluating, analyzing,
// proof-checking, and simulating concurrent probabilistic pointer
// programs over explicitly bounded state domains.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chp/analysis.hpp"
#include "chp/expectation.hpp"
#include "chp/proofcheck.hpp"
#include "chp/rational.hpp"
#include "chp/semantics.hpp"
#include "chp/simulate.hpp"
#include "chp/state.hpp"
#include "chp/syntax.hpp"

namespace {

using namespace chp;

// Controlled exit: 1 for semantic verdicts against the query, 2 for
// malformed inputs or exhausted exploration budgets.
struct CliError {
  int code;
  std::string msg;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError{2, "cannot open " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct BoundsOpts {
  std::string values;
  std::string locs;
  std::size_t heap_cap = 0;
};

void add_bounds_flags(CLI::App* cmd, BoundsOpts& b) {
  cmd->add_option("--values", b.values, "stack/heap value interval LO..HI")->required();
  cmd->add_option("--locs", b.locs, "comma-separated heap locations");
  cmd->add_option("--heap-cap", b.heap_cap, "maximum number of allocated cells")
      ->required();
}

Val parse_int(const std::string& tok, const std::string& what) {
  try {
    std::size_t used = 0;
    Val v = std::stol(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw CliError{2, what + ": expected an integer, got '" + tok + "'"};
  }
}

DomainBounds resolve_bounds(const BoundsOpts& b, const std::set<Sym>& vars) {
  auto dots = b.values.find("..");
  if (dots == std::string::npos) throw CliError{2, "--values expects LO..HI"};
  Val lo = parse_int(b.values.substr(0, dots), "--values");
  Val hi = parse_int(b.values.substr(dots + 2), "--values");
  std::vector<Val> locs;
  std::stringstream ls(b.locs);
  std::string tok;
  while (std::getline(ls, tok, ',')) {
    if (!tok.empty()) locs.push_back(parse_int(tok, "--locs"));
  }
  if (b.heap_cap > 0 && locs.empty()) {
    throw CliError{2, "--heap-cap is positive but no --locs were declared"};
  }
  std::vector<std::string> names;
  for (Sym s : vars) names.push_back(sym_name(s));
  return make_bounds(std::move(names), lo, hi, std::move(locs), b.heap_cap);
}

InitialState load_state(const std::string& path) {
  try {
    return parse_initial_state(read_file(path));
  } catch (const ParseError& e) {
    throw CliError{2, path + ": " + e.what()};
  }
}

ProgState realize(const InitialState& init, const DomainBounds& bounds) {
  return {make_stack(bounds, init.vars), init.heap};
}

void collect_state_vars(const InitialState& init, std::set<Sym>& vars) {
  for (const auto& [name, _] : init.vars) vars.insert(sym(name));
}

EId load_expectation(const std::string& path) {
  try {
    return parse_expectation(read_file(path));
  } catch (const ParseError& e) {
    throw CliError{2, path + ": " + e.what()};
  }
}

CId load_program(const std::string& path) {
  try {
    return parse_program(read_file(path));
  } catch (const ParseError& e) {
    throw CliError{2, path + ": " + e.what()};
  }
}

Rat parse_epsilon(const std::string& text) {
  std::optional<Rat> eps = parse_rat(text);
  if (!eps) throw CliError{2, "--epsilon: not a rational: '" + text + "'"};
  if (*eps <= 0) throw CliError{2, "--epsilon must be positive"};
  return *eps;
}

void collect_proof_vars(const ProofNode& n, std::set<Sym>& vars) {
  auto add_exp = [&vars](EId e) {
    auto fv = fv_exp(e);
    vars.insert(fv.begin(), fv.end());
  };
  add_exp(n.concl.pre);
  add_exp(n.concl.post);
  add_exp(n.concl.invariant);
  auto fc = free_vars_cmd(n.concl.cmd);
  vars.insert(fc.begin(), fc.end());
  if (n.share_pi) add_exp(*n.share_pi);
  if (n.frame_z) add_exp(*n.frame_z);
  if (n.convex_weight) add_exp(*n.convex_weight);
  for (const ProofNode& p : n.premises) collect_proof_vars(p, vars);
}

std::string bracket_status(const Bracket& b) {
  if (b.exact) return "exact";
  if (b.converged) return "converged";
  return "loose";
}

int run_parse(const std::string& prog_path) {
  CId c = load_program(prog_path);
  std::cout << pretty_cmd(c) << '\n';
  return 0;
}

int run_eval(const std::string& exp_path, const std::string& state_path,
             const BoundsOpts& bopts) {
  EId e = load_expectation(exp_path);
  InitialState init = load_state(state_path);
  std::set<Sym> vars = fv_exp(e);
  collect_state_vars(init, vars);
  DomainBounds bounds = resolve_bounds(bopts, vars);
  EvalCtx ctx(bounds);
  ctx.check_well_formed(e);
  std::cout << show_rat(ctx.eval(e, realize(init, bounds))) << '\n';
  return 0;
}

int run_wlp(const std::string& prog_path, const std::string& post_path,
            const std::vector<std::string>& state_paths, const BoundsOpts& bopts,
            const std::string& eps_text, std::size_t max_steps, std::size_t node_cap,
            const std::string& report) {
  CId c = load_program(prog_path);
  EId post = load_expectation(post_path);
  Rat eps = parse_epsilon(eps_text);

  std::set<Sym> vars = free_vars_cmd(c);
  auto fv = fv_exp(post);
  vars.insert(fv.begin(), fv.end());
  std::vector<InitialState> inits;
  for (const auto& p : state_paths) {
    inits.push_back(load_state(p));
    collect_state_vars(inits.back(), vars);
  }
  DomainBounds bounds = resolve_bounds(bopts, vars);

  std::vector<ProgState> states;
  for (const auto& init : inits) states.push_back(realize(init, bounds));
  std::vector<Bracket> brs =
      wlp_bracket_multi(c, post, states, bounds, eps, max_steps, 1u << 20, node_cap);

  bool any_truncated = false;
  for (std::size_t i = 0; i < brs.size(); ++i) {
    const Bracket& b = brs[i];
    any_truncated = any_truncated || b.truncated;
    if (report == "table") {
      std::cout << show_stack(states[i].stack) << '\t' << show_heap(states[i].heap)
                << '\t';
    }
    std::cout << show_rat(b.lower) << '\t' << show_rat(b.upper) << '\t'
              << bracket_status(b) << '\n';
  }
  if (any_truncated) {
    std::cerr << "warning: reachable space truncated at the node cap; "
                 "brackets are widened accordingly\n";
  }
  return 0;
}

int run_wrlp(const std::string& prog_path, const std::string& post_path,
             const std::string& inv_path, const std::vector<std::string>& state_paths,
             const BoundsOpts& bopts, std::size_t iters, const std::string& report) {
  CId c = load_program(prog_path);
  EId post = load_expectation(post_path);
  EId inv = inv_path.empty() ? x_iverson(p_emp()) : load_expectation(inv_path);

  std::set<Sym> vars = free_vars_cmd(c);
  for (EId e : {post, inv}) {
    auto fv = fv_exp(e);
    vars.insert(fv.begin(), fv.end());
  }
  std::vector<InitialState> inits;
  for (const auto& p : state_paths) {
    inits.push_back(load_state(p));
    collect_state_vars(inits.back(), vars);
  }
  DomainBounds bounds = resolve_bounds(bopts, vars);

  EvalCtx ctx(bounds);
  ctx.check_well_formed(post);
  if (!ctx.is_qualitative(inv)) {
    throw CliError{2, "--invariant must be 0/1-valued over the bounds"};
  }
  WslpEngine engine(post, inv, ctx);
  for (const auto& init : inits) {
    ProgState st = realize(init, bounds);
    if (report == "table") {
      std::cout << show_stack(st.stack) << '\t' << show_heap(st.heap) << '\t';
    }
    std::cout << show_rat(engine.value(iters, c, st)) << '\n';
  }
  return 0;
}

int run_check(const std::string& proof_path, const BoundsOpts& bopts) {
  ProofNode root = parse_proof_json(read_file(proof_path));
  std::set<Sym> vars;
  collect_proof_vars(root, vars);
  DomainBounds bounds = resolve_bounds(bopts, vars);

  CheckResult res = check_proof(root, bounds);
  if (!res.ok) {
    std::cout << describe_failure(*res.failure) << '\n';
    return 1;
  }
  std::cout << "certificate: " << res.certificate.entries.size() << " nodes\n";
  for (const CertEntry& e : res.certificate.entries) {
    std::cout << e.path << '\t' << rule_name(e.rule);
    for (const std::string& d : e.discharged) std::cout << "\t" << d;
    std::cout << '\n';
  }
  if (res.certificate.ast_asserted_anywhere) {
    std::cout << "note: at least one termination premise was asserted, "
                 "not verified\n";
  }
  return 0;
}

int run_simulate(const std::string& prog_path, const std::string& post_path,
                 const std::string& state_path, const BoundsOpts& bopts,
                 std::size_t trials, std::size_t max_steps, std::uint64_t seed,
                 const std::string& policy_text) {
  CId c = load_program(prog_path);
  EId post = load_expectation(post_path);
  InitialState init = load_state(state_path);

  std::set<Sym> vars = free_vars_cmd(c);
  auto fv = fv_exp(post);
  vars.insert(fv.begin(), fv.end());
  collect_state_vars(init, vars);
  DomainBounds bounds = resolve_bounds(bopts, vars);

  std::optional<SimPolicy> policy = parse_policy(policy_text);
  if (!policy) {
    throw CliError{2, "--policy must be uniform, round-robin, or priority:<prefix>;..."};
  }
  if (trials == 0) throw CliError{2, "--trials must be at least 1"};
  if (max_steps == 0) throw CliError{2, "--max-steps must be at least 1"};

  SimStats stats = estimate_liberal(c, post, realize(init, bounds), bounds, *policy,
                                    trials, max_steps, seed);
  std::cout << stats_tsv(stats);
  return 0;
}

int run_ast(const std::string& prog_path, const std::vector<std::string>& state_paths,
            const BoundsOpts& bopts, std::size_t max_steps, std::size_t node_cap) {
  CId c = load_program(prog_path);
  std::set<Sym> vars = free_vars_cmd(c);
  std::vector<InitialState> inits;
  for (const auto& p : state_paths) {
    inits.push_back(load_state(p));
    collect_state_vars(inits.back(), vars);
  }
  DomainBounds bounds = resolve_bounds(bopts, vars);

  AstResult res;
  if (inits.empty()) {
    res = check_ast(c, bounds, max_steps, node_cap);
  } else {
    std::vector<ProgState> states;
    for (const auto& init : inits) states.push_back(realize(init, bounds));
    res = check_ast(c, states, bounds, max_steps, node_cap);
  }
  if (res.truncated) {
    throw CliError{2, "exploration truncated at the node cap; verdict unavailable"};
  }
  if (res.ast) {
    std::cout << "yes\n";
    return 0;
  }
  std::cout << "no\n";
  if (res.witness) {
    std::cout << "witness: " << show_config(*res.witness) << '\n';
  }
  return 1;
}

int run_emit_mdp(const std::string& prog_path, const std::string& state_path,
                 const BoundsOpts& bopts, std::size_t max_steps, std::size_t node_cap) {
  CId c = load_program(prog_path);
  InitialState init = load_state(state_path);
  std::set<Sym> vars = free_vars_cmd(c);
  collect_state_vars(init, vars);
  DomainBounds bounds = resolve_bounds(bopts, vars);

  StateSpace sp = build_state_space(c, realize(init, bounds), bounds, max_steps, node_cap);
  std::cout << dump_mdp(sp) << '\n' << dump_config_table(sp);
  if (sp.truncated) {
    std::cerr << "warning: exploration truncated at the node cap; "
                 "the dump covers only the explored fragment\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "chpv: analysis toolkit for concurrent probabilistic pointer programs "
      "over bounded domains"};
  app.require_subcommand(1);

  std::string prog_path, exp_path, post_path, inv_path, state_path, proof_path;
  std::vector<std::string> state_paths;
  BoundsOpts bounds;
  std::string eps_text = "1/1000000";
  std::string policy_text = "uniform";
  std::string report = "plain";
  std::size_t max_steps = 0, node_cap = 4000000, iters = 0, trials = 10000;
  std::uint64_t seed = 0;

  CLI::App* parse_cmd = app.add_subcommand("parse", "parse a program and echo its tree");
  parse_cmd->add_option("program", prog_path, "program file")->required();

  CLI::App* eval_cmd =
      app.add_subcommand("eval", "evaluate an expectation at one state");
  eval_cmd->add_option("--exp", exp_path, "expectation file")->required();
  eval_cmd->add_option("--state", state_path, "initial-state file")->required();
  add_bounds_flags(eval_cmd, bounds);

  CLI::App* wlp_cmd = app.add_subcommand(
      "wlp", "two-sided enclosure of the scheduler-infimum liberal preexpectation");
  wlp_cmd->add_option("program", prog_path, "program file")->required();
  wlp_cmd->add_option("--post", post_path, "postexpectation file")->required();
  wlp_cmd->add_option("--state", state_paths, "initial-state file (repeatable)")
      ->required();
  add_bounds_flags(wlp_cmd, bounds);
  wlp_cmd->add_option("--epsilon", eps_text, "target bracket width (rational)");
  max_steps = 100000;
  wlp_cmd->add_option("--max-steps", max_steps, "iteration cap for the enclosure");
  wlp_cmd->add_option("--node-cap", node_cap, "explored-config cap");
  wlp_cmd->add_option("--report", report, "plain | table (prepend stack and heap)");

  CLI::App* wrlp_cmd = app.add_subcommand(
      "wrlp", "n-step invariant-threaded liberal preexpectation (upper bound)");
  wrlp_cmd->add_option("program", prog_path, "program file")->required();
  wrlp_cmd->add_option("--post", post_path, "postexpectation file")->required();
  wrlp_cmd->add_option("--invariant", inv_path,
                       "resource-invariant file (default: empty-heap bracket)");
  wrlp_cmd->add_option("--state", state_paths, "initial-state file (repeatable)")
      ->required();
  wrlp_cmd->add_option("--iters", iters, "number of step iterations")->required();
  add_bounds_flags(wrlp_cmd, bounds);
  wrlp_cmd->add_option("--report", report, "plain | table (prepend stack and heap)");

  CLI::App* check_cmd =
      app.add_subcommand("check", "check a proof script and emit its certificate");
  check_cmd->add_option("proof", proof_path, "proof script (JSON)")->required();
  add_bounds_flags(check_cmd, bounds);

  CLI::App* sim_cmd =
      app.add_subcommand("simulate", "Monte Carlo estimate of the liberal value");
  sim_cmd->add_option("program", prog_path, "program file")->required();
  sim_cmd->add_option("--post", post_path, "postexpectation file")->required();
  sim_cmd->add_option("--state", state_path, "initial-state file")->required();
  add_bounds_flags(sim_cmd, bounds);
  sim_cmd->add_option("--trials", trials, "number of independent runs");
  sim_cmd->add_option("--seed", seed, "base seed for the per-trial streams");
  sim_cmd->add_option("--policy", policy_text,
                      "uniform | round-robin | priority:<prefix>;<prefix>;...");
  std::size_t sim_steps = 10000;
  sim_cmd->add_option("--max-steps", sim_steps, "per-run step cap");

  CLI::App* ast_cmd = app.add_subcommand(
      "ast", "decide almost-sure termination under every scheduler");
  ast_cmd->add_option("program", prog_path, "program file")->required();
  ast_cmd->add_option("--state", state_paths,
                      "initial-state file (repeatable; default: whole universe)");
  add_bounds_flags(ast_cmd, bounds);
  std::size_t ast_steps = 1u << 20;
  ast_cmd->add_option("--max-steps", ast_steps, "exploration step cap");
  ast_cmd->add_option("--node-cap", node_cap, "explored-config cap");

  CLI::App* mdp_cmd = app.add_subcommand(
      "emit-mdp", "dump the reachable transition system and its config table");
  mdp_cmd->add_option("program", prog_path, "program file")->required();
  mdp_cmd->add_option("--state", state_path, "initial-state file")->required();
  add_bounds_flags(mdp_cmd, bounds);
  std::size_t mdp_steps = 1u << 20;
  mdp_cmd->add_option("--max-steps", mdp_steps, "exploration step cap");
  mdp_cmd->add_option("--node-cap", node_cap, "explored-config cap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (parse_cmd->parsed()) return run_parse(prog_path);
    if (eval_cmd->parsed()) return run_eval(exp_path, state_path, bounds);
    if (wlp_cmd->parsed()) {
      return run_wlp(prog_path, post_path, state_paths, bounds, eps_text, max_steps,
                     node_cap, report);
    }
    if (wrlp_cmd->parsed()) {
      return run_wrlp(prog_path, post_path, inv_path, state_paths, bounds, iters,
                      report);
    }
    if (check_cmd->parsed()) return run_check(proof_path, bounds);
    if (sim_cmd->parsed()) {
      return run_simulate(prog_path, post_path, state_path, bounds, trials, sim_steps,
                          seed, policy_text);
    }
    if (ast_cmd->parsed()) {
      return run_ast(prog_path, state_paths, bounds, ast_steps, node_cap);
    }
    if (mdp_cmd->parsed()) {
      return run_emit_mdp(prog_path, state_path, bounds, mdp_steps, node_cap);
    }
  } catch (const CliError& e) {
    std::cerr << "error: " << e.msg << '\n';
    return e.code;
  } catch (const ParseError& e) {
    std::cerr << "parse error at line " << e.line << ", col " << e.col << ": "
              << e.what() << '\n';
    return 2;
  } catch (const ProofSchemaError& e) {
    std::cerr << "proof schema error: " << e.what() << '\n';
    return 2;
  } catch (const StateSpaceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const EvalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
