#include "chp/proofcheck.hpp"

#include <algorithm>
#include <functional>
#include <sstream>
#include <utility>

#include "json.hpp"

#include "chp/analysis.hpp"

namespace chp {

namespace {

struct RuleInfo {
  Rule rule;
  const char* name;
  std::size_t arity;
};

constexpr RuleInfo kRules[] = {
    {Rule::Term, "term", 0},         {Rule::Assign, "assign", 0},
    {Rule::Look, "look", 0},         {Rule::Alloc, "alloc", 0},
    {Rule::Mut, "mut", 0},           {Rule::Disp, "disp", 0},
    {Rule::Seq, "seq", 2},           {Rule::If, "if", 2},
    {Rule::While, "while", 1},       {Rule::Div, "div", 0},
    {Rule::PChoice, "p-choice", 2},  {Rule::Atomic, "atomic", 1},
    {Rule::Share, "share", 1},       {Rule::Concur, "concur", 2},
    {Rule::Superlin, "superlin", 2}, {Rule::WlpWrlp, "wlp-wrlp", 1},
    {Rule::Frame, "frame", 1},       {Rule::Atom, "atom", 1},
    {Rule::Monotonic, "monotonic", 1}, {Rule::Max, "max", 2},
    {Rule::Min, "min", 2},           {Rule::Convex, "convex", 2},
};

const RuleInfo& info(Rule r) {
  for (const RuleInfo& ri : kRules) {
    if (ri.rule == r) return ri;
  }
  return kRules[0];  // unreachable for valid enum values
}

EId emp_exp() { return x_iverson(p_emp()); }

Sym fresh_var(const std::set<Sym>& avoid) {
  for (int i = 0;; ++i) {
    Sym s = sym(i == 0 ? std::string("_v") : "_v" + std::to_string(i));
    if (!avoid.count(s)) return s;
  }
}

}  // namespace

const char* rule_name(Rule r) { return info(r).name; }

std::optional<Rule> rule_from_name(const std::string& name) {
  for (const RuleInfo& ri : kRules) {
    if (name == ri.name) return ri.rule;
  }
  return std::nullopt;
}

const char* fail_kind_name(FailKind k) {
  switch (k) {
    case FailKind::EntailmentFails: return "EntailmentFails";
    case FailKind::SideConditionFails: return "SideConditionFails";
    case FailKind::NonQualitativeInvariant: return "NonQualitativeInvariant";
    case FailKind::NonPreciseInvariant: return "NonPreciseInvariant";
    case FailKind::NotTame: return "NotTame";
    case FailKind::NotTerminatingAtom: return "NotTerminatingAtom";
    case FailKind::ASTUnverified: return "ASTUnverified";
  }
  return "?";
}

namespace {

class Checker {
 public:
  explicit Checker(const DomainBounds& bounds) : ctx_(bounds) {}

  CheckResult run(const ProofNode& root) {
    CheckResult out;
    out.ok = node(root, "root");
    out.certificate = std::move(cert_);
    out.failure = std::move(fail_);
    return out;
  }

 private:
  EvalCtx ctx_;
  Certificate cert_;
  std::optional<CheckFailure> fail_;
  std::set<EId> qual_ok_;
  std::set<EId> precise_ok_;

  bool fail(const std::string& path, Rule r, FailKind k, std::string detail,
            std::optional<Counterexample> w = std::nullopt,
            std::optional<EId> lhs = std::nullopt,
            std::optional<EId> rhs = std::nullopt) {
    if (!fail_) {
      fail_ = CheckFailure{path, r, k, std::move(detail), std::move(w), lhs, rhs};
    }
    return false;
  }

  void note(std::size_t idx, std::string what) {
    cert_.entries[idx].discharged.push_back(std::move(what));
  }

  bool require_entails(std::size_t idx, const std::string& path, Rule r, EId lhs,
                       EId rhs, const std::string& what) {
    if (lhs != rhs) {
      Counterexample cex;
      if (!ctx_.entails(lhs, rhs, &cex)) {
        return fail(path, r, FailKind::EntailmentFails, what, cex, lhs, rhs);
      }
    }
    note(idx, what);
    return true;
  }

  bool require_equiv(std::size_t idx, const std::string& path, Rule r, EId a,
                     EId b, const std::string& what) {
    if (a != b) {
      Counterexample cex;
      if (!ctx_.entails(a, b, &cex)) {
        return fail(path, r, FailKind::EntailmentFails,
                    what + " (left side exceeds right side)", cex, a, b);
      }
      if (!ctx_.entails(b, a, &cex)) {
        return fail(path, r, FailKind::EntailmentFails,
                    what + " (right side exceeds left side)", cex, b, a);
      }
    }
    note(idx, what);
    return true;
  }

  bool require_qualitative(std::size_t idx, const std::string& path, Rule r,
                           EId e, const std::string& what) {
    if (!qual_ok_.count(e)) {
      if (!ctx_.is_qualitative(e)) {
        return fail(path, r, FailKind::NonQualitativeInvariant,
                    what + ": " + pretty_exp(e));
      }
      qual_ok_.insert(e);
    }
    note(idx, what);
    return true;
  }

  bool require_precise(std::size_t idx, const std::string& path, Rule r, EId e) {
    if (!precise_ok_.count(e)) {
      if (!ctx_.is_precise(e)) {
        return fail(path, r, FailKind::NonPreciseInvariant,
                    "resource invariant is not precise: " + pretty_exp(e));
      }
      precise_ok_.insert(e);
    }
    note(idx, "resource invariant is precise");
    return true;
  }

  bool require_cmd_kind(const std::string& path, Rule r, CId c, CKind want,
                        const char* desc) {
    if (cmd(c).kind != want) {
      return fail(path, r, FailKind::SideConditionFails,
                  std::string("rule applies only to ") + desc + ", got: " +
                      pretty_cmd(c));
    }
    return true;
  }

  bool require_same_cmd(const std::string& path, Rule r, CId got, CId want,
                        const char* which) {
    if (got != want) {
      return fail(path, r, FailKind::SideConditionFails,
                  std::string(which) + " proves \"" + pretty_cmd(got) +
                      "\" but the rule needs \"" + pretty_cmd(want) + "\"");
    }
    return true;
  }

  bool require_disjoint(const std::string& path, Rule r,
                        const std::set<Sym>& written,
                        const std::set<Sym>& read, const std::string& what) {
    for (Sym s : written) {
      if (read.count(s)) {
        return fail(path, r, FailKind::SideConditionFails,
                    what + " share variable '" + sym_name(s) + "'");
      }
    }
    return true;
  }

  // Pointwise exact-equality check used by superlin and convex, whose
  // combined right sides are not expectations themselves (they may
  // exceed 1 or mix in state-dependent weights).
  bool require_combination(std::size_t idx, const std::string& path, Rule r,
                           EId lhs, const std::vector<EId>& parts,
                           const std::function<Rat(const Stack&, const Heap&)>& rhs_of,
                           const std::string& what) {
    std::vector<EId> all = parts;
    all.push_back(lhs);
    for (const Stack& s : ctx_.stacks_for(all)) {
      for (const Heap& h : ctx_.universe()) {
        Rat lv = ctx_.eval(lhs, s, h);
        Rat rv = rhs_of(s, h);
        if (lv != rv) {
          return fail(path, r, FailKind::EntailmentFails, what,
                      Counterexample{s, h, lv, rv}, lhs, std::nullopt);
        }
      }
    }
    note(idx, what);
    return true;
  }

  bool node(const ProofNode& n, const std::string& path) {
    std::size_t idx = cert_.entries.size();
    cert_.entries.push_back(CertEntry{path, n.rule, {}});
    const Judgement& j = n.concl;
    const Rule r = n.rule;

    if (!require_qualitative(idx, path, r, j.invariant,
                             "resource invariant is qualitative")) {
      return false;
    }
    if (n.premises.size() != info(r).arity) {
      std::ostringstream os;
      os << "rule '" << info(r).name << "' takes " << info(r).arity
         << " premise(s), got " << n.premises.size();
      return fail(path, r, FailKind::SideConditionFails, os.str());
    }

    // Structural shape of the conclusion command, before recursing.
    const Command& c = cmd(j.cmd);
    switch (r) {
      case Rule::Term:
        if (!require_cmd_kind(path, r, j.cmd, CKind::Terminated, "skip")) return false;
        break;
      case Rule::Assign:
        if (!require_cmd_kind(path, r, j.cmd, CKind::Assign, "an assignment")) return false;
        break;
      case Rule::Look:
        if (!require_cmd_kind(path, r, j.cmd, CKind::Lookup, "a cell read")) return false;
        break;
      case Rule::Alloc:
        if (!require_cmd_kind(path, r, j.cmd, CKind::Alloc, "an allocation")) return false;
        break;
      case Rule::Mut:
        if (!require_cmd_kind(path, r, j.cmd, CKind::Mutate, "a cell write")) return false;
        break;
      case Rule::Disp:
        if (!require_cmd_kind(path, r, j.cmd, CKind::Free, "a deallocation")) return false;
        break;
      case Rule::Div:
        if (!require_cmd_kind(path, r, j.cmd, CKind::Diverge, "diverge")) return false;
        break;
      case Rule::Seq:
        if (!require_cmd_kind(path, r, j.cmd, CKind::Seq, "a sequence")) return false;
        break;
      case Rule::If:
        if (!require_cmd_kind(path, r, j.cmd, CKind::If, "a conditional")) return false;
        break;
      case Rule::While:
        if (!require_cmd_kind(path, r, j.cmd, CKind::While, "a loop")) return false;
        break;
      case Rule::PChoice:
        if (!require_cmd_kind(path, r, j.cmd, CKind::ProbChoice, "a probabilistic choice")) return false;
        break;
      case Rule::Atomic:
        if (!require_cmd_kind(path, r, j.cmd, CKind::Atomic, "an atomic block")) return false;
        break;
      case Rule::Concur:
        if (!require_cmd_kind(path, r, j.cmd, CKind::Concurrent, "a parallel composition")) return false;
        break;
      default:
        break;  // remaining rules accept any command
    }

    // Payload presence.
    if (r == Rule::Share && !n.share_pi) {
      return fail(path, r, FailKind::SideConditionFails,
                  "share needs the transferred invariant part as payload");
    }
    if (r == Rule::Frame && !n.frame_z) {
      return fail(path, r, FailKind::SideConditionFails,
                  "frame needs the framed expectation as payload");
    }
    if (r == Rule::Convex && !n.convex_weight) {
      return fail(path, r, FailKind::SideConditionFails,
                  "convex needs the weight expectation as payload");
    }
    if (r == Rule::Superlin) {
      if (!n.superlin_a) {
        return fail(path, r, FailKind::SideConditionFails,
                    "superlin needs the nonnegative scale as payload");
      }
      if (*n.superlin_a < 0) {
        return fail(path, r, FailKind::SideConditionFails,
                    "superlin scale must be nonnegative, got " +
                        show_rat(*n.superlin_a));
      }
    }

    for (std::size_t i = 0; i < n.premises.size(); ++i) {
      if (!node(n.premises[i], path + "." + std::to_string(i))) return false;
    }

    auto giv = [](GId g) { return x_iverson(p_guard(g)); };

    switch (r) {
      case Rule::Term:
        return require_entails(idx, path, r, j.pre, j.post,
                               "preexpectation entails postexpectation");

      case Rule::Assign:
        return require_entails(idx, path, r, j.pre, x_subst(j.post, c.var, c.e1),
                               "preexpectation entails substituted postexpectation");

      case Rule::Look: {
        std::set<Sym> avoid = fv_exp(j.post);
        avoid.merge(free_vars_arith(c.e1));
        avoid.insert(c.var);
        Sym v = fresh_var(avoid);
        EId cell = x_iverson(p_points_to(c.e1, {avar(v)}));
        EId pattern =
            x_sup(v, x_sep(cell, x_wand(cell, x_subst(j.post, c.var, avar(v)))));
        return require_entails(idx, path, r, j.pre, pattern,
                               "preexpectation entails the cell-read pattern");
      }

      case Rule::Alloc: {
        std::set<Sym> avoid = fv_exp(j.post);
        for (AId init : c.inits) avoid.merge(free_vars_arith(init));
        avoid.insert(c.var);
        Sym v = fresh_var(avoid);
        EId cells = x_iverson(p_points_to(avar(v), c.inits));
        EId pattern = x_inf(v, x_wand(cells, x_subst(j.post, c.var, avar(v))));
        return require_entails(idx, path, r, j.pre, pattern,
                               "preexpectation entails the allocation pattern");
      }

      case Rule::Mut: {
        EId pattern =
            x_sep(x_iverson(p_allocated(c.e1)),
                  x_wand(x_iverson(p_points_to(c.e1, {c.e2})), j.post));
        return require_entails(idx, path, r, j.pre, pattern,
                               "preexpectation entails the cell-write pattern");
      }

      case Rule::Disp: {
        EId pattern = x_sep(j.post, x_iverson(p_allocated(c.e1)));
        return require_entails(idx, path, r, j.pre, pattern,
                               "preexpectation entails the deallocation pattern");
      }

      case Rule::Div:
        note(idx, "divergence is credited fully by the liberal semantics");
        return true;

      case Rule::Seq: {
        const Judgement& p0 = n.premises[0].concl;
        const Judgement& p1 = n.premises[1].concl;
        return require_same_cmd(path, r, p0.cmd, c.c1, "first premise") &&
               require_same_cmd(path, r, p1.cmd, c.c2, "second premise") &&
               require_equiv(idx, path, r, p0.invariant, j.invariant,
                             "first premise shares the resource invariant") &&
               require_equiv(idx, path, r, p1.invariant, j.invariant,
                             "second premise shares the resource invariant") &&
               require_equiv(idx, path, r, j.pre, p0.pre,
                             "preexpectation matches the first premise") &&
               require_equiv(idx, path, r, p0.post, p1.pre,
                             "intermediate expectation agrees across premises") &&
               require_equiv(idx, path, r, p1.post, j.post,
                             "postexpectation matches the second premise");
      }

      case Rule::If: {
        const Judgement& p0 = n.premises[0].concl;
        const Judgement& p1 = n.premises[1].concl;
        EId combo = x_add(x_mul(giv(c.guard), p0.pre),
                          x_mul(giv(gnot(c.guard)), p1.pre));
        return require_same_cmd(path, r, p0.cmd, c.c1, "then-premise") &&
               require_same_cmd(path, r, p1.cmd, c.c2, "else-premise") &&
               require_equiv(idx, path, r, p0.invariant, j.invariant,
                             "then-premise shares the resource invariant") &&
               require_equiv(idx, path, r, p1.invariant, j.invariant,
                             "else-premise shares the resource invariant") &&
               require_equiv(idx, path, r, p0.post, j.post,
                             "then-branch postexpectation matches") &&
               require_equiv(idx, path, r, p1.post, j.post,
                             "else-branch postexpectation matches") &&
               require_equiv(idx, path, r, j.pre, combo,
                             "preexpectation is the guard split of the branch pres");
      }

      case Rule::While: {
        const Judgement& p = n.premises[0].concl;
        EId side =
            x_add(x_mul(giv(c.guard), p.pre), x_mul(giv(gnot(c.guard)), j.post));
        return require_same_cmd(path, r, p.cmd, c.c1, "body premise") &&
               require_equiv(idx, path, r, p.invariant, j.invariant,
                             "body premise shares the resource invariant") &&
               require_equiv(idx, path, r, p.post, j.pre,
                             "body re-establishes the loop invariant") &&
               require_entails(idx, path, r, j.pre, side,
                               "loop invariant entails the guard split");
      }

      case Rule::PChoice: {
        const Judgement& p0 = n.premises[0].concl;
        const Judgement& p1 = n.premises[1].concl;
        EId combo = x_add(x_mul(x_const(c.prob), p0.pre),
                          x_mul(x_const(Rat(1) - c.prob), p1.pre));
        return require_same_cmd(path, r, p0.cmd, c.c1, "left premise") &&
               require_same_cmd(path, r, p1.cmd, c.c2, "right premise") &&
               require_equiv(idx, path, r, p0.invariant, j.invariant,
                             "left premise shares the resource invariant") &&
               require_equiv(idx, path, r, p1.invariant, j.invariant,
                             "right premise shares the resource invariant") &&
               require_equiv(idx, path, r, p0.post, j.post,
                             "left postexpectation matches") &&
               require_equiv(idx, path, r, p1.post, j.post,
                             "right postexpectation matches") &&
               require_equiv(idx, path, r, j.pre, combo,
                             "preexpectation is the probability mix of branch pres");
      }

      case Rule::Atomic: {
        const Judgement& p = n.premises[0].concl;
        if (!is_tame(c.c1)) {
          return fail(path, r, FailKind::NotTame,
                      "atomic body allocates or forks: " + pretty_cmd(c.c1));
        }
        note(idx, "atomic body is tame");
        return require_same_cmd(path, r, p.cmd, c.c1, "body premise") &&
               require_equiv(idx, path, r, p.invariant, emp_exp(),
                             "premise runs with the empty resource invariant") &&
               require_equiv(idx, path, r, p.pre, j.pre,
                             "preexpectation matches the premise") &&
               require_equiv(idx, path, r, p.post, x_sep(j.post, j.invariant),
                             "premise re-establishes the resource invariant");
      }

      case Rule::Share: {
        const Judgement& p = n.premises[0].concl;
        EId pi = *n.share_pi;
        return require_qualitative(idx, path, r, pi,
                                   "transferred invariant part is qualitative") &&
               require_same_cmd(path, r, p.cmd, j.cmd, "premise") &&
               require_equiv(idx, path, r, p.invariant, x_sep(j.invariant, pi),
                             "premise invariant joins the transferred part") &&
               require_equiv(idx, path, r, j.pre, x_sep(p.pre, pi),
                             "preexpectation absorbs the transferred part") &&
               require_equiv(idx, path, r, j.post, x_sep(p.post, pi),
                             "postexpectation absorbs the transferred part");
      }

      case Rule::Concur: {
        const Judgement& p0 = n.premises[0].concl;
        const Judgement& p1 = n.premises[1].concl;
        if (!require_same_cmd(path, r, p0.cmd, c.c1, "left premise") ||
            !require_same_cmd(path, r, p1.cmd, c.c2, "right premise") ||
            !require_equiv(idx, path, r, p0.invariant, j.invariant,
                           "left premise shares the resource invariant") ||
            !require_equiv(idx, path, r, p1.invariant, j.invariant,
                           "right premise shares the resource invariant")) {
          return false;
        }
        std::set<Sym> envL = free_vars_cmd(c.c2);
        envL.merge(fv_exp(p1.post));
        {
          std::set<Sym> fv_i = fv_exp(j.invariant);
          envL.insert(fv_i.begin(), fv_i.end());
        }
        std::set<Sym> envR = free_vars_cmd(c.c1);
        envR.merge(fv_exp(p0.post));
        {
          std::set<Sym> fv_i = fv_exp(j.invariant);
          envR.insert(fv_i.begin(), fv_i.end());
        }
        if (!require_disjoint(path, r, written_vars(c.c1), envL,
                              "left thread writes and the right side reads") ||
            !require_disjoint(path, r, written_vars(c.c2), envR,
                              "right thread writes and the left side reads")) {
          return false;
        }
        note(idx, "threads write disjointly from each other's variables");
        return require_equiv(idx, path, r, j.pre, x_sep(p0.pre, p1.pre),
                             "preexpectation splits across the threads") &&
               require_equiv(idx, path, r, j.post, x_sep(p0.post, p1.post),
                             "postexpectation splits across the threads");
      }

      case Rule::Superlin: {
        const Judgement& p0 = n.premises[0].concl;
        const Judgement& p1 = n.premises[1].concl;
        Rat a = *n.superlin_a;
        if (!require_same_cmd(path, r, p0.cmd, j.cmd, "first premise") ||
            !require_same_cmd(path, r, p1.cmd, j.cmd, "second premise") ||
            !require_equiv(idx, path, r, j.invariant, emp_exp(),
                           "conclusion runs with the empty resource invariant") ||
            !require_equiv(idx, path, r, p0.invariant, emp_exp(),
                           "first premise runs with the empty resource invariant") ||
            !require_equiv(idx, path, r, p1.invariant, emp_exp(),
                           "second premise runs with the empty resource invariant")) {
          return false;
        }
        auto mix = [&](EId e0, EId e1) {
          // Explicit return type: the gmp expression template must collapse
          // to a value before the eval temporaries it references go away.
          return [this, a, e0, e1](const Stack& s, const Heap& h) -> Rat {
            return a * ctx_.eval(e0, s, h) + ctx_.eval(e1, s, h);
          };
        };
        if (!require_combination(idx, path, r, j.pre, {p0.pre, p1.pre},
                                 mix(p0.pre, p1.pre),
                                 "preexpectation equals the scaled sum of premises") ||
            !require_combination(idx, path, r, j.post, {p0.post, p1.post},
                                 mix(p0.post, p1.post),
                                 "postexpectation equals the scaled sum of premises")) {
          return false;
        }
        if (n.ast_asserted) {
          cert_.ast_asserted_anywhere = true;
          note(idx, "almost-sure termination ASSERTED by the proof author");
          return true;
        }
        AstResult ast = check_ast(j.cmd, ctx_.bounds());
        if (ast.truncated) {
          return fail(path, r, FailKind::ASTUnverified,
                      "termination analysis exceeded the exploration budget");
        }
        if (!ast.ast) {
          std::string msg = "command admits a non-terminating scheduler";
          if (ast.witness) msg += " from: " + pretty_cmd(ast.witness->cmd);
          return fail(path, r, FailKind::ASTUnverified, msg);
        }
        note(idx, "almost-sure termination VERIFIED over the bounded domain");
        return true;
      }

      case Rule::WlpWrlp: {
        const Judgement& p = n.premises[0].concl;
        return require_same_cmd(path, r, p.cmd, j.cmd, "premise") &&
               require_equiv(idx, path, r, j.invariant, emp_exp(),
                             "conclusion runs with the empty resource invariant") &&
               require_equiv(idx, path, r, p.invariant, emp_exp(),
                             "premise runs with the empty resource invariant") &&
               require_equiv(idx, path, r, p.pre, j.pre,
                             "preexpectation matches the premise") &&
               require_equiv(idx, path, r, p.post, j.post,
                             "postexpectation matches the premise");
      }

      case Rule::Frame: {
        const Judgement& p = n.premises[0].concl;
        EId z = *n.frame_z;
        return require_same_cmd(path, r, p.cmd, j.cmd, "premise") &&
               require_equiv(idx, path, r, p.invariant, j.invariant,
                             "premise shares the resource invariant") &&
               require_disjoint(path, r, written_vars(j.cmd), fv_exp(z),
                                "command writes and the framed expectation") &&
               require_equiv(idx, path, r, j.pre, x_sep(p.pre, z),
                             "preexpectation carries the frame") &&
               require_equiv(idx, path, r, j.post, x_sep(p.post, z),
                             "postexpectation carries the frame");
      }

      case Rule::Atom: {
        const Judgement& p = n.premises[0].concl;
        if (!is_terminating_atom(j.cmd)) {
          return fail(path, r, FailKind::NotTerminatingAtom,
                      "command is not a single heap/stack primitive: " +
                          pretty_cmd(j.cmd));
        }
        note(idx, "command is a terminating atom");
        return require_same_cmd(path, r, p.cmd, j.cmd, "premise") &&
               require_equiv(idx, path, r, p.invariant, emp_exp(),
                             "premise runs with the empty resource invariant") &&
               require_equiv(idx, path, r, p.pre, x_sep(j.pre, j.invariant),
                             "premise preexpectation borrows the invariant") &&
               require_equiv(idx, path, r, p.post, x_sep(j.post, j.invariant),
                             "premise postexpectation returns the invariant");
      }

      case Rule::Monotonic: {
        const Judgement& p = n.premises[0].concl;
        return require_same_cmd(path, r, p.cmd, j.cmd, "premise") &&
               require_equiv(idx, path, r, p.invariant, j.invariant,
                             "premise shares the resource invariant") &&
               require_entails(idx, path, r, j.pre, p.pre,
                               "preexpectation entails the premise pre") &&
               require_entails(idx, path, r, p.post, j.post,
                               "premise post entails the postexpectation");
      }

      case Rule::Max: {
        const Judgement& p0 = n.premises[0].concl;
        const Judgement& p1 = n.premises[1].concl;
        return require_same_cmd(path, r, p0.cmd, j.cmd, "first premise") &&
               require_same_cmd(path, r, p1.cmd, j.cmd, "second premise") &&
               require_equiv(idx, path, r, p0.invariant, j.invariant,
                             "first premise shares the resource invariant") &&
               require_equiv(idx, path, r, p1.invariant, j.invariant,
                             "second premise shares the resource invariant") &&
               require_equiv(idx, path, r, j.pre, x_max(p0.pre, p1.pre),
                             "preexpectation is the maximum of premise pres") &&
               require_equiv(idx, path, r, j.post, x_max(p0.post, p1.post),
                             "postexpectation is the maximum of premise posts");
      }

      case Rule::Min: {
        const Judgement& p0 = n.premises[0].concl;
        const Judgement& p1 = n.premises[1].concl;
        return require_precise(idx, path, r, j.invariant) &&
               require_same_cmd(path, r, p0.cmd, j.cmd, "first premise") &&
               require_same_cmd(path, r, p1.cmd, j.cmd, "second premise") &&
               require_equiv(idx, path, r, p0.invariant, j.invariant,
                             "first premise shares the resource invariant") &&
               require_equiv(idx, path, r, p1.invariant, j.invariant,
                             "second premise shares the resource invariant") &&
               require_equiv(idx, path, r, j.pre, x_min(p0.pre, p1.pre),
                             "preexpectation is the minimum of premise pres") &&
               require_equiv(idx, path, r, j.post, x_min(p0.post, p1.post),
                             "postexpectation is the minimum of premise posts");
      }

      case Rule::Convex: {
        const Judgement& p0 = n.premises[0].concl;
        const Judgement& p1 = n.premises[1].concl;
        EId w = *n.convex_weight;
        if (!require_precise(idx, path, r, j.invariant) ||
            !require_same_cmd(path, r, p0.cmd, j.cmd, "first premise") ||
            !require_same_cmd(path, r, p1.cmd, j.cmd, "second premise") ||
            !require_equiv(idx, path, r, p0.invariant, j.invariant,
                           "first premise shares the resource invariant") ||
            !require_equiv(idx, path, r, p1.invariant, j.invariant,
                           "second premise shares the resource invariant") ||
            !require_disjoint(path, r, written_vars(j.cmd), fv_exp(w),
                              "command writes and the weight expectation")) {
          return false;
        }
        auto mix = [&](EId e0, EId e1) {
          // Explicit return type: the gmp expression template must collapse
          // to a value before the eval temporaries it references go away.
          return [this, w, e0, e1](const Stack& s, const Heap& h) -> Rat {
            Rat wv = ctx_.eval(w, s, h);
            return wv * ctx_.eval(e0, s, h) +
                   (Rat(1) - wv) * ctx_.eval(e1, s, h);
          };
        };
        try {
          if (!require_combination(idx, path, r, j.pre, {w, p0.pre, p1.pre},
                                   mix(p0.pre, p1.pre),
                                   "preexpectation equals the weighted mix of premises") ||
              !require_combination(idx, path, r, j.post, {w, p0.post, p1.post},
                                   mix(p0.post, p1.post),
                                   "postexpectation equals the weighted mix of premises")) {
            return false;
          }
        } catch (const EvalError& e) {
          return fail(path, r, FailKind::SideConditionFails,
                      std::string("weight is not a valid expectation: ") + e.what());
        }
        note(idx, "weight stays within [0,1] across the bounded domain");
        return true;
      }
    }
    return fail(path, r, FailKind::SideConditionFails, "unknown rule");
  }
};

}  // namespace

CheckResult check_proof(const ProofNode& root, const DomainBounds& bounds) {
  Checker checker(bounds);
  return checker.run(root);
}

std::string describe_failure(const CheckFailure& f) {
  std::ostringstream os;
  os << fail_kind_name(f.kind) << " at " << f.path << " (" << rule_name(f.rule)
     << "): " << f.detail;
  if (f.witness) {
    os << "\n  witness stack " << show_stack(f.witness->stack) << ", heap "
       << show_heap(f.witness->heap) << ": lhs = " << show_rat(f.witness->lhs)
       << ", rhs = " << show_rat(f.witness->rhs);
  }
  if (f.lhs) os << "\n  lhs: " << pretty_exp(*f.lhs);
  if (f.rhs) os << "\n  rhs: " << pretty_exp(*f.rhs);
  return os.str();
}

// ---------------------------------------------------------------------------
// JSON (de)serialization
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

const json& need(const json& j, const char* key, const std::string& at) {
  if (!j.contains(key)) {
    throw ProofSchemaError(at + ": missing field '" + key + "'");
  }
  return j.at(key);
}

std::string need_string(const json& j, const char* key, const std::string& at) {
  const json& v = need(j, key, at);
  if (!v.is_string()) {
    throw ProofSchemaError(at + ": field '" + key + "' must be a string");
  }
  return v.get<std::string>();
}

EId parse_exp_at(const std::string& text, const std::string& at) {
  try {
    return parse_expectation(text);
  } catch (const ParseError& e) {
    throw ProofSchemaError(at + ": " + e.what());
  }
}

CId parse_cmd_at(const std::string& text, const std::string& at) {
  try {
    return parse_program(text);
  } catch (const ParseError& e) {
    throw ProofSchemaError(at + ": " + e.what());
  }
}

ProofNode node_from_json(const json& j, const std::string& at) {
  if (!j.is_object()) {
    throw ProofSchemaError(at + ": proof node must be an object");
  }
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "rule" && key != "judgement" && key != "premises" &&
        key != "payload" && key != "note") {
      throw ProofSchemaError(at + ": unknown field '" + key + "'");
    }
  }
  ProofNode n;
  std::string rname = need_string(j, "rule", at);
  auto rule = rule_from_name(rname);
  if (!rule) throw ProofSchemaError(at + ": unknown rule '" + rname + "'");
  n.rule = *rule;

  const json& jj = need(j, "judgement", at);
  if (!jj.is_object()) {
    throw ProofSchemaError(at + ": 'judgement' must be an object");
  }
  std::string jat = at + ".judgement";
  n.concl.pre = parse_exp_at(need_string(jj, "pre", jat), jat + ".pre");
  n.concl.cmd = parse_cmd_at(need_string(jj, "cmd", jat), jat + ".cmd");
  n.concl.post = parse_exp_at(need_string(jj, "post", jat), jat + ".post");
  if (jj.contains("invariant")) {
    n.concl.invariant =
        parse_exp_at(need_string(jj, "invariant", jat), jat + ".invariant");
  } else {
    n.concl.invariant = emp_exp();
  }

  if (j.contains("payload")) {
    const json& pl = j.at("payload");
    if (!pl.is_object()) {
      throw ProofSchemaError(at + ": 'payload' must be an object");
    }
    std::string pat = at + ".payload";
    for (const auto& [key, value] : pl.items()) {
      if (key == "invariant_part") {
        if (!value.is_string()) throw ProofSchemaError(pat + ": 'invariant_part' must be a string");
        n.share_pi = parse_exp_at(value.get<std::string>(), pat + ".invariant_part");
      } else if (key == "frame") {
        if (!value.is_string()) throw ProofSchemaError(pat + ": 'frame' must be a string");
        n.frame_z = parse_exp_at(value.get<std::string>(), pat + ".frame");
      } else if (key == "weight") {
        if (!value.is_string()) throw ProofSchemaError(pat + ": 'weight' must be a string");
        n.convex_weight = parse_exp_at(value.get<std::string>(), pat + ".weight");
      } else if (key == "scale") {
        std::optional<Rat> a;
        if (value.is_string()) {
          a = parse_rat(value.get<std::string>());
        } else if (value.is_number_integer()) {
          a = parse_rat(std::to_string(value.get<long long>()));
        }
        if (!a) throw ProofSchemaError(pat + ": 'scale' must be a rational");
        n.superlin_a = *a;
      } else if (key == "termination") {
        if (!value.is_string() || (value != "verified" && value != "asserted")) {
          throw ProofSchemaError(pat + ": 'termination' must be \"verified\" or \"asserted\"");
        }
        n.ast_asserted = value == "asserted";
      } else {
        throw ProofSchemaError(pat + ": unknown payload field '" + key + "'");
      }
    }
  }

  if (j.contains("premises")) {
    const json& ps = j.at("premises");
    if (!ps.is_array()) {
      throw ProofSchemaError(at + ": 'premises' must be an array");
    }
    for (std::size_t i = 0; i < ps.size(); ++i) {
      n.premises.push_back(
          node_from_json(ps[i], at + ".premises[" + std::to_string(i) + "]"));
    }
  }
  return n;
}

json node_to_json(const ProofNode& n) {
  json j;
  j["rule"] = rule_name(n.rule);
  j["judgement"] = {{"pre", pretty_exp(n.concl.pre)},
                    {"cmd", pretty_cmd(n.concl.cmd)},
                    {"post", pretty_exp(n.concl.post)},
                    {"invariant", pretty_exp(n.concl.invariant)}};
  json pl = json::object();
  if (n.share_pi) pl["invariant_part"] = pretty_exp(*n.share_pi);
  if (n.frame_z) pl["frame"] = pretty_exp(*n.frame_z);
  if (n.convex_weight) pl["weight"] = pretty_exp(*n.convex_weight);
  if (n.superlin_a) {
    pl["scale"] = show_rat(*n.superlin_a);
    pl["termination"] = n.ast_asserted ? "asserted" : "verified";
  }
  if (!pl.empty()) j["payload"] = pl;
  if (!n.premises.empty()) {
    json ps = json::array();
    for (const ProofNode& p : n.premises) ps.push_back(node_to_json(p));
    j["premises"] = ps;
  }
  return j;
}

}  // namespace

ProofNode parse_proof_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ProofSchemaError(std::string("invalid JSON: ") + e.what());
  }
  return node_from_json(j, "$");
}

std::string proof_to_json(const ProofNode& root) {
  return node_to_json(root).dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Flagship derivations
// ---------------------------------------------------------------------------

namespace {

ProofNode leaf(Rule r, EId pre, CId c, EId post, EId inv) {
  ProofNode n;
  n.rule = r;
  n.concl = Judgement{pre, c, post, inv};
  return n;
}

ProofNode derive(Rule r, EId pre, CId c, EId post, EId inv,
                 std::vector<ProofNode> premises) {
  ProofNode n = leaf(r, pre, c, post, inv);
  n.premises = std::move(premises);
  return n;
}

// atom: lift a single-step primitive proved under the empty invariant
// with the invariant joined into pre and post.
ProofNode via_atom(Rule primitive, EId pre, CId c, EId post, EId inv) {
  ProofNode inner =
      leaf(primitive, x_sep(pre, inv), c, x_sep(post, inv), emp_exp());
  return derive(Rule::Atom, pre, c, post, inv, {std::move(inner)});
}

}  // namespace

CId running_example_program() {
  Sym r = sym("r"), y = sym("y");
  AId ar = avar(r);
  CId left = c_prob(c_mutate(ar, alit(0)), Rat(1, 2), c_mutate(ar, alit(1)));
  CId poll = c_lookup(y, ar);
  CId loop = c_while(gcmp(CmpOp::Eq, avar(y), alit(-1)), poll);
  CId right = c_seq(poll, loop);
  return c_seq(c_mutate(ar, alit(-1)), c_par(left, right));
}

DomainBounds running_example_bounds() {
  // The value interval includes the location constant 7 so that states
  // with r actually holding the shared cell are enumerated; otherwise
  // the heap-touching entailments would only ever be checked vacuously.
  return make_bounds({"r", "y"}, -1, 7, {7}, 1);
}

ProofNode running_example_proof(const Rat& claimed) {
  Sym r = sym("r"), y = sym("y");
  AId ar = avar(r);
  CId prog = running_example_program();
  CId par = cmd(prog).c2;
  CId mut_init = cmd(prog).c1;
  CId left = cmd(par).c1;
  CId right = cmd(par).c2;
  CId mut0 = cmd(left).c1, mut1 = cmd(left).c2;
  CId poll = cmd(right).c1, loop = cmd(right).c2;

  EId inv = x_max(x_iverson(p_points_to(ar, {alit(0)})),
                  x_iverson(p_points_to(ar, {alit(-1)})));
  EId li = x_max(x_iverson(p_guard(gcmp(CmpOp::Eq, avar(y), alit(0)))),
                 x_iverson(p_guard(gcmp(CmpOp::Eq, avar(y), alit(-1)))));
  EId posty = x_iverson(p_guard(gcmp(CmpOp::Eq, avar(y), alit(0))));
  EId one = x_const(1), zero = x_const(0), cl = x_const(claimed);

  // Coin thread: the branch writing 1 cannot re-establish the invariant,
  // so it only contributes credit 0 to the mix.
  ProofNode lm = via_atom(Rule::Mut, one, mut0, one, inv);
  ProofNode rm = via_atom(Rule::Mut, zero, mut1, one, inv);
  ProofNode pc =
      derive(Rule::PChoice, cl, left, one, inv, {std::move(lm), std::move(rm)});

  // Poll thread: one cell read establishes the loop invariant, the loop
  // keeps it until the cell differs from the initial marker.
  ProofNode lk = via_atom(Rule::Look, one, poll, li, inv);
  ProofNode wh = derive(Rule::While, li, loop, posty, inv, {lk});
  ProofNode rseq =
      derive(Rule::Seq, one, right, posty, inv, {std::move(lk), std::move(wh)});

  EId cpre = x_sep(cl, one), cpost = x_sep(one, posty);
  ProofNode parn = derive(Rule::Concur, cpre, par, cpost, inv,
                          {std::move(pc), std::move(rseq)});
  ProofNode im = via_atom(Rule::Mut, cl, mut_init, cpre, inv);
  ProofNode topseq = derive(Rule::Seq, cl, prog, cpost, inv,
                            {std::move(im), std::move(parn)});

  ProofNode sh = derive(Rule::Share, x_sep(cl, inv), prog, x_sep(cpost, inv),
                        emp_exp(), {std::move(topseq)});
  sh.share_pi = inv;
  ProofNode mono = derive(Rule::Monotonic, x_sep(cl, inv), prog, posty,
                          emp_exp(), {std::move(sh)});
  return derive(Rule::WlpWrlp, x_sep(cl, inv), prog, posty, emp_exp(),
                {std::move(mono)});
}

// ---------------------------------------------------------------------------
// Producer / channel / consumer instantiation
// ---------------------------------------------------------------------------

ProducerConsumerResult check_producer_consumer(long long k, const Rat& p,
                                               const std::set<long long>& J) {
  if (k < 0) throw EvalError("slot count must be nonnegative");
  if (p <= 0 || p >= 1) {
    throw EvalError("delivery probability must lie strictly between 0 and 1");
  }
  const long long z1 = 10, z2 = 20;
  Sym l = sym("l"), y1 = sym("y1"), y2 = sym("y2"), y3 = sym("y3");
  Sym x1 = sym("x1"), x2 = sym("x2"), x3 = sym("x3");

  std::set<long long> js;
  for (long long j : J) {
    if (0 <= j && j <= k) js.insert(j);
  }
  long long m = static_cast<long long>(js.size());

  // P(v): probability that slots 0..v all end in the required pattern
  // (delivered inside js, replaced outside); P(-1) = 1.
  std::vector<Rat> pref(static_cast<std::size_t>(k) + 2);
  pref[0] = 1;
  for (long long v = 0; v <= k; ++v) {
    pref[v + 1] = pref[v] * (js.count(v) ? p : Rat(1) - p);
  }
  auto P = [&](long long v) { return pref[v + 1]; };
  // Slots strictly above v that must still arrive intact.
  auto cnt = [&](long long v) {
    long long n = 0;
    for (long long j : js) {
      if (j > v) ++n;
    }
    return n;
  };

  // --- program ---
  CId as11 = c_assign(x1, alit(1)), as12 = c_assign(x1, alit(2));
  CId pc1 = c_prob(as11, Rat(1, 2), as12);
  CId mut1c = c_mutate(aadd(alit(z1), avar(y1)), avar(x1));
  CId dec1 = c_assign(y1, asub(avar(y1), alit(1)));
  CId body1 = c_seq(pc1, c_seq(mut1c, dec1));
  CId c1 = c_while(gcmp(CmpOp::Ge, avar(y1), alit(0)), body1);

  CId look2 = c_lookup(x2, aadd(alit(z1), avar(y2)));
  CId mutJ = c_mutate(aadd(alit(z2), avar(y2)), avar(x2));
  CId mutN = c_mutate(aadd(alit(z2), avar(y2)), alit(-1));
  CId pc2 = c_prob(mutJ, p, mutN);
  CId if2 = c_if(gcmp(CmpOp::Ne, avar(x2), alit(0)), pc2, c_term());
  CId dec2 = c_assign(y2, asub(avar(y2), alit(1)));
  CId body2 = c_seq(look2, c_seq(if2, dec2));
  CId c2 = c_while(gcmp(CmpOp::Ge, avar(y2), alit(0)), body2);

  CId look3 = c_lookup(x3, aadd(alit(z2), avar(y3)));
  CId inc3 = c_assign(l, aadd(avar(l), alit(1)));
  CId ifinc = c_if(gcmp(CmpOp::Ne, avar(x3), alit(-1)), inc3, c_term());
  CId dec3 = c_assign(y3, asub(avar(y3), alit(1)));
  CId then3 = c_seq(ifinc, dec3);
  CId if3 = c_if(gcmp(CmpOp::Ne, avar(x3), alit(0)), then3, c_term());
  CId body3 = c_seq(look3, if3);
  CId c3 = c_while(gcmp(CmpOp::Ge, avar(y3), alit(0)), body3);

  CId par23 = c_par(c2, c3);
  CId par = c_par(c1, par23);
  CId asy3 = c_assign(y3, alit(k)), asy2 = c_assign(y2, alit(k));
  CId asy1 = c_assign(y1, alit(k)), asl = c_assign(l, alit(0));
  CId s3c = c_seq(asy3, par);
  CId s2c = c_seq(asy2, s3c);
  CId s1c = c_seq(asy1, s2c);
  CId prog = c_seq(asl, s1c);

  // --- resource invariant: both arrays fully allocated, source cells in
  // {0,1,2}, destination cells in {0,1,2} on required slots and {0,-1}
  // elsewhere ---
  auto pt = [&](long long base, long long off, long long val) {
    return x_iverson(p_points_to(aadd(alit(base), alit(off)), {alit(val)}));
  };
  Sym bs = fresh_var({l, y1, y2, y3, x1, x2, x3});
  AId ab = avar(bs);
  EId src_cell =
      x_max(x_max(x_iverson(p_points_to(aadd(alit(z1), ab), {alit(0)})),
                  x_iverson(p_points_to(aadd(alit(z1), ab), {alit(1)}))),
            x_iverson(p_points_to(aadd(alit(z1), ab), {alit(2)})));
  EId src = x_bigsep(bs, alit(0), alit(k), src_cell);
  EId dst = 0;
  for (long long i = 0; i <= k; ++i) {
    EId cell = js.count(i)
                   ? x_max(x_max(pt(z2, i, 0), pt(z2, i, 1)), pt(z2, i, 2))
                   : x_max(pt(z2, i, 0), pt(z2, i, -1));
    dst = i == 0 ? cell : x_sep(dst, cell);
  }
  EId ri = x_sep(src, dst);

  auto iv = [&](PId pd) { return x_iverson(pd); };
  auto eqc = [&](Sym v, long long c) {
    return iv(p_guard(gcmp(CmpOp::Eq, avar(v), alit(c))));
  };
  auto in_range = [&](Sym v, long long lo, long long hi) {
    return iv(p_guard(gand(gcmp(CmpOp::Ge, avar(v), alit(lo)),
                           gcmp(CmpOp::Le, avar(v), alit(hi)))));
  };
  auto below0 = [&](Sym v) {
    return iv(p_guard(gcmp(CmpOp::Lt, avar(v), alit(0))));
  };
  // Sum of [v = i] * term(i) over i in `slots`; the guards are disjoint.
  auto guarded = [&](Sym v, const std::vector<long long>& slots,
                     const std::function<EId(long long)>& term) {
    EId acc = 0;
    bool first = true;
    for (long long i : slots) {
      EId t = x_mul(eqc(v, i), term(i));
      acc = first ? t : x_add(acc, t);
      first = false;
    }
    return first ? x_const(0) : acc;
  };
  std::vector<long long> all_slots, j_slots, nj_slots;
  for (long long i = 0; i <= k; ++i) {
    all_slots.push_back(i);
    (js.count(i) ? j_slots : nj_slots).push_back(i);
  }
  EId one = x_const(1);

  // --- producer thread ---
  EId i1 = iv(p_guard(gcmp(CmpOp::Le, avar(y1), alit(k))));
  EId hd1 = x_subst(i1, y1, asub(avar(y1), alit(1)));
  EId fm1 = x_mul(in_range(y1, 0, k), in_range(x1, 0, 2));
  ProofNode mut1n = via_atom(Rule::Mut, fm1, mut1c, hd1, ri);
  ProofNode dec1n = leaf(Rule::Assign, hd1, dec1, i1, ri);
  ProofNode md1 = derive(Rule::Seq, fm1, c_seq(mut1c, dec1), i1, ri,
                         {std::move(mut1n), std::move(dec1n)});
  ProofNode b11 = leaf(Rule::Assign, x_subst(fm1, x1, alit(1)), as11, fm1, ri);
  ProofNode b12 = leaf(Rule::Assign, x_subst(fm1, x1, alit(2)), as12, fm1, ri);
  EId fpc1 = x_add(x_mul(x_const(Rat(1, 2)), b11.concl.pre),
                   x_mul(x_const(Rat(1, 2)), b12.concl.pre));
  ProofNode pc1n = derive(Rule::PChoice, fpc1, pc1, fm1, ri,
                          {std::move(b11), std::move(b12)});
  ProofNode body1n = derive(Rule::Seq, fpc1, body1, i1, ri,
                            {std::move(pc1n), std::move(md1)});
  ProofNode wh1 = derive(Rule::While, i1, c1, one, ri, {std::move(body1n)});

  // --- channel thread ---
  EId fbody2 = guarded(y2, all_slots,
                       [&](long long i) { return x_const(P(i)); });
  EId i2 = x_add(fbody2, below0(y2));
  EId hd2 = x_subst(i2, y2, asub(avar(y2), alit(1)));
  EId aj = guarded(y2, j_slots, [&](long long i) {
    return x_mul(x_const(P(i - 1)), in_range(x2, 0, 2));
  });
  EId an = guarded(y2, nj_slots,
                   [&](long long i) { return x_const(P(i - 1)); });
  ProofNode mjn = via_atom(Rule::Mut, aj, mutJ, hd2, ri);
  ProofNode mnn = via_atom(Rule::Mut, an, mutN, hd2, ri);
  EId fpc2 = x_add(x_mul(x_const(p), aj), x_mul(x_const(Rat(1) - p), an));
  ProofNode pc2n = derive(Rule::PChoice, fpc2, pc2, hd2, ri,
                          {std::move(mjn), std::move(mnn)});
  ProofNode skip2 = leaf(Rule::Term, hd2, c_term(), hd2, ri);
  EId fx2ne = iv(p_guard(gcmp(CmpOp::Ne, avar(x2), alit(0))));
  EId fif2 = x_add(x_mul(fx2ne, fpc2), x_mul(eqc(x2, 0), hd2));
  ProofNode if2n = derive(Rule::If, fif2, if2, hd2, ri,
                          {std::move(pc2n), std::move(skip2)});
  ProofNode dec2n = leaf(Rule::Assign, hd2, dec2, i2, ri);
  ProofNode id2 = derive(Rule::Seq, fif2, c_seq(if2, dec2), i2, ri,
                         {std::move(if2n), std::move(dec2n)});
  ProofNode lk2 = via_atom(Rule::Look, fbody2, look2, fif2, ri);
  ProofNode body2n = derive(Rule::Seq, fbody2, body2, i2, ri,
                            {std::move(lk2), std::move(id2)});
  ProofNode wh2 = derive(Rule::While, i2, c2, one, ri, {std::move(body2n)});

  // --- consumer thread ---
  EId fbody3 = guarded(y3, all_slots,
                       [&](long long i) { return eqc(l, cnt(i)); });
  EId i3 = x_add(fbody3, x_mul(below0(y3), eqc(l, m)));
  EId hd3 = x_subst(i3, y3, asub(avar(y3), alit(1)));
  EId binc = x_subst(hd3, l, aadd(avar(l), alit(1)));
  ProofNode incn = leaf(Rule::Assign, binc, inc3, hd3, ri);
  ProofNode skipin = leaf(Rule::Term, hd3, c_term(), hd3, ri);
  EId fx3nm = iv(p_guard(gcmp(CmpOp::Ne, avar(x3), alit(-1))));
  EId fii = x_add(x_mul(fx3nm, binc), x_mul(eqc(x3, -1), hd3));
  ProofNode ifincn = derive(Rule::If, fii, ifinc, hd3, ri,
                            {std::move(incn), std::move(skipin)});
  ProofNode dec3n = leaf(Rule::Assign, hd3, dec3, i3, ri);
  ProofNode then3n = derive(Rule::Seq, fii, then3, i3, ri,
                            {std::move(ifincn), std::move(dec3n)});
  ProofNode skipout = leaf(Rule::Term, i3, c_term(), i3, ri);
  EId fx3ne = iv(p_guard(gcmp(CmpOp::Ne, avar(x3), alit(0))));
  EId foif = x_add(x_mul(fx3ne, fii), x_mul(eqc(x3, 0), i3));
  ProofNode if3n = derive(Rule::If, foif, if3, i3, ri,
                          {std::move(then3n), std::move(skipout)});
  ProofNode lk3 = via_atom(Rule::Look, fbody3, look3, foif, ri);
  ProofNode body3n = derive(Rule::Seq, fbody3, body3, i3, ri,
                            {std::move(lk3), std::move(if3n)});
  EId postl = eqc(l, m);
  ProofNode wh3 = derive(Rule::While, i3, c3, postl, ri, {std::move(body3n)});

  // --- combination ---
  EId cpre23 = x_sep(i2, i3), cpost23 = x_sep(one, postl);
  ProofNode par23n = derive(Rule::Concur, cpre23, par23, cpost23, ri,
                            {std::move(wh2), std::move(wh3)});
  EId cpre = x_sep(i1, cpre23), cpost = x_sep(one, cpost23);
  ProofNode parn = derive(Rule::Concur, cpre, par, cpost, ri,
                          {std::move(wh1), std::move(par23n)});

  EId t3 = x_subst(cpre, y3, alit(k));
  ProofNode a3 = leaf(Rule::Assign, t3, asy3, cpre, ri);
  ProofNode s3 = derive(Rule::Seq, t3, s3c, cpost, ri,
                        {std::move(a3), std::move(parn)});
  EId t2 = x_subst(t3, y2, alit(k));
  ProofNode a2 = leaf(Rule::Assign, t2, asy2, t3, ri);
  ProofNode s2 = derive(Rule::Seq, t2, s2c, cpost, ri,
                        {std::move(a2), std::move(s3)});
  EId t1 = x_subst(t2, y1, alit(k));
  ProofNode a1 = leaf(Rule::Assign, t1, asy1, t2, ri);
  ProofNode s1 = derive(Rule::Seq, t1, s1c, cpost, ri,
                        {std::move(a1), std::move(s2)});
  EId t0 = x_subst(t1, l, alit(0));
  ProofNode a0 = leaf(Rule::Assign, t0, asl, t1, ri);
  ProofNode s0 = derive(Rule::Seq, t0, prog, cpost, ri,
                        {std::move(a0), std::move(s1)});

  EId pk = x_const(P(k));
  ProofNode mono =
      derive(Rule::Monotonic, pk, prog, postl, ri, {std::move(s0)});
  ProofNode shn = derive(Rule::Share, x_sep(pk, ri), prog, x_sep(postl, ri),
                         emp_exp(), {std::move(mono)});
  shn.share_pi = ri;
  ProofNode fin = derive(Rule::WlpWrlp, x_sep(pk, ri), prog,
                         x_sep(postl, ri), emp_exp(), {std::move(shn)});

  ProducerConsumerResult res;
  std::vector<Val> locs;
  for (long long i = 0; i <= k; ++i) {
    locs.push_back(z1 + i);
    locs.push_back(z2 + i);
  }
  res.bounds = make_bounds({"l", "x1", "x2", "x3", "y1", "y2", "y3"}, -1,
                           std::max<long long>(2, k), locs,
                           2 * static_cast<std::size_t>(k + 1));
  res.program = prog;
  res.claim = fin.concl;
  res.resource = ri;
  res.bound_value = P(k);
  res.check = check_proof(fin, res.bounds);
  return res;
}

}  // namespace chp
