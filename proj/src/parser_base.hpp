#pragma once

#include <string>

#include "chp/rational.hpp"
#include "chp/syntax.hpp"
#include "lexer.hpp"

namespace chp {

inline bool is_chp_keyword(const std::string& w) {
  static const std::set<std::string> kw = {"skip",  "diverge", "atomic", "if",   "else",
                                           "while", "new",     "free",   "true", "false"};
  return kw.count(w) > 0;
}

// Productions shared by the program and expectation grammars: arithmetic
// expressions (+, -, * with the usual precedence), boolean guards and
// exact rational literals ("2", "1/2", "0.5").
class ParserBase {
 public:
  explicit ParserBase(const std::string& src) : lx_(src) {}

  AId parse_aexp() {
    AId a = parse_term();
    while (true) {
      if (lx_.eat_punct("+")) {
        a = aadd(a, parse_term());
      } else if (lx_.eat_punct("-")) {
        a = asub(a, parse_term());
      } else {
        return a;
      }
    }
  }

  GId parse_guard() { return parse_gor(); }

  long long parse_int() {
    bool neg = lx_.eat_punct("-");
    const Token& t = lx_.peek();
    if (t.kind != Token::Number || t.text.find('.') != std::string::npos) {
      lx_.fail("expected an integer");
    }
    long long v = std::stoll(lx_.next().text);
    return neg ? -v : v;
  }

  Rat parse_rat_literal() {
    bool neg = lx_.eat_punct("-");
    const Token& t = lx_.peek();
    if (t.kind != Token::Number) lx_.fail("expected a rational literal");
    std::string text = lx_.next().text;
    if (text.find('.') == std::string::npos && lx_.at_punct("/")) {
      lx_.next();
      const Token& d = lx_.peek();
      if (d.kind != Token::Number || d.text.find('.') != std::string::npos) {
        lx_.fail("expected a denominator");
      }
      text += "/" + lx_.next().text;
    }
    auto q = parse_rat(text);
    if (!q) lx_.fail("malformed rational literal");
    return neg ? -*q : *q;
  }

 protected:
  Lexer lx_;

  AId parse_term() {
    AId a = parse_factor();
    while (lx_.eat_punct("*")) a = amul(a, parse_factor());
    return a;
  }

  AId parse_factor() {
    if (lx_.eat_punct("(")) {
      AId a = parse_aexp();
      lx_.expect_punct(")");
      return a;
    }
    if (lx_.at_punct("-")) {
      lx_.next();
      if (lx_.peek().kind == Token::Number) {
        const Token& t = lx_.peek();
        if (t.text.find('.') != std::string::npos) lx_.fail("expected an integer");
        return alit(-std::stoll(lx_.next().text));
      }
      return asub(alit(0), parse_factor());
    }
    if (lx_.peek().kind == Token::Number) {
      const Token& t = lx_.peek();
      if (t.text.find('.') != std::string::npos) lx_.fail("expected an integer");
      return alit(std::stoll(lx_.next().text));
    }
    if (lx_.peek().kind == Token::Ident && !is_chp_keyword(lx_.peek().text)) {
      return avar(sym(lx_.next().text));
    }
    lx_.fail("expected an arithmetic expression");
  }

  GId parse_gor() {
    GId g = parse_gand();
    while (lx_.eat_punct("||")) g = gor(g, parse_gand());
    return g;
  }

  GId parse_gand() {
    GId g = parse_gatom();
    while (lx_.eat_punct("&&")) g = gand(g, parse_gatom());
    return g;
  }

  GId parse_gatom() {
    if (lx_.eat_punct("!")) return gnot(parse_gatom());
    if (lx_.eat_ident("true")) return glit(true);
    if (lx_.eat_ident("false")) return glit(false);
    if (lx_.at_punct("(")) {
      // Could open either a nested guard or a parenthesized arithmetic
      // operand; try the guard reading first and fall back.
      std::size_t save = lx_.save();
      lx_.next();
      try {
        GId g = parse_gor();
        lx_.expect_punct(")");
        return g;
      } catch (const ParseError&) {
        lx_.restore(save);
      }
    }
    AId l = parse_aexp();
    CmpOp op = parse_cmp();
    AId r = parse_aexp();
    return gcmp(op, l, r);
  }

  CmpOp parse_cmp() {
    if (lx_.eat_punct("=") || lx_.eat_punct("==")) return CmpOp::Eq;
    if (lx_.eat_punct("!=")) return CmpOp::Ne;
    if (lx_.eat_punct("<=")) return CmpOp::Le;
    if (lx_.eat_punct("<")) return CmpOp::Lt;
    if (lx_.eat_punct(">=")) return CmpOp::Ge;
    if (lx_.eat_punct(">")) return CmpOp::Gt;
    lx_.fail("expected a comparison operator");
  }
};

}  // namespace chp
