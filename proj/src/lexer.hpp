#pragma once

#include <cctype>
#include <string>
#include <vector>

#include "chp/syntax.hpp"

namespace chp {

// Shared tokenizer for the .chp and .exp grammars. '#' starts a line
// comment. Numbers are unsigned digit runs, optionally with a fractional
// part ("0.5"); signs are handled by the parsers.
struct Token {
  enum Kind { Ident, Number, Punct, End } kind;
  std::string text;
  int line, col;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) {
    static const std::vector<std::string> puncts = {
        "|||", "|->", ":=", "!=", "<=", ">=", "==", "&&", "||",
        "**",  "-*",  "..", ";",  "{",  "}",  "[",  "]",  "(",
        ")",   "<",   ">",  ",",  "+",  "-",  "*",  "=",  "!",
        "^",   ".",   "/",  "?",  ":"};
    int line = 1, col = 1;
    std::size_t i = 0;
    auto bump = [&](std::size_t n) {
      for (std::size_t k = 0; k < n; ++k, ++i) {
        if (src[i] == '\n') {
          ++line;
          col = 1;
        } else {
          ++col;
        }
      }
    };
    while (i < src.size()) {
      char c = src[i];
      if (c == '#') {
        while (i < src.size() && src[i] != '\n') bump(1);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        bump(1);
        continue;
      }
      int tl = line, tc = col;
      if (std::isdigit(static_cast<unsigned char>(c))) {
        std::string t;
        while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) {
          t += src[i];
          bump(1);
        }
        if (i + 1 < src.size() && src[i] == '.' &&
            std::isdigit(static_cast<unsigned char>(src[i + 1]))) {
          t += '.';
          bump(1);
          while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) {
            t += src[i];
            bump(1);
          }
        }
        toks_.push_back({Token::Number, t, tl, tc});
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::string t;
        while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) ||
                                  src[i] == '_')) {
          t += src[i];
          bump(1);
        }
        toks_.push_back({Token::Ident, t, tl, tc});
        continue;
      }
      bool matched = false;
      for (const auto& p : puncts) {
        if (src.compare(i, p.size(), p) == 0) {
          toks_.push_back({Token::Punct, p, tl, tc});
          bump(p.size());
          matched = true;
          break;
        }
      }
      if (!matched) {
        throw ParseError(std::string("unexpected character '") + c + "'", tl, tc);
      }
    }
    toks_.push_back({Token::End, "", line, col});
  }

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t k = pos_ + ahead;
    return k < toks_.size() ? toks_[k] : toks_.back();
  }

  Token next() {
    const Token& t = peek();
    if (t.kind != Token::End) ++pos_;
    return t;
  }

  bool at_punct(const std::string& p) const {
    return peek().kind == Token::Punct && peek().text == p;
  }

  bool at_ident(const std::string& w) const {
    return peek().kind == Token::Ident && peek().text == w;
  }

  bool eat_punct(const std::string& p) {
    if (!at_punct(p)) return false;
    next();
    return true;
  }

  bool eat_ident(const std::string& w) {
    if (!at_ident(w)) return false;
    next();
    return true;
  }

  void expect_punct(const std::string& p) {
    if (!eat_punct(p)) fail("expected '" + p + "'");
  }

  std::size_t save() const { return pos_; }
  void restore(std::size_t p) { pos_ = p; }

  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = peek();
    std::string got = t.kind == Token::End ? "end of input" : "'" + t.text + "'";
    throw ParseError(msg + ", got " + got, t.line, t.col);
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace chp
