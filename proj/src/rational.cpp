#include "chp/rational.hpp"

#include <cctype>
#include <cstddef>

namespace chp {

namespace {

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

}  // namespace

std::optional<Rat> parse_rat(const std::string& text) {
  std::string s = text;
  bool neg = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    neg = s[0] == '-';
    s.erase(0, 1);
  }
  if (s.empty()) return std::nullopt;

  Rat q;
  auto slash = s.find('/');
  auto dot = s.find('.');
  if (slash != std::string::npos && dot != std::string::npos) return std::nullopt;

  if (slash != std::string::npos) {
    std::string num = s.substr(0, slash), den = s.substr(slash + 1);
    if (!all_digits(num) || !all_digits(den)) return std::nullopt;
    mpz_class d(den, 10);
    if (d == 0) return std::nullopt;
    q = Rat(mpz_class(num, 10), d);
    q.canonicalize();
  } else if (dot != std::string::npos) {
    std::string whole = s.substr(0, dot), frac = s.substr(dot + 1);
    if (whole.empty()) whole = "0";
    if (!all_digits(whole) || !all_digits(frac) || frac.size() > 9) return std::nullopt;
    mpz_class scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    q = Rat(mpz_class(whole, 10) * scale + mpz_class(frac, 10), scale);
    q.canonicalize();
  } else {
    if (!all_digits(s)) return std::nullopt;
    q = Rat(mpz_class(s, 10));
  }
  if (neg) q = -q;
  return q;
}

std::string show_rat(const Rat& q) {
  if (q.get_den() == 1) return q.get_num().get_str();
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

Rat pow_rat(const Rat& q, unsigned long k) {
  if (k == 0) return Rat(1);
  mpz_class num, den;
  mpz_pow_ui(num.get_mpz_t(), q.get_num().get_mpz_t(), k);
  mpz_pow_ui(den.get_mpz_t(), q.get_den().get_mpz_t(), k);
  Rat r(num, den);
  r.canonicalize();
  return r;
}

double to_double(const Rat& q) { return q.get_d(); }

}  // namespace chp
