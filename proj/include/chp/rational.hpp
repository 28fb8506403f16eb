#pragma once

#include <gmpxx.h>

#include <optional>
#include <string>

namespace chp {

// All probabilities and expectation values in the toolkit are exact
// rationals. GMP's mpq_class already gives us canonical exact arithmetic
// and total ordering; this header only adds the parsing, printing and
// exponentiation conventions the rest of the code relies on.
using Rat = mpq_class;

// Accepts "a", "-a", "a/b" and decimal literals with at most nine
// fractional digits (e.g. "0.5", "-1.25"). Everything is parsed exactly.
// Returns nullopt on malformed input or a zero denominator.
std::optional<Rat> parse_rat(const std::string& text);

// Canonical text form: integers print without a slash, everything else
// as "num/den" with positive denominator.
std::string show_rat(const Rat& q);

// q^k for a nonnegative integer exponent, with the convention 0^0 = 1.
Rat pow_rat(const Rat& q, unsigned long k);

double to_double(const Rat& q);

}  // namespace chp
