#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "chp/rational.hpp"

using namespace chp;

TEST_CASE("parse_rat accepts integers, fractions, and short decimals") {
  CHECK(parse_rat("3") == Rat(3));
  CHECK(parse_rat("-3") == Rat(-3));
  CHECK(parse_rat("+3") == Rat(3));
  CHECK(parse_rat("1/2") == Rat(1, 2));
  CHECK(parse_rat("-2/7") == Rat(-2, 7));
  CHECK(parse_rat("2/4") == Rat(1, 2));  // canonicalized
  CHECK(parse_rat("0.5") == Rat(1, 2));
  CHECK(parse_rat("0.25") == Rat(1, 4));
  CHECK(parse_rat(".5") == Rat(1, 2));
  CHECK(parse_rat("-0.125") == Rat(-1, 8));
  CHECK(parse_rat("0.000000001") == Rat(1, 1000000000));
  CHECK(parse_rat("10") == Rat(10));
  CHECK(parse_rat("0") == Rat(0));
}

TEST_CASE("parse_rat rejects malformed text") {
  CHECK(!parse_rat(""));
  CHECK(!parse_rat("-"));
  CHECK(!parse_rat("a"));
  CHECK(!parse_rat("1/0"));
  CHECK(!parse_rat("1/2/3"));
  CHECK(!parse_rat("1.2.3"));
  CHECK(!parse_rat("1/2.5"));
  CHECK(!parse_rat("0.0000000001"));  // more than 9 decimal digits
  CHECK(!parse_rat("1 /2"));
  CHECK(!parse_rat("2e3"));
}

TEST_CASE("show_rat prints canonical forms and round-trips") {
  CHECK(show_rat(Rat(1, 2)) == "1/2");
  CHECK(show_rat(Rat(2)) == "2");
  CHECK(show_rat(Rat(-3, 4)) == "-3/4");
  CHECK(show_rat(Rat(0)) == "0");
  for (const char* s : {"0", "1", "-5", "1/3", "-7/9", "22/7"}) {
    auto q = parse_rat(s);
    REQUIRE(q);
    CHECK(show_rat(*q) == s);
  }
}

TEST_CASE("pow_rat is exact exponentiation with 0^0 = 1") {
  CHECK(pow_rat(Rat(2, 3), 3) == Rat(8, 27));
  CHECK(pow_rat(Rat(1, 2), 10) == Rat(1, 1024));
  CHECK(pow_rat(Rat(5), 0) == Rat(1));
  CHECK(pow_rat(Rat(0), 0) == Rat(1));
  CHECK(pow_rat(Rat(0), 3) == Rat(0));
  CHECK(pow_rat(Rat(-1, 2), 2) == Rat(1, 4));
  CHECK(pow_rat(Rat(-1, 2), 3) == Rat(-1, 8));
}

TEST_CASE("to_double converts exactly representable values") {
  CHECK(to_double(Rat(1, 2)) == 0.5);
  CHECK(to_double(Rat(3)) == 3.0);
  CHECK(to_double(Rat(-1, 4)) == -0.25);
}

TEST_CASE("arithmetic stays exact on awkward denominators") {
  Rat a(1, 3), b(1, 6);
  CHECK(a + b == Rat(1, 2));
  CHECK(a - b == Rat(1, 6));
  CHECK(a * b == Rat(1, 18));
  CHECK(a / b == Rat(2));
  Rat sum(0);
  for (int i = 0; i < 30; ++i) sum += Rat(1, 30);
  CHECK(sum == 1);
}
