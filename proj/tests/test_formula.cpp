#include <doctest.h>

#include "hjm/error.hpp"
#include "hjm/formula.hpp"

using namespace hjm;

TEST_CASE("response, fixed terms, and random blocks are separated") {
  auto f = parse_formula("y ~ 1 + time + grp + (1 + time | patient) + (1 | cluster)");
  CHECK(f.response == "y");
  REQUIRE(f.fixed.size() == 3);
  CHECK(f.fixed[0].name() == "intercept");
  CHECK(f.fixed[1].name() == "time");
  CHECK(f.fixed[2].name() == "grp");
  REQUIRE(f.random.size() == 2);
  CHECK(f.random[0].level == "patient");
  CHECK(f.random[0].terms.size() == 2);
  CHECK(f.random[1].level == "cluster");
  CHECK(f.random[1].terms.size() == 1);
}

TEST_CASE("poly expands to one term per column") {
  auto f = parse_formula("y ~ poly(time,2)");
  REQUIRE(f.fixed.size() == 2);
  CHECK(f.fixed[0].name() == "poly(time,2)[1]");
  CHECK(f.fixed[1].name() == "poly(time,2)[2]");
  CHECK(max_poly_degree(f.fixed) == 2);
}

TEST_CASE("star crossing expands to mains plus interaction") {
  auto f = parse_formula("y ~ grp * time");
  REQUIRE(f.fixed.size() == 3);
  CHECK(f.fixed[0].name() == "grp");
  CHECK(f.fixed[1].name() == "time");
  CHECK(f.fixed[2].name() == "grp:time");
}

TEST_CASE("interactions with poly cross every column") {
  auto f = parse_formula("y ~ grp:poly(time,2)");
  REQUIRE(f.fixed.size() == 2);
  CHECK(f.fixed[0].name() == "grp:poly(time,2)[1]");
  CHECK(f.fixed[1].name() == "grp:poly(time,2)[2]");
}

TEST_CASE("duplicate terms collapse") {
  auto f = parse_formula("y ~ time + time + 1");
  CHECK(f.fixed.size() == 2);
}

TEST_CASE("event-style formula without a response") {
  auto f = parse_formula("~ sex + pow(time,2)");
  CHECK(f.response.empty());
  REQUIRE(f.fixed.size() == 2);
  CHECK(f.fixed[1].factors[0].kind == Factor::Kind::kTimePower);
  CHECK(f.fixed[1].factors[0].power == 2);
}

TEST_CASE("malformed input is rejected") {
  CHECK_THROWS_AS(parse_formula("y ~ poly(time)"), ParseError);
  CHECK_THROWS_AS(parse_formula("y ~ (1 | )"), ParseError);
  CHECK_THROWS_AS(parse_formula("y ~ (1 + time"), ParseError);
  CHECK_THROWS_AS(parse_formula(""), ParseError);
  CHECK_THROWS_AS(parse_formula("y ~ poly(time,0)"), ParseError);
}
