#include <doctest.h>

#include "hjm/csv.hpp"
#include "hjm/error.hpp"

using namespace hjm;

TEST_CASE("csv parses quoted cells, CRLF, and a BOM") {
  const std::string text = "\xEF\xBB\xBFid,note,x\r\n1,\"a, \"\"b\"\"\",2.5\r\n2,,3\r\n";
  auto t = csv::read_string(text);
  REQUIRE(t.header == std::vector<std::string>{"id", "note", "x"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.cell(0, 1) == "a, \"b\"");
  CHECK(t.cell(1, 1) == "");
  CHECK(t.cell(1, 2) == "3");
}

TEST_CASE("csv rejects ragged rows and empty input") {
  CHECK_THROWS_AS(csv::read_string("a,b\n1\n"), ParseError);
  CHECK_THROWS_AS(csv::read_string(""), SchemaError);
}

TEST_CASE("csv round-trips through to_string") {
  csv::Table t;
  t.header = {"a", "b"};
  t.rows = {{"1", "x,y"}, {"2", "plain"}};
  auto back = csv::read_string(csv::to_string(t));
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
}

TEST_CASE("parse_real flags junk and non-finite values") {
  CHECK(csv::parse_real("1.25e-3", "x") == doctest::Approx(0.00125));
  CHECK_THROWS_AS(csv::parse_real("1.2.3", "x"), ParseError);
  CHECK_THROWS_AS(csv::parse_real("", "x"), ParseError);
  CHECK_THROWS_AS(csv::parse_real("inf", "x"), ParseError);
}

TEST_CASE("format_real round-trips doubles exactly") {
  for (double x : {0.1, 1.0 / 3.0, 12345.678901234567, -2e-17, 0.0}) {
    CHECK(csv::parse_real(csv::format_real(x), "x") == x);
  }
}
