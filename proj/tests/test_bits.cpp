#include "doctest.h"
#include "pufbench/bits.hpp"
#include "pufbench/config_file.hpp"
#include "pufbench/error.hpp"

using namespace pufbench;

TEST_CASE("bit vector text and integer forms agree") {
  const auto v = BitVector::from_string("1011");
  CHECK(v.size() == 4);
  CHECK(v.to_u64() == 0b1101);
  CHECK(BitVector::from_u64(0b1101, 4) == v);
  CHECK(v.to_string() == "1011");
  CHECK(v.weight() == 3);
  CHECK(hamming_distance(v, ~v) == 4);
  CHECK((v ^ v).weight() == 0);
}

TEST_CASE("bit matrix rows and columns") {
  BitMatrix m(3, 2);
  m.set_row(1, BitVector::from_string("11"));
  m(2, 0) = 1;
  CHECK(m.column(0) == std::vector<std::uint8_t>{0, 1, 1});
  CHECK(m.column(1) == std::vector<std::uint8_t>{0, 1, 0});
  const std::vector<std::size_t> pick{2, 1};
  const auto s = m.select_rows(pick);
  CHECK(s.row_vector(0).to_string() == "10");
  CHECK(s.row_vector(1).to_string() == "11");
}

TEST_CASE("config files") {
  const auto c = ConfigFile::parse("# comment\na = 1\n\nb.x = hello world\n");
  CHECK(c.get_u64("a", 0) == 1);
  CHECK(c.get_string("b.x", "") == "hello world");
  CHECK(c.scoped("b.").get_string("x", "") == "hello world");
  CHECK_THROWS_AS(ConfigFile::parse("a = 1\na = 2\n"), Error);
  CHECK_THROWS_AS(ConfigFile::parse("no equals sign\n"), Error);
  CHECK_THROWS_AS(c.reject_unknown({"a"}), Error);
  CHECK(ConfigFile::parse(c.to_string()).entries() == c.entries());
  CHECK(parse_double("k", format_double(0.1 + 0.2)) == 0.1 + 0.2);
}
