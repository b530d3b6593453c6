#include <doctest.h>

#include "tmcache/dtime.hpp"

using namespace tmcache;

namespace {

std::uint64_t splitmix(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

TEST_CASE("civil date round trips through day counts") {
  CHECK(days_from_civil(1970, 1, 1) == 0);
  CHECK(days_from_civil(1970, 1, 2) == 1);
  CHECK(days_from_civil(1969, 12, 31) == -1);
  CHECK(days_from_civil(2000, 3, 1) == 11017);
  CHECK(days_from_civil(2010, 11, 1) == 14914);

  CivilDate cd = civil_from_days(14914);
  CHECK(cd.year == 2010);
  CHECK(cd.month == 11);
  CHECK(cd.day == 1);

  std::uint64_t state = 42;
  for (int i = 0; i < 2000; ++i) {
    auto days = static_cast<std::int64_t>(splitmix(state) % 80000) - 20000;
    CivilDate c = civil_from_days(days);
    CHECK(days_from_civil(c.year, c.month, c.day) == days);
  }
}

TEST_CASE("instant_from_utc counts seconds from the epoch") {
  CHECK(instant_from_utc(1970, 1, 1, 0, 0, 0) == 0);
  CHECK(instant_from_utc(1970, 1, 1, 0, 0, 1) == 1);
  CHECK(instant_from_utc(1970, 1, 2, 0, 0, 0) == 86400);
  CHECK(instant_from_utc(2010, 11, 1, 6, 2, 4) ==
        14914 * kSecondsPerDay + 6 * 3600 + 2 * 60 + 4);
}

TEST_CASE("RFC 1123 parsing accepts the wire format") {
  auto t = parse_rfc1123("Thu, 13 Dec 2007 00:21:02 GMT");
  REQUIRE(t.has_value());
  CHECK(*t == instant_from_utc(2007, 12, 13, 0, 21, 2));

  CHECK(parse_rfc1123("Mon, 01 Nov 2010 06:02:04 GMT") ==
        instant_from_utc(2010, 11, 1, 6, 2, 4));
  CHECK(parse_rfc1123("Mon, 08 Sep 2008 00:00:00 GMT") ==
        instant_from_utc(2008, 9, 8, 0, 0, 0));
}

TEST_CASE("RFC 1123 parsing rejects malformed input") {
  CHECK(!parse_rfc1123("").has_value());
  CHECK(!parse_rfc1123("13 Dec 2007 00:21:02 GMT").has_value());
  CHECK(!parse_rfc1123("Xxx, 13 Dec 2007 00:21:02 GMT").has_value());
  CHECK(!parse_rfc1123("Thu, 13 Foo 2007 00:21:02 GMT").has_value());
  CHECK(!parse_rfc1123("Thu, 13 Dec 2007 00:21:02").has_value());
  CHECK(!parse_rfc1123("Thu, 13 Dec 2007 25:21:02 GMT").has_value());
  CHECK(!parse_rfc1123("2007-12-13T00:21:02Z").has_value());
  CHECK(!parse_rfc1123("not a date at all").has_value());
}

TEST_CASE("RFC 1123 format emits a correct weekday and round trips") {
  Instant t = instant_from_utc(2007, 12, 13, 0, 21, 2);
  CHECK(format_rfc1123(t) == "Thu, 13 Dec 2007 00:21:02 GMT");
  CHECK(format_rfc1123(0) == "Thu, 01 Jan 1970 00:00:00 GMT");

  std::uint64_t state = 7;
  for (int i = 0; i < 2000; ++i) {
    auto v = static_cast<Instant>(splitmix(state) % 4'000'000'000ull);
    CHECK(parse_rfc1123(format_rfc1123(v)) == v);
  }
}

TEST_CASE("ISO 8601 round trips and rejects junk") {
  CHECK(format_iso8601(instant_from_utc(2010, 11, 1, 6, 2, 4)) ==
        "2010-11-01T06:02:04Z");
  CHECK(parse_iso8601("2010-11-01T06:02:04Z") ==
        instant_from_utc(2010, 11, 1, 6, 2, 4));
  CHECK(!parse_iso8601("2010-11-01 06:02:04").has_value());
  CHECK(!parse_iso8601("2010-13-01T06:02:04Z").has_value());
  CHECK(!parse_iso8601("").has_value());

  std::uint64_t state = 99;
  for (int i = 0; i < 2000; ++i) {
    auto v = static_cast<Instant>(splitmix(state) % 4'000'000'000ull);
    CHECK(parse_iso8601(format_iso8601(v)) == v);
  }
}

TEST_CASE("timestamp14 matches archive URI-M path conventions") {
  CHECK(format_timestamp14(instant_from_utc(2007, 12, 13, 0, 21, 2)) ==
        "20071213002102");
  CHECK(format_timestamp14(instant_from_utc(2010, 11, 1, 6, 2, 4)) ==
        "20101101060204");
}

TEST_CASE("truncate_to_midnight keeps the civil date") {
  Instant t = instant_from_utc(2010, 11, 1, 6, 2, 4);
  CHECK(truncate_to_midnight(t) == instant_from_utc(2010, 11, 1, 0, 0, 0));
  CHECK(truncate_to_midnight(truncate_to_midnight(t)) ==
        truncate_to_midnight(t));
  CHECK(truncate_to_midnight(0) == 0);
  CHECK(truncate_to_midnight(86399) == 0);
  CHECK(truncate_to_midnight(86400) == 86400);
}
