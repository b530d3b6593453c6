#include "tmcache/dtime.hpp"

#include <array>
#include <cctype>
#include <cstdio>

namespace tmcache {

namespace {

const std::array<const char*, 12> kMonthNames = {
    "Jan", "Feb", "Mar", "Apr", "May", "Jun",
    "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

const std::array<const char*, 7> kWeekdayNames = {
    "Thu", "Fri", "Sat", "Sun", "Mon", "Tue", "Wed"};  // day 0 = 1970-01-01

bool iequals3(const char* a, const char* b) {
  for (int i = 0; i < 3; ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

// Howard Hinnant's civil-date algorithms.
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return CivilDate{static_cast<int>(y + (m <= 2)), m, d};
}

Instant instant_from_utc(int year, unsigned month, unsigned day, unsigned hour,
                         unsigned minute, unsigned second) {
  return days_from_civil(year, month, day) * kSecondsPerDay + hour * 3600 +
         minute * 60 + second;
}

std::optional<Instant> parse_rfc1123(const std::string& text) {
  // Ddd, DD Mon YYYY hh:mm:ss GMT
  const char* p = text.c_str();
  size_t n = text.size();
  size_t i = 0;
  auto skip_ws = [&] {
    while (i < n && (p[i] == ' ' || p[i] == '\t')) ++i;
  };
  skip_ws();
  if (n - i < 3) return std::nullopt;
  bool weekday_ok = false;
  for (const char* w : kWeekdayNames) {
    if (iequals3(p + i, w)) {
      weekday_ok = true;
      break;
    }
  }
  if (!weekday_ok) return std::nullopt;
  i += 3;
  if (i >= n || p[i] != ',') return std::nullopt;
  ++i;
  skip_ws();

  auto read_int = [&](int max_digits) -> std::optional<int> {
    int v = 0, digits = 0;
    while (i < n && std::isdigit(static_cast<unsigned char>(p[i])) &&
           digits < max_digits) {
      v = v * 10 + (p[i] - '0');
      ++i;
      ++digits;
    }
    if (digits == 0) return std::nullopt;
    return v;
  };

  auto day = read_int(2);
  if (!day || *day < 1 || *day > 31) return std::nullopt;
  skip_ws();
  if (n - i < 3) return std::nullopt;
  int month = 0;
  for (int m = 0; m < 12; ++m) {
    if (iequals3(p + i, kMonthNames[m])) {
      month = m + 1;
      break;
    }
  }
  if (month == 0) return std::nullopt;
  i += 3;
  skip_ws();
  auto year = read_int(4);
  if (!year || *year < 1000) return std::nullopt;
  skip_ws();
  auto hour = read_int(2);
  if (!hour || *hour > 23 || i >= n || p[i] != ':') return std::nullopt;
  ++i;
  auto minute = read_int(2);
  if (!minute || *minute > 59 || i >= n || p[i] != ':') return std::nullopt;
  ++i;
  auto second = read_int(2);
  if (!second || *second > 60) return std::nullopt;
  skip_ws();
  if (n - i < 3) return std::nullopt;
  // Accept GMT or UTC; anything else is malformed.
  if (!iequals3(p + i, "GMT") && !iequals3(p + i, "UTC")) return std::nullopt;
  i += 3;
  skip_ws();
  if (i != n) return std::nullopt;
  return instant_from_utc(*year, static_cast<unsigned>(month),
                          static_cast<unsigned>(*day),
                          static_cast<unsigned>(*hour),
                          static_cast<unsigned>(*minute),
                          static_cast<unsigned>(*second));
}

std::string format_rfc1123(Instant t) {
  const std::int64_t days = floor_div(t, kSecondsPerDay);
  const std::int64_t sod = t - days * kSecondsPerDay;
  const CivilDate cd = civil_from_days(days);
  const char* wd = kWeekdayNames[((days % 7) + 7) % 7];
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s, %02u %s %04d %02lld:%02lld:%02lld GMT",
                wd, cd.day, kMonthNames[cd.month - 1], cd.year,
                static_cast<long long>(sod / 3600),
                static_cast<long long>((sod / 60) % 60),
                static_cast<long long>(sod % 60));
  return buf;
}

std::string format_iso8601(Instant t) {
  const std::int64_t days = floor_div(t, kSecondsPerDay);
  const std::int64_t sod = t - days * kSecondsPerDay;
  const CivilDate cd = civil_from_days(days);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lldZ",
                cd.year, cd.month, cd.day,
                static_cast<long long>(sod / 3600),
                static_cast<long long>((sod / 60) % 60),
                static_cast<long long>(sod % 60));
  return buf;
}

std::optional<Instant> parse_iso8601(const std::string& text) {
  int y, mo, d, h, mi, s;
  char z = 0;
  if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &y, &mo, &d, &h,
                  &mi, &s, &z) != 7 ||
      z != 'Z') {
    return std::nullopt;
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 60) {
    return std::nullopt;
  }
  return instant_from_utc(y, static_cast<unsigned>(mo),
                          static_cast<unsigned>(d), static_cast<unsigned>(h),
                          static_cast<unsigned>(mi), static_cast<unsigned>(s));
}

std::string format_timestamp14(Instant t) {
  const std::int64_t days = floor_div(t, kSecondsPerDay);
  const std::int64_t sod = t - days * kSecondsPerDay;
  const CivilDate cd = civil_from_days(days);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d%02u%02u%02lld%02lld%02lld", cd.year,
                cd.month, cd.day, static_cast<long long>(sod / 3600),
                static_cast<long long>((sod / 60) % 60),
                static_cast<long long>(sod % 60));
  return buf;
}

Instant truncate_to_midnight(Instant t) {
  return floor_div(t, kSecondsPerDay) * kSecondsPerDay;
}

}  // namespace tmcache
