#ifndef TMCACHE_DTIME_HPP
#define TMCACHE_DTIME_HPP

#include <cstdint>
#include <optional>
#include <string>

namespace tmcache {

/// Seconds since the Unix epoch, UTC. All datetime comparisons in this
/// project happen at second precision in UTC.
using Instant = std::int64_t;

/// Observation day index (one snapshot per day).
using Day = int;

constexpr Instant kSecondsPerDay = 86400;

/// Days since 1970-01-01 for a proleptic Gregorian civil date.
std::int64_t days_from_civil(int year, unsigned month, unsigned day);

struct CivilDate {
  int year;
  unsigned month;
  unsigned day;
};

/// Inverse of days_from_civil.
CivilDate civil_from_days(std::int64_t days);

/// Build an instant from civil date and time-of-day, UTC.
Instant instant_from_utc(int year, unsigned month, unsigned day, unsigned hour,
                         unsigned minute, unsigned second);

/// Parse an RFC 1123 datetime, e.g. "Thu, 13 Dec 2007 00:21:02 GMT".
/// Returns nullopt on malformed input. The weekday name is validated for
/// shape but not checked against the date.
std::optional<Instant> parse_rfc1123(const std::string& text);

/// Format as RFC 1123, always with a correct weekday and "GMT".
std::string format_rfc1123(Instant t);

/// Format as "YYYY-MM-DDThh:mm:ssZ".
std::string format_iso8601(Instant t);

/// Parse "YYYY-MM-DDThh:mm:ssZ". Returns nullopt on malformed input.
std::optional<Instant> parse_iso8601(const std::string& text);

/// Format as the 14-digit "YYYYMMDDhhmmss" form used in archive URI-M paths.
std::string format_timestamp14(Instant t);

/// Zero out the time-of-day portion, keeping the civil date.
Instant truncate_to_midnight(Instant t);

}  // namespace tmcache

#endif  // TMCACHE_DTIME_HPP
