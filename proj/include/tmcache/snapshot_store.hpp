#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tmcache/dtime.hpp"
#include "tmcache/timemap_model.hpp"

namespace tmcache {

/// One persisted observation: the raw response body for (uri_r, day)
/// plus enough metadata to rebuild a snapshot. Status 0 records a
/// transport failure (no usable body); 404 records an observed empty
/// TimeMap, which is real data, not a failure.
struct SnapshotRecord {
  std::string uri_r;
  Day day = 0;
  Instant instant = 0;
  int http_status = 0;
  std::string body;

  friend bool operator==(const SnapshotRecord&, const SnapshotRecord&) =
      default;
};

std::string sha256_hex(const std::string& bytes);

/// Layout: `<root>/<day>/<percent-encoded uri_r>.tm` holds the body;
/// the sibling `.meta` file holds one line:
/// `status=<int> instant=<ISO-8601> sha256=<hex>`.
void write_record(const std::filesystem::path& root,
                  const SnapshotRecord& record);

/// nullopt when the (day, uri_r) pair has no record. Throws CorruptStore
/// when the meta file is malformed or the checksum does not match.
std::optional<SnapshotRecord> read_record(const std::filesystem::path& root,
                                          Day day, const std::string& uri_r);

/// Day indices present under root, ascending.
std::vector<Day> list_days(const std::filesystem::path& root);

/// URI-Rs recorded for one day, sorted.
std::vector<std::string> list_uris(const std::filesystem::path& root, Day day);

/// Assemble one resource's daily series from the store. Days covered by
/// the store but missing for this resource, transport failures, other
/// HTTP errors, and unparseable bodies become gap days; HTTP 404 becomes
/// an observed empty snapshot.
ObservationSeries load_series(
    const std::filesystem::path& root, const std::string& uri_r,
    const ArchiveRules& rules = ArchiveRules::defaults());

}  // namespace tmcache
