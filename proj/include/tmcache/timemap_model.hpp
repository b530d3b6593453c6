#pragma once

#include <compare>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tmcache/dtime.hpp"
#include "tmcache/linkformat.hpp"

namespace tmcache {

using ArchiveId = std::string;

/// One prefix rule: URIs starting with `prefix` (scheme+host lowercased)
/// belong to archive `id`.
struct ArchiveRule {
  std::string prefix;
  ArchiveId id;
};

/// Ordered prefix-rule table mapping URI-Ms to hosting archives. The
/// longest matching prefix wins; ties go to the earlier rule. URIs that
/// match no rule fall back to their lowercased host.
class ArchiveRules {
 public:
  ArchiveRules() = default;
  explicit ArchiveRules(std::vector<ArchiveRule> rules);

  /// Built-in table covering the major public archives.
  static const ArchiveRules& defaults();

  /// One rule per line: `<uri-prefix> <archive-id>`. Blank lines and
  /// lines starting with '#' are ignored.
  static ArchiveRules parse(const std::string& text);

  ArchiveId archive_of(const std::string& uri_m) const;

  const std::vector<ArchiveRule>& rules() const { return rules_; }

 private:
  std::vector<ArchiveRule> rules_;
};

/// Shorthand using the default rule table.
ArchiveId archive_of(const std::string& uri_m);

/// One archived capture: the memento at `uri_m`, taken at `datetime`,
/// hosted by `archive`, for the original resource `uri_r`.
struct MementoRecord {
  std::string uri_m;
  Instant datetime = 0;
  ArchiveId archive;
  std::string uri_r;

  friend bool operator==(const MementoRecord&, const MementoRecord&) = default;
};

enum class IdentityPolicy { Strict, Loose };

const char* to_string(IdentityPolicy policy);
std::optional<IdentityPolicy> parse_identity(const std::string& name);

/// Identity of a memento under one policy. Strict keys carry only the
/// URI-M; Loose keys carry (archive, datetime, uri_r). Keys from
/// different policies are never compared.
struct MementoKey {
  std::string uri_m;
  ArchiveId archive;
  Instant datetime = 0;
  std::string uri_r;

  friend auto operator<=>(const MementoKey&, const MementoKey&) = default;
};

MementoKey memento_key(const MementoRecord& m, IdentityPolicy policy);

/// Immutable memento list shared between snapshots of unchanged days.
/// Distinct keys and the archive set are computed once at construction.
class MementoList {
 public:
  static std::shared_ptr<const MementoList> make(
      std::vector<MementoRecord> records);
  static const std::shared_ptr<const MementoList>& none();

  const std::vector<MementoRecord>& records() const { return records_; }

  /// Sorted, deduplicated keys under the policy.
  const std::vector<MementoKey>& keys(IdentityPolicy policy) const;

  /// Sorted, deduplicated archive ids over the records.
  const std::vector<ArchiveId>& archives() const { return archives_; }

  int cardinality(IdentityPolicy policy) const {
    return static_cast<int>(keys(policy).size());
  }

 private:
  explicit MementoList(std::vector<MementoRecord> records);

  std::vector<MementoRecord> records_;
  std::vector<MementoKey> keys_strict_;
  std::vector<MementoKey> keys_loose_;
  std::vector<ArchiveId> archives_;
};

using MementoListPtr = std::shared_ptr<const MementoList>;

/// One day's observation of a resource's TimeMap.
struct TimeMapSnapshot {
  std::string uri_r;
  Day day = 0;
  Instant instant = 0;
  int http_status = 200;
  MementoListPtr mementos = MementoList::none();

  const std::vector<MementoRecord>& records() const {
    return mementos->records();
  }
  const std::vector<MementoKey>& keys(IdentityPolicy policy) const {
    return mementos->keys(policy);
  }
  int cardinality(IdentityPolicy policy) const {
    return mementos->cardinality(policy);
  }
  bool empty() const { return records().empty(); }

  friend bool operator==(const TimeMapSnapshot& a, const TimeMapSnapshot& b) {
    return a.uri_r == b.uri_r && a.day == b.day && a.instant == b.instant &&
           a.http_status == b.http_status &&
           (a.mementos == b.mementos ||
            a.mementos->records() == b.mementos->records());
  }
};

using SnapshotPtr = std::shared_ptr<const TimeMapSnapshot>;

/// Validating constructor. Every record's uri_r is forced to the
/// snapshot's uri_r: the resource identity comes from the observation,
/// not from whatever URI-R spelling each URI-M happens to embed.
/// Throws InvalidSnapshot when a 404 carries mementos or uri_r is empty.
SnapshotPtr make_snapshot(std::string uri_r, Day day, Instant instant,
                          int http_status, std::vector<MementoRecord> records);

/// Same validation, reusing an already-built list (COW path).
SnapshotPtr make_snapshot(std::string uri_r, Day day, Instant instant,
                          int http_status, MementoListPtr mementos);

/// Build a snapshot from a parsed link-format document. `uri_r` is the
/// requested resource and wins over the document's own original link.
SnapshotPtr snapshot_from_raw(const RawTimeMap& raw, const ArchiveRules& rules,
                              std::string uri_r, Day day, Instant instant,
                              int http_status);

/// Inverse of snapshot_from_raw: an original link followed by one
/// memento link per record, in record order.
RawTimeMap raw_from_snapshot(const TimeMapSnapshot& tm);

int cardinality(const TimeMapSnapshot& tm, IdentityPolicy policy);
std::set<ArchiveId> archives_of(const TimeMapSnapshot& tm);

/// Daily observations of one resource. `snapshots[t]` is null on gap
/// days until the simulator fills them. `gaps` records days with no
/// successful observation; `synthetic` marks leading days that were
/// filled with an invented empty snapshot rather than real data.
struct ObservationSeries {
  std::string uri_r;
  std::vector<SnapshotPtr> snapshots;
  std::set<Day> gaps;
  std::set<Day> synthetic;
};

/// Union of memento keys over snapshots 0..upto_t. Gap days (null
/// snapshots) contribute nothing.
std::set<MementoKey> cumulative_set(const ObservationSeries& series,
                                    Day upto_t, IdentityPolicy policy);

/// True iff cardinality did not drop from prev to next.
/// Throws MismatchedResource when the snapshots cover different URI-Rs.
bool is_monotone_step(const TimeMapSnapshot& prev, const TimeMapSnapshot& next,
                      IdentityPolicy policy);

}  // namespace tmcache
