#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "tmcache/change_classifier.hpp"
#include "tmcache/timemap_model.hpp"

namespace tmcache {

enum class PolicyKind { Current, Unconditional, Conditional };

const char* to_string(PolicyKind kind);
std::optional<PolicyKind> parse_policy(const std::string& name);

/// Time-to-live in whole days; TTL=0 means nothing is ever fresh,
/// infinite means an entry never expires.
class Ttl {
 public:
  static Ttl finite(int days);
  static Ttl infinite();

  bool is_infinite() const { return infinite_; }
  int days() const;  // finite TTLs only

  bool fresh(Day now, Day last_fetch_at) const {
    return infinite_ || now - last_fetch_at < days_;
  }

  /// "inf" or a non-negative integer.
  static std::optional<Ttl> parse(const std::string& text);
  std::string to_string() const;

  friend bool operator==(const Ttl&, const Ttl&) = default;

 private:
  Ttl(bool infinite, int days) : infinite_(infinite), days_(days) {}
  bool infinite_ = false;
  int days_ = 0;
};

struct CacheEntry {
  SnapshotPtr snapshot;
  Day stored_at = 0;
  Day last_fetch_at = 0;
  /// Exact upstream bytes, when the caller has them; served verbatim by
  /// the proxy and preserved across persistence round-trips.
  std::shared_ptr<const std::string> raw_body;
};

struct CacheDecision {
  enum class Outcome { Stored, RejectedNotImprovement, RejectedFirstWriteWins };
  Outcome outcome = Outcome::Stored;
  /// Present iff an existing entry was compared against the offer.
  std::optional<ChangeCase> change_case;

  bool stored() const { return outcome == Outcome::Stored; }
};

struct LookupResult {
  enum class State { Fresh, Stale, Absent };
  State state = State::Absent;
  SnapshotPtr snapshot;  // null iff Absent

  bool fresh() const { return state == State::Fresh; }
  bool absent() const { return state == State::Absent; }
};

/// TTL cache over TimeMap snapshots, keyed by URI-R, with three
/// replacement policies:
///   Current        first write wins, later fetches never replace;
///   Unconditional  every fetch replaces;
///   Conditional    a fetch replaces only when it classifies as an
///                  improvement (cases 2-5) AND does not lower the
///                  cached cardinality under the identity policy. The
///                  cardinality guard keeps the cached TimeMap at the
///                  best cardinality seen so far, so a churny fetch
///                  that trades many mementos for few cannot regress
///                  the cache.
/// Freshness: every offer under a non-Current policy restamps
/// last_fetch_at, accepted or not; Current entries keep their original
/// timestamp.
class TimeMapCache {
 public:
  TimeMapCache(PolicyKind policy, Ttl ttl,
               IdentityPolicy identity = IdentityPolicy::Loose);

  LookupResult lookup(const std::string& uri_r, Day now) const;

  /// Record the result of one upstream fetch. Call exactly once per
  /// fetch. Throws MismatchedResource when fetched->uri_r != uri_r.
  CacheDecision offer(const std::string& uri_r, SnapshotPtr fetched, Day now,
                      std::shared_ptr<const std::string> raw_body = nullptr);

  /// Remove one entry, or everything when uri_r is empty.
  size_t purge(const std::optional<std::string>& uri_r = std::nullopt);

  std::optional<CacheEntry> entry(const std::string& uri_r) const;
  std::vector<std::string> keys() const;  // unordered
  size_t size() const;

  PolicyKind policy() const { return policy_; }
  Ttl ttl() const { return ttl_; }
  IdentityPolicy identity() const { return identity_; }

  /// Persist every entry to `dir` in the snapshot-store layout plus a
  /// `cache.index` file carrying the bookkeeping days.
  void save(const std::filesystem::path& dir) const;

  /// Rebuild a cache persisted by save(). Policy settings come from the
  /// caller, not the store. Missing directory yields an empty cache.
  static TimeMapCache load(const std::filesystem::path& dir, PolicyKind policy,
                           Ttl ttl,
                           IdentityPolicy identity = IdentityPolicy::Loose);

 private:
  PolicyKind policy_;
  Ttl ttl_;
  IdentityPolicy identity_;
  // Owned indirectly so the cache stays movable (load() returns by value).
  mutable std::unique_ptr<std::shared_mutex> mu_;
  std::unordered_map<std::string, CacheEntry> entries_;
};

}  // namespace tmcache
