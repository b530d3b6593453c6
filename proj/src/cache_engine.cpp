#include "tmcache/cache_engine.hpp"

#include <fstream>
#include <mutex>
#include <sstream>

#include "tmcache/errors.hpp"
#include "tmcache/linkformat.hpp"
#include "tmcache/snapshot_store.hpp"
#include "tmcache/uri.hpp"

namespace tmcache {

namespace fs = std::filesystem;

const char* to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Current:
      return "current";
    case PolicyKind::Unconditional:
      return "unconditional";
    default:
      return "conditional";
  }
}

std::optional<PolicyKind> parse_policy(const std::string& name) {
  if (name == "current") return PolicyKind::Current;
  if (name == "unconditional") return PolicyKind::Unconditional;
  if (name == "conditional") return PolicyKind::Conditional;
  return std::nullopt;
}

Ttl Ttl::finite(int days) {
  if (days < 0) throw InvalidConfig("ttl must be >= 0");
  return Ttl(false, days);
}

Ttl Ttl::infinite() { return Ttl(true, 0); }

int Ttl::days() const {
  if (infinite_) throw InvalidConfig("infinite ttl has no day count");
  return days_;
}

std::optional<Ttl> Ttl::parse(const std::string& text) {
  if (text == "inf") return infinite();
  if (text.empty() ||
      text.find_first_not_of("0123456789") != std::string::npos) {
    return std::nullopt;
  }
  try {
    return finite(std::stoi(text));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::string Ttl::to_string() const {
  return infinite_ ? "inf" : std::to_string(days_);
}

TimeMapCache::TimeMapCache(PolicyKind policy, Ttl ttl, IdentityPolicy identity)
    : policy_(policy),
      ttl_(ttl),
      identity_(identity),
      mu_(std::make_unique<std::shared_mutex>()) {}

LookupResult TimeMapCache::lookup(const std::string& uri_r, Day now) const {
  std::shared_lock lock(*mu_);
  auto it = entries_.find(uri_r);
  if (it == entries_.end()) return {};
  LookupResult result;
  result.state = ttl_.fresh(now, it->second.last_fetch_at)
                     ? LookupResult::State::Fresh
                     : LookupResult::State::Stale;
  result.snapshot = it->second.snapshot;
  return result;
}

CacheDecision TimeMapCache::offer(const std::string& uri_r, SnapshotPtr fetched,
                                  Day now,
                                  std::shared_ptr<const std::string> raw_body) {
  if (!fetched) throw InvalidSnapshot("offer of null snapshot: " + uri_r);
  if (fetched->uri_r != uri_r) {
    throw MismatchedResource(uri_r + " vs " + fetched->uri_r);
  }
  std::unique_lock lock(*mu_);
  auto it = entries_.find(uri_r);
  if (it == entries_.end()) {
    entries_[uri_r] =
        CacheEntry{std::move(fetched), now, now, std::move(raw_body)};
    return {CacheDecision::Outcome::Stored, std::nullopt};
  }
  CacheEntry& entry = it->second;
  switch (policy_) {
    case PolicyKind::Current:
      return {CacheDecision::Outcome::RejectedFirstWriteWins, std::nullopt};
    case PolicyKind::Unconditional:
      entry = CacheEntry{std::move(fetched), now, now, std::move(raw_body)};
      return {CacheDecision::Outcome::Stored, std::nullopt};
    case PolicyKind::Conditional:
    default: {
      ChangeCase change = classify(*entry.snapshot, *fetched, identity_);
      bool replace = is_improvement(change) &&
                     fetched->cardinality(identity_) >=
                         entry.snapshot->cardinality(identity_);
      entry.last_fetch_at = now;
      if (!replace) {
        return {CacheDecision::Outcome::RejectedNotImprovement, change};
      }
      entry.snapshot = std::move(fetched);
      entry.stored_at = now;
      entry.raw_body = std::move(raw_body);
      return {CacheDecision::Outcome::Stored, change};
    }
  }
}

size_t TimeMapCache::purge(const std::optional<std::string>& uri_r) {
  std::unique_lock lock(*mu_);
  if (!uri_r) {
    size_t n = entries_.size();
    entries_.clear();
    return n;
  }
  return entries_.erase(*uri_r);
}

std::optional<CacheEntry> TimeMapCache::entry(const std::string& uri_r) const {
  std::shared_lock lock(*mu_);
  auto it = entries_.find(uri_r);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> TimeMapCache::keys() const {
  std::shared_lock lock(*mu_);
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [uri_r, entry] : entries_) out.push_back(uri_r);
  return out;
}

size_t TimeMapCache::size() const {
  std::shared_lock lock(*mu_);
  return entries_.size();
}

void TimeMapCache::save(const fs::path& dir) const {
  std::shared_lock lock(*mu_);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoFailure("cannot create " + dir.string());
  std::ostringstream index;
  for (const auto& [uri_r, entry] : entries_) {
    SnapshotRecord record;
    record.uri_r = uri_r;
    record.day = entry.stored_at;
    record.instant = entry.snapshot->instant;
    record.http_status = entry.snapshot->http_status;
    record.body = entry.raw_body
                      ? *entry.raw_body
                      : serialize_timemap(raw_from_snapshot(*entry.snapshot));
    write_record(dir, record);
    index << percent_encode(uri_r) << ' ' << entry.stored_at << ' '
          << entry.last_fetch_at << '\n';
  }
  std::ofstream out(dir / "cache.index", std::ios::trunc);
  if (!out) throw IoFailure("cannot write cache.index");
  out << index.str();
  out.flush();
  if (!out) throw IoFailure("write failed for cache.index");
}

TimeMapCache TimeMapCache::load(const fs::path& dir, PolicyKind policy,
                                Ttl ttl, IdentityPolicy identity) {
  TimeMapCache cache(policy, ttl, identity);
  fs::path index_path = dir / "cache.index";
  if (!fs::exists(index_path)) return cache;
  std::ifstream in(index_path);
  if (!in) throw IoFailure("cannot read " + index_path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string encoded;
    Day stored_at = 0, last_fetch_at = 0;
    if (!(fields >> encoded >> stored_at >> last_fetch_at)) {
      throw CorruptStore("bad cache.index line: " + line);
    }
    std::string uri_r = percent_decode(encoded);
    std::optional<SnapshotRecord> record = read_record(dir, stored_at, uri_r);
    if (!record) throw CorruptStore("cache.index names missing record: " +
                                    uri_r);
    CacheEntry entry;
    entry.stored_at = stored_at;
    entry.last_fetch_at = last_fetch_at;
    entry.raw_body = std::make_shared<const std::string>(record->body);
    if (record->http_status == 404) {
      entry.snapshot = make_snapshot(uri_r, stored_at, record->instant, 404,
                                     MementoListPtr{});
    } else {
      RawTimeMap raw = parse_timemap(record->body, uri_r);
      entry.snapshot =
          snapshot_from_raw(raw, ArchiveRules::defaults(), uri_r, stored_at,
                            record->instant, record->http_status);
    }
    cache.entries_[uri_r] = std::move(entry);
  }
  return cache;
}

}  // namespace tmcache
