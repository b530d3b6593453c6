#include "tmcache/timemap_model.hpp"

#include <algorithm>
#include <sstream>
#include <utility>

#include "tmcache/errors.hpp"
#include "tmcache/uri.hpp"

namespace tmcache {

ArchiveRules::ArchiveRules(std::vector<ArchiveRule> rules)
    : rules_(std::move(rules)) {
  for (ArchiveRule& rule : rules_) {
    rule.prefix = normalize_uri_prefix_form(rule.prefix);
    if (rule.id.empty()) throw InvalidConfig("archive rule with empty id");
  }
}

const ArchiveRules& ArchiveRules::defaults() {
  static const ArchiveRules table{{
      {"http://api.wayback.archive.org/", "api.wayback.archive.org"},
      {"https://api.wayback.archive.org/", "api.wayback.archive.org"},
      {"http://web.archive.org/", "web.archive.org"},
      {"https://web.archive.org/", "web.archive.org"},
      {"http://webarchive.nationalarchives.gov.uk/",
       "webarchive.nationalarchives.gov.uk"},
      {"https://webarchive.nationalarchives.gov.uk/",
       "webarchive.nationalarchives.gov.uk"},
  }};
  return table;
}

ArchiveRules ArchiveRules::parse(const std::string& text) {
  std::vector<ArchiveRule> rules;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    std::istringstream fields(line);
    ArchiveRule rule;
    if (!(fields >> rule.prefix >> rule.id)) {
      throw InvalidConfig("archive rule needs `<uri-prefix> <archive-id>`: " +
                          line);
    }
    std::string extra;
    if (fields >> extra) {
      throw InvalidConfig("trailing fields in archive rule: " + line);
    }
    rules.push_back(std::move(rule));
  }
  return ArchiveRules(std::move(rules));
}

ArchiveId ArchiveRules::archive_of(const std::string& uri_m) const {
  auto parts = parse_uri(uri_m);
  if (!parts) throw InvalidUri("not an absolute URI: " + uri_m);
  std::string normalized = normalize_uri_prefix_form(uri_m);
  const ArchiveRule* best = nullptr;
  for (const ArchiveRule& rule : rules_) {
    if (normalized.starts_with(rule.prefix) &&
        (!best || rule.prefix.size() > best->prefix.size())) {
      best = &rule;
    }
  }
  if (best) return best->id;
  return parts->host;
}

ArchiveId archive_of(const std::string& uri_m) {
  return ArchiveRules::defaults().archive_of(uri_m);
}

const char* to_string(IdentityPolicy policy) {
  return policy == IdentityPolicy::Strict ? "strict" : "loose";
}

std::optional<IdentityPolicy> parse_identity(const std::string& name) {
  if (name == "strict") return IdentityPolicy::Strict;
  if (name == "loose") return IdentityPolicy::Loose;
  return std::nullopt;
}

MementoKey memento_key(const MementoRecord& m, IdentityPolicy policy) {
  MementoKey key;
  if (policy == IdentityPolicy::Strict) {
    key.uri_m = m.uri_m;
  } else {
    key.archive = m.archive;
    key.datetime = m.datetime;
    key.uri_r = m.uri_r;
  }
  return key;
}

namespace {

template <typename T>
void sort_unique(std::vector<T>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

MementoList::MementoList(std::vector<MementoRecord> records)
    : records_(std::move(records)) {
  keys_strict_.reserve(records_.size());
  keys_loose_.reserve(records_.size());
  archives_.reserve(records_.size());
  for (const MementoRecord& m : records_) {
    keys_strict_.push_back(memento_key(m, IdentityPolicy::Strict));
    keys_loose_.push_back(memento_key(m, IdentityPolicy::Loose));
    archives_.push_back(m.archive);
  }
  sort_unique(keys_strict_);
  sort_unique(keys_loose_);
  sort_unique(archives_);
}

std::shared_ptr<const MementoList> MementoList::make(
    std::vector<MementoRecord> records) {
  if (records.empty()) return none();
  return std::shared_ptr<const MementoList>(
      new MementoList(std::move(records)));
}

const std::shared_ptr<const MementoList>& MementoList::none() {
  static const std::shared_ptr<const MementoList> empty{new MementoList({})};
  return empty;
}

const std::vector<MementoKey>& MementoList::keys(IdentityPolicy policy) const {
  return policy == IdentityPolicy::Strict ? keys_strict_ : keys_loose_;
}

SnapshotPtr make_snapshot(std::string uri_r, Day day, Instant instant,
                          int http_status, MementoListPtr mementos) {
  if (uri_r.empty()) throw InvalidSnapshot("snapshot with empty uri_r");
  if (!mementos) mementos = MementoList::none();
  if (http_status == 404 && !mementos->records().empty()) {
    throw InvalidSnapshot("404 snapshot must have no mementos: " + uri_r);
  }
  for (const MementoRecord& m : mementos->records()) {
    if (m.uri_m.empty()) throw InvalidSnapshot("memento with empty uri_m");
    if (m.uri_r != uri_r) {
      throw InvalidSnapshot("memento uri_r does not match snapshot: " + uri_r);
    }
  }
  auto tm = std::make_shared<TimeMapSnapshot>();
  tm->uri_r = std::move(uri_r);
  tm->day = day;
  tm->instant = instant;
  tm->http_status = http_status;
  tm->mementos = std::move(mementos);
  return tm;
}

SnapshotPtr make_snapshot(std::string uri_r, Day day, Instant instant,
                          int http_status,
                          std::vector<MementoRecord> records) {
  for (MementoRecord& m : records) m.uri_r = uri_r;
  return make_snapshot(std::move(uri_r), day, instant, http_status,
                       MementoList::make(std::move(records)));
}

SnapshotPtr snapshot_from_raw(const RawTimeMap& raw, const ArchiveRules& rules,
                              std::string uri_r, Day day, Instant instant,
                              int http_status) {
  std::vector<MementoRecord> records;
  for (const LinkEntry* entry : raw.memento_entries()) {
    MementoRecord m;
    m.uri_m = entry->target;
    m.datetime = *entry->datetime;
    m.archive = rules.archive_of(entry->target);
    records.push_back(std::move(m));
  }
  return make_snapshot(std::move(uri_r), day, instant, http_status,
                       std::move(records));
}

RawTimeMap raw_from_snapshot(const TimeMapSnapshot& tm) {
  RawTimeMap raw;
  LinkEntry original;
  original.target = tm.uri_r;
  original.rel.push_back("original");
  raw.entries.push_back(std::move(original));
  raw.original = tm.uri_r;
  for (const MementoRecord& m : tm.records()) {
    LinkEntry entry;
    entry.target = m.uri_m;
    entry.rel.push_back("memento");
    entry.datetime = m.datetime;
    raw.entries.push_back(std::move(entry));
  }
  return raw;
}

int cardinality(const TimeMapSnapshot& tm, IdentityPolicy policy) {
  return tm.cardinality(policy);
}

std::set<ArchiveId> archives_of(const TimeMapSnapshot& tm) {
  const std::vector<ArchiveId>& ids = tm.mementos->archives();
  return {ids.begin(), ids.end()};
}

std::set<MementoKey> cumulative_set(const ObservationSeries& series,
                                    Day upto_t, IdentityPolicy policy) {
  std::set<MementoKey> keys;
  for (Day t = 0; t <= upto_t && t < static_cast<Day>(series.snapshots.size());
       ++t) {
    const SnapshotPtr& tm = series.snapshots[t];
    if (!tm) continue;
    keys.insert(tm->keys(policy).begin(), tm->keys(policy).end());
  }
  return keys;
}

bool is_monotone_step(const TimeMapSnapshot& prev, const TimeMapSnapshot& next,
                      IdentityPolicy policy) {
  if (prev.uri_r != next.uri_r) {
    throw MismatchedResource(prev.uri_r + " vs " + next.uri_r);
  }
  return next.cardinality(policy) >= prev.cardinality(policy);
}

}  // namespace tmcache
