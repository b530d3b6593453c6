#include <doctest.h>

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tmcache/change_classifier.hpp"
#include "tmcache/errors.hpp"
#include "tmcache/tracegen.hpp"

using namespace tmcache;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int n = 0;
    path = fs::temp_directory_path() /
           ("tmcache-tracegen-test-" + std::to_string(::getpid()) + "-" +
            std::to_string(n++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

GeneratorConfig small_config(std::uint64_t seed = 11) {
  GeneratorConfig cfg;
  cfg.n_resources = 6;
  cfg.n_days = 40;
  cfg.seed = seed;
  cfg.mean_change_interval_days = 3;  // busy trace, every kind fires
  return cfg;
}

bool traces_equal(const Trace& a, const Trace& b) {
  if (a.n_resources != b.n_resources || a.n_days != b.n_days) return false;
  if (a.series.size() != b.series.size()) return false;
  for (size_t r = 0; r < a.series.size(); ++r) {
    if (a.series[r].uri_r != b.series[r].uri_r) return false;
    if (a.series[r].snapshots.size() != b.series[r].snapshots.size())
      return false;
    for (size_t t = 0; t < a.series[r].snapshots.size(); ++t) {
      const SnapshotPtr& x = a.series[r].snapshots[t];
      const SnapshotPtr& y = b.series[r].snapshots[t];
      if (!x || !y) return false;
      if (!(*x == *y)) return false;
    }
  }
  return true;
}

std::set<MementoKey> loose_keys(const TimeMapSnapshot& tm) {
  const auto& keys = tm.keys(IdentityPolicy::Loose);
  return {keys.begin(), keys.end()};
}

bool events_equal(const std::vector<EventRecord>& a,
                  const std::vector<EventRecord>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].resource != b[i].resource || a[i].day != b[i].day ||
        a[i].kind != b[i].kind || a[i].archive != b[i].archive ||
        a[i].affected != b[i].affected) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("generation is deterministic in the seed") {
  std::vector<EventRecord> log1, log2, log3;
  Trace t1 = generate(small_config(11), log1);
  Trace t2 = generate(small_config(11), log2);
  Trace t3 = generate(small_config(12), log3);

  CHECK(traces_equal(t1, t2));
  CHECK(events_equal(log1, log2));
  CHECK(!traces_equal(t1, t3));
}

TEST_CASE("generated traces are rectangular with no gaps") {
  Trace trace = generate(small_config());
  CHECK(trace.n_resources == 6);
  CHECK(trace.n_days == 40);
  REQUIRE(trace.series.size() == 6);
  std::set<std::string> uris;
  for (const auto& series : trace.series) {
    uris.insert(series.uri_r);
    CHECK(series.gaps.empty());
    CHECK(series.synthetic.empty());
    REQUIRE(series.snapshots.size() == 40);
    for (Day t = 0; t < 40; ++t) {
      const SnapshotPtr& tm = series.snapshots[t];
      REQUIRE(tm);
      CHECK(tm->uri_r == series.uri_r);
      CHECK(tm->day == t);
      // 404 exactly when the TimeMap is empty.
      CHECK((tm->http_status == 404) == tm->empty());
    }
  }
  CHECK(uris.size() == 6);  // resources are distinct
}

TEST_CASE("quiet days share one memento list across snapshots") {
  GeneratorConfig cfg = small_config();
  cfg.mean_change_interval_days = 0;  // never changes
  Trace trace = generate(cfg);
  for (const auto& series : trace.series) {
    for (Day t = 1; t < trace.n_days; ++t) {
      CHECK(series.snapshots[t]->mementos == series.snapshots[0]->mementos);
    }
  }
}

TEST_CASE("the event log explains every day-over-day change") {
  std::vector<EventRecord> log;
  Trace trace = generate(small_config(21), log);

  std::map<std::pair<int, Day>, std::vector<EventRecord>> by_slot;
  size_t kinds_seen = 0;
  std::set<EventKind> kinds;
  for (const EventRecord& ev : log) {
    by_slot[{ev.resource, ev.day}].push_back(ev);
    kinds.insert(ev.kind);
    CHECK(ev.affected >= 0);
  }
  kinds_seen = kinds.size();
  CHECK(kinds_seen >= 4);  // a busy config exercises most of the repertoire

  for (int r = 0; r < trace.n_resources; ++r) {
    const auto& snaps = trace.series[r].snapshots;
    for (Day t = 1; t < trace.n_days; ++t) {
      bool changed = !(*snaps[t] == *make_snapshot(
                           snaps[t]->uri_r, t, snaps[t]->instant,
                           snaps[t - 1]->http_status, snaps[t - 1]->mementos));
      bool logged = by_slot.count({r, t}) > 0;
      // A change without an event would be unexplained. (Events with no
      // visible effect are fine: an outage of an already-empty archive.)
      if (changed) CHECK(logged);
    }
  }
}

TEST_CASE("outages remove an archive's mementos and recovery restores them") {
  std::vector<EventRecord> log;
  GeneratorConfig cfg = small_config(33);
  cfg.weight_outage = 50;  // make outages dominant
  Trace trace = generate(cfg, log);

  int verified = 0;
  for (size_t i = 0; i < log.size(); ++i) {
    if (log[i].kind != EventKind::ArchiveOutage) continue;
    const EventRecord& out = log[i];
    // Find the matching recovery.
    const EventRecord* rec = nullptr;
    for (size_t j = i + 1; j < log.size(); ++j) {
      if (log[j].resource == out.resource &&
          log[j].kind == EventKind::OutageRecovery) {
        rec = &log[j];
        break;
      }
    }
    REQUIRE(rec);
    REQUIRE(rec->archive == out.archive);
    CHECK(rec->day > out.day);
    CHECK(rec->affected == out.affected);

    const auto& snaps = trace.series[out.resource].snapshots;
    auto hosted_by = [&](const SnapshotPtr& tm) {
      int n = 0;
      for (const auto& m : tm->records()) n += (m.archive == out.archive);
      return n;
    };
    // Gone for the whole outage, back the day it ends.
    CHECK(hosted_by(snaps[out.day - 1]) == out.affected);
    for (Day t = out.day; t < rec->day; ++t) CHECK(hosted_by(snaps[t]) == 0);
    CHECK(hosted_by(snaps[rec->day]) >= out.affected);

    // Recovery brings back the exact loose keys that vanished.
    std::set<MementoKey> before = loose_keys(*snaps[out.day - 1]);
    std::set<MementoKey> after = loose_keys(*snaps[rec->day]);
    for (const MementoKey& k : before) {
      if (k.archive == out.archive) CHECK(after.count(k) == 1);
    }
    ++verified;
  }
  CHECK(verified >= 3);
}

TEST_CASE("redacted mementos never come back") {
  std::vector<EventRecord> log;
  GeneratorConfig cfg = small_config(44);
  cfg.weight_redaction = 40;
  cfg.weight_crawl = 10;
  cfg.redaction_rate = 0.6;
  Trace trace = generate(cfg, log);

  int redactions = 0;
  for (const EventRecord& ev : log) {
    if (ev.kind != EventKind::Redaction) continue;
    ++redactions;
    const auto& snaps = trace.series[ev.resource].snapshots;
    std::set<MementoKey> before = loose_keys(*snaps[ev.day - 1]);
    std::set<MementoKey> at = loose_keys(*snaps[ev.day]);
    std::vector<MementoKey> removed;
    for (const MementoKey& k : before)
      if (!at.count(k)) removed.push_back(k);
    CHECK(!removed.empty());
    // Permanence: a removed key is absent from every later day.
    for (Day t = ev.day; t < trace.n_days; ++t) {
      std::set<MementoKey> later = loose_keys(*snaps[t]);
      for (const MementoKey& k : removed) CHECK(later.count(k) == 0);
    }
  }
  CHECK(redactions >= 3);
}

TEST_CASE("migrations rewrite URI-Ms without touching loose identity") {
  std::vector<EventRecord> log;
  GeneratorConfig cfg = small_config(55);
  cfg.weight_migration = 60;
  cfg.weight_outage = 0;
  cfg.weight_redaction = 0;
  Trace trace = generate(cfg, log);

  int migrations = 0;
  for (const EventRecord& ev : log) {
    if (ev.kind != EventKind::Migration) continue;
    ++migrations;
    const auto& snaps = trace.series[ev.resource].snapshots;
    const TimeMapSnapshot& before = *snaps[ev.day - 1];
    const TimeMapSnapshot& at = *snaps[ev.day];

    CHECK(classify(before, at, IdentityPolicy::Loose) ==
          ChangeCase::Unchanged);
    ChangeDelta strict = change_delta(before, at, IdentityPolicy::Strict);
    CHECK(strict.gained == ev.affected);
    CHECK(strict.lost == ev.affected);
    CHECK(strict.archives_gained == 0);
    CHECK(strict.archives_lost == 0);
  }
  CHECK(migrations >= 3);
}

TEST_CASE("truncating archives report midnight but keep precise URI-Ms") {
  GeneratorConfig cfg = small_config(66);
  cfg.archive_min = 2;
  cfg.archive_max = 2;
  cfg.archive_pool = 2;
  cfg.truncation_archives = {"archive-1.example"};
  Trace trace = generate(cfg);

  int truncated_seen = 0, precise_seen = 0;
  for (const auto& series : trace.series) {
    for (const auto& tm : series.snapshots) {
      for (const MementoRecord& m : tm->records()) {
        if (m.archive == "archive-1.example") {
          CHECK(m.datetime == truncate_to_midnight(m.datetime));
          // The URI-M timestamp keeps seconds the datetime dropped.
          std::string ts = format_timestamp14(m.datetime);
          CHECK(ts.substr(8) == "000000");
          ++truncated_seen;
        } else {
          ++precise_seen;
        }
      }
    }
  }
  CHECK(truncated_seen > 0);
  CHECK(precise_seen > 0);
}

TEST_CASE("new-archive events widen the archive set") {
  std::vector<EventRecord> log;
  GeneratorConfig cfg = small_config(77);
  cfg.archive_min = 1;
  cfg.archive_max = 1;
  cfg.archive_pool = 6;
  cfg.weight_new_archive = 60;
  cfg.weight_outage = 0;
  Trace trace = generate(cfg, log);

  int checked = 0;
  for (const EventRecord& ev : log) {
    if (ev.kind != EventKind::NewArchive) continue;
    const auto& snaps = trace.series[ev.resource].snapshots;
    std::set<ArchiveId> before = archives_of(*snaps[ev.day - 1]);
    std::set<ArchiveId> at = archives_of(*snaps[ev.day]);
    CHECK(before.count(ev.archive) == 0);
    CHECK(at.count(ev.archive) == 1);
    CHECK(ev.affected >= 1);
    ++checked;
  }
  CHECK(checked >= 2);
}

TEST_CASE("an empty-start config begins life as a 404") {
  GeneratorConfig cfg = small_config(88);
  cfg.initial_mementos_min = 0;
  cfg.initial_mementos_max = 0;
  cfg.weight_outage = 0;
  cfg.weight_redaction = 0;
  cfg.weight_migration = 0;
  cfg.weight_new_archive = 0;
  cfg.mean_change_interval_days = 4;
  Trace trace = generate(cfg);
  bool some_resource_grew = false;
  for (const auto& series : trace.series) {
    CHECK(series.snapshots[0]->http_status == 404);
    CHECK(series.snapshots[0]->empty());
    if (!series.snapshots[trace.n_days - 1]->empty()) {
      some_resource_grew = true;
    }
  }
  CHECK(some_resource_grew);  // crawls eventually populate a busy config
}

TEST_CASE("loss-heavy configs produce archive-loss shrink transitions") {
  GeneratorConfig cfg = small_config(99);
  cfg.n_days = 60;
  cfg.weight_outage = 30;
  cfg.weight_crawl = 2;
  Trace trace = generate(cfg);
  int case6 = 0;
  for (const auto& series : trace.series) {
    for (Day t = 1; t < trace.n_days; ++t) {
      if (classify(*series.snapshots[t - 1], *series.snapshots[t],
                   IdentityPolicy::Loose) == ChangeCase::ShrinkArchiveLost) {
        ++case6;
      }
    }
  }
  CHECK(case6 >= 2);
}

TEST_CASE("config text parses into knobs and rejects unknown keys") {
  GeneratorConfig cfg = parse_generator_config(
      "# corpus knobs\n"
      "resources = 4\n"
      "days = 10\n"
      "seed = 42\n"
      "mean_change_interval_days = 2.5\n"
      "archive_min = 2\n"
      "archive_max = 4\n"
      "archive_pool = 9\n"
      "initial_mementos_min = 0\n"
      "initial_mementos_max = 2\n"
      "initial_history_days = 30\n"
      "crawl_batch_min = 2\n"
      "crawl_batch_max = 5\n"
      "weight_crawl = 1\n"
      "weight_outage = 0\n"
      "weight_redaction = 0.5\n"
      "weight_migration = 0\n"
      "weight_new_archive = 2\n"
      "outage_min_days = 3\n"
      "outage_max_days = 4\n"
      "migration_rate = 0.25\n"
      "redaction_rate = 0.75\n"
      "truncation_archives = archive-1.example, archive-2.example\n");
  CHECK(cfg.n_resources == 4);
  CHECK(cfg.n_days == 10);
  CHECK(cfg.seed == 42);
  CHECK(cfg.mean_change_interval_days == doctest::Approx(2.5));
  CHECK(cfg.archive_min == 2);
  CHECK(cfg.archive_max == 4);
  CHECK(cfg.archive_pool == 9);
  CHECK(cfg.initial_mementos_min == 0);
  CHECK(cfg.initial_mementos_max == 2);
  CHECK(cfg.initial_history_days == 30);
  CHECK(cfg.crawl_batch_min == 2);
  CHECK(cfg.crawl_batch_max == 5);
  CHECK(cfg.weight_crawl == doctest::Approx(1));
  CHECK(cfg.weight_redaction == doctest::Approx(0.5));
  CHECK(cfg.weight_new_archive == doctest::Approx(2));
  CHECK(cfg.outage_min_days == 3);
  CHECK(cfg.outage_max_days == 4);
  CHECK(cfg.migration_rate == doctest::Approx(0.25));
  CHECK(cfg.redaction_rate == doctest::Approx(0.75));
  CHECK(cfg.truncation_archives ==
        std::vector<ArchiveId>{"archive-1.example", "archive-2.example"});

  CHECK_THROWS_AS(parse_generator_config("resurces = 4\n"), InvalidConfig);
  CHECK_THROWS_AS(parse_generator_config("days ten\n"), InvalidConfig);
}

TEST_CASE("config validation catches impossible knob settings") {
  auto broken = [](auto mutate) {
    GeneratorConfig cfg;
    mutate(cfg);
    return cfg;
  };
  CHECK_THROWS_AS(
      broken([](GeneratorConfig& c) { c.n_resources = 0; }).validate(),
      InvalidConfig);
  CHECK_THROWS_AS(
      broken([](GeneratorConfig& c) { c.n_days = 0; }).validate(),
      InvalidConfig);
  CHECK_THROWS_AS(
      broken([](GeneratorConfig& c) { c.mean_change_interval_days = 0.5; })
          .validate(),
      InvalidConfig);
  CHECK_THROWS_AS(
      broken([](GeneratorConfig& c) { c.archive_min = 0; }).validate(),
      InvalidConfig);
  CHECK_THROWS_AS(
      broken([](GeneratorConfig& c) { c.archive_max = 9; c.archive_pool = 8; })
          .validate(),
      InvalidConfig);
  CHECK_THROWS_AS(broken([](GeneratorConfig& c) {
                    c.initial_mementos_min = 3;
                    c.initial_mementos_max = 2;
                  }).validate(),
                  InvalidConfig);
  CHECK_THROWS_AS(
      broken([](GeneratorConfig& c) { c.crawl_batch_min = 0; }).validate(),
      InvalidConfig);
  CHECK_THROWS_AS(broken([](GeneratorConfig& c) {
                    c.weight_crawl = 0;
                    c.weight_outage = 0;
                    c.weight_redaction = 0;
                    c.weight_migration = 0;
                    c.weight_new_archive = 0;
                  }).validate(),
                  InvalidConfig);
  CHECK_THROWS_AS(
      broken([](GeneratorConfig& c) { c.weight_crawl = -1; }).validate(),
      InvalidConfig);
  CHECK_THROWS_AS(
      broken([](GeneratorConfig& c) { c.migration_rate = 1.5; }).validate(),
      InvalidConfig);
  CHECK_THROWS_AS(
      broken([](GeneratorConfig& c) { c.outage_min_days = 0; }).validate(),
      InvalidConfig);
  CHECK_NOTHROW(GeneratorConfig{}.validate());
  CHECK_NOTHROW(
      broken([](GeneratorConfig& c) { c.mean_change_interval_days = 0; })
          .validate());  // zero = never changes
}

TEST_CASE("traces survive a disk round trip") {
  TempDir dir;
  Trace trace = generate(small_config(13));
  write_trace(trace, dir.path);
  Trace back = read_trace(dir.path);
  CHECK(traces_equal(trace, back));
  for (const auto& series : back.series) CHECK(series.gaps.empty());

  TempDir empty;
  CHECK_THROWS_AS(read_trace(empty.path), EmptyTrace);
}
