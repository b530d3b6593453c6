#include "tmcache/tracegen.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <utility>

#include "tmcache/errors.hpp"
#include "tmcache/linkformat.hpp"
#include "tmcache/snapshot_store.hpp"

namespace tmcache {

namespace fs = std::filesystem;

void GeneratorConfig::validate() const {
  auto fail = [](const std::string& msg) { throw InvalidConfig(msg); };
  if (n_resources < 1) fail("n_resources must be >= 1");
  if (n_days < 1) fail("n_days must be >= 1");
  if (mean_change_interval_days != 0 && mean_change_interval_days < 1) {
    fail("mean_change_interval_days must be 0 (never) or >= 1");
  }
  if (archive_min < 1) fail("archive_min must be >= 1");
  if (archive_max < archive_min) fail("archive_max < archive_min");
  if (archive_pool < archive_max) fail("archive_pool < archive_max");
  if (initial_mementos_min < 0) fail("initial_mementos_min must be >= 0");
  if (initial_mementos_max < initial_mementos_min) {
    fail("initial_mementos_max < initial_mementos_min");
  }
  if (initial_history_days < 1) fail("initial_history_days must be >= 1");
  if (crawl_batch_min < 1) fail("crawl_batch_min must be >= 1");
  if (crawl_batch_max < crawl_batch_min) {
    fail("crawl_batch_max < crawl_batch_min");
  }
  const double weights[] = {weight_crawl, weight_outage, weight_redaction,
                            weight_migration, weight_new_archive};
  double total = 0;
  for (double w : weights) {
    if (w < 0) fail("event weights must be >= 0");
    total += w;
  }
  if (total <= 0) fail("at least one event weight must be positive");
  if (outage_min_days < 1) fail("outage_min_days must be >= 1");
  if (outage_max_days < outage_min_days) {
    fail("outage_max_days < outage_min_days");
  }
  if (migration_rate < 0 || migration_rate > 1) {
    fail("migration_rate must be in [0,1]");
  }
  if (redaction_rate < 0 || redaction_rate > 1) {
    fail("redaction_rate must be in [0,1]");
  }
}

namespace {

std::string trim_copy(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

GeneratorConfig parse_generator_config(const std::string& text) {
  GeneratorConfig cfg;
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    std::string s = trim_copy(line);
    if (s.empty() || s[0] == '#') continue;
    size_t eq = s.find('=');
    if (eq == std::string::npos) {
      throw InvalidConfig("config line " + std::to_string(lineno) +
                          " is not `key = value`: " + line);
    }
    std::string key = trim_copy(s.substr(0, eq));
    std::string value = trim_copy(s.substr(eq + 1));
    try {
      if (key == "resources") {
        cfg.n_resources = std::stoi(value);
      } else if (key == "days") {
        cfg.n_days = std::stoi(value);
      } else if (key == "seed") {
        cfg.seed = std::stoull(value);
      } else if (key == "mean_change_interval_days") {
        cfg.mean_change_interval_days = std::stod(value);
      } else if (key == "archive_min") {
        cfg.archive_min = std::stoi(value);
      } else if (key == "archive_max") {
        cfg.archive_max = std::stoi(value);
      } else if (key == "archive_pool") {
        cfg.archive_pool = std::stoi(value);
      } else if (key == "initial_mementos_min") {
        cfg.initial_mementos_min = std::stoi(value);
      } else if (key == "initial_mementos_max") {
        cfg.initial_mementos_max = std::stoi(value);
      } else if (key == "initial_history_days") {
        cfg.initial_history_days = std::stoi(value);
      } else if (key == "crawl_batch_min") {
        cfg.crawl_batch_min = std::stoi(value);
      } else if (key == "crawl_batch_max") {
        cfg.crawl_batch_max = std::stoi(value);
      } else if (key == "weight_crawl") {
        cfg.weight_crawl = std::stod(value);
      } else if (key == "weight_outage") {
        cfg.weight_outage = std::stod(value);
      } else if (key == "weight_redaction") {
        cfg.weight_redaction = std::stod(value);
      } else if (key == "weight_migration") {
        cfg.weight_migration = std::stod(value);
      } else if (key == "weight_new_archive") {
        cfg.weight_new_archive = std::stod(value);
      } else if (key == "outage_min_days") {
        cfg.outage_min_days = std::stoi(value);
      } else if (key == "outage_max_days") {
        cfg.outage_max_days = std::stoi(value);
      } else if (key == "migration_rate") {
        cfg.migration_rate = std::stod(value);
      } else if (key == "redaction_rate") {
        cfg.redaction_rate = std::stod(value);
      } else if (key == "truncation_archives") {
        cfg.truncation_archives.clear();
        std::istringstream items(value);
        std::string item;
        while (std::getline(items, item, ',')) {
          item = trim_copy(item);
          if (!item.empty()) cfg.truncation_archives.push_back(item);
        }
      } else {
        throw InvalidConfig("unknown config key: " + key);
      }
    } catch (const InvalidConfig&) {
      throw;
    } catch (const std::exception&) {
      throw InvalidConfig("bad value for " + key + ": " + value);
    }
  }
  cfg.validate();
  return cfg;
}

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Crawl:
      return "crawl";
    case EventKind::ArchiveOutage:
      return "archive-outage";
    case EventKind::OutageRecovery:
      return "outage-recovery";
    case EventKind::Redaction:
      return "redaction";
    case EventKind::Migration:
      return "migration";
    default:
      return "new-archive";
  }
}

namespace {

/// splitmix64: tiny, fast, and stable across platforms, which the
/// byte-identical-output guarantee needs (std:: distributions are not
/// portable between standard library implementations).
struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Inclusive on both ends.
  std::int64_t uniform(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    next() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  double real() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool chance(double p) { return p > 0 && real() < p; }
};

struct LiveRecord {
  int archive = 0;  // pool index
  Instant captured = 0;
  Instant reported = 0;
  int generation = 0;
  long serial = 0;
};

struct ArchiveState {
  std::string host;
  bool truncates = false;
  int generation = 0;
  long next_serial = 1;
  std::set<Instant> used_captured;
};

constexpr Instant kTraceEpoch = 14914 * kSecondsPerDay;  // 2010-11-01

struct ResourceGenerator {
  const GeneratorConfig& cfg;
  int resource;
  Rng rng;
  std::string uri_r;
  std::vector<ArchiveState> pool;
  std::vector<int> assigned;
  std::vector<LiveRecord> live;
  std::set<std::pair<int, Instant>> tombstones;  // redacted (archive, datetime)
  std::vector<LiveRecord> stash;
  int outage_archive = -1;
  Day outage_recovery_day = -1;
  bool dirty = true;
  MementoListPtr list;
  std::vector<EventRecord>* log;

  ResourceGenerator(const GeneratorConfig& config, int r,
                    std::vector<EventRecord>* event_log)
      : cfg(config),
        resource(r),
        rng(mix_seed(config.seed, r)),
        uri_r("http://resource-" + std::to_string(r + 1) + ".example/"),
        log(event_log) {
    pool.resize(static_cast<size_t>(cfg.archive_pool));
    for (int k = 0; k < cfg.archive_pool; ++k) {
      ArchiveState& a = pool[static_cast<size_t>(k)];
      a.host = "archive-" + std::to_string(k + 1) + ".example";
      a.truncates = std::find(cfg.truncation_archives.begin(),
                              cfg.truncation_archives.end(),
                              a.host) != cfg.truncation_archives.end();
    }
  }

  static std::uint64_t mix_seed(std::uint64_t seed, int r) {
    Rng mixer(seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(r + 1)));
    return mixer.next();
  }

  void emit(EventKind kind, std::string archive, int affected, Day day) {
    if (log) {
      log->push_back({resource, day, kind, std::move(archive), affected});
    }
  }

  const std::string& host_of(int archive) const {
    return pool[static_cast<size_t>(archive)].host;
  }

  std::string build_uri_m(const LiveRecord& rec) const {
    const ArchiveState& a = pool[static_cast<size_t>(rec.archive)];
    std::string path = "http://" + a.host + "/memento/";
    if (rec.generation > 0) {
      path += "g" + std::to_string(rec.generation) + "r" +
              std::to_string(rec.serial) + "/";
    }
    return path + format_timestamp14(rec.captured) + "/" + uri_r;
  }

  /// Add one capture to `archive` at second `captured`. Returns false
  /// when the spot is unusable (redacted key, or a duplicate first-
  /// generation timestamp that would collide on uri_m).
  bool add_capture(int archive, Instant captured) {
    ArchiveState& a = pool[static_cast<size_t>(archive)];
    Instant reported = a.truncates ? truncate_to_midnight(captured) : captured;
    if (tombstones.contains({archive, reported})) return false;
    LiveRecord rec;
    rec.archive = archive;
    rec.captured = captured;
    rec.reported = reported;
    rec.generation = a.generation;
    if (a.generation == 0) {
      if (a.used_captured.contains(captured)) return false;
    } else {
      rec.serial = a.next_serial++;
    }
    a.used_captured.insert(captured);
    live.push_back(rec);
    dirty = true;
    return true;
  }

  /// Sample a capture second and add it, retrying collisions a few
  /// times. Returns the number of records added (0 or 1).
  int crawl_one(int archive, Instant window_start, Instant window_len) {
    for (int attempt = 0; attempt < 32; ++attempt) {
      Instant captured = window_start + rng.uniform(0, window_len - 1);
      if (add_capture(archive, captured)) return 1;
      const ArchiveState& a = pool[static_cast<size_t>(archive)];
      if (a.truncates &&
          tombstones.contains({archive, truncate_to_midnight(captured)}) &&
          window_len <= kSecondsPerDay) {
        return 0;  // the whole day is redacted; retrying cannot help
      }
    }
    return 0;
  }

  void day_zero() {
    int n_archives =
        static_cast<int>(rng.uniform(cfg.archive_min, cfg.archive_max));
    std::vector<int> candidates(static_cast<size_t>(cfg.archive_pool));
    for (int k = 0; k < cfg.archive_pool; ++k) {
      candidates[static_cast<size_t>(k)] = k;
    }
    for (int i = 0; i < n_archives; ++i) {
      int j = static_cast<int>(
          rng.uniform(i, static_cast<std::int64_t>(candidates.size()) - 1));
      std::swap(candidates[static_cast<size_t>(i)],
                candidates[static_cast<size_t>(j)]);
      assigned.push_back(candidates[static_cast<size_t>(i)]);
    }
    Instant history = static_cast<Instant>(cfg.initial_history_days) *
                      kSecondsPerDay;
    for (int archive : assigned) {
      int count = static_cast<int>(
          rng.uniform(cfg.initial_mementos_min, cfg.initial_mementos_max));
      for (int i = 0; i < count; ++i) {
        crawl_one(archive, kTraceEpoch - history, history);
      }
    }
  }

  int pick(const std::vector<int>& from) {
    return from[static_cast<size_t>(
        rng.uniform(0, static_cast<std::int64_t>(from.size()) - 1))];
  }

  std::vector<int> archives_with_records() const {
    std::vector<int> out;
    for (int archive : assigned) {
      for (const LiveRecord& rec : live) {
        if (rec.archive == archive) {
          out.push_back(archive);
          break;
        }
      }
    }
    return out;
  }

  int do_crawl(Day t, int archive) {
    int batch = static_cast<int>(
        rng.uniform(cfg.crawl_batch_min, cfg.crawl_batch_max));
    int added = 0;
    Instant day_start = kTraceEpoch + static_cast<Instant>(t) * kSecondsPerDay;
    for (int i = 0; i < batch; ++i) {
      added += crawl_one(archive, day_start, kSecondsPerDay);
    }
    return added;
  }

  void do_outage(Day t, int archive) {
    int span = static_cast<int>(
        rng.uniform(cfg.outage_min_days, cfg.outage_max_days));
    span = std::min(span, cfg.n_days - 1 - t);
    std::vector<LiveRecord> kept;
    for (LiveRecord& rec : live) {
      (rec.archive == archive ? stash : kept).push_back(rec);
    }
    live = std::move(kept);
    outage_archive = archive;
    outage_recovery_day = t + span;
    dirty = true;
    emit(EventKind::ArchiveOutage, host_of(archive),
         static_cast<int>(stash.size()), t);
  }

  void recover(Day t) {
    emit(EventKind::OutageRecovery, host_of(outage_archive),
         static_cast<int>(stash.size()), t);
    live.insert(live.end(), stash.begin(), stash.end());
    stash.clear();
    outage_archive = -1;
    outage_recovery_day = -1;
    dirty = true;
  }

  void do_redaction(Day t) {
    std::vector<size_t> victims;
    for (size_t i = 0; i < live.size(); ++i) {
      if (rng.chance(cfg.redaction_rate)) victims.push_back(i);
    }
    if (victims.empty()) {
      victims.push_back(static_cast<size_t>(
          rng.uniform(0, static_cast<std::int64_t>(live.size()) - 1)));
    }
    std::set<std::pair<int, Instant>> keys;
    for (size_t i : victims) {
      keys.insert({live[i].archive, live[i].reported});
    }
    std::string first_host = host_of(live[victims.front()].archive);
    tombstones.insert(keys.begin(), keys.end());
    int before = static_cast<int>(live.size());
    std::erase_if(live, [&](const LiveRecord& rec) {
      return keys.contains({rec.archive, rec.reported});
    });
    dirty = true;
    emit(EventKind::Redaction, std::move(first_host),
         before - static_cast<int>(live.size()), t);
  }

  void do_migration(Day t, int archive) {
    ArchiveState& a = pool[static_cast<size_t>(archive)];
    ++a.generation;
    std::vector<size_t> chosen;
    for (size_t i = 0; i < live.size(); ++i) {
      if (live[i].archive == archive && rng.chance(cfg.migration_rate)) {
        chosen.push_back(i);
      }
    }
    if (chosen.empty()) {
      std::vector<size_t> candidates;
      for (size_t i = 0; i < live.size(); ++i) {
        if (live[i].archive == archive) candidates.push_back(i);
      }
      chosen.push_back(candidates[static_cast<size_t>(rng.uniform(
          0, static_cast<std::int64_t>(candidates.size()) - 1))]);
    }
    for (size_t i : chosen) {
      live[i].generation = a.generation;
      live[i].serial = a.next_serial++;
    }
    dirty = true;
    emit(EventKind::Migration, host_of(archive),
         static_cast<int>(chosen.size()), t);
  }

  void do_new_archive(Day t) {
    std::vector<int> unassigned;
    for (int k = 0; k < cfg.archive_pool; ++k) {
      if (std::find(assigned.begin(), assigned.end(), k) == assigned.end()) {
        unassigned.push_back(k);
      }
    }
    int archive = pick(unassigned);
    assigned.push_back(archive);
    int added = do_crawl(t, archive);
    if (added == 0) {
      // A brand-new archive has no redacted keys, so a capture always
      // lands; defend against pathological timestamp exhaustion anyway.
      Instant day_start =
          kTraceEpoch + static_cast<Instant>(t) * kSecondsPerDay;
      for (Instant s = 0; s < kSecondsPerDay && added == 0; ++s) {
        added += add_capture(archive, day_start + s) ? 1 : 0;
      }
    }
    emit(EventKind::NewArchive, host_of(archive), added, t);
  }

  void fire_event(Day t) {
    struct Option {
      EventKind kind;
      double weight;
    };
    std::vector<int> with_records = archives_with_records();
    bool outage_feasible = !with_records.empty() && t < cfg.n_days - 1;
    bool new_archive_feasible =
        static_cast<int>(assigned.size()) < cfg.archive_pool;
    std::vector<Option> options;
    if (cfg.weight_crawl > 0) {
      options.push_back({EventKind::Crawl, cfg.weight_crawl});
    }
    if (cfg.weight_outage > 0 && outage_feasible) {
      options.push_back({EventKind::ArchiveOutage, cfg.weight_outage});
    }
    if (cfg.weight_redaction > 0 && !live.empty()) {
      options.push_back({EventKind::Redaction, cfg.weight_redaction});
    }
    if (cfg.weight_migration > 0 && !with_records.empty()) {
      options.push_back({EventKind::Migration, cfg.weight_migration});
    }
    if (cfg.weight_new_archive > 0 && new_archive_feasible) {
      options.push_back({EventKind::NewArchive, cfg.weight_new_archive});
    }
    if (options.empty()) return;
    double total = 0;
    for (const Option& o : options) total += o.weight;
    double x = rng.real() * total;
    EventKind kind = options.back().kind;
    for (const Option& o : options) {
      if (x < o.weight) {
        kind = o.kind;
        break;
      }
      x -= o.weight;
    }
    switch (kind) {
      case EventKind::Crawl: {
        int archive = pick(assigned);
        int added = do_crawl(t, archive);
        if (added > 0) emit(EventKind::Crawl, host_of(archive), added, t);
        break;
      }
      case EventKind::ArchiveOutage:
        do_outage(t, pick(with_records));
        break;
      case EventKind::Redaction:
        do_redaction(t);
        break;
      case EventKind::Migration:
        do_migration(t, pick(with_records));
        break;
      default:
        do_new_archive(t);
        break;
    }
  }

  ObservationSeries run() {
    ObservationSeries series;
    series.uri_r = uri_r;
    series.snapshots.reserve(static_cast<size_t>(cfg.n_days));
    const double p = cfg.mean_change_interval_days > 0
                         ? 1.0 / cfg.mean_change_interval_days
                         : 0.0;
    day_zero();
    for (Day t = 0; t < cfg.n_days; ++t) {
      if (t > 0) {
        if (outage_recovery_day == t) {
          recover(t);
        } else if (outage_recovery_day < 0 && rng.chance(p)) {
          fire_event(t);
        }
      }
      if (dirty) {
        std::vector<MementoRecord> records;
        records.reserve(live.size());
        for (const LiveRecord& rec : live) {
          MementoRecord m;
          m.uri_m = build_uri_m(rec);
          m.datetime = rec.reported;
          m.archive = pool[static_cast<size_t>(rec.archive)].host;
          m.uri_r = uri_r;
          records.push_back(std::move(m));
        }
        list = MementoList::make(std::move(records));
        dirty = false;
      }
      Instant observed =
          kTraceEpoch + static_cast<Instant>(t) * kSecondsPerDay +
          (kSecondsPerDay - 1);
      series.snapshots.push_back(make_snapshot(
          uri_r, t, observed, list->records().empty() ? 404 : 200, list));
    }
    return series;
  }
};

}  // namespace

Trace generate(const GeneratorConfig& config, std::vector<EventRecord>& log) {
  config.validate();
  Trace trace;
  trace.n_resources = config.n_resources;
  trace.n_days = config.n_days;
  trace.series.reserve(static_cast<size_t>(config.n_resources));
  for (int r = 0; r < config.n_resources; ++r) {
    ResourceGenerator gen(config, r, &log);
    trace.series.push_back(gen.run());
  }
  return trace;
}

Trace generate(const GeneratorConfig& config) {
  std::vector<EventRecord> log;
  return generate(config, log);
}

void write_trace(const Trace& trace, const fs::path& root) {
  if (trace.series.empty()) throw EmptyTrace("nothing to write");
  for (const ObservationSeries& series : trace.series) {
    for (const SnapshotPtr& tm : series.snapshots) {
      if (!tm) continue;
      SnapshotRecord record;
      record.uri_r = series.uri_r;
      record.day = tm->day;
      record.instant = tm->instant;
      record.http_status = tm->http_status;
      if (tm->http_status >= 200 && tm->http_status < 300) {
        record.body = serialize_timemap(raw_from_snapshot(*tm));
      }
      write_record(root, record);
    }
  }
}

Trace read_trace(const fs::path& root, const ArchiveRules& rules) {
  std::vector<Day> days = list_days(root);
  if (days.empty()) throw EmptyTrace("no day directories under " +
                                     root.string());
  std::set<std::string> uris;
  for (Day day : days) {
    for (std::string& uri : list_uris(root, day)) {
      uris.insert(std::move(uri));
    }
  }
  if (uris.empty()) throw EmptyTrace("no records under " + root.string());
  Trace trace;
  trace.n_days = days.back() + 1;
  trace.n_resources = static_cast<int>(uris.size());
  trace.series.reserve(uris.size());
  for (const std::string& uri : uris) {
    trace.series.push_back(load_series(root, uri, rules));
  }
  return trace;
}

}  // namespace tmcache
