#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tmcache/simulator.hpp"
#include "tmcache/timemap_model.hpp"

namespace tmcache {

/// Knobs for the synthetic corpus. Defaults give a mildly loss-leaning
/// workload: TimeMaps that mostly sit still, occasionally gain a crawl,
/// and lose archives more often than they gain them.
struct GeneratorConfig {
  int n_resources = 50;
  int n_days = 92;
  std::uint64_t seed = 1;

  /// A change event fires each day with probability 1/this.
  double mean_change_interval_days = 37.6;

  /// Archives per resource, drawn from a shared pool of
  /// `archive-<k>.example` hosts.
  int archive_min = 1;
  int archive_max = 3;
  int archive_pool = 8;

  /// Mementos per archive at day 0, captured within the history window.
  int initial_mementos_min = 1;
  int initial_mementos_max = 5;
  int initial_history_days = 365;

  /// Mementos added per crawl event.
  int crawl_batch_min = 1;
  int crawl_batch_max = 3;

  /// Relative likelihood of each event kind on a change day.
  double weight_crawl = 3;
  double weight_outage = 5;
  double weight_redaction = 1;
  double weight_migration = 1;
  double weight_new_archive = 1;

  /// Days an archive outage lasts (clamped to end within the trace).
  int outage_min_days = 2;
  int outage_max_days = 10;

  /// Per-memento chance of being rewritten in a migration event /
  /// deleted in a redaction event. Each event always touches at least
  /// one memento.
  double migration_rate = 0.5;
  double redaction_rate = 0.3;

  /// Archives that report capture datetimes truncated to midnight while
  /// their URI-Ms keep the true second-precision timestamp.
  std::vector<ArchiveId> truncation_archives;

  void validate() const;  // throws InvalidConfig
};

/// `key = value` per line; blank lines and '#' comments ignored.
/// Unknown keys are rejected. truncation_archives takes a
/// comma-separated list.
GeneratorConfig parse_generator_config(const std::string& text);

enum class EventKind {
  Crawl,
  ArchiveOutage,
  OutageRecovery,
  Redaction,
  Migration,
  NewArchive,
};

const char* to_string(EventKind kind);

struct EventRecord {
  int resource = 0;
  Day day = 0;
  EventKind kind = EventKind::Crawl;
  ArchiveId archive;
  int affected = 0;  // mementos added, removed, rewritten, or stashed
};

/// Deterministic: equal configs give bit-identical traces. Generated
/// series have no gaps. Snapshots of unchanged days share their memento
/// list, so a long quiet trace stays small.
Trace generate(const GeneratorConfig& config);

/// Same, also reporting every event that fired (for analysis and for
/// tests that need ground truth independent of the classifier).
Trace generate(const GeneratorConfig& config, std::vector<EventRecord>& log);

/// Persist / load a trace in the snapshot-store layout. Days a resource
/// has no record for come back as gap days.
void write_trace(const Trace& trace, const std::filesystem::path& root);
Trace read_trace(const std::filesystem::path& root,
                 const ArchiveRules& rules = ArchiveRules::defaults());

}  // namespace tmcache
