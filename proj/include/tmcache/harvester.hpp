#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tmcache/dtime.hpp"

namespace tmcache {

/// Final HTTP status and body of a single TimeMap download.
/// status 0 means the request never completed (timeout, refused
/// connection, DNS failure) — distinct from an HTTP error like 404,
/// which is a real observation.
struct FetchOutcome {
  int status = 0;
  std::string body;

  bool ok() const { return status >= 200 && status < 300; }
  bool transport_failure() const { return status == 0; }
};

/// One GET following up to 5 redirects. `timeout_seconds` bounds the
/// whole request lifetime, not just connection setup.
FetchOutcome fetch_timemap(const std::string& uri_t, int timeout_seconds);

/// A daily collection run over a fixed URI-R list.
struct HarvestJob {
  std::vector<std::string> uri_r_list;

  /// Aggregator URI template with one `{uri_r}` slot, e.g.
  /// "http://aggregator.example/timemap/link/{uri_r}".
  std::string aggregator_template;

  int timeout_seconds = 45;
  int concurrency = 11;
  std::filesystem::path output_dir;

  void validate() const;  // throws InvalidConfig
};

struct HarvestSummary {
  int ok = 0;
  int http_error = 0;
  int transport_failure = 0;

  int total() const { return ok + http_error + transport_failure; }

  friend bool operator==(const HarvestSummary&,
                         const HarvestSummary&) = default;
};

/// Expand the job template for one URI-R (the slot is replaced verbatim,
/// without additional encoding; aggregators take the raw URI in the path).
std::string expand_template(const std::string& aggregator_template,
                            const std::string& uri_r);

/// Fetch every URI-R once with at most `concurrency` requests in flight
/// and persist one store record per (uri_r, day). No retries: a failure
/// today is a gap until tomorrow's run.
HarvestSummary harvest(const HarvestJob& job, Day day);

}  // namespace tmcache
