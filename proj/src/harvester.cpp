#include "tmcache/harvester.hpp"

#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "tmcache/errors.hpp"
#include "tmcache/snapshot_store.hpp"
#include "tmcache/uri.hpp"

namespace tmcache {

void HarvestJob::validate() const {
  if (timeout_seconds <= 0) throw InvalidConfig("timeout must be > 0");
  if (concurrency < 1) throw InvalidConfig("concurrency must be >= 1");
  size_t first = aggregator_template.find("{uri_r}");
  if (first == std::string::npos ||
      aggregator_template.find("{uri_r}", first + 1) != std::string::npos) {
    throw InvalidConfig(
        "aggregator template must contain {uri_r} exactly once");
  }
  if (output_dir.empty()) throw InvalidConfig("output_dir must be set");
}

std::string expand_template(const std::string& aggregator_template,
                            const std::string& uri_r) {
  size_t slot = aggregator_template.find("{uri_r}");
  if (slot == std::string::npos) {
    throw InvalidConfig("aggregator template lacks {uri_r}");
  }
  std::string out = aggregator_template;
  out.replace(slot, 7, uri_r);
  return out;
}

FetchOutcome fetch_timemap(const std::string& uri_t, int timeout_seconds) {
  auto parts = parse_uri(uri_t);
  if (!parts || (parts->scheme != "http" && parts->scheme != "https")) {
    throw InvalidUri("not an absolute http(s) URI: " + uri_t);
  }
  std::string base = parts->scheme + "://" + parts->host;
  if (!parts->port.empty()) base += ":" + parts->port;
  httplib::Client client(base);
  client.set_connection_timeout(timeout_seconds, 0);
  client.set_read_timeout(timeout_seconds, 0);
  client.set_write_timeout(timeout_seconds, 0);
  client.set_follow_location(true);
  std::string path = parts->rest.empty() ? "/" : parts->rest;
  auto res = client.Get(path);
  if (!res) return {};  // status 0: nothing observed
  return {res->status, res->body};
}

HarvestSummary harvest(const HarvestJob& job, Day day) {
  job.validate();
  HarvestSummary summary;
  if (job.uri_r_list.empty()) return summary;

  std::atomic<size_t> cursor{0};
  std::mutex mu;  // guards summary and store writes
  std::exception_ptr failure;

  auto worker = [&]() {
    for (;;) {
      size_t i = cursor.fetch_add(1);
      if (i >= job.uri_r_list.size()) return;
      const std::string& uri_r = job.uri_r_list[i];
      FetchOutcome outcome;
      try {
        outcome =
            fetch_timemap(expand_template(job.aggregator_template, uri_r),
                          job.timeout_seconds);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
      SnapshotRecord record;
      record.uri_r = uri_r;
      record.day = day;
      record.instant = std::chrono::duration_cast<std::chrono::seconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                           .count();
      record.http_status = outcome.status;
      record.body = outcome.ok() ? outcome.body : "";
      std::lock_guard<std::mutex> lock(mu);
      try {
        write_record(job.output_dir, record);
      } catch (...) {
        if (!failure) failure = std::current_exception();
        return;
      }
      if (outcome.ok()) {
        ++summary.ok;
      } else if (outcome.transport_failure()) {
        ++summary.transport_failure;
      } else {
        ++summary.http_error;
      }
    }
  };

  size_t n_workers = std::min(static_cast<size_t>(job.concurrency),
                              job.uri_r_list.size());
  std::vector<std::thread> threads;
  threads.reserve(n_workers);
  for (size_t i = 0; i < n_workers; ++i) threads.emplace_back(worker);
  for (std::thread& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  return summary;
}

}  // namespace tmcache
