#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tmcache/cache_engine.hpp"
#include "tmcache/harvester.hpp"

namespace httplib {
class Server;
}

namespace tmcache {

struct ProxyConfig {
  std::string listen = "127.0.0.1:8080";

  /// Upstream aggregator URI template with one `{uri_r}` slot.
  std::string upstream_template;

  PolicyKind policy = PolicyKind::Conditional;
  Ttl ttl = Ttl::finite(15);
  IdentityPolicy identity = IdentityPolicy::Loose;
  int upstream_timeout_seconds = 45;

  /// When set, the cache is loaded from here on construction and saved
  /// back on graceful stop, so a restart serves warm instead of
  /// manufacturing a false cold window.
  std::optional<std::filesystem::path> persistence_dir;

  void validate() const;  // throws InvalidConfig

  std::string listen_host() const;
  int listen_port() const;
};

/// `key = value` per line: listen, upstream, policy, ttl_days, identity,
/// timeout_seconds, persistence_dir. Unknown keys rejected.
ProxyConfig parse_proxy_config(const std::string& text);

/// TMCACHE_LISTEN and TMCACHE_UPSTREAM override the corresponding
/// fields when present in the environment.
void apply_env_overrides(ProxyConfig& config);

struct ProxyStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t refresh_rejected = 0;
  std::uint64_t stale_served = 0;
  std::uint64_t upstream_fetches = 0;
  std::uint64_t upstream_failures = 0;
  std::uint64_t bad_requests = 0;
  std::uint64_t purges = 0;
};

/// Caching reverse proxy in front of a Memento aggregator. Requests for
/// `/timemap/link/{uri_r}` are served from a TTL cache running one of
/// the three replacement policies; everything the cache rejects is
/// observable through the X-Cache header and /admin/stats.
///
/// The clock and the upstream fetch hook are injectable so tests can
/// replay weeks of traffic in milliseconds against a scripted upstream.
class ProxyService {
 public:
  using Clock = std::function<Instant()>;
  using Fetcher = std::function<FetchOutcome(const std::string& uri_t)>;

  explicit ProxyService(ProxyConfig config);
  ProxyService(ProxyConfig config, Clock clock, Fetcher fetcher);
  ~ProxyService();

  ProxyService(const ProxyService&) = delete;
  ProxyService& operator=(const ProxyService&) = delete;

  /// One in-process HTTP exchange, no sockets involved.
  struct Response {
    int status = 200;
    std::string body;
    std::vector<std::pair<std::string, std::string>> headers;

    const std::string* header(const std::string& name) const;
  };

  /// `target` is the raw request target, e.g.
  /// "/timemap/link/http%3A%2F%2Fa.example%2F" or
  /// "/timemap/link/http://a.example/" or "/admin/stats".
  Response handle(const std::string& method, const std::string& target);

  /// Bind and serve on config.listen until stop(). Returns the bound
  /// port (which differs from the configured one when that was 0).
  int start();
  void stop();  // graceful: stops listening, persists the cache

  ProxyStats stats() const;
  const TimeMapCache& cache() const { return cache_; }
  const ProxyConfig& config() const { return config_; }

 private:
  Response handle_timemap(const std::string& raw_suffix);
  Response handle_stats();
  Response handle_purge(const std::string& query);
  std::shared_ptr<std::mutex> key_lock(const std::string& uri_r);
  Instant last_fetch_instant(const std::string& uri_r) const;
  Response serve_entry(const CacheEntry& entry, const char* x_cache,
                       Instant now);

  ProxyConfig config_;
  Clock clock_;
  Fetcher fetcher_;
  TimeMapCache cache_;

  mutable std::shared_mutex age_mu_;
  std::unordered_map<std::string, Instant> last_fetch_;

  std::mutex key_mu_;
  std::unordered_map<std::string, std::shared_ptr<std::mutex>> key_locks_;

  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
  std::atomic<std::uint64_t> refresh_rejected_{0};
  std::atomic<std::uint64_t> stale_served_{0};
  std::atomic<std::uint64_t> upstream_fetches_{0};
  std::atomic<std::uint64_t> upstream_failures_{0};
  std::atomic<std::uint64_t> bad_requests_{0};
  std::atomic<std::uint64_t> purges_{0};

  std::unique_ptr<httplib::Server> server_;
  std::thread listener_;
  std::atomic<bool> running_{false};
};

}  // namespace tmcache
