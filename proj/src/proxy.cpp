#include "tmcache/proxy.hpp"

#include <chrono>
#include <cstdlib>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "tmcache/errors.hpp"
#include "tmcache/linkformat.hpp"
#include "tmcache/uri.hpp"

namespace tmcache {

namespace {

constexpr const char* kTimemapPrefix = "/timemap/link/";
constexpr const char* kLinkFormat = "application/link-format";

std::string trim_copy(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

Instant wall_clock_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

Day day_of(Instant instant) {
  return static_cast<Day>(instant >= 0 ? instant / kSecondsPerDay
                                       : (instant - kSecondsPerDay + 1) /
                                             kSecondsPerDay);
}

bool has_single_slot(const std::string& tmpl) {
  size_t first = tmpl.find("{uri_r}");
  return first != std::string::npos &&
         tmpl.find("{uri_r}", first + 1) == std::string::npos;
}

}  // namespace

void ProxyConfig::validate() const {
  size_t colon = listen.rfind(':');
  if (colon == std::string::npos || colon == 0 ||
      colon + 1 >= listen.size()) {
    throw InvalidConfig("listen must be host:port: " + listen);
  }
  for (size_t i = colon + 1; i < listen.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(listen[i]))) {
      throw InvalidConfig("listen port must be numeric: " + listen);
    }
  }
  if (!has_single_slot(upstream_template)) {
    throw InvalidConfig("upstream template must contain {uri_r} exactly once");
  }
  if (upstream_timeout_seconds <= 0) {
    throw InvalidConfig("upstream timeout must be > 0");
  }
}

std::string ProxyConfig::listen_host() const {
  return listen.substr(0, listen.rfind(':'));
}

int ProxyConfig::listen_port() const {
  return std::stoi(listen.substr(listen.rfind(':') + 1));
}

ProxyConfig parse_proxy_config(const std::string& text) {
  ProxyConfig cfg;
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
    if (key == "listen") {
      cfg.listen = value;
    } else if (key == "upstream") {
      cfg.upstream_template = value;
    } else if (key == "policy") {
      auto p = parse_policy(value);
      if (!p) throw InvalidConfig("unknown policy: " + value);
      cfg.policy = *p;
    } else if (key == "ttl_days") {
      auto t = Ttl::parse(value);
      if (!t) throw InvalidConfig("bad ttl_days: " + value);
      cfg.ttl = *t;
    } else if (key == "identity") {
      auto i = parse_identity(value);
      if (!i) throw InvalidConfig("unknown identity: " + value);
      cfg.identity = *i;
    } else if (key == "timeout_seconds") {
      try {
        cfg.upstream_timeout_seconds = std::stoi(value);
      } catch (const std::exception&) {
        throw InvalidConfig("bad timeout_seconds: " + value);
      }
    } else if (key == "persistence_dir") {
      cfg.persistence_dir = std::filesystem::path(value);
    } else {
      throw InvalidConfig("unknown config key: " + key);
    }
  }
  cfg.validate();
  return cfg;
}

void apply_env_overrides(ProxyConfig& config) {
  if (const char* listen = std::getenv("TMCACHE_LISTEN")) {
    config.listen = listen;
  }
  if (const char* upstream = std::getenv("TMCACHE_UPSTREAM")) {
    config.upstream_template = upstream;
  }
}

const std::string* ProxyService::Response::header(
    const std::string& name) const {
  for (const auto& [key, value] : headers) {
    if (key == name) return &value;
  }
  return nullptr;
}

ProxyService::ProxyService(ProxyConfig config)
    : ProxyService(std::move(config), nullptr, nullptr) {}

ProxyService::ProxyService(ProxyConfig config, Clock clock, Fetcher fetcher)
    : config_(std::move(config)),
      clock_(clock ? std::move(clock) : Clock(wall_clock_now)),
      fetcher_(std::move(fetcher)),
      cache_(config_.policy, config_.ttl, config_.identity) {
  config_.validate();
  if (!fetcher_) {
    int timeout = config_.upstream_timeout_seconds;
    fetcher_ = [timeout](const std::string& uri_t) {
      return fetch_timemap(uri_t, timeout);
    };
  }
  if (config_.persistence_dir) {
    cache_ = TimeMapCache::load(*config_.persistence_dir, config_.policy,
                                config_.ttl, config_.identity);
    for (const std::string& uri_r : cache_.keys()) {
      if (auto entry = cache_.entry(uri_r)) {
        // Store granularity is a day; resurrect the instant at midnight.
        last_fetch_[uri_r] =
            static_cast<Instant>(entry->last_fetch_at) * kSecondsPerDay;
      }
    }
  }
}

ProxyService::~ProxyService() {
  try {
    stop();
  } catch (...) {
    // Destructor must not throw; an unsaved cache is the price.
  }
}

std::shared_ptr<std::mutex> ProxyService::key_lock(const std::string& uri_r) {
  std::lock_guard<std::mutex> lock(key_mu_);
  auto& slot = key_locks_[uri_r];
  if (!slot) slot = std::make_shared<std::mutex>();
  return slot;
}

Instant ProxyService::last_fetch_instant(const std::string& uri_r) const {
  std::shared_lock lock(age_mu_);
  auto it = last_fetch_.find(uri_r);
  return it == last_fetch_.end() ? 0 : it->second;
}

ProxyService::Response ProxyService::serve_entry(const CacheEntry& entry,
                                                 const char* x_cache,
                                                 Instant now) {
  Response res;
  res.status = entry.snapshot->http_status;
  if (entry.raw_body) {
    res.body = *entry.raw_body;
  } else if (res.status != 404) {
    res.body = serialize_timemap(raw_from_snapshot(*entry.snapshot));
  }
  Instant fetched_at = last_fetch_instant(entry.snapshot->uri_r);
  Instant age = now > fetched_at ? now - fetched_at : 0;
  res.headers.emplace_back("Content-Type", kLinkFormat);
  res.headers.emplace_back("X-Cache", x_cache);
  res.headers.emplace_back("Age", std::to_string(age));
  return res;
}

ProxyService::Response ProxyService::handle(const std::string& method,
                                            const std::string& target) {
  std::string path = target;
  if (path.rfind(kTimemapPrefix, 0) == 0) {
    if (method == "GET") {
      return handle_timemap(path.substr(std::string(kTimemapPrefix).size()));
    }
  } else if (path == "/admin/stats" || path.rfind("/admin/stats?", 0) == 0) {
    if (method == "GET") return handle_stats();
  } else if (path == "/admin/purge" || path.rfind("/admin/purge?", 0) == 0) {
    if (method == "POST") {
      size_t q = path.find('?');
      return handle_purge(q == std::string::npos ? "" : path.substr(q + 1));
    }
  }
  Response res;
  res.status = 404;
  res.body = "not found\n";
  res.headers.emplace_back("Content-Type", "text/plain");
  return res;
}

ProxyService::Response ProxyService::handle_timemap(
    const std::string& raw_suffix) {
  std::string uri_r = percent_decode(raw_suffix);
  if (!is_absolute_uri(uri_r)) {
    ++bad_requests_;
    Response res;
    res.status = 400;
    res.body = "unparseable URI-R: " + uri_r + "\n";
    res.headers.emplace_back("Content-Type", "text/plain");
    return res;
  }

  Instant now = clock_();
  Day today = day_of(now);

  LookupResult looked = cache_.lookup(uri_r, today);
  if (looked.fresh()) {
    ++hits_;
    return serve_entry(*cache_.entry(uri_r), "HIT", now);
  }

  // Stale or absent: serialize the fetch per key so a stampede of
  // concurrent misses collapses to one upstream request.
  auto lock_ptr = key_lock(uri_r);
  std::lock_guard<std::mutex> lock(*lock_ptr);

  now = clock_();
  today = day_of(now);
  looked = cache_.lookup(uri_r, today);
  if (looked.fresh()) {
    ++hits_;
    return serve_entry(*cache_.entry(uri_r), "HIT", now);
  }

  ++upstream_fetches_;
  FetchOutcome outcome;
  try {
    outcome = fetcher_(expand_template(config_.upstream_template, uri_r));
  } catch (const std::exception&) {
    outcome = {};  // transport failure
  }

  SnapshotPtr fetched;
  if (outcome.ok()) {
    try {
      RawTimeMap raw = parse_timemap(outcome.body, uri_r);
      fetched = snapshot_from_raw(raw, ArchiveRules::defaults(), uri_r, today,
                                  now, outcome.status);
    } catch (const Error&) {
      fetched = nullptr;  // unusable body counts as an upstream failure
    }
  } else if (outcome.status == 404) {
    // A 404 is a real observation of an empty TimeMap, not an outage.
    fetched = make_snapshot(uri_r, today, now, 404, MementoListPtr{});
  }

  if (fetched) {
    auto raw_body = std::make_shared<const std::string>(
        outcome.ok() ? outcome.body : std::string());
    CacheDecision decision = cache_.offer(uri_r, fetched, today, raw_body);
    {
      std::unique_lock age_lock(age_mu_);
      last_fetch_[uri_r] = now;
    }
    if (decision.stored()) {
      ++misses_;
      return serve_entry(*cache_.entry(uri_r), "MISS", now);
    }
    ++refresh_rejected_;
    return serve_entry(*cache_.entry(uri_r), "REFRESH-REJECTED", now);
  }

  ++upstream_failures_;
  if (auto entry = cache_.entry(uri_r)) {
    ++stale_served_;
    return serve_entry(*entry, "STALE-IF-ERROR", now);
  }
  Response res;
  res.status = 502;
  res.body = "upstream failure and nothing cached\n";
  res.headers.emplace_back("Content-Type", "text/plain");
  return res;
}

ProxyService::Response ProxyService::handle_stats() {
  nlohmann::json j;
  j["hits"] = hits_.load();
  j["misses"] = misses_.load();
  j["refresh_rejected"] = refresh_rejected_.load();
  j["stale_served"] = stale_served_.load();
  j["upstream_fetches"] = upstream_fetches_.load();
  j["upstream_failures"] = upstream_failures_.load();
  j["bad_requests"] = bad_requests_.load();
  j["purges"] = purges_.load();
  j["entries"] = cache_.size();
  j["policy"] = to_string(config_.policy);
  j["ttl_days"] = config_.ttl.to_string();
  j["identity"] = to_string(config_.identity);
  Response res;
  res.body = j.dump(2) + "\n";
  res.headers.emplace_back("Content-Type", "application/json");
  return res;
}

ProxyService::Response ProxyService::handle_purge(const std::string& query) {
  std::optional<std::string> uri_r;
  std::istringstream params(query);
  std::string param;
  while (std::getline(params, param, '&')) {
    if (param.rfind("uri_r=", 0) == 0) {
      uri_r = percent_decode(param.substr(6));
    }
  }
  size_t purged = cache_.purge(uri_r);
  purges_ += purged;
  if (uri_r) {
    std::unique_lock age_lock(age_mu_);
    last_fetch_.erase(*uri_r);
  } else {
    std::unique_lock age_lock(age_mu_);
    last_fetch_.clear();
  }
  nlohmann::json j;
  j["purged"] = purged;
  Response res;
  res.body = j.dump() + "\n";
  res.headers.emplace_back("Content-Type", "application/json");
  return res;
}

ProxyStats ProxyService::stats() const {
  ProxyStats s;
  s.hits = hits_.load();
  s.misses = misses_.load();
  s.refresh_rejected = refresh_rejected_.load();
  s.stale_served = stale_served_.load();
  s.upstream_fetches = upstream_fetches_.load();
  s.upstream_failures = upstream_failures_.load();
  s.bad_requests = bad_requests_.load();
  s.purges = purges_.load();
  return s;
}

int ProxyService::start() {
  if (running_.exchange(true)) {
    throw InvalidConfig("proxy already running");
  }
  server_ = std::make_unique<httplib::Server>();
  auto relay = [this](const httplib::Request& req, httplib::Response& out) {
    Response res = handle(req.method, req.target);
    out.status = res.status;
    std::string content_type = "text/plain";
    for (const auto& [key, value] : res.headers) {
      if (key == "Content-Type") {
        content_type = value;
      } else {
        out.set_header(key, value);
      }
    }
    out.set_content(res.body, content_type);
  };
  server_->Get(R"(/.*)", relay);
  server_->Post(R"(/.*)", relay);

  int port = config_.listen_port();
  std::string host = config_.listen_host();
  if (port == 0) {
    port = server_->bind_to_any_port(host);
    if (port < 0) throw IoFailure("cannot bind " + config_.listen);
  } else if (!server_->bind_to_port(host, port)) {
    throw IoFailure("cannot bind " + config_.listen);
  }
  listener_ = std::thread([this]() { server_->listen_after_bind(); });
  while (!server_->is_running()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  return port;
}

void ProxyService::stop() {
  if (running_.exchange(false)) {
    server_->stop();
    if (listener_.joinable()) listener_.join();
    server_.reset();
  }
  if (config_.persistence_dir) {
    cache_.save(*config_.persistence_dir);
  }
}

}  // namespace tmcache
