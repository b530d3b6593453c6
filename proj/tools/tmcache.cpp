#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "tmcache/cache_engine.hpp"
#include "tmcache/change_classifier.hpp"
#include "tmcache/errors.hpp"
#include "tmcache/harvester.hpp"
#include "tmcache/proxy.hpp"
#include "tmcache/simulator.hpp"
#include "tmcache/tracegen.hpp"
#include "tmcache/uri.hpp"

namespace {

using namespace tmcache;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write " + path);
  out << content;
  if (!out) throw IoFailure("short write to " + path);
}

std::vector<std::string> read_uri_list(const std::string& path) {
  std::istringstream lines(read_file(path));
  std::vector<std::string> uris;
  std::string line;
  while (std::getline(lines, line)) {
    size_t b = line.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) continue;
    size_t e = line.find_last_not_of(" \t\r\n");
    std::string uri = line.substr(b, e - b + 1);
    if (uri[0] == '#') continue;
    uris.push_back(std::move(uri));
  }
  return uris;
}

/// "15", "inf", "0..92", or a comma-separated mix of those.
std::vector<Ttl> parse_ttl_list(const std::string& text) {
  std::vector<Ttl> out;
  std::istringstream items(text);
  std::string item;
  while (std::getline(items, item, ',')) {
    size_t dots = item.find("..");
    if (dots != std::string::npos) {
      auto lo = Ttl::parse(item.substr(0, dots));
      auto hi = Ttl::parse(item.substr(dots + 2));
      if (!lo || !hi || lo->is_infinite() || hi->is_infinite() ||
          lo->days() > hi->days()) {
        throw CLI::ValidationError("--ttl", "bad range: " + item);
      }
      for (int d = lo->days(); d <= hi->days(); ++d) {
        out.push_back(Ttl::finite(d));
      }
    } else {
      auto t = Ttl::parse(item);
      if (!t) throw CLI::ValidationError("--ttl", "bad TTL: " + item);
      out.push_back(*t);
    }
  }
  if (out.empty()) throw CLI::ValidationError("--ttl", "empty TTL list");
  return out;
}

Ttl parse_one_ttl(const std::string& text) {
  auto t = Ttl::parse(text);
  if (!t) throw CLI::ValidationError("--ttl", "bad TTL: " + text);
  return *t;
}

PolicyKind policy_of(const std::string& name) {
  auto p = parse_policy(name);
  if (!p) throw CLI::ValidationError("--policy", "unknown policy: " + name);
  return *p;
}

IdentityPolicy identity_of(const std::string& name) {
  auto i = parse_identity(name);
  if (!i) throw CLI::ValidationError("--identity", "unknown: " + name);
  return *i;
}

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

void run_gen(const std::string& config_path, const std::string& out_dir,
             const std::string& events_path, bool have_seed,
             std::uint64_t seed, bool have_resources, int resources,
             bool have_days, int days) {
  GeneratorConfig cfg;
  if (!config_path.empty()) cfg = parse_generator_config(read_file(config_path));
  if (have_seed) cfg.seed = seed;
  if (have_resources) cfg.n_resources = resources;
  if (have_days) cfg.n_days = days;
  cfg.validate();
  std::vector<EventRecord> events;
  Trace trace = generate(cfg, events);
  write_trace(trace, out_dir);
  if (!events_path.empty()) {
    std::ostringstream csv;
    csv << "resource,day,kind,archive,affected\n";
    for (const EventRecord& ev : events) {
      csv << ev.resource << ',' << ev.day << ',' << to_string(ev.kind) << ','
          << ev.archive << ',' << ev.affected << '\n';
    }
    write_file(events_path, csv.str());
  }
  std::cout << "wrote trace: resources=" << trace.n_resources
            << " days=" << trace.n_days << " events=" << events.size()
            << " root=" << out_dir << "\n";
}

void run_harvest(const std::string& list_path, const std::string& tmpl,
                 const std::string& out_dir, int day, int timeout,
                 int concurrency) {
  HarvestJob job;
  job.uri_r_list = read_uri_list(list_path);
  job.aggregator_template = tmpl;
  job.timeout_seconds = timeout;
  job.concurrency = concurrency;
  job.output_dir = out_dir;
  HarvestSummary summary = harvest(job, day);
  std::cout << "day=" << day << " ok=" << summary.ok
            << " http_error=" << summary.http_error
            << " transport_failure=" << summary.transport_failure << "\n";
}

void run_classify(const std::string& trace_dir, const std::string& identity) {
  IdentityPolicy policy = identity_of(identity);
  Trace trace = fill_gaps(read_trace(trace_dir));
  std::map<int, long long> totals;
  for (int c = 1; c <= 7; ++c) totals[c] = 0;
  long long transitions = 0;
  for (const ObservationSeries& series : trace.series) {
    for (Day t = 1; t < static_cast<Day>(series.snapshots.size()); ++t) {
      if (series.synthetic.contains(t - 1) || series.synthetic.contains(t)) {
        continue;  // invented leading fills are not observations
      }
      ChangeDelta d =
          change_delta(*series.snapshots[t - 1], *series.snapshots[t], policy);
      ChangeCase c = classify_delta(d);
      ++totals[case_number(c)];
      ++transitions;
      std::cout << series.uri_r << " " << (t - 1) << "->" << t
                << " case=" << case_number(c) << " " << to_string(c)
                << " gained=" << d.gained << " lost=" << d.lost
                << " archives_gained=" << d.archives_gained
                << " archives_lost=" << d.archives_lost << "\n";
    }
  }
  std::cout << "\n";
  for (int c = 1; c <= 7; ++c) {
    std::cout << "case " << c << " "
              << to_string(static_cast<ChangeCase>(c)) << ": " << totals[c]
              << "\n";
  }
  std::cout << "transitions: " << transitions << "\n";
}

void run_replay(const std::string& trace_dir, const std::string& policy,
                const std::string& ttl, const std::string& identity,
                const std::string& reference, const std::string& out_csv) {
  Trace trace = fill_gaps(read_trace(trace_dir));
  ReplayOptions options;
  options.identity = identity_of(identity);
  options.reference = reference == "instantaneous"
                          ? ReplayOptions::Reference::Instantaneous
                          : ReplayOptions::Reference::RunningMax;
  SimulationReport report =
      replay(trace, policy_of(policy), parse_one_ttl(ttl), options);
  std::cout << "policy=" << to_string(report.policy)
            << " ttl=" << report.ttl.to_string()
            << " identity=" << to_string(report.identity)
            << " memdays=" << report.memdays << " q=" << report.q
            << " missed_updates=" << report.missed_updates
            << " false_zero_days=" << report.false_zero_days << "\n";
  if (!out_csv.empty()) write_file(out_csv, export_report_csv(report));
}

void run_sweep(const std::string& trace_dir, const std::string& policy,
               const std::string& ttl, const std::string& identity,
               const std::string& out_csv) {
  Trace trace = fill_gaps(read_trace(trace_dir));
  ReplayOptions options;
  options.identity = identity_of(identity);
  SweepCurve curve =
      sweep(trace, policy_of(policy), parse_ttl_list(ttl), options);
  std::string csv = export_sweep_csv(curve);
  if (out_csv.empty()) {
    std::cout << csv;
  } else {
    write_file(out_csv, csv);
    std::cout << "wrote " << curve.points.size() << " rows to " << out_csv
              << "\n";
    if (curve.points.size() >= 2) {
      OptimalTtl best = optimal_ttl(curve);
      std::cout << "optimal ttl=" << best.ttl.to_string()
                << " memdays=" << best.memdays << " q=" << best.q
                << (best.degenerate ? " (degenerate)" : "") << "\n";
    }
  }
}

void run_monotone(const std::string& trace_dir, const std::string& identity) {
  Trace trace = fill_gaps(read_trace(trace_dir));
  double fraction = monotone_fraction(trace, identity_of(identity));
  std::printf("%.3f\n", fraction);
}

void run_serve(const std::string& config_path, const std::string& listen,
               const std::string& upstream, const std::string& policy,
               const std::string& ttl, const std::string& identity,
               int timeout, const std::string& persist) {
  ProxyConfig cfg;
  if (!config_path.empty()) cfg = parse_proxy_config(read_file(config_path));
  apply_env_overrides(cfg);
  if (!listen.empty()) cfg.listen = listen;
  if (!upstream.empty()) cfg.upstream_template = upstream;
  if (!policy.empty()) cfg.policy = policy_of(policy);
  if (!ttl.empty()) cfg.ttl = parse_one_ttl(ttl);
  if (!identity.empty()) cfg.identity = identity_of(identity);
  if (timeout > 0) cfg.upstream_timeout_seconds = timeout;
  if (!persist.empty()) cfg.persistence_dir = persist;
  cfg.validate();

  ProxyService service(cfg);
  int port = service.start();
  std::cout << "listening on " << cfg.listen_host() << ":" << port
            << " policy=" << to_string(cfg.policy)
            << " ttl=" << cfg.ttl.to_string() << "\n"
            << std::flush;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  service.stop();
  std::cout << "stopped\n";
}

void run_purge(const std::string& proxy, const std::string& uri) {
  httplib::Client client("http://" + proxy);
  client.set_connection_timeout(10, 0);
  client.set_read_timeout(10, 0);
  std::string path = "/admin/purge";
  if (!uri.empty()) path += "?uri_r=" + percent_encode(uri);
  auto res = client.Post(path, "", "text/plain");
  if (!res) throw IoFailure("cannot reach proxy at " + proxy);
  std::cout << res->body;
  if (res->status != 200) {
    throw IoFailure("purge failed with status " +
                    std::to_string(res->status));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TimeMap caching engine and evaluation harness"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic trace store");
  std::string gen_config, gen_out, gen_events;
  std::uint64_t gen_seed = 0;
  int gen_resources = 0, gen_days = 0;
  gen->add_option("--config", gen_config, "Generator config file");
  gen->add_option("--out", gen_out, "Trace store root")->required();
  gen->add_option("--events", gen_events, "Write event log CSV here");
  auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "Seed override");
  auto* gen_res_opt =
      gen->add_option("--resources", gen_resources, "Resource count override");
  auto* gen_days_opt = gen->add_option("--days", gen_days, "Day count override");

  // harvest
  auto* hv = app.add_subcommand("harvest", "Fetch one day of live TimeMaps");
  std::string hv_list, hv_template, hv_out;
  int hv_day = 0, hv_timeout = 45, hv_concurrency = 11;
  hv->add_option("--list", hv_list, "File with one URI-R per line")
      ->required();
  hv->add_option("--template", hv_template,
                 "Aggregator URI template with {uri_r}")
      ->required();
  hv->add_option("--out", hv_out, "Store root")->required();
  hv->add_option("--day", hv_day, "Day index for the store")->required();
  hv->add_option("--timeout", hv_timeout, "Per-request timeout, seconds");
  hv->add_option("--concurrency", hv_concurrency, "Parallel workers");

  // classify
  auto* cl = app.add_subcommand(
      "classify", "Print per-transition change cases and totals");
  std::string cl_trace, cl_identity = "loose";
  cl->add_option("--trace", cl_trace, "Trace store root")->required();
  cl->add_option("--identity", cl_identity, "loose|strict")
      ->check(CLI::IsMember({"loose", "strict"}));

  // replay
  auto* rp = app.add_subcommand("replay", "Replay a trace through one cache");
  std::string rp_trace, rp_policy, rp_ttl, rp_identity = "loose",
                                          rp_reference = "running-max",
                                          rp_out;
  rp->add_option("--trace", rp_trace, "Trace store root")->required();
  rp->add_option("--policy", rp_policy, "current|unconditional|conditional")
      ->required()
      ->check(CLI::IsMember({"current", "unconditional", "conditional"}));
  rp->add_option("--ttl", rp_ttl, "Days, or inf")->required();
  rp->add_option("--identity", rp_identity, "loose|strict")
      ->check(CLI::IsMember({"loose", "strict"}));
  rp->add_option("--reference", rp_reference, "running-max|instantaneous")
      ->check(CLI::IsMember({"running-max", "instantaneous"}));
  rp->add_option("--out", rp_out, "Per-day CSV path");

  // sweep
  auto* sw = app.add_subcommand("sweep", "Replay across a TTL range");
  std::string sw_trace, sw_policy, sw_ttl, sw_identity = "loose", sw_out;
  sw->add_option("--trace", sw_trace, "Trace store root")->required();
  sw->add_option("--policy", sw_policy, "current|unconditional|conditional")
      ->required()
      ->check(CLI::IsMember({"current", "unconditional", "conditional"}));
  sw->add_option("--ttl", sw_ttl, "Range a..b, single value, inf, or a list")
      ->required();
  sw->add_option("--identity", sw_identity, "loose|strict")
      ->check(CLI::IsMember({"loose", "strict"}));
  sw->add_option("--out", sw_out, "Sweep CSV path (stdout when absent)");

  // monotone
  auto* mo = app.add_subcommand(
      "monotone", "Fraction of transitions that kept or grew cardinality");
  std::string mo_trace, mo_identity = "loose";
  mo->add_option("--trace", mo_trace, "Trace store root")->required();
  mo->add_option("--identity", mo_identity, "loose|strict")
      ->check(CLI::IsMember({"loose", "strict"}));

  // serve
  auto* sv = app.add_subcommand("serve", "Run the caching reverse proxy");
  std::string sv_config, sv_listen, sv_upstream, sv_policy, sv_ttl,
      sv_identity, sv_persist;
  int sv_timeout = 0;
  sv->add_option("--config", sv_config, "Proxy config file");
  sv->add_option("--listen", sv_listen, "host:port (0 picks a free port)");
  sv->add_option("--upstream", sv_upstream,
                 "Upstream aggregator template with {uri_r}");
  sv->add_option("--policy", sv_policy, "current|unconditional|conditional")
      ->check(CLI::IsMember({"current", "unconditional", "conditional"}));
  sv->add_option("--ttl", sv_ttl, "Days, or inf");
  sv->add_option("--identity", sv_identity, "loose|strict")
      ->check(CLI::IsMember({"loose", "strict"}));
  sv->add_option("--timeout", sv_timeout, "Upstream timeout, seconds");
  sv->add_option("--persist", sv_persist, "Cache persistence directory");

  // purge
  auto* pg = app.add_subcommand("purge", "Purge a running proxy's cache");
  std::string pg_proxy, pg_uri;
  pg->add_option("--proxy", pg_proxy, "Proxy host:port")->required();
  pg->add_option("--uri", pg_uri, "URI-R to purge (everything when absent)");

  gen->callback([&]() {
    run_gen(gen_config, gen_out, gen_events, gen_seed_opt->count() > 0,
            gen_seed, gen_res_opt->count() > 0, gen_resources,
            gen_days_opt->count() > 0, gen_days);
  });
  hv->callback([&]() {
    run_harvest(hv_list, hv_template, hv_out, hv_day, hv_timeout,
                hv_concurrency);
  });
  cl->callback([&]() { run_classify(cl_trace, cl_identity); });
  rp->callback([&]() {
    run_replay(rp_trace, rp_policy, rp_ttl, rp_identity, rp_reference, rp_out);
  });
  sw->callback([&]() {
    run_sweep(sw_trace, sw_policy, sw_ttl, sw_identity, sw_out);
  });
  mo->callback([&]() { run_monotone(mo_trace, mo_identity); });
  sv->callback([&]() {
    run_serve(sv_config, sv_listen, sv_upstream, sv_policy, sv_ttl,
              sv_identity, sv_timeout, sv_persist);
  });
  pg->callback([&]() { run_purge(pg_proxy, pg_uri); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const tmcache::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
