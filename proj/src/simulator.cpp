#include "tmcache/simulator.hpp"

#include <algorithm>
#include <sstream>

#include "tmcache/change_classifier.hpp"
#include "tmcache/errors.hpp"

namespace tmcache {

ObservationSeries fill_gaps(const ObservationSeries& series) {
  ObservationSeries filled = series;
  SnapshotPtr last;
  for (size_t t = 0; t < filled.snapshots.size(); ++t) {
    SnapshotPtr& slot = filled.snapshots[t];
    if (slot) {
      last = slot;
      continue;
    }
    Day day = static_cast<Day>(t);
    if (last) {
      // Mid-series outage: carry the previous observation forward.
      slot = make_snapshot(filled.uri_r, day, last->instant,
                           last->http_status, last->mementos);
    } else {
      // Nothing observed yet: invent an empty snapshot and say so.
      slot = make_snapshot(filled.uri_r, day, 0, 0, MementoListPtr{});
      filled.synthetic.insert(day);
    }
    filled.gaps.insert(day);
  }
  return filled;
}

Trace fill_gaps(const Trace& trace) {
  Trace filled;
  filled.n_resources = trace.n_resources;
  filled.n_days = trace.n_days;
  filled.series.reserve(trace.series.size());
  for (const ObservationSeries& series : trace.series) {
    filled.series.push_back(fill_gaps(series));
  }
  return filled;
}

int reference_cardinality(const ObservationSeries& series, Day t,
                          IdentityPolicy policy) {
  int best = 0;
  for (Day s = 0; s <= t && s < static_cast<Day>(series.snapshots.size());
       ++s) {
    if (series.snapshots[s]) {
      best = std::max(best, series.snapshots[s]->cardinality(policy));
    }
  }
  return best;
}

namespace {

void require_filled(const Trace& trace) {
  if (trace.series.empty() || trace.n_days <= 0) {
    throw EmptyTrace("replay needs at least one resource and one day");
  }
  for (const ObservationSeries& series : trace.series) {
    if (static_cast<int>(series.snapshots.size()) != trace.n_days) {
      throw InvalidConfig("series length mismatch for " + series.uri_r);
    }
    for (const SnapshotPtr& tm : series.snapshots) {
      if (!tm) throw InvalidConfig("trace has unfilled gaps: " + series.uri_r);
    }
  }
}

}  // namespace

SimulationReport replay(const Trace& trace, PolicyKind policy, Ttl ttl,
                        const ReplayOptions& options) {
  require_filled(trace);
  const IdentityPolicy identity = options.identity;
  const bool running_max =
      options.reference == ReplayOptions::Reference::RunningMax;

  SimulationReport report;
  report.policy = policy;
  report.ttl = ttl;
  report.identity = identity;
  report.per_day.resize(static_cast<size_t>(trace.n_days));

  TimeMapCache cache(policy, ttl, identity);
  std::vector<int> running_reference(trace.series.size(), 0);

  for (Day t = 0; t < trace.n_days; ++t) {
    PerDay& day = report.per_day[static_cast<size_t>(t)];
    day.day = t;
    for (size_t r = 0; r < trace.series.size(); ++r) {
      const ObservationSeries& series = trace.series[r];
      const SnapshotPtr& live = series.snapshots[static_cast<size_t>(t)];

      int live_card = live->cardinality(identity);
      running_reference[r] = std::max(running_reference[r], live_card);
      int reference = running_max ? running_reference[r] : live_card;

      LookupResult looked = cache.lookup(series.uri_r, t);
      bool fetched = false;
      if (!looked.fresh()) {
        cache.offer(series.uri_r, live, t);
        fetched = true;
        ++day.fetches;
      }
      SnapshotPtr cached = fetched ? cache.lookup(series.uri_r, t).snapshot
                                   : looked.snapshot;

      int cached_card = cached ? cached->cardinality(identity) : 0;
      day.memdays_increment += std::max(reference - cached_card, 0);
      day.cache_cardinality += cached_card;
      day.reference_cardinality += reference;
      if (!fetched && cached &&
          is_improvement(classify(*cached, *live, identity))) {
        ++report.missed_updates;
      }
      if (cached_card == 0 && reference > 0) ++day.false_zero;
    }
    report.q += day.fetches;
    report.memdays += day.memdays_increment;
    report.false_zero_days += day.false_zero;
  }
  return report;
}

SweepCurve sweep(const Trace& trace, PolicyKind policy,
                 const std::vector<Ttl>& ttls, const ReplayOptions& options) {
  if (ttls.empty()) throw InvalidConfig("sweep needs at least one ttl");
  SweepCurve curve;
  curve.policy = policy;
  curve.identity = options.identity;
  curve.points.reserve(ttls.size());
  for (Ttl ttl : ttls) {
    SimulationReport report = replay(trace, policy, ttl, options);
    curve.points.push_back({ttl, report.memdays, report.q,
                            report.missed_updates, report.false_zero_days});
  }
  return curve;
}

OptimalTtl optimal_ttl(const SweepCurve& curve) {
  if (curve.points.size() < 2) {
    throw InvalidConfig("optimal_ttl needs a curve with at least two points");
  }
  long long md_min = curve.points.front().memdays, md_max = md_min;
  long long q_min = curve.points.front().q, q_max = q_min;
  for (const SweepPoint& p : curve.points) {
    md_min = std::min(md_min, p.memdays);
    md_max = std::max(md_max, p.memdays);
    q_min = std::min(q_min, p.q);
    q_max = std::max(q_max, p.q);
  }
  if (md_min == md_max || q_min == q_max) {
    // Flat curve: no crossing to find. Fall back to cheapest memdays,
    // preferring the larger TTL (fewer fetches) on ties.
    auto ttl_greater = [](const Ttl& a, const Ttl& b) {
      if (a.is_infinite() || b.is_infinite()) {
        return a.is_infinite() && !b.is_infinite();
      }
      return a.days() > b.days();
    };
    const SweepPoint* best = &curve.points.front();
    for (const SweepPoint& p : curve.points) {
      if (p.memdays < best->memdays ||
          (p.memdays == best->memdays && ttl_greater(p.ttl, best->ttl))) {
        best = &p;
      }
    }
    return {best->ttl, best->memdays, best->q, true};
  }
  for (const SweepPoint& p : curve.points) {
    double norm_md = static_cast<double>(p.memdays - md_min) /
                     static_cast<double>(md_max - md_min);
    double norm_q = static_cast<double>(p.q - q_min) /
                    static_cast<double>(q_max - q_min);
    if (norm_md >= norm_q) return {p.ttl, p.memdays, p.q, false};
  }
  // Unreachable: the point with memdays == md_max has norm_md == 1.
  const SweepPoint& last = curve.points.back();
  return {last.ttl, last.memdays, last.q, false};
}

double monotone_fraction(const Trace& trace, IdentityPolicy policy) {
  long long total = 0, monotone = 0;
  for (const ObservationSeries& series : trace.series) {
    for (size_t t = 0; t + 1 < series.snapshots.size(); ++t) {
      const SnapshotPtr& prev = series.snapshots[t];
      const SnapshotPtr& next = series.snapshots[t + 1];
      if (!prev || !next) continue;
      if (series.synthetic.contains(static_cast<Day>(t))) continue;
      ++total;
      if (next->cardinality(policy) >= prev->cardinality(policy)) ++monotone;
    }
  }
  if (total == 0) return 1.0;
  return static_cast<double>(monotone) / static_cast<double>(total);
}

std::string export_report_csv(const SimulationReport& report) {
  std::ostringstream out;
  out << "day,fetches,memdays_increment,cache_cardinality,"
         "reference_cardinality,false_zero\n";
  for (const PerDay& d : report.per_day) {
    out << d.day << ',' << d.fetches << ',' << d.memdays_increment << ','
        << d.cache_cardinality << ',' << d.reference_cardinality << ','
        << d.false_zero << '\n';
  }
  return out.str();
}

std::string export_sweep_csv(const SweepCurve& curve) {
  std::ostringstream out;
  out << "ttl,memdays,q,missed_updates,false_zero_days\n";
  for (const SweepPoint& p : curve.points) {
    out << p.ttl.to_string() << ',' << p.memdays << ',' << p.q << ','
        << p.missed_updates << ',' << p.false_zero_days << '\n';
  }
  return out.str();
}

}  // namespace tmcache
