#pragma once

#include <string>
#include <vector>

#include "tmcache/cache_engine.hpp"
#include "tmcache/timemap_model.hpp"

namespace tmcache {

/// One observation corpus: N resources watched for T days.
struct Trace {
  std::vector<ObservationSeries> series;
  int n_resources = 0;
  int n_days = 0;
};

/// Substitute each mid-series gap day with a copy of the most recent
/// prior snapshot. Leading gaps (nothing observed yet) get an invented
/// empty snapshot, recorded in `synthetic` so rate metrics can skip it.
ObservationSeries fill_gaps(const ObservationSeries& series);
Trace fill_gaps(const Trace& trace);

/// Best single-TimeMap cardinality observable up to and including day t:
/// the running maximum, which is what a perfectly refreshed cache could
/// hold. Gap (null) days contribute nothing.
int reference_cardinality(const ObservationSeries& series, Day t,
                          IdentityPolicy policy);

struct ReplayOptions {
  IdentityPolicy identity = IdentityPolicy::Loose;
  /// RunningMax scores each day against the best cardinality seen so
  /// far; Instantaneous scores against that day's snapshot alone.
  enum class Reference { RunningMax, Instantaneous };
  Reference reference = Reference::RunningMax;
};

struct PerDay {
  Day day = 0;
  long long fetches = 0;
  long long memdays_increment = 0;
  long long cache_cardinality = 0;      // summed over resources
  long long reference_cardinality = 0;  // summed over resources
  long long false_zero = 0;

  friend bool operator==(const PerDay&, const PerDay&) = default;
};

struct SimulationReport {
  PolicyKind policy = PolicyKind::Conditional;
  Ttl ttl = Ttl::infinite();
  IdentityPolicy identity = IdentityPolicy::Loose;
  long long memdays = 0;
  long long q = 0;
  long long missed_updates = 0;
  long long false_zero_days = 0;
  std::vector<PerDay> per_day;

  friend bool operator==(const SimulationReport&, const SimulationReport&) =
      default;
};

/// Drive a cache of (policy, ttl) through the trace day by day. Each
/// day, each resource: look up; when not fresh, fetch that day's
/// snapshot (q += 1) and offer it; then score the cached state:
///   memdays       += max(reference - cached cardinality, 0)
///   missed_updates += 1 when no fetch happened but the live snapshot
///                     would have improved the cache
///   false_zero_days += 1 when the cache holds nothing while the
///                      reference says mementos exist.
/// Requires a gap-filled trace.
SimulationReport replay(const Trace& trace, PolicyKind policy, Ttl ttl,
                        const ReplayOptions& options = {});

struct SweepPoint {
  Ttl ttl = Ttl::finite(0);
  long long memdays = 0;
  long long q = 0;
  long long missed_updates = 0;
  long long false_zero_days = 0;
};

struct SweepCurve {
  PolicyKind policy = PolicyKind::Conditional;
  IdentityPolicy identity = IdentityPolicy::Loose;
  std::vector<SweepPoint> points;
};

/// One replay per TTL, points in the given order.
SweepCurve sweep(const Trace& trace, PolicyKind policy,
                 const std::vector<Ttl>& ttls,
                 const ReplayOptions& options = {});

/// Where the normalized MemDays curve first catches the normalized Q
/// curve. When either metric is flat across the sweep the crossing is
/// undefined; `degenerate` is set and the result is the point with the
/// fewest memdays (largest TTL on ties).
struct OptimalTtl {
  Ttl ttl = Ttl::finite(0);
  long long memdays = 0;
  long long q = 0;
  bool degenerate = false;
};

OptimalTtl optimal_ttl(const SweepCurve& curve);

/// Fraction of day-over-day transitions that kept or grew cardinality.
/// Transitions out of synthetic leading fills are excluded.
double monotone_fraction(const Trace& trace, IdentityPolicy policy);

/// CSV emitters. Deterministic, integer-exact.
std::string export_report_csv(const SimulationReport& report);
std::string export_sweep_csv(const SweepCurve& curve);

}  // namespace tmcache
