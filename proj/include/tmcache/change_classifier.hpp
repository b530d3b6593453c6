#pragma once

#include "tmcache/timemap_model.hpp"

namespace tmcache {

/// What moved between two consecutive snapshots of one resource.
/// `gained`/`lost` count distinct memento keys under `policy`;
/// `archives_gained`/`archives_lost` count archive-set differences.
struct ChangeDelta {
  int a = 0;        // archives before
  int a_prime = 0;  // archives after
  int m = 0;        // cardinality before
  int m_prime = 0;  // cardinality after
  int gained = 0;
  int lost = 0;
  int archives_gained = 0;
  int archives_lost = 0;
  IdentityPolicy policy = IdentityPolicy::Loose;

  friend bool operator==(const ChangeDelta&, const ChangeDelta&) = default;
};

/// The seven ways a TimeMap can move day over day. Numbering is part of
/// the public contract (reports, CSV output).
enum class ChangeCase : int {
  Unchanged = 1,          // nothing gained, nothing lost
  Growth = 2,             // new mementos, same archives
  GrowthNewArchive = 3,   // new mementos from at least one new archive
  GrowthArchiveLost = 4,  // new mementos despite losing an archive
  Churn = 5,              // gains and losses, no archive lost
  ShrinkArchiveLost = 6,  // losses only, at least one archive gone
  Shrink = 7,             // losses only, archives intact
};

inline int case_number(ChangeCase c) { return static_cast<int>(c); }

const char* to_string(ChangeCase c);

ChangeDelta change_delta(const TimeMapSnapshot& prev,
                         const TimeMapSnapshot& next, IdentityPolicy policy);

ChangeCase classify_delta(const ChangeDelta& d);

/// classify_delta(change_delta(prev, next, policy)).
/// Throws MismatchedResource when the snapshots cover different URI-Rs.
ChangeCase classify(const TimeMapSnapshot& prev, const TimeMapSnapshot& next,
                    IdentityPolicy policy);

/// True for the cases worth replacing a cached TimeMap over: the ones
/// that bring new mementos (2, 3, 4, 5).
bool is_improvement(ChangeCase c);

}  // namespace tmcache
