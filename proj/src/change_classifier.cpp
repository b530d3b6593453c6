#include "tmcache/change_classifier.hpp"

#include <algorithm>

#include "tmcache/errors.hpp"

namespace tmcache {

namespace {

/// |a ∖ b| for sorted unique ranges.
template <typename T>
int difference_count(const std::vector<T>& a, const std::vector<T>& b) {
  int count = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end()) {
    if (ib == b.end() || *ia < *ib) {
      ++count;
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++ia;
      ++ib;
    }
  }
  return count;
}

}  // namespace

ChangeDelta change_delta(const TimeMapSnapshot& prev,
                         const TimeMapSnapshot& next, IdentityPolicy policy) {
  if (prev.uri_r != next.uri_r) {
    throw MismatchedResource(prev.uri_r + " vs " + next.uri_r);
  }
  ChangeDelta d;
  d.policy = policy;
  d.a = static_cast<int>(prev.mementos->archives().size());
  d.a_prime = static_cast<int>(next.mementos->archives().size());
  d.m = prev.cardinality(policy);
  d.m_prime = next.cardinality(policy);
  if (prev.mementos == next.mementos) return d;  // shared list: no delta
  d.gained = difference_count(next.keys(policy), prev.keys(policy));
  d.lost = difference_count(prev.keys(policy), next.keys(policy));
  d.archives_gained =
      difference_count(next.mementos->archives(), prev.mementos->archives());
  d.archives_lost =
      difference_count(prev.mementos->archives(), next.mementos->archives());
  return d;
}

ChangeCase classify_delta(const ChangeDelta& d) {
  if (d.gained == 0 && d.lost == 0) return ChangeCase::Unchanged;
  if (d.gained > 0) {
    if (d.archives_lost > 0) return ChangeCase::GrowthArchiveLost;
    if (d.lost > 0) return ChangeCase::Churn;
    if (d.archives_gained > 0) return ChangeCase::GrowthNewArchive;
    return ChangeCase::Growth;
  }
  return d.archives_lost > 0 ? ChangeCase::ShrinkArchiveLost
                             : ChangeCase::Shrink;
}

ChangeCase classify(const TimeMapSnapshot& prev, const TimeMapSnapshot& next,
                    IdentityPolicy policy) {
  return classify_delta(change_delta(prev, next, policy));
}

bool is_improvement(ChangeCase c) {
  switch (c) {
    case ChangeCase::Growth:
    case ChangeCase::GrowthNewArchive:
    case ChangeCase::GrowthArchiveLost:
    case ChangeCase::Churn:
      return true;
    default:
      return false;
  }
}

const char* to_string(ChangeCase c) {
  switch (c) {
    case ChangeCase::Unchanged:
      return "unchanged";
    case ChangeCase::Growth:
      return "growth";
    case ChangeCase::GrowthNewArchive:
      return "growth-new-archive";
    case ChangeCase::GrowthArchiveLost:
      return "growth-archive-lost";
    case ChangeCase::Churn:
      return "churn";
    case ChangeCase::ShrinkArchiveLost:
      return "shrink-archive-lost";
    default:
      return "shrink";
  }
}

}  // namespace tmcache
