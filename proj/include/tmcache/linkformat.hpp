#ifndef TMCACHE_LINKFORMAT_HPP
#define TMCACHE_LINKFORMAT_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tmcache/dtime.hpp"

namespace tmcache {

/// One <target>; attr=value; ... link from an application/link-format
/// document.
struct LinkEntry {
  std::string target;            // absolute URI
  std::vector<std::string> rel;  // one token per rel attribute, whitespace
                                 // normalized (compound values like
                                 // "first memento" stay whole)
  std::optional<Instant> datetime;  // parsed from RFC 1123 text
  bool datetime_malformed = false;  // datetime attribute present but unparseable
  // Attributes other than rel and a successfully parsed datetime, in
  // document order.
  std::vector<std::pair<std::string, std::string>> raw_attributes;

  bool has_memento_rel() const;

  friend bool operator==(const LinkEntry&, const LinkEntry&) = default;
};

/// A parsed TimeMap document. `entries` keeps every well-formed link in
/// document order, including the original/self/timegate links.
struct RawTimeMap {
  std::vector<LinkEntry> entries;
  std::optional<std::string> original;   // URI-R, from rel="original" or caller
  std::optional<std::string> self_uri;   // URI-T, from rel="self"
  std::optional<std::string> timegate;
  // Parse provenance, not identity: excluded from equality.
  int skipped_entries = 0;
  int datetime_failures = 0;

  std::vector<const LinkEntry*> memento_entries() const;

  friend bool operator==(const RawTimeMap& a, const RawTimeMap& b) {
    return a.entries == b.entries && a.original == b.original &&
           a.self_uri == b.self_uri && a.timegate == b.timegate;
  }
};

/// Parse a link-format document. Malformed entries are skipped and counted,
/// never aborting the parse. Throws HardParseFailure only when the body is
/// non-empty, non-whitespace and yields zero well-formed entries.
RawTimeMap parse_timemap(const std::string& body,
                         const std::optional<std::string>& declared_uri_r =
                             std::nullopt);

/// Serialize to link-format text. Zero entries give an empty string. The
/// output re-parses to an equal RawTimeMap.
std::string serialize_timemap(const RawTimeMap& tm);

}  // namespace tmcache

#endif  // TMCACHE_LINKFORMAT_HPP
