#ifndef TMCACHE_URI_HPP
#define TMCACHE_URI_HPP

#include <optional>
#include <string>

namespace tmcache {

/// Minimal decomposition of an absolute hierarchical URI. Enough for archive
/// identification and store filenames; not a general-purpose URL parser.
struct UriParts {
  std::string scheme;    // lowercased
  std::string host;      // lowercased, no port
  std::string port;      // empty when absent
  std::string rest;      // path + query + fragment, verbatim (may be empty)
};

/// Parse an absolute URI of the form scheme://host[:port][/rest].
/// Returns nullopt when the input has no scheme/authority or an empty host.
std::optional<UriParts> parse_uri(const std::string& uri);

bool is_absolute_uri(const std::string& uri);

/// Lowercase scheme and host, leave the rest untouched. Used for prefix
/// matching against archive rule tables. Returns the input unchanged when it
/// does not parse.
std::string normalize_uri_prefix_form(const std::string& uri);

/// Percent-encode every byte outside [A-Za-z0-9._~-]. Suitable for flat
/// store filenames.
std::string percent_encode(const std::string& s);

/// Decode %XX sequences; malformed escapes pass through verbatim.
std::string percent_decode(const std::string& s);

}  // namespace tmcache

#endif  // TMCACHE_URI_HPP
