#ifndef TMCACHE_ERRORS_HPP
#define TMCACHE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tmcache {

/// Base class for all tmcache errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Response body is not a TimeMap at all (e.g. an HTML error page).
struct HardParseFailure : Error {
  using Error::Error;
};

/// Input could not be parsed as an absolute URI.
struct InvalidUri : Error {
  using Error::Error;
};

/// Two snapshots that must describe the same URI-R do not.
struct MismatchedResource : Error {
  using Error::Error;
};

/// Generator configuration fails validation.
struct InvalidConfig : Error {
  using Error::Error;
};

/// Filesystem error while reading or writing a snapshot store.
struct IoFailure : Error {
  using Error::Error;
};

/// Snapshot store contents fail integrity checks (checksum, meta format).
struct CorruptStore : Error {
  using Error::Error;
};

/// A trace or store with no usable observations.
struct EmptyTrace : Error {
  using Error::Error;
};

/// Snapshot construction violates a structural invariant (e.g. a 404
/// snapshot carrying mementos).
struct InvalidSnapshot : Error {
  using Error::Error;
};

}  // namespace tmcache

#endif  // TMCACHE_ERRORS_HPP
