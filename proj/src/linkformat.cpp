#include "tmcache/linkformat.hpp"

#include <algorithm>
#include <cctype>

#include "tmcache/errors.hpp"
#include "tmcache/uri.hpp"

namespace tmcache {

namespace {

std::string to_lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// Collapse internal whitespace runs to single spaces and trim the ends.
std::string normalize_ws(const std::string& s) {
  std::string out;
  bool in_ws = false;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      in_ws = !out.empty();
    } else {
      if (in_ws) out.push_back(' ');
      in_ws = false;
      out.push_back(c);
    }
  }
  return out;
}

bool is_token_name(const std::string& s) {
  if (s.empty()) return false;
  for (unsigned char c : s) {
    if (std::isalnum(c)) continue;
    if (std::string("_-.*'%!#$&+^`|~").find(static_cast<char>(c)) !=
        std::string::npos) {
      continue;
    }
    return false;
  }
  return true;
}

/// Split on `sep` at positions outside quoted strings.
std::vector<std::string> split_outside_quotes(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  bool in_quote = false;
  bool escaped = false;
  for (char c : s) {
    if (in_quote) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_quote = false;
      }
      cur.push_back(c);
      continue;
    }
    if (c == '"') {
      in_quote = true;
      cur.push_back(c);
      continue;
    }
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
      continue;
    }
    cur.push_back(c);
  }
  out.push_back(cur);
  return out;
}

/// Unquote a parameter value: strip surrounding quotes and resolve
/// backslash escapes. Bare tokens are trimmed. Returns nullopt for bare
/// values containing a quote (they cannot round-trip safely).
std::optional<std::string> parse_value(const std::string& raw) {
  std::string v = trim(raw);
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
    std::string out;
    bool escaped = false;
    for (size_t i = 1; i + 1 < v.size(); ++i) {
      char c = v[i];
      if (escaped) {
        out.push_back(c);
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        return std::nullopt;  // quote ends early: junk after it
      } else {
        out.push_back(c);
      }
    }
    if (escaped) return std::nullopt;
    return out;
  }
  if (v.find('"') != std::string::npos) return std::nullopt;
  return v;
}

std::string quote_value(const std::string& v) {
  std::string out = "\"";
  for (char c : v) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

struct EntryParse {
  std::optional<LinkEntry> entry;
  int datetime_failures = 0;
};

EntryParse parse_entry(const std::string& segment) {
  EntryParse result;
  std::string s = trim(segment);
  if (s.empty() || s.front() != '<') return result;
  size_t close = s.find('>');
  if (close == std::string::npos) return result;
  LinkEntry entry;
  entry.target = trim(s.substr(1, close - 1));
  if (entry.target.empty() || !is_absolute_uri(entry.target)) return result;

  std::string params = s.substr(close + 1);
  bool first = true;
  for (const std::string& piece : split_outside_quotes(params, ';')) {
    std::string p = trim(piece);
    if (first) {
      first = false;
      // Anything between '>' and the first ';' must be whitespace.
      if (!p.empty()) return result;
      continue;
    }
    if (p.empty()) continue;
    size_t eq = p.find('=');
    std::string name = to_lower(trim(eq == std::string::npos ? p : p.substr(0, eq)));
    if (!is_token_name(name)) return result;
    std::optional<std::string> value =
        eq == std::string::npos ? std::optional<std::string>("")
                                : parse_value(p.substr(eq + 1));
    if (!value) return result;
    if (name == "rel") {
      std::string tokens = normalize_ws(*value);
      if (tokens.empty()) {
        entry.raw_attributes.emplace_back("rel", *value);
      } else {
        entry.rel.push_back(tokens);
      }
    } else if (name == "datetime" && !entry.datetime &&
               !entry.datetime_malformed) {
      if (auto t = parse_rfc1123(*value)) {
        entry.datetime = *t;
      } else {
        entry.datetime_malformed = true;
        ++result.datetime_failures;
        entry.raw_attributes.emplace_back("datetime", *value);
      }
    } else {
      entry.raw_attributes.emplace_back(name, *value);
    }
  }
  if (entry.has_memento_rel() && !entry.datetime) return result;
  result.entry = std::move(entry);
  return result;
}

/// Split a document into entry segments on commas outside <...> and quotes.
std::vector<std::string> split_entries(const std::string& body) {
  std::vector<std::string> out;
  std::string cur;
  bool in_angle = false;
  bool in_quote = false;
  bool escaped = false;
  for (char c : body) {
    if (in_quote) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_quote = false;
      }
      cur.push_back(c);
      continue;
    }
    if (in_angle) {
      if (c == '>') in_angle = false;
      cur.push_back(c);
      continue;
    }
    switch (c) {
      case '"':
        in_quote = true;
        cur.push_back(c);
        break;
      case '<':
        in_angle = true;
        cur.push_back(c);
        break;
      case ',':
        out.push_back(cur);
        cur.clear();
        break;
      default:
        cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

bool has_rel_token(const LinkEntry& e, const std::string& lowered) {
  for (const std::string& t : e.rel) {
    if (to_lower(t) == lowered) return true;
  }
  return false;
}

}  // namespace

bool LinkEntry::has_memento_rel() const {
  for (const std::string& t : rel) {
    if (to_lower(t).find("memento") != std::string::npos) return true;
  }
  return false;
}

std::vector<const LinkEntry*> RawTimeMap::memento_entries() const {
  std::vector<const LinkEntry*> out;
  for (const LinkEntry& e : entries) {
    if (e.has_memento_rel()) out.push_back(&e);
  }
  return out;
}

RawTimeMap parse_timemap(const std::string& body,
                         const std::optional<std::string>& declared_uri_r) {
  RawTimeMap tm;
  for (std::string segment : split_entries(body)) {
    if (trim(segment).empty()) continue;  // trailing comma, blank line
    // Resync on garbage between entries (elision markers, comment
    // lines): anything before the first '<' is one skipped fragment,
    // the remainder still gets a chance to parse.
    size_t first_char = segment.find_first_not_of(" \t\r\n");
    if (first_char != std::string::npos && segment[first_char] != '<') {
      size_t angle = segment.find('<', first_char);
      ++tm.skipped_entries;
      if (angle == std::string::npos) continue;
      segment.erase(0, angle);
    }
    EntryParse parsed = parse_entry(segment);
    tm.datetime_failures += parsed.datetime_failures;
    if (!parsed.entry) {
      ++tm.skipped_entries;
      continue;
    }
    LinkEntry& entry = *parsed.entry;
    if (has_rel_token(entry, "original")) {
      if (tm.original) {
        ++tm.skipped_entries;  // at most one original link
        continue;
      }
      tm.original = entry.target;
    }
    if (!tm.self_uri && has_rel_token(entry, "self")) tm.self_uri = entry.target;
    if (!tm.timegate && has_rel_token(entry, "timegate")) {
      tm.timegate = entry.target;
    }
    tm.entries.push_back(std::move(entry));
  }
  if (tm.entries.empty()) {
    if (trim(body).empty()) return tm;  // 0-sized TimeMap, not an error
    throw HardParseFailure("no well-formed link entries in non-empty body");
  }
  if (!tm.original) tm.original = declared_uri_r;
  return tm;
}

std::string serialize_timemap(const RawTimeMap& tm) {
  std::string out;
  bool first_entry = true;
  for (const LinkEntry& e : tm.entries) {
    if (!first_entry) out += ",\n";
    first_entry = false;
    out += "<" + e.target + ">";
    for (const std::string& token : e.rel) {
      out += "; rel=" + quote_value(token);
    }
    if (e.datetime) {
      out += "; datetime=" + quote_value(format_rfc1123(*e.datetime));
    }
    for (const auto& [name, value] : e.raw_attributes) {
      out += "; " + name + "=" + quote_value(value);
    }
  }
  return out;
}

}  // namespace tmcache
