#include "tmcache/uri.hpp"

#include <cctype>

namespace tmcache {

namespace {

bool is_scheme_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' ||
         c == '.';
}

char lower(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

}  // namespace

std::optional<UriParts> parse_uri(const std::string& uri) {
  size_t colon = uri.find("://");
  if (colon == std::string::npos || colon == 0) return std::nullopt;
  UriParts parts;
  for (size_t i = 0; i < colon; ++i) {
    if (!is_scheme_char(uri[i])) return std::nullopt;
    parts.scheme.push_back(lower(uri[i]));
  }
  if (!std::isalpha(static_cast<unsigned char>(uri[0]))) return std::nullopt;
  size_t auth_begin = colon + 3;
  size_t auth_end = uri.find_first_of("/?#", auth_begin);
  std::string authority = (auth_end == std::string::npos)
                              ? uri.substr(auth_begin)
                              : uri.substr(auth_begin, auth_end - auth_begin);
  if (authority.empty()) return std::nullopt;
  // Strip userinfo if present.
  size_t at = authority.rfind('@');
  if (at != std::string::npos) authority = authority.substr(at + 1);
  size_t port_colon = authority.rfind(':');
  if (port_colon != std::string::npos) {
    std::string port = authority.substr(port_colon + 1);
    bool numeric = !port.empty();
    for (char c : port) {
      if (!std::isdigit(static_cast<unsigned char>(c))) numeric = false;
    }
    if (numeric) {
      parts.port = port;
      authority = authority.substr(0, port_colon);
    }
  }
  if (authority.empty()) return std::nullopt;
  for (char c : authority) {
    if (c == ' ' || c == '<' || c == '>' || c == '"') return std::nullopt;
    parts.host.push_back(lower(c));
  }
  if (auth_end != std::string::npos) parts.rest = uri.substr(auth_end);
  return parts;
}

bool is_absolute_uri(const std::string& uri) {
  return parse_uri(uri).has_value();
}

std::string normalize_uri_prefix_form(const std::string& uri) {
  auto parts = parse_uri(uri);
  if (!parts) return uri;
  std::string out = parts->scheme + "://" + parts->host;
  if (!parts->port.empty()) out += ":" + parts->port;
  out += parts->rest;
  return out;
}

std::string percent_encode(const std::string& s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  out.reserve(s.size() * 3);
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '.' || c == '_' || c == '~' || c == '-') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 0xF]);
    }
  }
  return out;
}

std::string percent_decode(const std::string& s) {
  auto hexval = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      int hi = hexval(s[i + 1]);
      int lo = hexval(s[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out.push_back(static_cast<char>((hi << 4) | lo));
        i += 2;
        continue;
      }
    }
    out.push_back(s[i]);
  }
  return out;
}

}  // namespace tmcache
