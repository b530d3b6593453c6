#include "tmcache/snapshot_store.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tmcache/errors.hpp"
#include "tmcache/linkformat.hpp"
#include "tmcache/uri.hpp"

namespace tmcache {

namespace fs = std::filesystem;

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw IoFailure("sha256 digest failed");
  }
  static const char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

namespace {

fs::path day_dir(const fs::path& root, Day day) {
  return root / std::to_string(day);
}

fs::path body_path(const fs::path& root, Day day, const std::string& uri_r) {
  return day_dir(root, day) / (percent_encode(uri_r) + ".tm");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoFailure("read failed for " + path.string());
  return std::move(buf).str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoFailure("write failed for " + path.string());
}

}  // namespace

void write_record(const fs::path& root, const SnapshotRecord& record) {
  std::error_code ec;
  fs::create_directories(day_dir(root, record.day), ec);
  if (ec) {
    throw IoFailure("cannot create " + day_dir(root, record.day).string() +
                    ": " + ec.message());
  }
  fs::path body = body_path(root, record.day, record.uri_r);
  write_file(body, record.body);
  char meta[160];
  std::snprintf(meta, sizeof(meta), "status=%d instant=%s sha256=%s\n",
                record.http_status, format_iso8601(record.instant).c_str(),
                sha256_hex(record.body).c_str());
  write_file(fs::path(body).replace_extension(".meta"), meta);
}

std::optional<SnapshotRecord> read_record(const fs::path& root, Day day,
                                          const std::string& uri_r) {
  fs::path body = body_path(root, day, uri_r);
  fs::path meta = fs::path(body).replace_extension(".meta");
  if (!fs::exists(body) && !fs::exists(meta)) return std::nullopt;
  if (!fs::exists(body) || !fs::exists(meta)) {
    throw CorruptStore("half-written record: " + body.string());
  }
  SnapshotRecord record;
  record.uri_r = uri_r;
  record.day = day;
  record.body = read_file(body);

  std::istringstream fields(read_file(meta));
  std::string field;
  bool have_status = false, have_instant = false, have_sha = false;
  while (fields >> field) {
    size_t eq = field.find('=');
    if (eq == std::string::npos) {
      throw CorruptStore("bad meta field in " + meta.string());
    }
    std::string name = field.substr(0, eq);
    std::string value = field.substr(eq + 1);
    if (name == "status") {
      try {
        record.http_status = std::stoi(value);
      } catch (const std::exception&) {
        throw CorruptStore("bad status in " + meta.string());
      }
      have_status = true;
    } else if (name == "instant") {
      auto t = parse_iso8601(value);
      if (!t) throw CorruptStore("bad instant in " + meta.string());
      record.instant = *t;
      have_instant = true;
    } else if (name == "sha256") {
      if (value != sha256_hex(record.body)) {
        throw CorruptStore("checksum mismatch for " + body.string());
      }
      have_sha = true;
    }
  }
  if (!have_status || !have_instant || !have_sha) {
    throw CorruptStore("incomplete meta in " + meta.string());
  }
  return record;
}

std::vector<Day> list_days(const fs::path& root) {
  std::vector<Day> days;
  if (!fs::exists(root)) return days;
  for (const fs::directory_entry& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    if (name.empty() ||
        name.find_first_not_of("0123456789") != std::string::npos) {
      continue;
    }
    days.push_back(std::stoi(name));
  }
  std::sort(days.begin(), days.end());
  return days;
}

std::vector<std::string> list_uris(const fs::path& root, Day day) {
  std::vector<std::string> uris;
  fs::path dir = day_dir(root, day);
  if (!fs::exists(dir)) return uris;
  for (const fs::directory_entry& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".tm") continue;
    uris.push_back(percent_decode(entry.path().stem().string()));
  }
  std::sort(uris.begin(), uris.end());
  return uris;
}

ObservationSeries load_series(const fs::path& root, const std::string& uri_r,
                              const ArchiveRules& rules) {
  ObservationSeries series;
  series.uri_r = uri_r;
  std::vector<Day> days = list_days(root);
  if (days.empty()) throw EmptyTrace("no day directories under " +
                                     root.string());
  Day n_days = days.back() + 1;
  series.snapshots.assign(static_cast<size_t>(n_days), nullptr);
  for (Day day = 0; day < n_days; ++day) {
    std::optional<SnapshotRecord> record = read_record(root, day, uri_r);
    if (!record || record->http_status == 0) {
      series.gaps.insert(day);
      continue;
    }
    if (record->http_status == 404) {
      series.snapshots[day] =
          make_snapshot(uri_r, day, record->instant, 404, MementoListPtr{});
      continue;
    }
    if (record->http_status < 200 || record->http_status >= 300) {
      series.gaps.insert(day);  // 5xx etc: no observation of the TimeMap
      continue;
    }
    try {
      RawTimeMap raw = parse_timemap(record->body, uri_r);
      series.snapshots[day] = snapshot_from_raw(raw, rules, uri_r, day,
                                                record->instant,
                                                record->http_status);
    } catch (const HardParseFailure&) {
      series.gaps.insert(day);  // 200 with garbage body: unusable
    }
  }
  return series;
}

}  // namespace tmcache
