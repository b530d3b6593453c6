#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "tmcache/errors.hpp"
#include "tmcache/snapshot_store.hpp"

using namespace tmcache;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("tmcache-store-test-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

const char* kBody =
    "<http://r.example/>;rel=\"original\",\n"
    "<http://archive-1.example/m/20101101000000>; rel=\"memento\"; "
    "datetime=\"Mon, 01 Nov 2010 00:00:00 GMT\"";

SnapshotRecord record(Day day, int status, std::string body,
                      std::string uri_r = "http://r.example/") {
  return {std::move(uri_r), day, day * kSecondsPerDay + 100, status,
          std::move(body)};
}

// Overwrite one stored body without touching its recorded checksum.
void corrupt_body(const fs::path& root, Day day) {
  for (const auto& entry : fs::directory_iterator(root / std::to_string(day)))
    if (entry.path().extension() == ".tm") {
      std::ofstream out(entry.path(), std::ios::trunc | std::ios::binary);
      out << "tampered";
      return;
    }
  FAIL("no .tm file found to corrupt");
}

}  // namespace

TEST_CASE("sha256 matches the published test vectors") {
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("records round trip byte for byte") {
  TempDir dir;
  SnapshotRecord rec = record(3, 200, kBody);
  write_record(dir.path, rec);
  auto back = read_record(dir.path, 3, rec.uri_r);
  REQUIRE(back.has_value());
  CHECK(*back == rec);
}

TEST_CASE("transport failures and empty observations persist too") {
  TempDir dir;
  write_record(dir.path, record(0, 0, ""));
  write_record(dir.path, record(1, 404, ""));
  CHECK(read_record(dir.path, 0, "http://r.example/")->http_status == 0);
  CHECK(read_record(dir.path, 1, "http://r.example/")->http_status == 404);
}

TEST_CASE("missing records read back as nullopt") {
  TempDir dir;
  CHECK(!read_record(dir.path, 0, "http://r.example/").has_value());
  write_record(dir.path, record(0, 200, kBody));
  CHECK(!read_record(dir.path, 0, "http://other.example/").has_value());
  CHECK(!read_record(dir.path, 1, "http://r.example/").has_value());
}

TEST_CASE("rewriting a record replaces it") {
  TempDir dir;
  write_record(dir.path, record(0, 0, ""));
  write_record(dir.path, record(0, 200, kBody));
  auto back = read_record(dir.path, 0, "http://r.example/");
  CHECK(back->http_status == 200);
  CHECK(back->body == kBody);
}

TEST_CASE("a tampered body fails its checksum") {
  TempDir dir;
  write_record(dir.path, record(0, 200, kBody));
  corrupt_body(dir.path, 0);
  CHECK_THROWS_AS(read_record(dir.path, 0, "http://r.example/"), CorruptStore);
}

TEST_CASE("a mangled meta line is corruption, not absence") {
  TempDir dir;
  write_record(dir.path, record(0, 200, kBody));
  for (const auto& entry :
       fs::directory_iterator(dir.path / "0"))
    if (entry.path().extension() == ".meta") {
      std::ofstream out(entry.path(), std::ios::trunc);
      out << "status=two-hundred\n";
    }
  CHECK_THROWS_AS(read_record(dir.path, 0, "http://r.example/"), CorruptStore);
}

TEST_CASE("day and uri listings come back sorted") {
  TempDir dir;
  write_record(dir.path, record(10, 200, kBody));
  write_record(dir.path, record(2, 200, kBody));
  write_record(dir.path, record(2, 200, kBody, "http://a.example/"));
  write_record(dir.path, record(0, 404, ""));
  CHECK(list_days(dir.path) == std::vector<Day>{0, 2, 10});
  CHECK(list_uris(dir.path, 2) ==
        std::vector<std::string>{"http://a.example/", "http://r.example/"});
  CHECK(list_days(dir.path / "no-such-subdir").empty());
  CHECK(list_uris(dir.path, 7).empty());
}

TEST_CASE("load_series spans the store's days and marks gap kinds") {
  TempDir dir;
  const std::string uri = "http://r.example/";
  write_record(dir.path, record(0, 200, kBody));       // real data
  write_record(dir.path, record(1, 0, ""));            // transport failure
  write_record(dir.path, record(2, 404, ""));          // observed empty
  write_record(dir.path, record(3, 503, "oops"));      // server error
  write_record(dir.path, record(4, 200, "<html>no</html>"));  // unparseable
  // Day 5 exists in the store only for another resource.
  write_record(dir.path, record(5, 200, kBody, "http://a.example/"));

  ObservationSeries series = load_series(dir.path, uri);
  CHECK(series.uri_r == uri);
  REQUIRE(series.snapshots.size() == 6);  // last day + 1

  REQUIRE(series.snapshots[0]);
  CHECK(series.snapshots[0]->cardinality(IdentityPolicy::Loose) == 1);
  CHECK(series.snapshots[0]->http_status == 200);

  CHECK(!series.snapshots[1]);  // transport failure -> gap
  CHECK(series.gaps.count(1) == 1);

  REQUIRE(series.snapshots[2]);  // 404 -> real empty observation
  CHECK(series.snapshots[2]->empty());
  CHECK(series.snapshots[2]->http_status == 404);
  CHECK(series.gaps.count(2) == 0);

  CHECK(!series.snapshots[3]);  // HTTP error -> gap
  CHECK(series.gaps.count(3) == 1);

  CHECK(!series.snapshots[4]);  // body would not parse -> gap
  CHECK(series.gaps.count(4) == 1);

  CHECK(!series.snapshots[5]);  // never harvested for this resource -> gap
  CHECK(series.gaps.count(5) == 1);

  CHECK(series.synthetic.empty());  // load never invents data
}

TEST_CASE("uri_rs with path and query survive the filename encoding") {
  TempDir dir;
  const std::string uri = "http://r.example/a b?q=1&x=2#frag";
  SnapshotRecord rec = record(0, 404, "", uri);
  write_record(dir.path, rec);
  auto back = read_record(dir.path, 0, uri);
  REQUIRE(back.has_value());
  CHECK(back->uri_r == uri);
  CHECK(list_uris(dir.path, 0) == std::vector<std::string>{uri});
}
