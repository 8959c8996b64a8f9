#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "testutil.hpp"
#include "wikigeo/errors.hpp"
#include "wikigeo/io.hpp"

using namespace wikigeo;

namespace {

std::vector<std::string> drain(io::LineSource& lines) {
  std::vector<std::string> out;
  std::string line;
  while (lines.next(line)) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("line splitting handles terminators and final fragments") {
  auto lines = io::lines_from_string("a\nb\r\nc");
  CHECK(drain(*lines) == std::vector<std::string>{"a", "b", "c"});

  lines = io::lines_from_string("a\nb\n");
  CHECK(drain(*lines) == std::vector<std::string>{"a", "b"});

  lines = io::lines_from_string("");
  CHECK(drain(*lines).empty());

  lines = io::lines_from_string("\n\nx\n");
  CHECK(drain(*lines) == std::vector<std::string>{"", "", "x"});
}

TEST_CASE("line numbers are 1-based and track the last yielded line") {
  auto lines = io::lines_from_string("first\nsecond\nthird\n");
  std::string line;
  REQUIRE(lines->next(line));
  CHECK(lines->line_number() == 1);
  REQUIRE(lines->next(line));
  REQUIRE(lines->next(line));
  CHECK(line == "third");
  CHECK(lines->line_number() == 3);
  CHECK_FALSE(lines->next(line));
}

TEST_CASE("gzip round trip through the sniffing reader") {
  std::string payload = "alpha\nbeta\ngamma\n";
  std::string compressed = io::gzip_compress(payload);
  REQUIRE(compressed.size() >= 2);
  CHECK(static_cast<unsigned char>(compressed[0]) == 0x1f);
  CHECK(static_cast<unsigned char>(compressed[1]) == 0x8b);
  auto lines = io::make_line_source(io::make_memory_source(compressed));
  CHECK(drain(*lines) == std::vector<std::string>{"alpha", "beta", "gamma"});
}

TEST_CASE("concatenated gzip members decompress as one stream") {
  std::string combined =
      io::gzip_compress("one\ntwo\n") + io::gzip_compress("three\n");
  auto lines = io::make_line_source(io::make_memory_source(combined));
  CHECK(drain(*lines) == std::vector<std::string>{"one", "two", "three"});
}

TEST_CASE("truncated gzip input is an error, not silent end of data") {
  std::string compressed = io::gzip_compress("some longer payload here\n");
  std::string truncated = compressed.substr(0, compressed.size() / 2);
  // The sniffing layer may hit the truncation while probing for a tar
  // header, so construction is allowed to throw too.
  CHECK_THROWS_AS(
      {
        auto lines = io::make_line_source(io::make_memory_source(truncated));
        std::string line;
        while (lines->next(line)) {
        }
      },
      IoError);
}

TEST_CASE("10k-line gzip stream survives a round trip") {
  std::vector<std::string> expected;
  std::string payload;
  for (int i = 0; i < 10000; ++i) {
    expected.push_back("line-" + std::to_string(i));
    payload += expected.back();
    payload += '\n';
  }
  std::string compressed = io::gzip_compress(payload);
  auto lines = io::make_line_source(io::make_memory_source(compressed));
  CHECK(drain(*lines) == expected);
}

TEST_CASE("tar archives stream member lines in order") {
  std::string archive = testutil::tar_archive({
      {"a.ndjson", "m1-l1\nm1-l2\n"},
      {"b.ndjson", "m2-l1\n"},
  });
  auto lines = io::make_line_source(io::make_memory_source(archive));
  CHECK(drain(*lines) == std::vector<std::string>{"m1-l1", "m1-l2", "m2-l1"});
}

TEST_CASE("tar reader skips directories and handles unpadded tails") {
  std::string archive = testutil::tar_member("dir/", "", '5') +
                        testutil::tar_member("data.ndjson", "x\ny") +
                        std::string(1024, '\0');
  auto lines = io::make_line_source(io::make_memory_source(archive));
  CHECK(drain(*lines) == std::vector<std::string>{"x", "y"});
}

TEST_CASE("tar reader resolves GNU long names") {
  std::string long_name(140, 'n');
  long_name += ".ndjson";
  std::string archive = testutil::tar_archive({{long_name, "payload\n"}});
  auto lines = io::make_line_source(io::make_memory_source(archive));
  CHECK(drain(*lines) == std::vector<std::string>{"payload"});
}

TEST_CASE("gzipped tar archives are sniffed layer by layer") {
  std::string archive = testutil::tar_archive({
      {"part-0.ndjson", "r1\nr2\n"},
      {"part-1.ndjson", "r3\n"},
  });
  std::string compressed = io::gzip_compress(archive);
  auto lines = io::make_line_source(io::make_memory_source(compressed));
  CHECK(drain(*lines) == std::vector<std::string>{"r1", "r2", "r3"});
}

TEST_CASE("file sink and source round trip, including gzip by suffix") {
  testutil::TempDir dir;

  SUBCASE("plain file") {
    std::string path = dir.path("plain.jsonl");
    auto sink = io::open_line_sink(path);
    sink->write("one");
    sink->write("two");
    sink->close();
    CHECK(io::read_file(path) == "one\ntwo\n");
    auto lines = io::open_lines(path);
    CHECK(drain(*lines) == std::vector<std::string>{"one", "two"});
  }

  SUBCASE("gzip by .gz suffix") {
    std::string path = dir.path("packed.jsonl.gz");
    auto sink = io::open_line_sink(path);
    for (int i = 0; i < 1000; ++i) sink->write("row-" + std::to_string(i));
    sink->close();
    std::string raw = io::read_file(path);
    REQUIRE(raw.size() >= 2);
    CHECK(static_cast<unsigned char>(raw[0]) == 0x1f);
    CHECK(static_cast<unsigned char>(raw[1]) == 0x8b);
    auto lines = io::open_lines(path);
    std::vector<std::string> got = drain(*lines);
    REQUIRE(got.size() == 1000);
    CHECK(got.front() == "row-0");
    CHECK(got.back() == "row-999");
  }

  SUBCASE("sink creates parent directories") {
    std::string path = dir.path("nested/deeper/out.jsonl");
    auto sink = io::open_line_sink(path);
    sink->write("content");
    sink->close();
    CHECK(io::read_file(path) == "content\n");
  }
}

TEST_CASE("missing input file raises IoError") {
  CHECK_THROWS_AS(io::open_file_source("/nonexistent/nope.jsonl"), IoError);
  CHECK_THROWS_AS(io::read_file("/nonexistent/nope.jsonl"), IoError);
}

TEST_CASE("write_file and read_file round trip binary content") {
  testutil::TempDir dir;
  std::string path = dir.path("blob.bin");
  std::string blob;
  std::mt19937_64 rng(7);
  for (int i = 0; i < 4096; ++i) {
    blob.push_back(static_cast<char>(rng() % 256));
  }
  io::write_file(path, blob);
  CHECK(io::read_file(path) == blob);
}
