#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "doctest.h"
#include "finbench/common.hpp"
#include "finbench/io.hpp"
#include "finbench/rng.hpp"
#include "finbench/text.hpp"
#include "fixtures.hpp"

using namespace finbench;

TEST_SUITE("foundation") {

TEST_CASE("whitespace normalization trims and collapses") {
  CHECK(text::normalize_whitespace("  Apple \t  Inc\n ") == "Apple Inc");
  CHECK(text::normalize_whitespace("") == "");
  CHECK(text::trim("\t x \n") == "x");
  CHECK(text::casefold("ORG Ünï") == "org Ünï");
  CHECK(text::iequals("Neutral", "nEUTRAL"));
}

TEST_CASE("split keeps empty pieces") {
  CHECK(text::split("a; b; ", "; ") == std::vector<std::string>{"a", "b", ""});
  CHECK(text::split("", "; ") == std::vector<std::string>{""});
  CHECK(text::join({"x", "y"}, "/") == "x/y");
}

TEST_CASE("utf8 validation") {
  CHECK(text::is_valid_utf8("plain"));
  CHECK(text::is_valid_utf8("\xE2\x86\x91"));
  CHECK_FALSE(text::is_valid_utf8("\xE2\x86"));
  CHECK_FALSE(text::is_valid_utf8("\xC0\xAF"));
  CHECK_FALSE(text::is_valid_utf8("\xFF"));
}

TEST_CASE("csv honours quotes, bom and crlf") {
  auto t = io::parse_csv("\xEF\xBB\xBFtext,label\r\n\"a, \"\"b\"\"\",pos\r\n\r\nc,neg\n");
  REQUIRE(t.header == std::vector<std::string>{"text", "label"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == "a, \"b\"");
  CHECK(t.rows[1] == std::vector<std::string>{"c", "neg"});
  CHECK(io::parse_csv("").rows.empty());
}

TEST_CASE("tsv splits on tabs only") {
  auto t = io::parse_tsv("a\tb\nx, y\tz\n");
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0][0] == "x, y");
}

TEST_CASE("jsonl errors name the line") {
  try {
    io::parse_jsonl("{\"a\":1}\n{oops\n", "f.jsonl");
    FAIL("expected MalformedRow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedRow);
    CHECK(std::string(e.what()).find("f.jsonl:2:") != std::string::npos);
  }
  CHECK(io::parse_jsonl("\n{\"a\":1}\n\n", "f").size() == 1);
}

TEST_CASE("sha256 known vector") {
  CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("atomic write replaces content and creates parents") {
  fixtures::TempDir dir;
  const auto path = dir / "a/b/c.txt";
  io::write_file_atomic(path, "one");
  io::write_file_atomic(path, "two");
  CHECK(io::read_file(path) == "two");
  size_t entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(path.parent_path())) ++entries;
  CHECK(entries == 1);
}

TEST_CASE("missing file maps to MissingFile") {
  try {
    io::read_file("/nonexistent/finbench");
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingFile);
  }
}

TEST_CASE("task and phase names round-trip") {
  for (TaskKind t : kAllTasks) CHECK(parse_task(to_string(t)) == t);
  for (Phase p : {Phase::TaskSpecific, Phase::MultiTask, Phase::ZeroShot}) CHECK(parse_phase(to_string(p)) == p);
  CHECK_THROWS_AS(parse_phase("phase4"), Error);
  CHECK(is_classification(TaskKind::SA));
  CHECK(is_classification(TaskKind::NER_CLS));
  CHECK_FALSE(is_classification(TaskKind::NER));
  CHECK_FALSE(is_classification(TaskKind::RE));
}

TEST_CASE("derived seeds depend on every part") {
  CHECK(rng::derive_seed(1, "a", "b") == rng::derive_seed(1, "a", "b"));
  CHECK(rng::derive_seed(1, "a", "b") != rng::derive_seed(1, "b", "a"));
  CHECK(rng::derive_seed(1, "a") != rng::derive_seed(2, "a"));
}

TEST_CASE("bounded draws stay in range and cover it") {
  rng::Rng gen(3);
  std::vector<size_t> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    auto v = gen.below(7);
    REQUIRE(v < 7);
    ++hits[v];
  }
  for (size_t h : hits) CHECK(h > 800);
}

TEST_CASE("shuffle is a permutation and reproducible") {
  for (uint64_t seed = 0; seed < 50; ++seed) {
    std::vector<int> a(23), b(23);
    std::iota(a.begin(), a.end(), 0);
    b = a;
    rng::Rng g1(seed), g2(seed);
    g1.shuffle(std::span<int>(a));
    g2.shuffle(std::span<int>(b));
    CHECK(a == b);
    std::vector<int> sorted = a;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 23; ++i) CHECK(sorted[i] == i);
  }
}

TEST_CASE("shuffle positions are roughly uniform") {
  // Element 0 should land in each of 5 slots about a fifth of the time.
  std::vector<size_t> where(5, 0);
  for (uint64_t seed = 0; seed < 5000; ++seed) {
    std::vector<int> v = {0, 1, 2, 3, 4};
    rng::Rng gen(seed);
    gen.shuffle(std::span<int>(v));
    ++where[std::find(v.begin(), v.end(), 0) - v.begin()];
  }
  for (size_t w : where) CHECK(std::abs(static_cast<double>(w) / 5000.0 - 0.2) < 0.03);
}

}
