#include <cstdlib>
#include <string>

#include "doctest.h"
#include "finbench/finbench.h"
#include "finbench/io.hpp"
#include "finbench/pipeline.hpp"
#include "fixtures.hpp"

using namespace finbench;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Handle {
  fb_session* s = nullptr;
  Handle() {
    ::unsetenv("FINBENCH_CONFIG");
    REQUIRE(fb_session_create(nullptr, &s) == FB_OK);
  }
  ~Handle() { fb_session_destroy(s); }
};

void point_at(fb_session* s, const fs::path& dir) {
  REQUIRE(fb_session_set(s, "work_dir", (dir / "work").c_str()) == FB_OK);
  REQUIRE(fb_session_set(s, "runs_dir", (dir / "runs").c_str()) == FB_OK);
}

}  // namespace

TEST_SUITE("capi") {

TEST_CASE("cost formats two decimals") {
  char buf[32];
  REQUIRE(fb_cost(90, 3.36, buf, sizeof buf) == FB_OK);
  CHECK(std::string(buf) == "302.40");
  REQUIRE(fb_cost(0, 3.36, buf, sizeof buf) == FB_OK);
  CHECK(std::string(buf) == "0.00");
  CHECK(fb_cost(90, 3.36, buf, 3) == FB_INVALID_ARGUMENT);
  CHECK(fb_cost(90, 3.36, nullptr, 8) == FB_INVALID_ARGUMENT);
  CHECK(fb_cost(-1, 3.36, buf, sizeof buf) == FB_INVALID_ARGUMENT);
}

TEST_CASE("status names cover every code") {
  CHECK(std::string(fb_status_name(FB_OK)) == "Ok");
  CHECK(std::string(fb_status_name(FB_PROTOCOL_VIOLATION)) == "ProtocolViolation");
  CHECK(std::string(fb_status_name(FB_LEAK_DETECTED)) == "LeakDetected");
  CHECK(std::string(fb_status_name(12345)) == "Unknown");
  for (int code = 2; code <= 22; ++code) CHECK(std::string(fb_status_name(code)) != "Unknown");
  CHECK(std::string(fb_version()).size() > 0);
}

TEST_CASE("session settings validate keys and seeds") {
  Handle h;
  CHECK(fb_session_set(h.s, "seed", "42") == FB_OK);
  CHECK(fb_session_set(h.s, "seed", "-1") == FB_INVALID_ARGUMENT);
  CHECK(std::string(fb_last_error(h.s)).find("seed") != std::string::npos);
  CHECK(fb_session_set(h.s, "colour", "blue") == FB_INVALID_ARGUMENT);
  CHECK(fb_session_set(nullptr, "seed", "1") == FB_INVALID_ARGUMENT);
  CHECK(fb_session_set_overrides(h.s, "multi_task", "{\"train.epochs\": 2}") == FB_OK);
  CHECK(fb_session_set_overrides(h.s, "multi_task", "[1]") == FB_INVALID_OVERRIDE);
  CHECK(fb_session_set_overrides(h.s, "phase4", "{}") == FB_UNKNOWN_PHASE);
  CHECK(fb_session_create(nullptr, nullptr) == FB_INVALID_ARGUMENT);
  CHECK(std::string(fb_last_error(nullptr)).empty());
}

TEST_CASE("missing config file is reported") {
  fb_session* s = nullptr;
  CHECK(fb_session_create("/nonexistent/finbench.json", &s) == FB_MISSING_FILE);
  REQUIRE(s != nullptr);
  CHECK(std::string(fb_last_error(s)).find("finbench.json") != std::string::npos);
  fb_session_destroy(s);
}

TEST_CASE("ingest of an empty manifest array succeeds") {
  fixtures::TempDir dir;
  Handle h;
  point_at(h.s, dir.path());
  fixtures::write_text(dir / "m.json", "[]");
  CHECK(fb_ingest(h.s, (dir / "m.json").c_str()) == FB_OK);
  CHECK(fs::exists(dir / "work/samples/index.json"));
  CHECK(fb_ingest(h.s, nullptr) == FB_INVALID_ARGUMENT);
}

TEST_CASE("stages chain through the C API") {
  fixtures::TempDir dir;
  const auto manifests = fixtures::write_corpus(dir / "data", fixtures::small_sizes(), true, 3);
  const auto mfile = fixtures::write_manifest_file(dir / "data", manifests);
  Handle h;
  point_at(h.s, dir.path());
  REQUIRE(fb_ingest(h.s, mfile.c_str()) == FB_OK);
  CHECK(json::parse(fb_last_output(h.s)).is_object());

  const uint64_t seed = 9;
  REQUIRE(fb_build(h.s, "SA", "standard", &seed) == FB_OK);
  REQUIRE(fb_build(h.s, "SA", "zeroshot", &seed) == FB_OK);
  CHECK(fb_build(h.s, "NER", "zeroshot", &seed) == FB_ZERO_SHOT_ON_GENERATION_TASK);
  CHECK(fb_build(h.s, "XX", "standard", &seed) == FB_INVALID_ARGUMENT);
  CHECK(fb_mix(h.s, "phase4", &seed, nullptr) == FB_UNKNOWN_PHASE);
  CHECK(fb_mix(h.s, "task_specific", &seed, "SA") == FB_OK);
  CHECK(fb_mix(h.s, "multi_task", &seed, nullptr) == FB_MISSING_TASK);

  CHECK(fb_run(h.s, "zero_shot", "Qwen-7B", FINBENCH_MOCK_ADAPTER_PATH, nullptr, &seed) == FB_MISSING_TASK);
  for (const char* t : {"HC", "NER_CLS", "RE_CLS"}) REQUIRE(fb_build(h.s, t, "zeroshot", &seed) == FB_OK);
  CHECK(fb_run(h.s, "zero_shot", "Qwen-7B", "/nonexistent/adapter", nullptr, &seed) == FB_ADAPTER_NOT_FOUND);
  ::setenv("FINBENCH_MOCK_BEHAVIOR", "echo_gold", 1);
  REQUIRE(fb_run(h.s, "zero_shot", "Qwen-7B", FINBENCH_MOCK_ADAPTER_PATH, nullptr, &seed) == FB_OK);
  ::unsetenv("FINBENCH_MOCK_BEHAVIOR");
  REQUIRE(fb_report(h.s, nullptr, nullptr) == FB_OK);
  CHECK(fs::exists(dir / "runs/report.csv"));
}

TEST_CASE("score with a missing completion id is a protocol violation") {
  fixtures::TempDir dir;
  auto s = fixtures::prepared_workspace(dir.path());
  const auto gold = pipeline::record_store_path(s, instruct::Mode::Standard, TaskKind::SA, Split::Test);
  auto rows = io::read_jsonl(gold);
  REQUIRE(rows.size() > 1);
  std::vector<json> completions;
  for (size_t i = 0; i + 1 < rows.size(); ++i) {
    completions.push_back({{"id", rows[i]["id"]}, {"completion", rows[i]["answer"]}});
  }
  io::write_file_atomic(dir / "c.jsonl", io::to_jsonl(completions));
  Handle h;
  CHECK(fb_score(h.s, gold.c_str(), (dir / "c.jsonl").c_str(), nullptr, nullptr) == FB_PROTOCOL_VIOLATION);
  CHECK(std::string(fb_last_error(h.s)).find(rows.back()["id"].get<std::string>()) != std::string::npos);

  completions.push_back({{"id", rows.back()["id"]}, {"completion", rows.back()["answer"]}});
  io::write_file_atomic(dir / "c.jsonl", io::to_jsonl(completions));
  REQUIRE(fb_score(h.s, gold.c_str(), (dir / "c.jsonl").c_str(), (dir / "m.json").c_str(),
                   pipeline::samples_dir(s).c_str()) == FB_OK);
  auto metrics = io::read_json(dir / "m.json");
  REQUIRE(metrics.is_array());
  for (const auto& m : metrics) CHECK(m["f1"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("repeated builds are byte-identical") {
  fixtures::TempDir dir;
  const auto manifests = fixtures::write_corpus(dir / "data", fixtures::small_sizes(), true, 5);
  const auto mfile = fixtures::write_manifest_file(dir / "data", manifests);
  Handle h;
  point_at(h.s, dir.path());
  REQUIRE(fb_ingest(h.s, mfile.c_str()) == FB_OK);
  const uint64_t seed = 4;
  REQUIRE(fb_build(h.s, "HC", "standard", &seed) == FB_OK);
  const auto store = dir / "work/records/standard/HC.train.jsonl";
  const auto first = fixtures::sha256_of(store);
  REQUIRE(fb_build(h.s, "HC", "standard", &seed) == FB_OK);
  CHECK(fixtures::sha256_of(store) == first);
}

}
