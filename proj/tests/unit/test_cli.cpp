#include <string>

#include "doctest.h"
#include "finbench/io.hpp"
#include "finbench/pipeline.hpp"
#include "fixtures.hpp"

using namespace finbench;
using nlohmann::json;
using fixtures::shell_quote;
namespace fs = std::filesystem;

namespace {

// Runs the CLI with `args`, capturing stdout and stderr into `dir`.
int cli(const fixtures::TempDir& dir, const std::string& args) {
  const std::string cmd = "env -u FINBENCH_CONFIG " + shell_quote(FINBENCH_CLI_PATH) + " " + args + " >" +
                          shell_quote((dir / "stdout").string()) + " 2>" + shell_quote((dir / "stderr").string());
  return fixtures::run_shell(cmd);
}

std::string out(const fixtures::TempDir& dir) { return io::read_file(dir / "stdout"); }
std::string err(const fixtures::TempDir& dir) { return io::read_file(dir / "stderr"); }

std::string dirs(const fixtures::TempDir& dir) {
  return "--work-dir " + shell_quote((dir / "work").string()) + " --runs-dir " + shell_quote((dir / "runs").string());
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("cost prints the amount") {
  fixtures::TempDir dir;
  CHECK(cli(dir, "cost --hours 90 --rate 3.36") == 0);
  CHECK(out(dir) == "302.40\n");
  CHECK(cli(dir, "cost --hours -2 --rate 3.36") == 2);
}

TEST_CASE("help lists subcommands and exit codes") {
  fixtures::TempDir dir;
  CHECK(cli(dir, "--help") == 0);
  const auto text = out(dir);
  for (const char* word : {"ingest", "build", "mix", "run", "score", "report", "cost", "Exit codes", "17"}) {
    CHECK_MESSAGE(text.find(word) != std::string::npos, word);
  }
}

TEST_CASE("usage errors exit 2") {
  fixtures::TempDir dir;
  CHECK(cli(dir, "") == 2);
  CHECK(cli(dir, "frobnicate") == 2);
  CHECK(cli(dir, "build --task SA") == 2);
}

TEST_CASE("ingest of an empty manifest list") {
  fixtures::TempDir dir;
  fixtures::write_text(dir / "m.json", "[]");
  CHECK(cli(dir, dirs(dir) + " ingest --manifests " + shell_quote((dir / "m.json").string())) == 0);
  CHECK(json::parse(out(dir)).is_object());
}

TEST_CASE("missing manifests file exits 3") {
  fixtures::TempDir dir;
  CHECK(cli(dir, dirs(dir) + " ingest --manifests " + shell_quote((dir / "absent.json").string())) == 3);
  CHECK(err(dir).find("MissingFile") != std::string::npos);
}

TEST_CASE("unknown phase exits 13") {
  fixtures::TempDir dir;
  CHECK(cli(dir, dirs(dir) + " mix --phase phase4") == 13);
  CHECK(cli(dir, dirs(dir) + " run --phase phase4 --model Qwen-7B") == 13);
}

TEST_CASE("malformed override exits 14") {
  fixtures::TempDir dir;
  CHECK(cli(dir, dirs(dir) + " run --phase multi_task --model Qwen-7B --override noequals") == 14);
}

TEST_CASE("score with a missing completion id exits 17") {
  fixtures::TempDir dir;
  auto s = fixtures::prepared_workspace(dir.path());
  const auto gold = pipeline::record_store_path(s, instruct::Mode::Standard, TaskKind::HC, Split::Test);
  auto rows = io::read_jsonl(gold);
  REQUIRE(rows.size() > 1);
  rows.pop_back();
  std::vector<json> completions;
  for (const auto& r : rows) completions.push_back({{"id", r["id"]}, {"completion", r["answer"]}});
  io::write_file_atomic(dir / "c.jsonl", io::to_jsonl(completions));
  CHECK(cli(dir, "score --gold " + shell_quote(gold.string()) + " --completions " +
                     shell_quote((dir / "c.jsonl").string())) == 17);
  CHECK(err(dir).find("ProtocolViolation") != std::string::npos);
}

TEST_CASE("build and mix are byte-identical across invocations") {
  fixtures::TempDir dir;
  const auto manifests = fixtures::write_corpus(dir / "data", fixtures::small_sizes(), true, 8);
  const auto mfile = fixtures::write_manifest_file(dir / "data", manifests);
  REQUIRE(cli(dir, dirs(dir) + " ingest --manifests " + shell_quote(mfile.string())) == 0);
  const auto store = dir / "work/records/standard/RE.train.jsonl";
  REQUIRE(cli(dir, dirs(dir) + " build --task RE --mode standard --seed 6") == 0);
  const auto first_store = fixtures::sha256_of(store);
  REQUIRE(cli(dir, dirs(dir) + " mix --phase task_specific --task RE --seed 6") == 0);
  std::map<std::string, std::string> first_mix;
  for (const auto& e : fs::directory_iterator(dir / "work/mix")) first_mix[e.path().string()] = fixtures::sha256_of(e);

  REQUIRE(cli(dir, dirs(dir) + " build --task RE --mode standard --seed 6") == 0);
  REQUIRE(cli(dir, dirs(dir) + " mix --phase task_specific --task RE --seed 6") == 0);
  CHECK(fixtures::sha256_of(store) == first_store);
  REQUIRE_FALSE(first_mix.empty());
  for (const auto& [path, hash] : first_mix) CHECK(fixtures::sha256_of(path) == hash);

  CHECK(cli(dir, dirs(dir) + " build --task NER --mode zeroshot") == 9);
}

TEST_CASE("run through the mock adapter then report") {
  fixtures::TempDir dir;
  fixtures::prepared_workspace(dir.path());
  const std::string run = dirs(dir) + " run --phase task_specific --task SA --model MPT-7B --seed 2 --adapter " +
                          shell_quote(FINBENCH_MOCK_ADAPTER_PATH) + " --override 'epochs=1'";
  REQUIRE(cli(dir, run) == 0);
  CHECK(cli(dir, dirs(dir) + " report") == 0);
  CHECK(fs::exists(dir / "runs/report.txt"));
  CHECK(cli(dir, dirs(dir) + " run --phase task_specific --task SA --model MPT-7B --adapter /nonexistent") == 15);
}

}
