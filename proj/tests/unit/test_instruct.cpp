#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <random>

#include "doctest.h"
#include "finbench/instruct.hpp"
#include "fixtures.hpp"

using namespace finbench;
using namespace finbench::instruct;
using corpus::Sample;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

InstructionRecord sentiment_record() {
  InstructionRecord r;
  r.id = "x";
  r.instruction = "What is the sentiment?";
  r.input = "Shares rallied.";
  r.answer = "positive";
  return r;
}

// Printable strings without newlines, occasionally containing the section
// markers' words and the option separator.
std::string random_line(std::mt19937_64& gen) {
  static const std::vector<std::string> pieces = {"Input", "Answer:", "Options", "a/b", " ", "x", "é", "42", ":", ","};
  std::string out;
  const size_t n = 1 + gen() % 6;
  for (size_t i = 0; i < n; ++i) out += pieces[gen() % pieces.size()];
  return out;
}

}  // namespace

TEST_SUITE("instruct") {

TEST_CASE("3634 samples in standard mode give 3634 records without options") {
  auto samples = fixtures::sa_samples("FPB", 3634, 1);
  auto records = build_records(samples, fixtures::pool_for(TaskKind::SA), Mode::Standard, Split::Train, 1,
                               fixtures::kSentiment);
  REQUIRE(records.size() == 3634);
  for (size_t i = 0; i < records.size(); ++i) {
    CHECK_FALSE(records[i].options.has_value());
    CHECK(records[i].answer == std::get<corpus::Label>(samples[i].gold).value);
    CHECK(records[i].source_sample_id == samples[i].id);
  }
}

TEST_CASE("zero-shot test split keeps the canonical option order") {
  auto samples = fixtures::sa_samples("S", 1, 1);
  auto records = build_records(samples, fixtures::pool_for(TaskKind::SA), Mode::ZeroShot, Split::Test, 3,
                               fixtures::kSentiment);
  REQUIRE(records.size() == 1);
  CHECK(records[0].options == std::vector<std::string>{"negative", "neutral", "positive"});
}

TEST_CASE("1000 zero-shot train records are reproducible permutations of the vocabulary") {
  auto samples = fixtures::sa_samples("S", 1000, 2);
  auto pool = fixtures::pool_for(TaskKind::SA);
  auto a = build_records(samples, pool, Mode::ZeroShot, Split::Train, 7, fixtures::kSentiment);
  auto b = build_records(samples, pool, Mode::ZeroShot, Split::Train, 7, fixtures::kSentiment);
  CHECK(a == b);
  std::map<std::vector<std::string>, size_t> orders;
  for (const auto& r : a) {
    REQUIRE(r.options.has_value());
    auto sorted = *r.options;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == fixtures::kSentiment);
    CHECK(std::find(r.options->begin(), r.options->end(), r.answer) != r.options->end());
    ++orders[*r.options];
  }
  CHECK(orders.size() == 6);
}

TEST_CASE("records depend on the seed") {
  auto samples = fixtures::sa_samples("S", 200, 2);
  auto pool = fixtures::pool_for(TaskKind::SA);
  auto a = build_records(samples, pool, Mode::ZeroShot, Split::Train, 7, fixtures::kSentiment);
  auto b = build_records(samples, pool, Mode::ZeroShot, Split::Train, 8, fixtures::kSentiment);
  CHECK(a != b);
}

TEST_CASE("sharding does not change the records") {
  auto samples = fixtures::sa_samples("S", 300, 4);
  auto pool = fixtures::pool_for(TaskKind::SA);
  auto whole = build_records(samples, pool, Mode::ZeroShot, Split::Train, 11, fixtures::kSentiment);
  std::span<const Sample> all(samples);
  auto first = build_records(all.subspan(0, 117), pool, Mode::ZeroShot, Split::Train, 11, fixtures::kSentiment);
  auto second = build_records(all.subspan(117), pool, Mode::ZeroShot, Split::Train, 11, fixtures::kSentiment);
  first.insert(first.end(), second.begin(), second.end());
  CHECK(first == whole);
}

TEST_CASE("prompt usage is within 5 points of uniform over 10000 records") {
  auto samples = fixtures::sa_samples("S", 10000, 5);
  auto pool = fixtures::pool_for(TaskKind::SA, 10);
  auto records = build_records(samples, pool, Mode::Standard, Split::Train, 13, fixtures::kSentiment);
  std::map<std::string, size_t> uses;
  for (const auto& r : records) ++uses[r.instruction];
  CHECK(uses.size() == 10);
  for (const auto& [prompt, n] : uses) CHECK(std::abs(static_cast<double>(n) / 10000.0 - 0.1) <= 0.05);
}

TEST_CASE("build errors") {
  auto samples = fixtures::sa_samples("S", 3, 1);
  SUBCASE("pool for another task") {
    CHECK(code_of([&] {
            build_records(samples, fixtures::pool_for(TaskKind::HC), Mode::Standard, Split::Train, 1, {});
          }) == ErrorCode::PoolTaskMismatch);
  }
  SUBCASE("zero-shot on a generation task") {
    auto ner = fixtures::ner_samples("N", {1});
    CHECK(code_of([&] {
            build_records(ner, fixtures::pool_for(TaskKind::NER), Mode::ZeroShot, Split::Train, 1,
                          fixtures::kEntityTypes);
          }) == ErrorCode::ZeroShotOnGenerationTask);
  }
  SUBCASE("label outside the vocabulary") {
    std::vector<std::string> two = {"negative", "positive"};
    auto mixed = fixtures::sa_samples("S", 50, 1);
    CHECK(code_of([&] {
            build_records(mixed, fixtures::pool_for(TaskKind::SA), Mode::Standard, Split::Train, 1, two);
          }) == ErrorCode::UnknownLabel);
  }
}

TEST_CASE("pool validation") {
  PromptPool pool{TaskKind::SA, {}};
  CHECK(code_of([&] { validate(pool); }) == ErrorCode::InvalidArgument);
  pool.prompts = {"a", " "};
  CHECK(code_of([&] { validate(pool); }) == ErrorCode::InvalidArgument);
  pool.prompts = {"a", "a"};
  CHECK(code_of([&] { validate(pool); }) == ErrorCode::InvalidArgument);
  pool.prompts = {"a", "b"};
  CHECK_NOTHROW(validate(pool));
  CHECK(code_of([&] { parse_pool_file(nlohmann::json{{"XX", {"a"}}}); }) == ErrorCode::InvalidArgument);
  auto pools = parse_pool_file(nlohmann::json{{"SA", {"a", "b"}}, {"NER", {"c"}}});
  CHECK(pools.at(TaskKind::NER).prompts == std::vector<std::string>{"c"});
}

TEST_CASE("the shipped default pool has ten prompts per task") {
  auto pools = read_pool_file(std::string(FINBENCH_DATA_DIR) + "/prompts/default_pool.json");
  CHECK(pools.size() == 6);
  for (const auto& [task, pool] : pools) CHECK(pool.prompts.size() == 10);
}

TEST_CASE("render substitutes into the template") {
  auto r = sentiment_record();
  CHECK(render(r, true) == "Instruction: What is the sentiment?\nInput: Shares rallied.\nAnswer: positive");
  const auto bare = render(r, false);
  CHECK(bare.ends_with("Answer:"));
  CHECK(bare == "Instruction: What is the sentiment?\nInput: Shares rallied.\nAnswer:");
}

TEST_CASE("zero-shot options render as their own section and parse back") {
  auto r = sentiment_record();
  r.options = std::vector<std::string>{"negative", "positive"};
  const auto text = render(r, true);
  CHECK(text.find("\nOptions: negative/positive\n") != std::string::npos);
  auto parts = parse_rendered(text);
  CHECK(parts.options == r.options);
  CHECK(parts.answer == std::optional<std::string>("positive"));
}

TEST_CASE("parse_rendered rejects foreign text") {
  CHECK(code_of([] { parse_rendered("hello"); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { parse_rendered("Instruction: x\nAnswer: y"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("render_gold serializations") {
  auto ner = fixtures::ner_samples("N", {0})[0];
  CHECK(render_gold(ner) == "none");
  ner.gold = corpus::Entities{{"Apple Inc", "ORG"}};
  CHECK(render_gold(ner) == "Apple Inc, ORG");
  ner.gold = corpus::Entities{{"Apple Inc", "ORG"}, {"Tim Cook", "PER"}};
  CHECK(render_gold(ner) == "Apple Inc, ORG; Tim Cook, PER");
  auto re = fixtures::re_samples("R", {0})[0];
  CHECK(render_gold(re) == "none");
  re.gold = corpus::Relations{{"subsidiary", "AlphaCo", "BetaCo"}};
  CHECK(render_gold(re) == "subsidiary: AlphaCo, BetaCo");
  auto sa = fixtures::sa_samples("S", 1, 1)[0];
  CHECK(code_of([&] { render_gold(sa); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("property: render then parse recovers every field") {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 2000; ++trial) {
    InstructionRecord r;
    r.instruction = random_line(gen);
    r.input = random_line(gen) + (gen() % 3 == 0 ? "\nsecond line" : "");
    r.answer = random_line(gen);
    if (gen() % 2) {
      std::vector<std::string> opts(1 + gen() % 4);
      for (auto& o : opts) o = fmt::format("opt{}", gen() % 100);
      r.options = opts;
    }
    auto parts = parse_rendered(render(r, true));
    CHECK(parts.instruction == r.instruction);
    CHECK(parts.options == r.options);
    CHECK(parts.input == r.input);
    CHECK(parts.answer == std::optional<std::string>(r.answer));
    auto without = parse_rendered(render(r, false));
    CHECK_FALSE(without.answer.has_value());
    CHECK(without.input == r.input);
  }
}

TEST_CASE("record store round-trips and omits absent options") {
  fixtures::TempDir dir;
  auto samples = fixtures::sa_samples("S", 20, 3);
  auto standard = build_records(samples, fixtures::pool_for(TaskKind::SA), Mode::Standard, Split::Test, 1,
                                fixtures::kSentiment);
  auto zs = build_records(samples, fixtures::pool_for(TaskKind::SA), Mode::ZeroShot, Split::Train, 1,
                          fixtures::kSentiment);
  CHECK(record_to_json(standard[0]).contains("options") == false);
  CHECK(record_to_json(zs[0]).contains("options"));
  write_record_store(dir / "a.jsonl", standard);
  write_record_store(dir / "b.jsonl", zs);
  CHECK(read_record_store(dir / "a.jsonl") == standard);
  CHECK(read_record_store(dir / "b.jsonl") == zs);
  CHECK(records_to_jsonl(zs) == records_to_jsonl(build_records(samples, fixtures::pool_for(TaskKind::SA),
                                                               Mode::ZeroShot, Split::Train, 1,
                                                               fixtures::kSentiment)));
}

TEST_CASE("generation records carry the serialized gold") {
  auto ner = fixtures::ner_samples("N", {2, 0});
  auto records = build_records(ner, fixtures::pool_for(TaskKind::NER), Mode::Standard, Split::Train, 1, {});
  CHECK(records[0].answer == render_gold(ner[0]));
  CHECK(records[1].answer == "none");
}

}
