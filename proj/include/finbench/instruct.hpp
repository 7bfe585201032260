#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "finbench/common.hpp"
#include "finbench/corpus.hpp"

namespace finbench::instruct {

enum class Mode { Standard, ZeroShot };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

struct PromptPool {
  TaskKind task = TaskKind::SA;
  std::vector<std::string> prompts;
};

// Throws InvalidArgument if the pool is empty, has a blank prompt or repeats
// one.
void validate(const PromptPool& pool);

// Pool file: {"SA": ["...", ...], "HC": [...], ...}.
std::map<TaskKind, PromptPool> parse_pool_file(const nlohmann::json& doc);
std::map<TaskKind, PromptPool> read_pool_file(const std::filesystem::path& path);

struct InstructionRecord {
  std::string id;
  TaskKind task = TaskKind::SA;
  std::string dataset;
  Split split = Split::Train;
  std::string instruction;
  std::optional<std::vector<std::string>> options;
  std::string input;
  std::string answer;
  std::string source_sample_id;

  bool operator==(const InstructionRecord&) const = default;
};

// One record per sample. Randomness is drawn from a generator seeded by
// (seed, sample id), so any sharding of `samples` reproduces the same records.
// `vocabulary` supplies the options in zero-shot mode and bounds the answers of
// classification tasks; it may be empty for NER/RE.
std::vector<InstructionRecord> build_records(std::span<const corpus::Sample> samples,
                                             const PromptPool& pool, Mode mode, Split split,
                                             uint64_t seed,
                                             std::span<const std::string> vocabulary);

inline constexpr std::string_view kOptionSeparator = "/";

std::string render(const InstructionRecord& record, bool include_answer);

struct RenderedParts {
  std::string instruction;
  std::optional<std::vector<std::string>> options;
  std::string input;
  std::optional<std::string> answer;  // nullopt when rendered without one
};

// Inverse of render for records whose answer and instruction are single-line.
// Throws InvalidArgument on text that render could not have produced.
RenderedParts parse_rendered(std::string_view rendered);

// "surface, TYPE; ..." for NER and "relation: subject, object; ..." for RE;
// "none" when the gold structure is empty.
std::string render_gold(const corpus::Sample& sample);
std::string render_entities(std::span<const corpus::EntityMention> entities);
std::string render_relations(std::span<const corpus::RelationTriple> relations);

inline constexpr std::string_view kEmptyGold = "none";

nlohmann::json record_to_json(const InstructionRecord& record);
InstructionRecord record_from_json(const nlohmann::json& row);

std::string records_to_jsonl(std::span<const InstructionRecord> records);
void write_record_store(const std::filesystem::path& path, std::span<const InstructionRecord> records);
std::vector<InstructionRecord> read_record_store(const std::filesystem::path& path);

}  // namespace finbench::instruct
