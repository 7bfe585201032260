#include "finbench/instruct.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "finbench/io.hpp"
#include "finbench/rng.hpp"
#include "finbench/text.hpp"

namespace finbench::instruct {

using nlohmann::json;

std::string_view to_string(Mode mode) {
  return mode == Mode::Standard ? "standard" : "zeroshot";
}

Mode parse_mode(std::string_view text) {
  if (text == "standard") return Mode::Standard;
  if (text == "zeroshot") return Mode::ZeroShot;
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown mode '{}'", text));
}

void validate(const PromptPool& pool) {
  if (pool.prompts.empty()) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("prompt pool for {} is empty", to_string(pool.task)));
  }
  std::set<std::string> seen;
  for (const auto& p : pool.prompts) {
    if (text::trim(p).empty()) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("blank prompt in {} pool", to_string(pool.task)));
    }
    if (p.find('\n') != std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("multi-line prompt in {} pool", to_string(pool.task)));
    }
    if (!seen.insert(p).second) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("duplicate prompt in {} pool: '{}'", to_string(pool.task), p));
    }
  }
}

std::map<TaskKind, PromptPool> parse_pool_file(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::InvalidArgument, "prompt pool file must be a JSON object");
  std::map<TaskKind, PromptPool> pools;
  for (const auto& [key, value] : doc.items()) {
    PromptPool pool;
    pool.task = parse_task(key);
    if (!value.is_array()) throw Error(ErrorCode::InvalidArgument, fmt::format("pool '{}' is not a list", key));
    for (const auto& p : value) {
      if (!p.is_string()) throw Error(ErrorCode::InvalidArgument, fmt::format("pool '{}' has a non-string", key));
      pool.prompts.push_back(p.get<std::string>());
    }
    validate(pool);
    pools.emplace(pool.task, std::move(pool));
  }
  return pools;
}

std::map<TaskKind, PromptPool> read_pool_file(const std::filesystem::path& path) {
  return parse_pool_file(io::read_json(path));
}

std::string render_entities(std::span<const corpus::EntityMention> entities) {
  if (entities.empty()) return std::string(kEmptyGold);
  std::vector<std::string> parts;
  parts.reserve(entities.size());
  for (const auto& e : entities) parts.push_back(fmt::format("{}, {}", e.surface, e.entity_type));
  return text::join(parts, "; ");
}

std::string render_relations(std::span<const corpus::RelationTriple> relations) {
  if (relations.empty()) return std::string(kEmptyGold);
  std::vector<std::string> parts;
  parts.reserve(relations.size());
  for (const auto& r : relations) parts.push_back(fmt::format("{}: {}, {}", r.relation, r.subject, r.object));
  return text::join(parts, "; ");
}

std::string render_gold(const corpus::Sample& sample) {
  if (const auto* e = std::get_if<corpus::Entities>(&sample.gold)) return render_entities(*e);
  if (const auto* r = std::get_if<corpus::Relations>(&sample.gold)) return render_relations(*r);
  throw Error(ErrorCode::InvalidArgument,
              fmt::format("render_gold: sample {} is not NER or RE", sample.id));
}

std::vector<InstructionRecord> build_records(std::span<const corpus::Sample> samples,
                                             const PromptPool& pool, Mode mode, Split split,
                                             uint64_t seed,
                                             std::span<const std::string> vocabulary) {
  validate(pool);
  if (mode == Mode::ZeroShot && !is_classification(pool.task)) {
    throw Error(ErrorCode::ZeroShotOnGenerationTask,
                fmt::format("zero-shot mode needs a classification task, got {}", to_string(pool.task)));
  }
  if (mode == Mode::ZeroShot && vocabulary.empty()) {
    throw Error(ErrorCode::InvalidArgument, "zero-shot mode needs a label vocabulary");
  }

  std::vector<InstructionRecord> records;
  records.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.task != pool.task) {
      throw Error(ErrorCode::PoolTaskMismatch,
                  fmt::format("sample {} has task {} but the pool is for {}", s.id, to_string(s.task),
                              to_string(pool.task)));
    }
    rng::Rng gen(rng::derive_seed(seed, "record", s.id));

    InstructionRecord r;
    r.id = s.id;
    r.task = s.task;
    r.dataset = s.dataset;
    r.split = split;
    r.instruction = pool.prompts[gen.below(pool.prompts.size())];
    r.input = s.input_text;
    r.source_sample_id = s.id;

    if (is_classification(s.task)) {
      const std::string& label = std::get<corpus::Label>(s.gold).value;
      if (!vocabulary.empty() &&
          std::find(vocabulary.begin(), vocabulary.end(), label) == vocabulary.end()) {
        throw Error(ErrorCode::UnknownLabel,
                    fmt::format("sample {}: label '{}' not in vocabulary", s.id, label));
      }
      r.answer = label;
    } else {
      r.answer = render_gold(s);
    }

    if (mode == Mode::ZeroShot) {
      std::vector<std::string> options(vocabulary.begin(), vocabulary.end());
      if (split == Split::Train) gen.shuffle(std::span<std::string>(options));
      r.options = std::move(options);
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::string render(const InstructionRecord& record, bool include_answer) {
  std::string out = "Instruction: ";
  out += record.instruction;
  if (record.options) {
    out += "\nOptions: ";
    out += text::join(*record.options, kOptionSeparator);
  }
  out += "\nInput: ";
  out += record.input;
  out += "\nAnswer:";
  if (include_answer) {
    out += ' ';
    out += record.answer;
  }
  return out;
}

RenderedParts parse_rendered(std::string_view rendered) {
  constexpr std::string_view kInstruction = "Instruction: ";
  constexpr std::string_view kOptions = "\nOptions: ";
  constexpr std::string_view kInput = "\nInput: ";
  constexpr std::string_view kAnswer = "\nAnswer:";

  auto fail = [](const char* why) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("not a rendered record: {}", why));
  };
  if (!rendered.starts_with(kInstruction)) fail("missing Instruction section");
  size_t answer_pos = rendered.rfind(kAnswer);
  if (answer_pos == std::string_view::npos) fail("missing Answer section");
  std::string_view head = rendered.substr(0, answer_pos);
  std::string_view tail = rendered.substr(answer_pos + kAnswer.size());

  RenderedParts parts;
  if (!tail.empty()) {
    if (tail[0] != ' ') fail("answer must follow 'Answer: '");
    parts.answer = std::string(tail.substr(1));
  }

  size_t input_pos = head.find(kInput);
  if (input_pos == std::string_view::npos) fail("missing Input section");
  std::string_view before_input = head.substr(kInstruction.size(), input_pos - kInstruction.size());
  parts.input = std::string(head.substr(input_pos + kInput.size()));

  size_t options_pos = before_input.find(kOptions);
  if (options_pos == std::string_view::npos) {
    parts.instruction = std::string(before_input);
  } else {
    parts.instruction = std::string(before_input.substr(0, options_pos));
    parts.options = text::split(before_input.substr(options_pos + kOptions.size()), kOptionSeparator);
  }
  return parts;
}

json record_to_json(const InstructionRecord& r) {
  json row = {{"id", r.id},
              {"task", to_string(r.task)},
              {"dataset", r.dataset},
              {"split", to_string(r.split)},
              {"instruction", r.instruction}};
  if (r.options) row["options"] = *r.options;
  row["input"] = r.input;
  row["answer"] = r.answer;
  row["source_sample_id"] = r.source_sample_id;
  return row;
}

InstructionRecord record_from_json(const json& row) {
  try {
    InstructionRecord r;
    r.id = row.at("id").get<std::string>();
    r.task = parse_task(row.at("task").get<std::string>());
    r.dataset = row.at("dataset").get<std::string>();
    r.split = parse_split(row.at("split").get<std::string>());
    r.instruction = row.at("instruction").get<std::string>();
    if (row.contains("options") && !row["options"].is_null()) {
      r.options = row["options"].get<std::vector<std::string>>();
    }
    r.input = row.at("input").get<std::string>();
    r.answer = row.at("answer").get<std::string>();
    r.source_sample_id = row.at("source_sample_id").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRow, fmt::format("bad instruction record: {}", e.what()));
  }
}

std::string records_to_jsonl(std::span<const InstructionRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

void write_record_store(const std::filesystem::path& path, std::span<const InstructionRecord> records) {
  io::write_file_atomic(path, records_to_jsonl(records));
}

std::vector<InstructionRecord> read_record_store(const std::filesystem::path& path) {
  std::vector<InstructionRecord> out;
  for (const auto& row : io::read_jsonl(path)) out.push_back(record_from_json(row));
  return out;
}

}  // namespace finbench::instruct
