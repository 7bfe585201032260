#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "finbench/common.hpp"
#include "finbench/instruct.hpp"

namespace finbench::mixer {

using instruct::InstructionRecord;
using RecordGroups = std::map<TaskKind, std::vector<InstructionRecord>>;

struct MixPlan {
  Phase phase = Phase::TaskSpecific;
  uint64_t seed = 0;
  std::optional<TaskKind> task;  // task_specific only
  std::map<TaskKind, size_t> per_task_counts_before;
  std::map<TaskKind, size_t> per_task_counts_after;
  std::vector<TaskKind> train_tasks;
  std::vector<TaskKind> eval_tasks;
  size_t train_size = 0;
  size_t eval_size = 0;
  std::string shuffle_algorithm;

  bool operator==(const MixPlan&) const = default;
};

// Balances every group to the largest one: floor(M/n) whole copies plus a
// seeded draw without replacement of the remainder, then shuffles the union.
std::vector<InstructionRecord> oversample(const RecordGroups& groups, uint64_t seed);

// Train and test records per task, as produced by the instruct stage.
struct TaskRecords {
  std::vector<InstructionRecord> train;
  std::vector<InstructionRecord> test;
};

struct PhaseMix {
  MixPlan plan;
  std::vector<InstructionRecord> train;
  std::vector<InstructionRecord> eval;
};

// `task` selects the task for task_specific and is ignored otherwise.
// zero_shot expects records built in zero-shot mode.
PhaseMix assemble_phase(Phase phase, const std::map<TaskKind, TaskRecords>& records_by_task,
                        uint64_t seed, std::optional<TaskKind> task = std::nullopt);

// Tasks a phase reads from; zero_shot lists its train tasks followed by SA.
std::vector<TaskKind> required_tasks(Phase phase, std::optional<TaskKind> task = std::nullopt);

nlohmann::json plan_to_json(const MixPlan& plan);
MixPlan plan_from_json(const nlohmann::json& object);

// "{phase}_{task-or-all}_{seed}"
std::string mix_stem(Phase phase, std::optional<TaskKind> task, uint64_t seed);

struct MixFiles {
  std::filesystem::path train;
  std::filesystem::path eval;
  std::filesystem::path plan;
};

MixFiles mix_files(const std::filesystem::path& dir, Phase phase, std::optional<TaskKind> task, uint64_t seed);
MixFiles write_mix(const std::filesystem::path& dir, const PhaseMix& mix);

}  // namespace finbench::mixer
