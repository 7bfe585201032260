#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "finbench/common.hpp"
#include "finbench/mixer.hpp"
#include "finbench/scorer.hpp"

namespace finbench::runner {

namespace fs = std::filesystem;

// Serialized field names are the adapter contract; do not rename.
struct TrainConfig {
  int lora_rank = 8;
  int lora_alpha = 32;
  std::string lora_targets = "attention-projection layers";
  double learning_rate = 1e-4;
  double warmup_fraction = 0.03;
  std::string schedule = "linear_decay_to_zero";
  std::string precision = "fp16";
  int max_token_length = 512;
  int per_device_batch = 4;
  int grad_accumulation = 8;
  double epochs = 1;

  bool operator==(const TrainConfig&) const = default;
};

nlohmann::json to_json(const TrainConfig& config);
// Rejects unknown fields and out-of-range values with InvalidOverride.
TrainConfig train_config_from_json(const nlohmann::json& object);

struct ModelSpec {
  std::string name;
  std::string adapter_id;
  std::string base_checkpoint;

  bool operator==(const ModelSpec&) const = default;
};

// Llama2-7B, Falcon-7B, BLOOM-7.1B, MPT-7B, ChatGLM2-6B, Qwen-7B.
const std::vector<ModelSpec>& preset_models();
std::optional<ModelSpec> find_preset(std::string_view name);

struct EvalSpec {
  std::vector<TaskKind> tasks;
  bool drop_neutral = false;
  int max_new_tokens_classification = 16;
  int max_new_tokens_generation = 128;

  bool operator==(const EvalSpec&) const = default;
};

struct PhasePlan {
  Phase phase = Phase::TaskSpecific;
  std::optional<TaskKind> task;  // task_specific only
  std::vector<TaskKind> tasks;   // trained tasks
  std::map<TaskKind, double> per_task_epochs;
  EvalSpec eval;
  std::optional<int> checkpoint_every_steps;
  ModelSpec model;
  uint64_t seed = 0;
  TrainConfig train;

  bool operator==(const PhasePlan&) const = default;
};

nlohmann::json to_json(const PhasePlan& plan);
PhasePlan phase_plan_from_json(const nlohmann::json& object);

// Task-specific default task list.
inline constexpr std::array<TaskKind, 4> kTaskSpecificTasks = {TaskKind::SA, TaskKind::HC, TaskKind::NER,
                                                               TaskKind::RE};

// One plan per (model, task) for task_specific, one per model otherwise.
// Overrides: "epochs", "checkpoint_every_steps", or any TrainConfig field.
std::vector<PhasePlan> plan_run(Phase phase, std::span<const ModelSpec> models,
                                const nlohmann::json& overrides, uint64_t run_seed,
                                std::span<const TaskKind> tasks = kTaskSpecificTasks);
std::vector<PhasePlan> plan_run(std::string_view phase, std::span<const ModelSpec> models,
                                const nlohmann::json& overrides, uint64_t run_seed,
                                std::span<const TaskKind> tasks = kTaskSpecificTasks);

// "task" component of the run directory: the task name, "all" for
// multi_task, "SA" for zero_shot.
std::string run_task_label(const PhasePlan& plan);
fs::path run_directory(const fs::path& runs_dir, const PhasePlan& plan);

struct CheckpointRecord {
  int64_t step = 0;
  double eval_loss = 0;
  std::string path;

  bool operator==(const CheckpointRecord&) const = default;
};

// Minimal eval_loss; ties go to the earliest step.
CheckpointRecord select_checkpoint(std::span<const CheckpointRecord> records);

std::vector<CheckpointRecord> parse_checkpoints(const nlohmann::json& doc, const std::string& origin);

// Amount in whole cents.
struct Money {
  int64_t cents = 0;
  std::string to_string() const;  // "302.40"
  bool operator==(const Money&) const = default;
};

Money estimate_cost(double gpu_hours, double hourly_rate);

inline constexpr double kDefaultGpuHourlyRate = 3.36;
inline constexpr double kDefaultTaskSpecificHours = 30;
inline constexpr double kDefaultMultiAndZeroShotHours = 60;

enum class AdapterKind { Train, Infer };

// FINBENCH_ADAPTER is consulted when `id` is empty. Ids containing '/' are
// paths; anything else is looked up on PATH.
fs::path resolve_adapter(std::string_view id);

struct AdapterInvocation {
  std::string kind;
  std::vector<std::string> argv;
  int exit_status = -1;
  std::string stdout_log;
  std::string stderr_log;
  std::string started_at;
  std::string finished_at;
};

nlohmann::json to_json(const AdapterInvocation& invocation);

struct AdapterRequest {
  AdapterKind kind = AdapterKind::Train;
  // train
  fs::path train_file, eval_file, config_file, output_dir;
  // infer
  fs::path model, prompts, output;
  int max_new_tokens = 16;
  std::vector<std::string> expected_ids;
  // where stdout/stderr logs go
  fs::path log_dir;
  std::string log_stem = "adapter";
};

struct AdapterResult {
  AdapterInvocation invocation;
  std::vector<CheckpointRecord> checkpoints;           // train
  std::map<std::string, std::string> completions;      // infer
};

// Launches the adapter as a child process. When `journal` is given the
// invocation is appended to it before any failure is raised.
AdapterResult invoke_adapter(const fs::path& adapter, const AdapterRequest& request,
                             std::vector<AdapterInvocation>* journal = nullptr);

// Prompt rows {"id", "prompt"} for the adapter; one per id.
std::vector<nlohmann::json> read_completion_rows(const fs::path& path);
std::map<std::string, std::string> check_completions(std::span<const nlohmann::json> rows,
                                                     std::span<const std::string> expected_ids);

enum class MockBehavior { EchoGold, MajorityClass, FixedString };

MockBehavior parse_mock_behavior(std::string_view text);
std::string_view to_string(MockBehavior behavior);

struct MockOptions {
  MockBehavior behavior = MockBehavior::EchoGold;
  std::string fixed_string = "positive";
  int step_interval = 100;
  int checkpoint_count = 5;
};

// Reads FINBENCH_MOCK_BEHAVIOR, FINBENCH_MOCK_FIXED_STRING and
// FINBENCH_MOCK_STEP_INTERVAL.
MockOptions mock_options_from_env();

// Gold answers for echo_gold live next to the prompts file under this name.
inline constexpr std::string_view kAnswersFile = "answers.jsonl";
inline constexpr std::string_view kMockModelFile = "mock_model.json";

void mock_train(const fs::path& train_file, const fs::path& eval_file, const fs::path& config_file,
                const fs::path& output_dir, const MockOptions& options);
void mock_infer(const fs::path& model, const fs::path& prompts, const fs::path& output,
                int max_new_tokens, const MockOptions& options);

struct RunContext {
  fs::path runs_dir;
  fs::path adapter;
  std::map<std::string, std::vector<std::string>> vocabularies;
  // Files the records were read from; hashed into the manifest.
  std::vector<fs::path> input_files;
};

struct RunOutcome {
  fs::path run_dir;
  CheckpointRecord selected;
  std::vector<scorer::MetricReport> metrics;
};

// mix -> train -> select checkpoint -> infer -> score, writing everything
// under run_directory(). manifest.json is written on success and on failure.
RunOutcome execute_plan(const PhasePlan& plan, const std::map<TaskKind, mixer::TaskRecords>& records,
                        const RunContext& context);

std::string utc_timestamp();

}  // namespace finbench::runner
