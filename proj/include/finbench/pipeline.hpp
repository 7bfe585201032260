#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "finbench/common.hpp"
#include "finbench/corpus.hpp"
#include "finbench/instruct.hpp"
#include "finbench/mixer.hpp"
#include "finbench/runner.hpp"

// Stage functions behind the command-line subcommands. Every stage reads and
// writes under a work directory:
//
//   work/samples/{dataset}.jsonl, index.json, count_report.json
//   work/records/{mode}/{task}.{split}.jsonl
//   work/mix/{phase}_{task|all}_{seed}.{train.jsonl,eval.jsonl,plan.json}
namespace finbench::pipeline {

namespace fs = std::filesystem;

struct Settings {
  fs::path work_dir = "work";
  fs::path runs_dir = "runs";
  std::optional<fs::path> manifests;
  std::optional<fs::path> prompt_pool;
  std::string adapter;  // empty: FINBENCH_ADAPTER
  uint64_t seed = 0;
  // phase name -> override object accepted by runner::plan_run.
  std::map<Phase, nlohmann::json> phase_overrides;
};

// Keys: manifests, prompt_pool, runs_dir, work_dir, adapter, seed,
// phase_overrides. Relative paths resolve against `base_dir`.
Settings settings_from_json(const nlohmann::json& object, const fs::path& base_dir);
Settings load_settings(const fs::path& config_file);

fs::path samples_dir(const Settings& s);
fs::path records_dir(const Settings& s, instruct::Mode mode);
fs::path record_store_path(const Settings& s, instruct::Mode mode, TaskKind task, Split split);
fs::path mix_dir(const Settings& s);

struct IngestResult {
  corpus::CountReport counts;
  std::vector<std::string> datasets;
};

// Derived NER_CLS / RE_CLS sets are held to the reference counts unless their
// source manifest declares an expected_count other than the reference one.
IngestResult ingest(const Settings& s, const fs::path& manifests_file);

struct BuildResult {
  std::map<Split, fs::path> stores;
  std::map<Split, size_t> sizes;
};

BuildResult build(const Settings& s, TaskKind task, instruct::Mode mode, uint64_t seed);

// Train/test record stores for the tasks `phase` consumes.
std::map<TaskKind, mixer::TaskRecords> load_phase_records(const Settings& s, Phase phase,
                                                          std::optional<TaskKind> task,
                                                          std::vector<fs::path>* files_read = nullptr);

// task_specific without a task mixes every task whose standard records exist.
std::vector<mixer::MixFiles> mix(const Settings& s, Phase phase, uint64_t seed, std::optional<TaskKind> task);

runner::ModelSpec model_spec(const std::string& name);

std::map<std::string, std::vector<std::string>> dataset_vocabularies(const Settings& s);

std::vector<runner::RunOutcome> run(const Settings& s, Phase phase, const std::string& model,
                                   std::optional<TaskKind> task, uint64_t seed);

// Writes a metrics.json array to `output` (default: next to the completions).
fs::path score(const fs::path& gold, const fs::path& completions, const std::optional<fs::path>& output,
               const std::optional<fs::path>& samples_index_dir);

struct ReportResult {
  fs::path csv;
  fs::path text;
  std::vector<std::string> warnings;
};

ReportResult report(const fs::path& runs_dir, const std::optional<fs::path>& out_dir);

}  // namespace finbench::pipeline
