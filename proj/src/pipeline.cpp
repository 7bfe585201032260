#include "finbench/pipeline.hpp"

#include <set>

#include <fmt/format.h>

#include "finbench/io.hpp"
#include "finbench/report.hpp"
#include "finbench/scorer.hpp"

#ifndef FINBENCH_DEFAULT_POOL
#define FINBENCH_DEFAULT_POOL "data/prompts/default_pool.json"
#endif

namespace finbench::pipeline {

using nlohmann::json;

namespace {

[[noreturn]] void bad_config(const std::string& what) {
  throw Error(ErrorCode::InvalidArgument, fmt::format("config: {}", what));
}

fs::path resolve(const fs::path& base, const json& value, const char* key) {
  if (!value.is_string() || value.get<std::string>().empty()) bad_config(fmt::format("'{}' must be a path string", key));
  fs::path p = value.get<std::string>();
  return p.is_absolute() ? p : base / p;
}

}  // namespace

Settings settings_from_json(const json& o, const fs::path& base_dir) {
  if (!o.is_object()) bad_config("expected a JSON object");
  Settings s;
  for (const auto& [key, value] : o.items()) {
    if (key == "manifests") s.manifests = resolve(base_dir, value, "manifests");
    else if (key == "prompt_pool") s.prompt_pool = resolve(base_dir, value, "prompt_pool");
    else if (key == "runs_dir") s.runs_dir = resolve(base_dir, value, "runs_dir");
    else if (key == "work_dir") s.work_dir = resolve(base_dir, value, "work_dir");
    else if (key == "adapter") {
      if (!value.is_string()) bad_config("'adapter' must be a string");
      s.adapter = value.get<std::string>();
      if (s.adapter.find('/') != std::string::npos && fs::path(s.adapter).is_relative()) {
        s.adapter = (base_dir / s.adapter).string();
      }
    } else if (key == "seed") {
      if (!value.is_number_unsigned()) bad_config("'seed' must be an unsigned 64-bit integer");
      s.seed = value.get<uint64_t>();
    } else if (key == "phase_overrides") {
      if (!value.is_object()) bad_config("'phase_overrides' must be an object");
      for (const auto& [phase, overrides] : value.items()) s.phase_overrides[parse_phase(phase)] = overrides;
    } else {
      bad_config(fmt::format("unknown key '{}'", key));
    }
  }
  return s;
}

Settings load_settings(const fs::path& config_file) {
  return settings_from_json(io::read_json(config_file), config_file.parent_path());
}

fs::path samples_dir(const Settings& s) { return s.work_dir / "samples"; }

fs::path records_dir(const Settings& s, instruct::Mode mode) {
  return s.work_dir / "records" / std::string(instruct::to_string(mode));
}

fs::path record_store_path(const Settings& s, instruct::Mode mode, TaskKind task, Split split) {
  return records_dir(s, mode) / fmt::format("{}.{}.jsonl", to_string(task), to_string(split));
}

fs::path mix_dir(const Settings& s) { return s.work_dir / "mix"; }

IngestResult ingest(const Settings& s, const fs::path& manifests_file) {
  const auto manifests = corpus::read_manifest_file(manifests_file);
  const auto datasets = corpus::ingest(manifests);

  std::map<std::string, std::vector<corpus::Sample>> by_name;
  std::map<std::string, size_t> overrides;
  // Derived expectations lapse when the source declares a non-reference size.
  bool ner_declared = false, re_declared = false;
  const auto& ref = corpus::reference_counts();
  for (const auto& m : manifests) {
    if (!m.expected_count) continue;
    overrides[m.name] = *m.expected_count;
    if (m.task == TaskKind::NER && *m.expected_count != ref.at("NER")) ner_declared = true;
    if (m.task == TaskKind::RE && *m.expected_count != ref.at("FinRED")) re_declared = true;
  }
  IngestResult result;
  for (const auto& d : datasets) {
    by_name[d.name] = d.samples;
    result.datasets.push_back(d.name);
  }
  result.counts = corpus::validate_counts(by_name, overrides);
  for (auto& [name, entry] : result.counts.entries) {
    const bool declared_source = (name == corpus::kNerClsDataset && ner_declared) ||
                                 (name == corpus::kReClsDataset && re_declared);
    if (declared_source && !overrides.count(name)) {
      entry.expected.reset();
      entry.pass = true;
    }
  }
  result.counts.pass = true;
  for (const auto& [_, entry] : result.counts.entries) result.counts.pass = result.counts.pass && entry.pass;

  corpus::write_datasets(samples_dir(s), datasets);
  io::write_file_atomic(samples_dir(s) / "count_report.json",
                        io::dump_json(corpus::count_report_to_json(result.counts)));
  return result;
}

BuildResult build(const Settings& s, TaskKind task, instruct::Mode mode, uint64_t seed) {
  const fs::path pool_file = s.prompt_pool.value_or(fs::path(FINBENCH_DEFAULT_POOL));
  const auto pools = instruct::read_pool_file(pool_file);
  auto pool = pools.find(task);
  if (pool == pools.end()) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("{} has no prompt pool for {}", pool_file.string(), to_string(task)));
  }
  const auto datasets = corpus::read_datasets(samples_dir(s));

  std::map<Split, std::vector<instruct::InstructionRecord>> out;
  bool any = false;
  for (const auto& d : datasets) {
    if (d.task != task) continue;
    any = true;
    std::map<Split, std::vector<corpus::Sample>> by_split;
    for (const auto& sample : d.samples) {
      auto it = sample.meta.find(corpus::kMetaSplit);
      by_split[it == sample.meta.end() ? Split::Train : parse_split(it->second)].push_back(sample);
    }
    // Generation tasks carry an entity or relation inventory, not answer options.
    std::vector<std::string> vocabulary;
    if (is_classification(task)) vocabulary = d.vocabulary;
    for (auto& [split, samples] : by_split) {
      auto records = instruct::build_records(samples, pool->second, mode, split, seed, vocabulary);
      auto& dst = out[split];
      dst.insert(dst.end(), std::make_move_iterator(records.begin()), std::make_move_iterator(records.end()));
    }
  }
  if (!any) throw Error(ErrorCode::MissingTask, fmt::format("no ingested dataset has task {}", to_string(task)));

  BuildResult result;
  for (Split split : {Split::Train, Split::Test}) {
    const fs::path path = record_store_path(s, mode, task, split);
    instruct::write_record_store(path, out[split]);
    result.stores[split] = path;
    result.sizes[split] = out[split].size();
  }
  return result;
}

std::map<TaskKind, mixer::TaskRecords> load_phase_records(const Settings& s, Phase phase,
                                                          std::optional<TaskKind> task,
                                                          std::vector<fs::path>* files_read) {
  const instruct::Mode mode = phase == Phase::ZeroShot ? instruct::Mode::ZeroShot : instruct::Mode::Standard;
  std::map<TaskKind, mixer::TaskRecords> out;
  for (TaskKind t : mixer::required_tasks(phase, task)) {
    mixer::TaskRecords records;
    for (Split split : {Split::Train, Split::Test}) {
      const fs::path path = record_store_path(s, mode, t, split);
      std::error_code ec;
      if (!fs::is_regular_file(path, ec)) continue;
      auto rows = instruct::read_record_store(path);
      if (files_read) files_read->push_back(path);
      (split == Split::Train ? records.train : records.test) = std::move(rows);
    }
    out[t] = std::move(records);
  }
  return out;
}

std::vector<mixer::MixFiles> mix(const Settings& s, Phase phase, uint64_t seed, std::optional<TaskKind> task) {
  std::vector<std::optional<TaskKind>> targets;
  if (phase == Phase::TaskSpecific && !task) {
    for (TaskKind t : runner::kTaskSpecificTasks) {
      std::error_code ec;
      if (fs::is_regular_file(record_store_path(s, instruct::Mode::Standard, t, Split::Train), ec)) targets.push_back(t);
    }
    if (targets.empty()) throw Error(ErrorCode::MissingTask, "no standard record stores found; run build first");
  } else {
    targets.push_back(phase == Phase::TaskSpecific ? task : std::nullopt);
  }
  std::vector<mixer::MixFiles> files;
  for (const auto& t : targets) {
    const auto records = load_phase_records(s, phase, t);
    files.push_back(mixer::write_mix(mix_dir(s), mixer::assemble_phase(phase, records, seed, t)));
  }
  return files;
}

runner::ModelSpec model_spec(const std::string& name) {
  if (auto preset = runner::find_preset(name)) return *preset;
  if (name.empty() || name.find('/') != std::string::npos || name == "." || name == "..") {
    throw Error(ErrorCode::InvalidArgument, fmt::format("'{}' is not a usable model name", name));
  }
  return runner::ModelSpec{name, "default", name};
}

std::map<std::string, std::vector<std::string>> dataset_vocabularies(const Settings& s) {
  std::map<std::string, std::vector<std::string>> out;
  std::error_code ec;
  if (!fs::is_regular_file(samples_dir(s) / "index.json", ec)) return out;
  for (const auto& d : corpus::read_datasets(samples_dir(s))) {
    if (is_classification(d.task)) out[d.name] = d.vocabulary;
  }
  return out;
}

std::vector<runner::RunOutcome> run(const Settings& s, Phase phase, const std::string& model,
                                   std::optional<TaskKind> task, uint64_t seed) {
  const runner::ModelSpec spec = model_spec(model);
  json overrides = nullptr;
  if (auto it = s.phase_overrides.find(phase); it != s.phase_overrides.end()) overrides = it->second;

  std::vector<TaskKind> tasks;
  if (phase == Phase::TaskSpecific) {
    if (task) {
      tasks = {*task};
    } else {
      for (TaskKind t : runner::kTaskSpecificTasks) {
        std::error_code ec;
        if (fs::is_regular_file(record_store_path(s, instruct::Mode::Standard, t, Split::Train), ec)) tasks.push_back(t);
      }
      if (tasks.empty()) throw Error(ErrorCode::MissingTask, "no standard record stores found; run build first");
    }
  }
  const std::vector<runner::ModelSpec> models = {spec};
  const auto plans = runner::plan_run(phase, models, overrides, seed, tasks);

  runner::RunContext context;
  context.runs_dir = s.runs_dir;
  context.adapter = runner::resolve_adapter(s.adapter);
  context.vocabularies = dataset_vocabularies(s);

  std::vector<runner::RunOutcome> outcomes;
  for (const auto& plan : plans) {
    std::vector<fs::path> files;
    const auto records = load_phase_records(s, phase, plan.task, &files);
    std::error_code ec;
    if (fs::is_regular_file(samples_dir(s) / "index.json", ec)) files.push_back(samples_dir(s) / "index.json");
    context.input_files = files;
    outcomes.push_back(runner::execute_plan(plan, records, context));
  }
  return outcomes;
}

fs::path score(const fs::path& gold, const fs::path& completions, const std::optional<fs::path>& output,
               const std::optional<fs::path>& samples_index_dir) {
  const auto eval = instruct::read_record_store(gold);
  std::vector<json> rows;
  try {
    rows = io::read_jsonl(completions);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedRow) throw Error(ErrorCode::ProtocolViolation, e.what());
    throw;
  }
  std::map<std::string, std::vector<std::string>> vocabularies;
  if (samples_index_dir) {
    for (const auto& d : corpus::read_datasets(*samples_index_dir)) {
      if (is_classification(d.task)) vocabularies[d.name] = d.vocabulary;
    }
  }
  const auto joined = scorer::join_completions(eval, rows);
  const auto reports = scorer::score_eval_set(eval, joined, vocabularies);
  json out = json::array();
  for (const auto& r : reports) out.push_back(scorer::report_to_json(r));
  const fs::path target = output.value_or(completions.parent_path() / "metrics.json");
  io::write_file_atomic(target, io::dump_json(out));
  return target;
}

ReportResult report(const fs::path& runs_dir, const std::optional<fs::path>& out_dir) {
  std::error_code ec;
  if (!fs::is_directory(runs_dir, ec)) {
    throw Error(ErrorCode::MissingFile, fmt::format("runs directory {} does not exist", runs_dir.string()));
  }
  const auto grid = report::load_runs(runs_dir);
  const auto rendered = report::render_tables(grid);
  const fs::path dir = out_dir.value_or(runs_dir);
  report::write_report(dir, rendered);
  return ReportResult{dir / "report.csv", dir / "report.txt", grid.warnings()};
}

}  // namespace finbench::pipeline
