#include "finbench/mixer.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "finbench/io.hpp"
#include "finbench/rng.hpp"
#include "finbench/scorer.hpp"

namespace finbench::mixer {

using nlohmann::json;

std::vector<InstructionRecord> oversample(const RecordGroups& groups, uint64_t seed) {
  size_t target = 0;
  for (const auto& [task, records] : groups) {
    if (records.empty()) {
      throw Error(ErrorCode::EmptyGroup, fmt::format("no records for task {}", to_string(task)));
    }
    target = std::max(target, records.size());
  }

  std::vector<InstructionRecord> out;
  out.reserve(target * groups.size());
  for (const auto& [task, records] : groups) {
    const size_t n = records.size();
    const size_t copies = target / n;
    const size_t remainder = target - copies * n;
    for (size_t c = 0; c < copies; ++c) out.insert(out.end(), records.begin(), records.end());
    if (remainder) {
      std::vector<size_t> index(n);
      std::iota(index.begin(), index.end(), 0);
      rng::Rng gen(rng::derive_seed(seed, "oversample", to_string(task)));
      gen.shuffle(std::span<size_t>(index));
      index.resize(remainder);
      std::sort(index.begin(), index.end());
      for (size_t i : index) out.push_back(records[i]);
    }
  }
  rng::Rng gen(rng::derive_seed(seed, "shuffle"));
  gen.shuffle(std::span<InstructionRecord>(out));
  return out;
}

std::vector<TaskKind> required_tasks(Phase phase, std::optional<TaskKind> task) {
  switch (phase) {
    case Phase::TaskSpecific:
      if (!task) throw Error(ErrorCode::InvalidArgument, "task_specific mixes need a task");
      return {*task};
    case Phase::MultiTask:
      return {kAllTasks.begin(), kAllTasks.end()};
    case Phase::ZeroShot:
      return {TaskKind::HC, TaskKind::NER_CLS, TaskKind::RE_CLS, TaskKind::SA};
  }
  return {};
}

namespace {

const TaskRecords& require(const std::map<TaskKind, TaskRecords>& by_task, Phase phase, TaskKind task,
                           bool need_train, bool need_test) {
  auto it = by_task.find(task);
  bool missing = it == by_task.end() || (need_train && it->second.train.empty()) ||
                 (need_test && it->second.test.empty());
  if (missing) {
    throw Error(ErrorCode::MissingTask,
                fmt::format("phase {} needs {} records for task {}", to_string(phase),
                            need_train ? "train" : "test", to_string(task)));
  }
  return it->second;
}

void require_options(const std::vector<InstructionRecord>& records, TaskKind task) {
  for (const auto& r : records) {
    if (!r.options) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("zero-shot {} record {} was not built in zero-shot mode", to_string(task), r.id));
    }
  }
}

std::map<TaskKind, size_t> count_by_task(const std::vector<InstructionRecord>& records) {
  std::map<TaskKind, size_t> counts;
  for (const auto& r : records) ++counts[r.task];
  return counts;
}

}  // namespace

PhaseMix assemble_phase(Phase phase, const std::map<TaskKind, TaskRecords>& records_by_task,
                        uint64_t seed, std::optional<TaskKind> task) {
  PhaseMix mix;
  MixPlan& plan = mix.plan;
  plan.phase = phase;
  plan.seed = seed;
  plan.shuffle_algorithm = std::string(rng::kShuffleAlgorithmId);

  switch (phase) {
    case Phase::TaskSpecific: {
      if (!task) throw Error(ErrorCode::InvalidArgument, "task_specific mixes need a task");
      plan.task = task;
      const TaskRecords& r = require(records_by_task, phase, *task, true, false);
      mix.train = r.train;
      mix.eval = r.test;
      plan.train_tasks = {*task};
      plan.eval_tasks = {*task};
      plan.per_task_counts_before[*task] = r.train.size();
      plan.per_task_counts_after[*task] = r.train.size();
      break;
    }
    case Phase::MultiTask: {
      RecordGroups groups;
      for (TaskKind t : kAllTasks) {
        const TaskRecords& r = require(records_by_task, phase, t, true, false);
        groups[t] = r.train;
        plan.per_task_counts_before[t] = r.train.size();
        plan.train_tasks.push_back(t);
        if (!r.test.empty()) {
          plan.eval_tasks.push_back(t);
          mix.eval.insert(mix.eval.end(), r.test.begin(), r.test.end());
        }
      }
      mix.train = oversample(groups, seed);
      plan.per_task_counts_after = count_by_task(mix.train);
      break;
    }
    case Phase::ZeroShot: {
      for (TaskKind t : {TaskKind::HC, TaskKind::NER_CLS, TaskKind::RE_CLS}) {
        const TaskRecords& r = require(records_by_task, phase, t, true, false);
        require_options(r.train, t);
        mix.train.insert(mix.train.end(), r.train.begin(), r.train.end());
        plan.per_task_counts_before[t] = r.train.size();
        plan.train_tasks.push_back(t);
      }
      rng::Rng gen(rng::derive_seed(seed, "shuffle"));
      gen.shuffle(std::span<InstructionRecord>(mix.train));
      plan.per_task_counts_after = plan.per_task_counts_before;

      const TaskRecords& sa = require(records_by_task, phase, TaskKind::SA, false, true);
      require_options(sa.test, TaskKind::SA);
      mix.eval = scorer::filter_neutral(sa.test);
      plan.eval_tasks = {TaskKind::SA};

      std::set<std::string> train_sources;
      for (const auto& r : mix.train) train_sources.insert(r.source_sample_id);
      for (const auto& r : mix.eval) {
        if (train_sources.count(r.source_sample_id)) {
          throw Error(ErrorCode::LeakDetected,
                      fmt::format("source sample {} appears in zero-shot train and eval", r.source_sample_id));
        }
      }
      break;
    }
  }
  plan.train_size = mix.train.size();
  plan.eval_size = mix.eval.size();
  return mix;
}

namespace {

json counts_to_json(const std::map<TaskKind, size_t>& counts) {
  json out = json::object();
  for (const auto& [task, n] : counts) out[std::string(to_string(task))] = n;
  return out;
}

std::map<TaskKind, size_t> counts_from_json(const json& o) {
  std::map<TaskKind, size_t> out;
  for (const auto& [key, value] : o.items()) out[parse_task(key)] = value.get<size_t>();
  return out;
}

json tasks_to_json(const std::vector<TaskKind>& tasks) {
  json out = json::array();
  for (TaskKind t : tasks) out.push_back(to_string(t));
  return out;
}

std::vector<TaskKind> tasks_from_json(const json& a) {
  std::vector<TaskKind> out;
  for (const auto& t : a) out.push_back(parse_task(t.get<std::string>()));
  return out;
}

}  // namespace

json plan_to_json(const MixPlan& plan) {
  return json{{"phase", to_string(plan.phase)},
              {"seed", plan.seed},
              {"task", plan.task ? json(to_string(*plan.task)) : json(nullptr)},
              {"per_task_counts_before", counts_to_json(plan.per_task_counts_before)},
              {"per_task_counts_after", counts_to_json(plan.per_task_counts_after)},
              {"train_tasks", tasks_to_json(plan.train_tasks)},
              {"eval_tasks", tasks_to_json(plan.eval_tasks)},
              {"train_size", plan.train_size},
              {"eval_size", plan.eval_size},
              {"record_order", {{"seed", plan.seed}, {"algorithm", plan.shuffle_algorithm}}}};
}

MixPlan plan_from_json(const json& o) {
  try {
    MixPlan plan;
    plan.phase = parse_phase(o.at("phase").get<std::string>());
    plan.seed = o.at("seed").get<uint64_t>();
    if (!o.at("task").is_null()) plan.task = parse_task(o.at("task").get<std::string>());
    plan.per_task_counts_before = counts_from_json(o.at("per_task_counts_before"));
    plan.per_task_counts_after = counts_from_json(o.at("per_task_counts_after"));
    plan.train_tasks = tasks_from_json(o.at("train_tasks"));
    plan.eval_tasks = tasks_from_json(o.at("eval_tasks"));
    plan.train_size = o.at("train_size").get<size_t>();
    plan.eval_size = o.at("eval_size").get<size_t>();
    plan.shuffle_algorithm = o.at("record_order").at("algorithm").get<std::string>();
    return plan;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRow, fmt::format("bad mix plan: {}", e.what()));
  }
}

std::string mix_stem(Phase phase, std::optional<TaskKind> task, uint64_t seed) {
  std::string_view which = (phase == Phase::TaskSpecific && task) ? to_string(*task) : "all";
  return fmt::format("{}_{}_{}", to_string(phase), which, seed);
}

MixFiles mix_files(const std::filesystem::path& dir, Phase phase, std::optional<TaskKind> task, uint64_t seed) {
  const std::string stem = mix_stem(phase, task, seed);
  return {dir / (stem + ".train.jsonl"), dir / (stem + ".eval.jsonl"), dir / (stem + ".plan.json")};
}

MixFiles write_mix(const std::filesystem::path& dir, const PhaseMix& mix) {
  MixFiles files = mix_files(dir, mix.plan.phase, mix.plan.task, mix.plan.seed);
  instruct::write_record_store(files.train, mix.train);
  instruct::write_record_store(files.eval, mix.eval);
  io::write_file_atomic(files.plan, io::dump_json(plan_to_json(mix.plan)));
  return files;
}

}  // namespace finbench::mixer
