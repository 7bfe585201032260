#include "finbench/runner.hpp"

#include <fcntl.h>
#include <spawn.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <set>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "finbench/instruct.hpp"
#include "finbench/io.hpp"
#include "finbench/rng.hpp"
#include "finbench/text.hpp"

extern char** environ;

namespace finbench::runner {

using nlohmann::json;

json to_json(const TrainConfig& c) {
  return json{{"lora_rank", c.lora_rank},
              {"lora_alpha", c.lora_alpha},
              {"lora_targets", c.lora_targets},
              {"learning_rate", c.learning_rate},
              {"warmup_fraction", c.warmup_fraction},
              {"schedule", c.schedule},
              {"precision", c.precision},
              {"max_token_length", c.max_token_length},
              {"per_device_batch", c.per_device_batch},
              {"grad_accumulation", c.grad_accumulation},
              {"epochs", c.epochs}};
}

namespace {

[[noreturn]] void bad_override(const std::string& what) {
  throw Error(ErrorCode::InvalidOverride, what);
}

int positive_int(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<int64_t>() <= 0) bad_override(fmt::format("'{}' must be a positive integer", key));
  return v.get<int>();
}

double positive_number(const json& v, const std::string& key) {
  if (!v.is_number() || !(v.get<double>() > 0) || !std::isfinite(v.get<double>())) {
    bad_override(fmt::format("'{}' must be a positive number", key));
  }
  return v.get<double>();
}

// Applies one TrainConfig field. Returns false for keys that are not fields.
bool apply_train_field(TrainConfig& c, const std::string& key, const json& v) {
  if (key == "lora_rank") c.lora_rank = positive_int(v, key);
  else if (key == "lora_alpha") c.lora_alpha = positive_int(v, key);
  else if (key == "max_token_length") c.max_token_length = positive_int(v, key);
  else if (key == "per_device_batch") c.per_device_batch = positive_int(v, key);
  else if (key == "grad_accumulation") c.grad_accumulation = positive_int(v, key);
  else if (key == "learning_rate") c.learning_rate = positive_number(v, key);
  else if (key == "epochs") c.epochs = positive_number(v, key);
  else if (key == "warmup_fraction") {
    if (!v.is_number() || v.get<double>() < 0 || v.get<double>() >= 1) bad_override("'warmup_fraction' must lie in [0, 1)");
    c.warmup_fraction = v.get<double>();
  } else if (key == "lora_targets") {
    if (!v.is_string() || v.get<std::string>().empty()) bad_override("'lora_targets' must be a non-empty string");
    c.lora_targets = v.get<std::string>();
  } else if (key == "schedule") {
    if (v != "linear_decay_to_zero") bad_override("'schedule' must be \"linear_decay_to_zero\"");
    c.schedule = v.get<std::string>();
  } else if (key == "precision") {
    if (v != "fp16" && v != "fp32") bad_override("'precision' must be \"fp16\" or \"fp32\"");
    c.precision = v.get<std::string>();
  } else {
    return false;
  }
  return true;
}

}  // namespace

TrainConfig train_config_from_json(const json& object) {
  if (!object.is_object()) bad_override("train config must be a JSON object");
  TrainConfig c;
  for (const auto& [key, value] : object.items()) {
    if (!apply_train_field(c, key, value)) bad_override(fmt::format("unknown train config field '{}'", key));
  }
  return c;
}

const std::vector<ModelSpec>& preset_models() {
  static const std::vector<ModelSpec> presets = {
      {"Llama2-7B", "default", "meta-llama/Llama-2-7b-hf"},
      {"Falcon-7B", "default", "tiiuae/falcon-7b"},
      {"BLOOM-7.1B", "default", "bigscience/bloom-7b1"},
      {"MPT-7B", "default", "mosaicml/mpt-7b"},
      {"ChatGLM2-6B", "default", "THUDM/chatglm2-6b"},
      {"Qwen-7B", "default", "Qwen/Qwen-7B"},
  };
  return presets;
}

std::optional<ModelSpec> find_preset(std::string_view name) {
  for (const auto& m : preset_models()) {
    if (m.name == name) return m;
  }
  return std::nullopt;
}

namespace {

json tasks_json(const std::vector<TaskKind>& tasks) {
  json out = json::array();
  for (TaskKind t : tasks) out.push_back(to_string(t));
  return out;
}

std::vector<TaskKind> tasks_from(const json& a) {
  std::vector<TaskKind> out;
  for (const auto& t : a) out.push_back(parse_task(t.get<std::string>()));
  return out;
}

}  // namespace

json to_json(const PhasePlan& p) {
  json epochs = json::object();
  for (const auto& [t, e] : p.per_task_epochs) epochs[std::string(to_string(t))] = e;
  return json{
      {"phase", to_string(p.phase)},
      {"task", p.task ? json(to_string(*p.task)) : json(nullptr)},
      {"tasks", tasks_json(p.tasks)},
      {"per_task_epochs", epochs},
      {"eval_spec",
       {{"tasks", tasks_json(p.eval.tasks)},
        {"drop_neutral", p.eval.drop_neutral},
        {"max_new_tokens_classification", p.eval.max_new_tokens_classification},
        {"max_new_tokens_generation", p.eval.max_new_tokens_generation}}},
      {"checkpoint_every_steps", p.checkpoint_every_steps ? json(*p.checkpoint_every_steps) : json(nullptr)},
      {"model", {{"name", p.model.name}, {"adapter_id", p.model.adapter_id}, {"base_checkpoint", p.model.base_checkpoint}}},
      {"seed", p.seed},
      {"train_config", to_json(p.train)}};
}

PhasePlan phase_plan_from_json(const json& o) {
  try {
    PhasePlan p;
    p.phase = parse_phase(o.at("phase").get<std::string>());
    if (!o.at("task").is_null()) p.task = parse_task(o.at("task").get<std::string>());
    p.tasks = tasks_from(o.at("tasks"));
    for (const auto& [k, v] : o.at("per_task_epochs").items()) p.per_task_epochs[parse_task(k)] = v.get<double>();
    const json& e = o.at("eval_spec");
    p.eval.tasks = tasks_from(e.at("tasks"));
    p.eval.drop_neutral = e.at("drop_neutral").get<bool>();
    p.eval.max_new_tokens_classification = e.at("max_new_tokens_classification").get<int>();
    p.eval.max_new_tokens_generation = e.at("max_new_tokens_generation").get<int>();
    if (!o.at("checkpoint_every_steps").is_null()) p.checkpoint_every_steps = o["checkpoint_every_steps"].get<int>();
    const json& m = o.at("model");
    p.model = {m.at("name").get<std::string>(), m.at("adapter_id").get<std::string>(),
               m.at("base_checkpoint").get<std::string>()};
    p.seed = o.at("seed").get<uint64_t>();
    p.train = train_config_from_json(o.at("train_config"));
    return p;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::MalformedRow, fmt::format("bad phase plan: {}", ex.what()));
  }
}

namespace {

void apply_overrides(PhasePlan& plan, const json& overrides) {
  if (overrides.is_null()) return;
  if (!overrides.is_object()) bad_override("overrides must be a JSON object");
  for (const auto& [key, value] : overrides.items()) {
    if (key == "epochs") {
      const double e = positive_number(value, key);
      for (auto& [_, epochs] : plan.per_task_epochs) epochs = e;
      plan.train.epochs = e;
    } else if (key == "checkpoint_every_steps") {
      if (value.is_null()) plan.checkpoint_every_steps.reset();
      else plan.checkpoint_every_steps = positive_int(value, key);
    } else if (!apply_train_field(plan.train, key, value)) {
      bad_override(fmt::format("unknown override '{}'", key));
    }
  }
}

PhasePlan base_plan(Phase phase, const ModelSpec& model, uint64_t run_seed, std::optional<TaskKind> task) {
  PhasePlan p;
  p.phase = phase;
  p.model = model;
  p.task = task;
  switch (phase) {
    case Phase::TaskSpecific:
      p.tasks = {*task};
      p.per_task_epochs[*task] = *task == TaskKind::NER ? 50 : 8;
      p.eval.tasks = {*task};
      p.train.epochs = p.per_task_epochs[*task];
      break;
    case Phase::MultiTask:
      p.tasks.assign(kAllTasks.begin(), kAllTasks.end());
      for (TaskKind t : kAllTasks) p.per_task_epochs[t] = 4;
      p.eval.tasks = p.tasks;
      p.train.epochs = 4;
      break;
    case Phase::ZeroShot:
      p.tasks = {TaskKind::HC, TaskKind::NER_CLS, TaskKind::RE_CLS};
      for (TaskKind t : p.tasks) p.per_task_epochs[t] = 1;
      p.eval.tasks = {TaskKind::SA};
      p.eval.drop_neutral = true;
      p.checkpoint_every_steps = 100;
      p.train.epochs = 1;
      break;
  }
  std::string_view scope = task ? to_string(*task) : to_string(phase);
  p.seed = rng::derive_seed(run_seed, "plan", to_string(phase), model.name, scope);
  return p;
}

}  // namespace

std::vector<PhasePlan> plan_run(Phase phase, std::span<const ModelSpec> models, const json& overrides,
                                uint64_t run_seed, std::span<const TaskKind> tasks) {
  if (models.empty()) throw Error(ErrorCode::InvalidArgument, "plan_run needs at least one model");
  std::set<std::string> names;
  for (const auto& m : models) {
    if (m.name.empty()) throw Error(ErrorCode::InvalidArgument, "model name must not be empty");
    if (!names.insert(m.name).second) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("duplicate model '{}'", m.name));
    }
  }
  std::vector<PhasePlan> plans;
  for (const auto& m : models) {
    if (phase == Phase::TaskSpecific) {
      if (tasks.empty()) throw Error(ErrorCode::InvalidArgument, "task_specific plans need tasks");
      for (TaskKind t : tasks) plans.push_back(base_plan(phase, m, run_seed, t));
    } else {
      plans.push_back(base_plan(phase, m, run_seed, std::nullopt));
    }
  }
  for (auto& p : plans) apply_overrides(p, overrides);
  // Serialization round trip doubles as validation.
  for (const auto& p : plans) {
    if (phase_plan_from_json(to_json(p)) != p) throw Error(ErrorCode::Internal, "plan does not round-trip");
  }
  return plans;
}

std::vector<PhasePlan> plan_run(std::string_view phase, std::span<const ModelSpec> models, const json& overrides,
                                uint64_t run_seed, std::span<const TaskKind> tasks) {
  return plan_run(parse_phase(phase), models, overrides, run_seed, tasks);
}

std::string run_task_label(const PhasePlan& plan) {
  switch (plan.phase) {
    case Phase::TaskSpecific: return std::string(to_string(*plan.task));
    case Phase::MultiTask: return "all";
    case Phase::ZeroShot: return "SA";
  }
  return "?";
}

fs::path run_directory(const fs::path& runs_dir, const PhasePlan& plan) {
  return runs_dir / std::string(to_string(plan.phase)) / plan.model.name / run_task_label(plan);
}

CheckpointRecord select_checkpoint(std::span<const CheckpointRecord> records) {
  if (records.empty()) throw Error(ErrorCode::EmptyRecords, "no checkpoints to select from");
  const CheckpointRecord* best = &records.front();
  for (const auto& r : records) {
    if (r.eval_loss < best->eval_loss || (r.eval_loss == best->eval_loss && r.step < best->step)) best = &r;
  }
  return *best;
}

std::vector<CheckpointRecord> parse_checkpoints(const json& doc, const std::string& origin) {
  auto violation = [&](const std::string& what) {
    throw Error(ErrorCode::ProtocolViolation, fmt::format("{}: {}", origin, what));
  };
  if (!doc.is_array()) violation("expected a JSON array");
  if (doc.empty()) violation("no checkpoints listed");
  std::vector<CheckpointRecord> out;
  for (const auto& row : doc) {
    if (!row.is_object() || !row.contains("step") || !row["step"].is_number_integer() ||
        !row.contains("eval_loss") || !row["eval_loss"].is_number() || !row.contains("path") ||
        !row["path"].is_string()) {
      violation(fmt::format("bad checkpoint entry {}", row.dump()));
    }
    CheckpointRecord r{row["step"].get<int64_t>(), row["eval_loss"].get<double>(), row["path"].get<std::string>()};
    if (r.step <= 0) violation(fmt::format("checkpoint step {} is not positive", r.step));
    if (!std::isfinite(r.eval_loss)) violation(fmt::format("checkpoint {} has a non-finite eval_loss", r.step));
    out.push_back(std::move(r));
  }
  return out;
}

std::string Money::to_string() const {
  const int64_t whole = cents / 100;
  const int64_t frac = std::llabs(cents % 100);
  return fmt::format("{}{}.{:02d}", cents < 0 && whole == 0 ? "-" : "", whole, frac);
}

Money estimate_cost(double gpu_hours, double hourly_rate) {
  if (!(gpu_hours >= 0) || !(hourly_rate >= 0) || !std::isfinite(gpu_hours) || !std::isfinite(hourly_rate)) {
    throw Error(ErrorCode::InvalidArgument, "gpu hours and hourly rate must be finite and nonnegative");
  }
  return Money{std::llround(gpu_hours * hourly_rate * 100.0)};
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  return fmt::format("{:%Y-%m-%dT%H:%M:%S}.{:03d}Z", fmt::gmtime(std::chrono::system_clock::to_time_t(now)), ms);
}

fs::path resolve_adapter(std::string_view id) {
  std::string name(id);
  if (name.empty()) {
    if (const char* env = std::getenv("FINBENCH_ADAPTER")) name = env;
  }
  if (name.empty()) {
    throw Error(ErrorCode::AdapterNotFound, "no adapter given (--adapter or FINBENCH_ADAPTER)");
  }
  auto executable = [](const fs::path& p) {
    std::error_code ec;
    return fs::is_regular_file(p, ec) && ::access(p.c_str(), X_OK) == 0;
  };
  if (name.find('/') != std::string::npos) {
    if (!executable(name)) throw Error(ErrorCode::AdapterNotFound, fmt::format("adapter '{}' is not an executable file", name));
    return fs::absolute(name);
  }
  if (const char* path = std::getenv("PATH")) {
    for (const auto& dir : text::split(path, ":")) {
      if (dir.empty()) continue;
      fs::path candidate = fs::path(dir) / name;
      if (executable(candidate)) return candidate;
    }
  }
  throw Error(ErrorCode::AdapterNotFound, fmt::format("adapter '{}' not found on PATH", name));
}

json to_json(const AdapterInvocation& a) {
  return json{{"kind", a.kind},
              {"argv", a.argv},
              {"exit_status", a.exit_status},
              {"stdout_log", a.stdout_log},
              {"stderr_log", a.stderr_log},
              {"started_at", a.started_at},
              {"finished_at", a.finished_at}};
}

namespace {

// Runs argv with stdout/stderr redirected to files; returns the exit status
// (128 + signal for signalled children).
int spawn_and_wait(const std::vector<std::string>& argv, const fs::path& out_log, const fs::path& err_log) {
  fs::create_directories(out_log.parent_path());
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, out_log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, err_log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);

  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  pid_t pid = 0;
  const int rc = posix_spawn(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) {
    throw Error(ErrorCode::AdapterNotFound, fmt::format("cannot launch '{}': {}", argv[0], std::strerror(rc)));
  }
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) throw Error(ErrorCode::Internal, "waitpid failed");
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return -1;
}

std::string tail_of(const fs::path& path, size_t max_bytes = 2000) {
  std::error_code ec;
  if (!fs::exists(path, ec)) return "";
  std::string s = io::read_file(path);
  if (s.size() > max_bytes) s = "..." + s.substr(s.size() - max_bytes);
  return s;
}

}  // namespace

std::vector<json> read_completion_rows(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Error(ErrorCode::ProtocolViolation, fmt::format("adapter did not write {}", path.string()));
  }
  try {
    return io::read_jsonl(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::ProtocolViolation, e.what());
  }
}

std::map<std::string, std::string> check_completions(std::span<const json> rows,
                                                     std::span<const std::string> expected_ids) {
  std::map<std::string, std::string> completions;
  for (size_t i = 0; i < rows.size(); ++i) {
    const json& row = rows[i];
    if (!row.is_object() || !row.contains("id") || !row["id"].is_string() || !row.contains("completion") ||
        !row["completion"].is_string()) {
      throw Error(ErrorCode::ProtocolViolation, fmt::format("completion row {} lacks string 'id'/'completion'", i + 1));
    }
    if (!completions.emplace(row["id"].get<std::string>(), row["completion"].get<std::string>()).second) {
      throw Error(ErrorCode::ProtocolViolation,
                  fmt::format("duplicate completion for id '{}'", row["id"].get<std::string>()));
    }
  }
  std::set<std::string> expected(expected_ids.begin(), expected_ids.end());
  for (const auto& id : expected_ids) {
    if (!completions.count(id)) throw Error(ErrorCode::ProtocolViolation, fmt::format("no completion for id '{}'", id));
  }
  for (const auto& [id, _] : completions) {
    if (!expected.count(id)) throw Error(ErrorCode::ProtocolViolation, fmt::format("completion for unknown id '{}'", id));
  }
  return completions;
}

AdapterResult invoke_adapter(const fs::path& adapter, const AdapterRequest& req,
                             std::vector<AdapterInvocation>* journal) {
  std::error_code ec;
  if (!fs::is_regular_file(adapter, ec) || ::access(adapter.c_str(), X_OK) != 0) {
    throw Error(ErrorCode::AdapterNotFound, fmt::format("adapter '{}' is not an executable file", adapter.string()));
  }
  AdapterResult result;
  AdapterInvocation& inv = result.invocation;
  if (req.kind == AdapterKind::Train) {
    for (const auto& f : {req.train_file, req.eval_file, req.config_file}) {
      if (!fs::is_regular_file(f, ec)) throw Error(ErrorCode::MissingFile, fmt::format("adapter input missing: {}", f.string()));
    }
    fs::create_directories(req.output_dir);
    inv.kind = "train";
    inv.argv = {adapter.string(), "train", "--train-file", req.train_file.string(), "--eval-file",
                req.eval_file.string(), "--config", req.config_file.string(), "--output-dir", req.output_dir.string()};
  } else {
    if (!fs::is_regular_file(req.prompts, ec)) {
      throw Error(ErrorCode::MissingFile, fmt::format("adapter input missing: {}", req.prompts.string()));
    }
    inv.kind = "infer";
    inv.argv = {adapter.string(), "infer", "--model", req.model.string(), "--prompts", req.prompts.string(),
                "--output", req.output.string(), "--max-new-tokens", std::to_string(req.max_new_tokens)};
    fs::remove(req.output, ec);
  }
  const fs::path out_log = req.log_dir / (req.log_stem + ".stdout.log");
  const fs::path err_log = req.log_dir / (req.log_stem + ".stderr.log");
  inv.stdout_log = out_log.string();
  inv.stderr_log = err_log.string();
  inv.started_at = utc_timestamp();
  inv.exit_status = spawn_and_wait(inv.argv, out_log, err_log);
  inv.finished_at = utc_timestamp();
  if (journal) journal->push_back(inv);

  if (inv.exit_status != 0) {
    throw Error(ErrorCode::AdapterFailed, fmt::format("adapter {} exited with status {}; stderr ({}):\n{}", inv.kind,
                                                      inv.exit_status, err_log.string(), tail_of(err_log)));
  }
  if (req.kind == AdapterKind::Train) {
    const fs::path file = req.output_dir / "checkpoints.json";
    if (!fs::is_regular_file(file, ec)) {
      throw Error(ErrorCode::ProtocolViolation, fmt::format("adapter did not write {}", file.string()));
    }
    json doc;
    try {
      doc = io::read_json(file);
    } catch (const Error& e) {
      throw Error(ErrorCode::ProtocolViolation, e.what());
    }
    result.checkpoints = parse_checkpoints(doc, file.string());
    for (auto& c : result.checkpoints) {
      if (fs::path(c.path).is_relative()) c.path = (req.output_dir / c.path).string();
    }
  } else {
    const auto rows = read_completion_rows(req.output);
    result.completions = check_completions(rows, req.expected_ids);
  }
  return result;
}

MockBehavior parse_mock_behavior(std::string_view text) {
  if (text == "echo_gold") return MockBehavior::EchoGold;
  if (text == "majority_class") return MockBehavior::MajorityClass;
  if (text == "fixed_string") return MockBehavior::FixedString;
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown mock behavior '{}'", text));
}

std::string_view to_string(MockBehavior behavior) {
  switch (behavior) {
    case MockBehavior::EchoGold: return "echo_gold";
    case MockBehavior::MajorityClass: return "majority_class";
    case MockBehavior::FixedString: return "fixed_string";
  }
  return "?";
}

MockOptions mock_options_from_env() {
  MockOptions o;
  if (const char* b = std::getenv("FINBENCH_MOCK_BEHAVIOR"); b && *b) o.behavior = parse_mock_behavior(b);
  if (const char* s = std::getenv("FINBENCH_MOCK_FIXED_STRING")) o.fixed_string = s;
  if (const char* n = std::getenv("FINBENCH_MOCK_STEP_INTERVAL"); n && *n) {
    o.step_interval = std::stoi(n);
    if (o.step_interval <= 0) throw Error(ErrorCode::InvalidArgument, "FINBENCH_MOCK_STEP_INTERVAL must be positive");
  }
  return o;
}

void mock_train(const fs::path& train_file, const fs::path& eval_file, const fs::path& config_file,
                const fs::path& output_dir, const MockOptions& options) {
  const TrainConfig config = train_config_from_json(io::read_json(config_file));
  const auto train = io::read_jsonl(train_file);
  io::read_jsonl(eval_file);

  // Most frequent answer; ties go to the lexicographically smallest.
  std::map<std::string, size_t> freq;
  for (const auto& row : train) ++freq[row.at("answer").get<std::string>()];
  std::string majority;
  size_t best = 0;
  for (const auto& [answer, n] : freq) {
    if (n > best) {
      best = n;
      majority = answer;
    }
  }

  // Strictly decreasing, then flat from the midpoint on.
  json checkpoints = json::array();
  const int flat_from = std::max(1, options.checkpoint_count / 2);
  for (int k = 0; k < options.checkpoint_count; ++k) {
    const int64_t step = static_cast<int64_t>(options.step_interval) * (k + 1);
    const double loss = 1.0 - 0.2 * std::min(k, flat_from);
    const std::string dir = fmt::format("checkpoint-{}", step);
    io::write_file_atomic(output_dir / dir / kMockModelFile,
                          io::dump_json(json{{"majority_answer", majority},
                                             {"train_rows", train.size()},
                                             {"epochs", config.epochs},
                                             {"step", step}}));
    checkpoints.push_back(json{{"step", step}, {"eval_loss", loss}, {"path", dir}});
  }
  io::write_file_atomic(output_dir / "checkpoints.json", io::dump_json(checkpoints));
}

void mock_infer(const fs::path& model, const fs::path& prompts, const fs::path& output, int max_new_tokens,
                const MockOptions& options) {
  if (max_new_tokens <= 0) throw Error(ErrorCode::InvalidArgument, "--max-new-tokens must be positive");
  const auto rows = io::read_jsonl(prompts);
  std::map<std::string, std::string> answers;
  std::string majority;
  if (options.behavior == MockBehavior::EchoGold) {
    for (const auto& a : io::read_jsonl(prompts.parent_path() / kAnswersFile)) {
      answers[a.at("id").get<std::string>()] = a.at("answer").get<std::string>();
    }
  } else if (options.behavior == MockBehavior::MajorityClass) {
    majority = io::read_json(model / kMockModelFile).at("majority_answer").get<std::string>();
  }
  std::vector<json> out;
  for (const auto& row : rows) {
    const std::string id = row.at("id").get<std::string>();
    std::string completion;
    switch (options.behavior) {
      case MockBehavior::EchoGold: {
        auto it = answers.find(id);
        if (it == answers.end()) throw Error(ErrorCode::MissingFile, fmt::format("no gold answer for id '{}'", id));
        completion = it->second;
        break;
      }
      case MockBehavior::MajorityClass: completion = majority; break;
      case MockBehavior::FixedString: completion = options.fixed_string; break;
    }
    out.push_back(json{{"id", id}, {"completion", completion}});
  }
  io::write_file_atomic(output, io::to_jsonl(out));
}

namespace {

json hash_entry(const fs::path& p) { return json{{"path", p.string()}, {"sha256", io::sha256_file(p)}}; }

}  // namespace

RunOutcome execute_plan(const PhasePlan& plan, const std::map<TaskKind, mixer::TaskRecords>& records,
                        const RunContext& context) {
  RunOutcome outcome;
  outcome.run_dir = run_directory(context.runs_dir, plan);
  const fs::path& dir = outcome.run_dir;
  fs::create_directories(dir);

  json manifest = {{"run_id", fmt::format("{}/{}/{}/{}", to_string(plan.phase), plan.model.name,
                                          run_task_label(plan), plan.seed)},
                   {"phase_plan", to_json(plan)},
                   {"train_config", to_json(plan.train)},
                   {"adapter", context.adapter.string()},
                   {"model_channels", json::array({"adapter-file-protocol"})},
                   {"started_at", utc_timestamp()}};
  json inputs = json::array();
  for (const auto& f : context.input_files) inputs.push_back(hash_entry(f));
  manifest["inputs"] = inputs;
  if (plan.phase == Phase::ZeroShot) {
    manifest["notes"] = json::array(
        {"checkpoint selection uses the eval loss reported on the neutral-filtered SA eval file passed as "
         "--eval-file (all SA datasets present in the eval split)"});
  }
  std::vector<AdapterInvocation> journal;
  json artifacts = json::object();

  auto write_manifest = [&](const std::string& status, const std::string& error) {
    manifest["status"] = status;
    if (!error.empty()) manifest["error"] = error;
    json inv = json::array();
    for (const auto& a : journal) inv.push_back(to_json(a));
    manifest["adapter_invocations"] = inv;
    manifest["artifacts"] = artifacts;
    manifest["finished_at"] = utc_timestamp();
    io::write_file_atomic(dir / "manifest.json", io::dump_json(manifest));
  };

  try {
    const mixer::PhaseMix mix = mixer::assemble_phase(plan.phase, records, plan.seed, plan.task);
    if (mix.eval.empty()) throw Error(ErrorCode::MissingTask, "eval set is empty");
    const mixer::MixFiles mix_files = mixer::write_mix(dir, mix);
    manifest["mix_plan"] = hash_entry(mix_files.plan);
    artifacts["train"] = hash_entry(mix_files.train);
    artifacts["eval"] = hash_entry(mix_files.eval);

    const fs::path config_file = dir / "train_config.json";
    io::write_file_atomic(config_file, io::dump_json(to_json(plan.train)));
    artifacts["train_config"] = hash_entry(config_file);

    AdapterRequest train_req;
    train_req.kind = AdapterKind::Train;
    train_req.train_file = mix_files.train;
    train_req.eval_file = mix_files.eval;
    train_req.config_file = config_file;
    train_req.output_dir = dir / "checkpoints";
    train_req.log_dir = dir / "logs";
    train_req.log_stem = "train";
    const AdapterResult trained = invoke_adapter(context.adapter, train_req, &journal);
    json ckpts = json::array();
    for (const auto& c : trained.checkpoints) {
      ckpts.push_back({{"step", c.step}, {"eval_loss", c.eval_loss}, {"path", c.path}});
    }
    manifest["checkpoints"] = ckpts;
    outcome.selected = select_checkpoint(trained.checkpoints);
    manifest["selected_checkpoint"] = {{"step", outcome.selected.step},
                                       {"eval_loss", outcome.selected.eval_loss},
                                       {"path", outcome.selected.path}};

    // Prompts are grouped by decoding budget; answers ride alongside for the
    // mock adapter's echo_gold behaviour.
    std::vector<json> answers;
    std::vector<json> cls_prompts, gen_prompts;
    std::vector<std::string> cls_ids, gen_ids;
    for (const auto& r : mix.eval) {
      json row = {{"id", r.id}, {"prompt", instruct::render(r, false)}};
      if (is_classification(r.task)) {
        cls_prompts.push_back(std::move(row));
        cls_ids.push_back(r.id);
      } else {
        gen_prompts.push_back(std::move(row));
        gen_ids.push_back(r.id);
      }
      answers.push_back({{"id", r.id}, {"answer", r.answer}});
    }
    io::write_file_atomic(dir / kAnswersFile, io::to_jsonl(answers));

    std::map<std::string, std::string> completions;
    auto infer = [&](const std::vector<json>& prompts, const std::vector<std::string>& ids, const char* stem,
                     int max_new_tokens) {
      if (prompts.empty()) return;
      AdapterRequest req;
      req.kind = AdapterKind::Infer;
      req.model = outcome.selected.path;
      req.prompts = dir / fmt::format("prompts.{}.jsonl", stem);
      req.output = dir / fmt::format("completions.{}.jsonl", stem);
      req.max_new_tokens = max_new_tokens;
      req.expected_ids = ids;
      req.log_dir = dir / "logs";
      req.log_stem = fmt::format("infer.{}", stem);
      io::write_file_atomic(req.prompts, io::to_jsonl(prompts));
      artifacts[fmt::format("prompts.{}", stem)] = hash_entry(req.prompts);
      const AdapterResult inferred = invoke_adapter(context.adapter, req, &journal);
      artifacts[fmt::format("completions.{}", stem)] = hash_entry(req.output);
      completions.insert(inferred.completions.begin(), inferred.completions.end());
    };
    infer(cls_prompts, cls_ids, "cls", plan.eval.max_new_tokens_classification);
    infer(gen_prompts, gen_ids, "gen", plan.eval.max_new_tokens_generation);

    std::vector<json> merged;
    for (const auto& r : mix.eval) merged.push_back({{"id", r.id}, {"completion", completions.at(r.id)}});
    io::write_file_atomic(dir / "completions.jsonl", io::to_jsonl(merged));
    artifacts["completions"] = hash_entry(dir / "completions.jsonl");

    const auto joined = scorer::join_completions(mix.eval, merged);
    outcome.metrics = scorer::score_eval_set(mix.eval, joined, context.vocabularies);
    json metrics = json::array();
    for (const auto& m : outcome.metrics) metrics.push_back(scorer::report_to_json(m));
    io::write_file_atomic(dir / "metrics.json", io::dump_json(metrics));
    artifacts["metrics"] = hash_entry(dir / "metrics.json");
  } catch (const Error& e) {
    write_manifest("failed", fmt::format("{}: {}", error_code_name(e.code()), e.what()));
    throw;
  }
  write_manifest("ok", "");
  return outcome;
}

}  // namespace finbench::runner
