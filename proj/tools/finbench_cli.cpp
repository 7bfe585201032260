// finbench: command-line front end over the C API.
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "finbench/finbench.h"

namespace {

constexpr const char* kExitCodes = R"(Exit codes:
   0  success
   2  invalid argument or usage error
   3  missing file
   4  malformed row
   5  count mismatch against a manifest's expected_count
   6  unknown label
   7  headline row lacks a question answer
   8  prompt pool / task mismatch
   9  zero-shot mode on a generation task
  10  empty oversampling group
  11  phase needs records that were not built
  12  gold / prediction length mismatch
  13  unknown phase
  14  invalid override
  15  adapter not found
  16  adapter exited nonzero
  17  adapter or completions file broke the file protocol
  18  no checkpoints to select from
  19  sample counts failed validation
  20  filesystem error
  21  malformed manifest
  22  zero-shot train/eval leak
  70  internal error)";

struct Session {
  fb_session* handle = nullptr;
  ~Session() { fb_session_destroy(handle); }
};

int report(fb_session* s, fb_status status) {
  const char* out = fb_last_output(s);
  if (out && *out) std::printf("%s\n", out);
  if (status != FB_OK) {
    std::fprintf(stderr, "finbench: %s: %s\n", fb_status_name(status), fb_last_error(s));
  }
  return static_cast<int>(status);
}

const uint64_t* opt_seed(const std::optional<uint64_t>& seed) { return seed ? &*seed : nullptr; }

const char* opt_str(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Financial instruction-tuning benchmark harness", "finbench"};
  app.footer(kExitCodes);
  app.require_subcommand(1);
  app.set_version_flag("--version", fb_version());

  std::string config, work_dir, runs_dir, prompt_pool, global_adapter;
  std::optional<uint64_t> seed;
  app.add_option("--config", config, "JSON config file (default: $FINBENCH_CONFIG)");
  app.add_option("--work-dir", work_dir, "Directory for samples, records and mixes");
  app.add_option("--runs-dir", runs_dir, "Directory for run outputs");
  app.add_option("--prompt-pool", prompt_pool, "Prompt pool JSON file");

  std::string manifests;
  auto* ingest = app.add_subcommand("ingest", "Load datasets and validate sample counts");
  ingest->add_option("--manifests", manifests, "Dataset manifest JSON file");

  std::string task, mode;
  auto* build = app.add_subcommand("build", "Build instruction record stores for one task");
  build->add_option("--task", task, "SA, HC, NER, RE, NER_CLS or RE_CLS")->required();
  build->add_option("--mode", mode, "standard or zeroshot")->required();
  build->add_option("--seed", seed, "Seed for prompt and option choices");

  std::string phase;
  auto* mix = app.add_subcommand("mix", "Assemble a phase's train/eval mix");
  mix->add_option("--phase", phase, "task_specific, multi_task or zero_shot")->required();
  mix->add_option("--seed", seed, "Seed for oversampling and shuffling");
  mix->add_option("--task", task, "Task for task_specific (default: every built task)");

  std::string model, adapter;
  auto* run = app.add_subcommand("run", "Plan, train, infer and score through an adapter");
  run->add_option("--phase", phase, "task_specific, multi_task or zero_shot")->required();
  run->add_option("--model", model, "Preset name or custom model name")->required();
  run->add_option("--adapter", adapter, "Adapter executable (default: $FINBENCH_ADAPTER)");
  run->add_option("--task", task, "Task for task_specific (default: every built task)");
  run->add_option("--seed", seed, "Run seed");
  std::vector<std::string> overrides;
  run->add_option("--override", overrides, "key=JSON override for the phase plan, repeatable");

  std::string gold, completions, output, samples;
  auto* score = app.add_subcommand("score", "Score a completions file against an eval set");
  score->add_option("--gold", gold, "Eval record store (JSONL)")->required();
  score->add_option("--completions", completions, "Completions JSONL")->required();
  score->add_option("--output", output, "metrics.json path (default: next to completions)");
  score->add_option("--samples", samples, "Samples directory holding index.json, for label vocabularies");

  std::string runs, out_dir;
  auto* rep = app.add_subcommand("report", "Render result tables from a runs directory");
  rep->add_option("--runs", runs, "Runs directory (default: config runs_dir)");
  rep->add_option("--output-dir", out_dir, "Where report.csv/report.txt go (default: runs directory)");

  double hours = 0, rate = 0;
  auto* cost = app.add_subcommand("cost", "Training cost from GPU hours and hourly rate");
  cost->add_option("--hours", hours, "GPU hours")->required();
  cost->add_option("--rate", rate, "Hourly rate")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : FB_INVALID_ARGUMENT;
  }

  if (cost->parsed()) {
    char buffer[64];
    const fb_status status = fb_cost(hours, rate, buffer, sizeof buffer);
    if (status != FB_OK) {
      std::fprintf(stderr, "finbench: %s: hours and rate must be finite and nonnegative\n", fb_status_name(status));
      return status;
    }
    std::printf("%s\n", buffer);
    return 0;
  }

  Session session;
  fb_status status = fb_session_create(opt_str(config), &session.handle);
  if (status != FB_OK) return report(session.handle, status);
  for (const auto& [key, value] : {std::pair{"work_dir", &work_dir}, std::pair{"runs_dir", &runs_dir},
                                   std::pair{"prompt_pool", &prompt_pool}}) {
    if (value->empty()) continue;
    status = fb_session_set(session.handle, key, value->c_str());
    if (status != FB_OK) return report(session.handle, status);
  }
  fb_session* s = session.handle;

  if (ingest->parsed()) return report(s, fb_ingest(s, opt_str(manifests)));
  if (build->parsed()) return report(s, fb_build(s, task.c_str(), mode.c_str(), opt_seed(seed)));
  if (mix->parsed()) return report(s, fb_mix(s, phase.c_str(), opt_seed(seed), opt_str(task)));
  if (run->parsed()) {
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos || eq == 0) {
        std::fprintf(stderr, "finbench: --override expects key=JSON, got '%s'\n", o.c_str());
        return FB_INVALID_OVERRIDE;
      }
      const std::string json = "{\"" + o.substr(0, eq) + "\":" + o.substr(eq + 1) + "}";
      status = fb_session_set_overrides(s, phase.c_str(), json.c_str());
      if (status != FB_OK) return report(s, status);
    }
    return report(s, fb_run(s, phase.c_str(), model.c_str(), opt_str(adapter), opt_str(task), opt_seed(seed)));
  }
  if (score->parsed()) {
    return report(s, fb_score(s, gold.c_str(), completions.c_str(), opt_str(output), opt_str(samples)));
  }
  if (rep->parsed()) return report(s, fb_report(s, opt_str(runs), opt_str(out_dir)));
  return FB_INVALID_ARGUMENT;
}
