#include "finbench/finbench.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include <fmt/format.h>

#include "finbench/common.hpp"
#include "finbench/io.hpp"
#include "finbench/pipeline.hpp"
#include "finbench/scorer.hpp"

#define FB_API extern "C" __attribute__((visibility("default")))

struct fb_session {
  finbench::pipeline::Settings settings;
  std::string last_error;
  std::string last_output;
};

namespace {

using finbench::Error;
using finbench::ErrorCode;
using nlohmann::json;
namespace pipeline = finbench::pipeline;

static_assert(FB_INVALID_ARGUMENT == static_cast<int>(ErrorCode::InvalidArgument));
static_assert(FB_PROTOCOL_VIOLATION == static_cast<int>(ErrorCode::ProtocolViolation));
static_assert(FB_LEAK_DETECTED == static_cast<int>(ErrorCode::LeakDetected));
static_assert(FB_INTERNAL == static_cast<int>(ErrorCode::Internal));

template <class F>
fb_status guarded(fb_session* session, F&& body) {
  if (!session) return FB_INVALID_ARGUMENT;
  session->last_error.clear();
  session->last_output.clear();
  try {
    return body();
  } catch (const Error& e) {
    session->last_error = e.what();
    return static_cast<fb_status>(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    session->last_error = e.what();
    return FB_IO;
  } catch (const std::exception& e) {
    session->last_error = e.what();
    return FB_INTERNAL;
  }
}

std::string required(const char* s, const char* what) {
  if (!s || !*s) throw Error(ErrorCode::InvalidArgument, fmt::format("{} is required", what));
  return s;
}

uint64_t seed_or(const fb_session* session, const uint64_t* seed) { return seed ? *seed : session->settings.seed; }

std::optional<finbench::TaskKind> optional_task(const char* task) {
  if (!task || !*task) return std::nullopt;
  return finbench::parse_task(task);
}

json metrics_json(const std::vector<finbench::scorer::MetricReport>& reports) {
  json out = json::array();
  for (const auto& r : reports) out.push_back(finbench::scorer::report_to_json(r));
  return out;
}

}  // namespace

FB_API const char* fb_version(void) { return "0.1.0"; }

FB_API const char* fb_status_name(int status) {
  if (status == FB_OK) return "Ok";
  const auto name = finbench::error_code_name(static_cast<ErrorCode>(status));
  // error_code_name returns views into string literals.
  return name.data();
}

FB_API fb_status fb_session_create(const char* config_path, fb_session** out) {
  if (!out) return FB_INVALID_ARGUMENT;
  *out = nullptr;
  auto* session = new (std::nothrow) fb_session();
  if (!session) return FB_INTERNAL;
  std::string path = config_path ? config_path : "";
  if (path.empty()) {
    if (const char* env = std::getenv("FINBENCH_CONFIG")) path = env;
  }
  fb_status status = guarded(session, [&] {
    if (!path.empty()) session->settings = pipeline::load_settings(path);
    return FB_OK;
  });
  *out = session;
  return status;
}

FB_API void fb_session_destroy(fb_session* session) { delete session; }

FB_API fb_status fb_session_set(fb_session* session, const char* key, const char* value) {
  return guarded(session, [&] {
    const std::string k = required(key, "key");
    const std::string v = required(value, "value");
    auto& s = session->settings;
    if (k == "work_dir") s.work_dir = v;
    else if (k == "runs_dir") s.runs_dir = v;
    else if (k == "prompt_pool") s.prompt_pool = v;
    else if (k == "manifests") s.manifests = v;
    else if (k == "adapter") s.adapter = v;
    else if (k == "seed") {
      size_t used = 0;
      unsigned long long parsed = 0;
      try {
        parsed = std::stoull(v, &used, 10);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != v.size() || v[0] == '-') {
        throw Error(ErrorCode::InvalidArgument, fmt::format("seed '{}' is not an unsigned 64-bit integer", v));
      }
      s.seed = parsed;
    } else {
      throw Error(ErrorCode::InvalidArgument, fmt::format("unknown setting '{}'", k));
    }
    return FB_OK;
  });
}

FB_API fb_status fb_session_set_overrides(fb_session* session, const char* phase, const char* overrides_json) {
  return guarded(session, [&] {
    const auto p = finbench::parse_phase(required(phase, "phase"));
    json parsed = json::parse(required(overrides_json, "overrides"), nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) {
      throw Error(ErrorCode::InvalidOverride, "overrides must be a JSON object");
    }
    json& slot = session->settings.phase_overrides[p];
    if (!slot.is_object()) slot = json::object();
    slot.update(parsed);
    return FB_OK;
  });
}

FB_API const char* fb_last_error(const fb_session* session) { return session ? session->last_error.c_str() : ""; }

FB_API const char* fb_last_output(const fb_session* session) { return session ? session->last_output.c_str() : ""; }

FB_API fb_status fb_ingest(fb_session* session, const char* manifests_path) {
  return guarded(session, [&] {
    std::filesystem::path path;
    if (manifests_path && *manifests_path) path = manifests_path;
    else if (session->settings.manifests) path = *session->settings.manifests;
    else throw Error(ErrorCode::InvalidArgument, "no manifests file given");
    const auto result = pipeline::ingest(session->settings, path);
    session->last_output = finbench::corpus::count_report_to_json(result.counts).dump();
    if (!result.counts.pass) {
      session->last_error = "sample counts do not match the expected counts";
      return FB_COUNT_VALIDATION_FAILED;
    }
    return FB_OK;
  });
}

FB_API fb_status fb_build(fb_session* session, const char* task, const char* mode, const uint64_t* seed) {
  return guarded(session, [&] {
    const auto t = finbench::parse_task(required(task, "task"));
    const auto m = finbench::instruct::parse_mode(required(mode, "mode"));
    const auto result = pipeline::build(session->settings, t, m, seed_or(session, seed));
    json out = json::object();
    for (const auto& [split, path] : result.stores) {
      out[std::string(finbench::to_string(split))] = {{"path", path.string()}, {"records", result.sizes.at(split)}};
    }
    session->last_output = out.dump();
    return FB_OK;
  });
}

FB_API fb_status fb_mix(fb_session* session, const char* phase, const uint64_t* seed, const char* task) {
  return guarded(session, [&] {
    const auto p = finbench::parse_phase(required(phase, "phase"));
    const auto files = pipeline::mix(session->settings, p, seed_or(session, seed), optional_task(task));
    json out = json::array();
    for (const auto& f : files) {
      out.push_back({{"train", f.train.string()}, {"eval", f.eval.string()}, {"plan", f.plan.string()}});
    }
    session->last_output = out.dump();
    return FB_OK;
  });
}

FB_API fb_status fb_run(fb_session* session, const char* phase, const char* model, const char* adapter,
                        const char* task, const uint64_t* seed) {
  return guarded(session, [&] {
    const auto p = finbench::parse_phase(required(phase, "phase"));
    pipeline::Settings settings = session->settings;
    if (adapter && *adapter) settings.adapter = adapter;
    const auto outcomes = pipeline::run(settings, p, required(model, "model"), optional_task(task),
                                        seed_or(session, seed));
    json out = json::array();
    for (const auto& o : outcomes) {
      out.push_back({{"run_dir", o.run_dir.string()},
                     {"selected_checkpoint", {{"step", o.selected.step}, {"eval_loss", o.selected.eval_loss}}},
                     {"metrics", metrics_json(o.metrics)}});
    }
    session->last_output = out.dump();
    return FB_OK;
  });
}

FB_API fb_status fb_score(fb_session* session, const char* gold_path, const char* completions_path,
                          const char* output_path, const char* samples_dir) {
  return guarded(session, [&] {
    std::optional<std::filesystem::path> output, samples;
    if (output_path && *output_path) output = output_path;
    if (samples_dir && *samples_dir) samples = samples_dir;
    const auto target = pipeline::score(required(gold_path, "gold file"), required(completions_path, "completions file"),
                                        output, samples);
    session->last_output = json{{"metrics", target.string()}, {"reports", finbench::io::read_json(target)}}.dump();
    return FB_OK;
  });
}

FB_API fb_status fb_report(fb_session* session, const char* runs_dir, const char* out_dir) {
  return guarded(session, [&] {
    std::filesystem::path runs = (runs_dir && *runs_dir) ? std::filesystem::path(runs_dir) : session->settings.runs_dir;
    std::optional<std::filesystem::path> out;
    if (out_dir && *out_dir) out = out_dir;
    const auto result = pipeline::report(runs, out);
    session->last_output =
        json{{"csv", result.csv.string()}, {"text", result.text.string()}, {"warnings", result.warnings}}.dump();
    return FB_OK;
  });
}

FB_API fb_status fb_cost(double gpu_hours, double hourly_rate, char* buffer, size_t buffer_size) {
  if (!buffer || buffer_size == 0) return FB_INVALID_ARGUMENT;
  buffer[0] = '\0';
  try {
    const std::string text = finbench::runner::estimate_cost(gpu_hours, hourly_rate).to_string();
    if (text.size() + 1 > buffer_size) return FB_INVALID_ARGUMENT;
    std::memcpy(buffer, text.c_str(), text.size() + 1);
    return FB_OK;
  } catch (const Error& e) {
    return static_cast<fb_status>(e.code());
  }
}
