#include "finbench/common.hpp"

#include <fmt/format.h>

namespace finbench {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::MissingQuestionAnswer: return "MissingQuestionAnswer";
    case ErrorCode::PoolTaskMismatch: return "PoolTaskMismatch";
    case ErrorCode::ZeroShotOnGenerationTask: return "ZeroShotOnGenerationTask";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::MissingTask: return "MissingTask";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::UnknownPhase: return "UnknownPhase";
    case ErrorCode::InvalidOverride: return "InvalidOverride";
    case ErrorCode::AdapterNotFound: return "AdapterNotFound";
    case ErrorCode::AdapterFailed: return "AdapterFailed";
    case ErrorCode::ProtocolViolation: return "ProtocolViolation";
    case ErrorCode::EmptyRecords: return "EmptyRecords";
    case ErrorCode::CountValidationFailed: return "CountValidationFailed";
    case ErrorCode::Io: return "Io";
    case ErrorCode::MalformedManifest: return "MalformedManifest";
    case ErrorCode::LeakDetected: return "LeakDetected";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

std::string_view to_string(TaskKind task) {
  switch (task) {
    case TaskKind::SA: return "SA";
    case TaskKind::HC: return "HC";
    case TaskKind::NER: return "NER";
    case TaskKind::RE: return "RE";
    case TaskKind::NER_CLS: return "NER_CLS";
    case TaskKind::RE_CLS: return "RE_CLS";
  }
  return "?";
}

std::optional<TaskKind> try_parse_task(std::string_view text) {
  for (TaskKind t : kAllTasks) {
    if (to_string(t) == text) return t;
  }
  return std::nullopt;
}

TaskKind parse_task(std::string_view text) {
  if (auto t = try_parse_task(text)) return *t;
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown task '{}'", text));
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::TaskSpecific: return "task_specific";
    case Phase::MultiTask: return "multi_task";
    case Phase::ZeroShot: return "zero_shot";
  }
  return "?";
}

Phase parse_phase(std::string_view text) {
  for (Phase p : {Phase::TaskSpecific, Phase::MultiTask, Phase::ZeroShot}) {
    if (to_string(p) == text) return p;
  }
  throw Error(ErrorCode::UnknownPhase, fmt::format("unknown phase '{}'", text));
}

std::string_view to_string(Split split) {
  return split == Split::Train ? "train" : "test";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "test") return Split::Test;
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown split '{}'", text));
}

}  // namespace finbench
