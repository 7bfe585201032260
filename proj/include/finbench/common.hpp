#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace finbench {

// Every failure the core can raise. Values are stable: the C API and the CLI
// exit codes are derived from them.
enum class ErrorCode : int {
  InvalidArgument = 2,
  MissingFile = 3,
  MalformedRow = 4,
  CountMismatch = 5,
  UnknownLabel = 6,
  MissingQuestionAnswer = 7,
  PoolTaskMismatch = 8,
  ZeroShotOnGenerationTask = 9,
  EmptyGroup = 10,
  MissingTask = 11,
  LengthMismatch = 12,
  UnknownPhase = 13,
  InvalidOverride = 14,
  AdapterNotFound = 15,
  AdapterFailed = 16,
  ProtocolViolation = 17,
  EmptyRecords = 18,
  CountValidationFailed = 19,
  Io = 20,
  MalformedManifest = 21,
  LeakDetected = 22,
  Internal = 70,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

enum class TaskKind { SA, HC, NER, RE, NER_CLS, RE_CLS };

inline constexpr std::array<TaskKind, 6> kAllTasks = {
    TaskKind::SA,  TaskKind::HC,      TaskKind::NER,
    TaskKind::RE,  TaskKind::NER_CLS, TaskKind::RE_CLS};

std::string_view to_string(TaskKind task);
TaskKind parse_task(std::string_view text);
std::optional<TaskKind> try_parse_task(std::string_view text);

// SA, HC, NER_CLS and RE_CLS answer with one label from a finite set.
constexpr bool is_classification(TaskKind task) {
  return task != TaskKind::NER && task != TaskKind::RE;
}

enum class Phase { TaskSpecific, MultiTask, ZeroShot };

std::string_view to_string(Phase phase);
Phase parse_phase(std::string_view text);

enum class Split { Train, Test };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

}  // namespace finbench
