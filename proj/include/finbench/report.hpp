#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "finbench/common.hpp"
#include "finbench/scorer.hpp"

namespace finbench::report {

// A row of a results table: a dataset within a task, or the task itself when
// dataset is empty.
struct RowKey {
  TaskKind task = TaskKind::SA;
  std::string dataset;

  auto operator<=>(const RowKey&) const = default;
};

using ModelScores = std::map<std::string, double>;

class ResultGrid {
 public:
  // A second, different value for an occupied cell is kept out and recorded
  // as a warning; the first value stays.
  void set(Phase phase, TaskKind task, const std::string& dataset, const std::string& model, double f1);

  std::optional<double> get(Phase phase, const RowKey& row, const std::string& model) const;

  // Explicit task-level cell when present, otherwise the plain mean of the
  // task's dataset cells for that model.
  std::optional<double> task_score(Phase phase, TaskKind task, const std::string& model) const;

  ModelScores task_scores(Phase phase, TaskKind task) const;

  std::vector<Phase> phases() const;
  std::vector<TaskKind> tasks(Phase phase) const;
  std::vector<std::string> datasets(Phase phase, TaskKind task) const;
  const std::vector<std::string>& models() const { return models_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  bool empty() const { return cells_.empty(); }

  const std::map<Phase, std::map<RowKey, ModelScores>>& cells() const { return cells_; }

 private:
  std::map<Phase, std::map<RowKey, ModelScores>> cells_;
  std::vector<std::string> models_;
  std::vector<std::string> warnings_;
};

// Competition ranking, best first: tied scores share the smallest rank of
// their block and the next score ranks 1 + (number strictly better).
std::map<std::string, int> rank_models(const ModelScores& scores);

double avg_ranking(std::span<const int> ranks);

enum class Arrow { Up, Down, Flat };

std::string_view to_string(Arrow arrow);

struct Gain {
  double points = 0;     // (after - before) * 100 at one decimal
  std::string rendered;  // "+1.1", "-1.3", "0.0"
  Arrow arrow = Arrow::Flat;
};

Gain performance_gain(double before, double after);

struct RenderedReport {
  std::string text;
  std::string csv;
};

RenderedReport render_tables(const ResultGrid& grid);

inline constexpr std::string_view kCsvHeader = "phase,task,dataset,model,f1,rank,arrow,gain_points";
inline constexpr std::string_view kTaskLevelDataset = "*";

struct CsvRow {
  Phase phase = Phase::TaskSpecific;
  TaskKind task = TaskKind::SA;
  std::string dataset;
  std::string model;
  double f1 = 0;
  std::optional<int> rank;
  std::string arrow;
  std::optional<double> gain_points;
};

std::vector<CsvRow> parse_report_csv(std::string_view csv);

// Reads runs/{phase}/{model}/{task}/metrics.json. Each file holds one
// MetricReport object or an array of them.
ResultGrid load_runs(const std::filesystem::path& runs_dir);

void write_report(const std::filesystem::path& out_dir, const RenderedReport& report);

}  // namespace finbench::report
