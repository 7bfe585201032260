#include "finbench/report.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "finbench/io.hpp"
#include "finbench/text.hpp"

namespace finbench::report {

namespace fs = std::filesystem;
using nlohmann::json;

void ResultGrid::set(Phase phase, TaskKind task, const std::string& dataset, const std::string& model,
                     double f1) {
  if (!(f1 >= 0.0 && f1 <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("f1 {} for {} is outside [0, 1]", f1, model));
  }
  if (std::find(models_.begin(), models_.end(), model) == models_.end()) models_.push_back(model);
  auto& row = cells_[phase][RowKey{task, dataset}];
  auto [it, inserted] = row.emplace(model, f1);
  if (!inserted && it->second != f1) {
    warnings_.push_back(fmt::format("{} / {} / {} / {}: conflicting values {} and {}; kept the first",
                                    to_string(phase), to_string(task), dataset.empty() ? "*" : dataset,
                                    model, it->second, f1));
  }
}

std::optional<double> ResultGrid::get(Phase phase, const RowKey& row, const std::string& model) const {
  auto p = cells_.find(phase);
  if (p == cells_.end()) return std::nullopt;
  auto r = p->second.find(row);
  if (r == p->second.end()) return std::nullopt;
  auto m = r->second.find(model);
  if (m == r->second.end()) return std::nullopt;
  return m->second;
}

std::optional<double> ResultGrid::task_score(Phase phase, TaskKind task, const std::string& model) const {
  if (auto direct = get(phase, RowKey{task, ""}, model)) return direct;
  double sum = 0;
  size_t n = 0;
  for (const auto& dataset : datasets(phase, task)) {
    if (auto v = get(phase, RowKey{task, dataset}, model)) {
      sum += *v;
      ++n;
    }
  }
  if (!n) return std::nullopt;
  return sum / static_cast<double>(n);
}

ModelScores ResultGrid::task_scores(Phase phase, TaskKind task) const {
  ModelScores out;
  for (const auto& model : models_) {
    if (auto v = task_score(phase, task, model)) out[model] = *v;
  }
  return out;
}

std::vector<Phase> ResultGrid::phases() const {
  std::vector<Phase> out;
  for (const auto& [phase, _] : cells_) out.push_back(phase);
  return out;
}

std::vector<TaskKind> ResultGrid::tasks(Phase phase) const {
  std::set<TaskKind> seen;
  if (auto p = cells_.find(phase); p != cells_.end()) {
    for (const auto& [row, _] : p->second) seen.insert(row.task);
  }
  std::vector<TaskKind> out;
  for (TaskKind t : kAllTasks) {
    if (seen.count(t)) out.push_back(t);
  }
  return out;
}

std::vector<std::string> ResultGrid::datasets(Phase phase, TaskKind task) const {
  std::vector<std::string> out;
  if (auto p = cells_.find(phase); p != cells_.end()) {
    for (const auto& [row, _] : p->second) {
      if (row.task == task && !row.dataset.empty()) out.push_back(row.dataset);
    }
  }
  return out;
}

std::map<std::string, int> rank_models(const ModelScores& scores) {
  std::map<std::string, int> ranks;
  for (const auto& [model, score] : scores) {
    int better = 0;
    for (const auto& [other, other_score] : scores) {
      if (other_score > score) ++better;
    }
    ranks[model] = 1 + better;
  }
  return ranks;
}

double avg_ranking(std::span<const int> ranks) {
  if (ranks.empty()) throw Error(ErrorCode::InvalidArgument, "avg_ranking needs at least one rank");
  double sum = 0;
  for (int r : ranks) sum += r;
  return sum / static_cast<double>(ranks.size());
}

std::string_view to_string(Arrow arrow) {
  switch (arrow) {
    case Arrow::Up: return "↑";
    case Arrow::Down: return "↓";
    case Arrow::Flat: return "-";
  }
  return "?";
}

Gain performance_gain(double before, double after) {
  Gain g;
  g.points = (after - before) * 100.0;
  std::string magnitude = fmt::format("{:.1f}", std::fabs(g.points));
  if (magnitude == "0.0") {
    g.rendered = "0.0";
    g.arrow = Arrow::Flat;
  } else if (g.points > 0) {
    g.rendered = "+" + magnitude;
    g.arrow = Arrow::Up;
  } else {
    g.rendered = "-" + magnitude;
    g.arrow = Arrow::Down;
  }
  return g;
}

namespace {

std::string pad(std::string_view s, size_t width) {
  // Width counts code points so arrows do not skew columns.
  size_t cps = 0;
  for (unsigned char c : s) cps += (c & 0xC0) != 0x80;
  std::string out(s);
  if (cps < width) out.append(width - cps, ' ');
  return out;
}

std::string fmt3(double v) { return fmt::format("{:.3f}", v); }

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string render() const {
    std::vector<size_t> widths(header.size(), 0);
    auto measure = [&](const std::vector<std::string>& row) {
      for (size_t c = 0; c < row.size(); ++c) {
        size_t cps = 0;
        for (unsigned char ch : row[c]) cps += (ch & 0xC0) != 0x80;
        widths[c] = std::max(widths[c], cps);
      }
    };
    measure(header);
    for (const auto& r : rows) measure(r);
    auto line = [&](const std::vector<std::string>& row) {
      std::string out;
      for (size_t c = 0; c < row.size(); ++c) {
        if (c) out += "  ";
        out += c + 1 == row.size() ? row[c] : pad(row[c], widths[c]);
      }
      return out + "\n";
    };
    std::string out = line(header);
    size_t total = 0;
    for (size_t w : widths) total += w;
    out += std::string(total + 2 * (widths.empty() ? 0 : widths.size() - 1), '-') + "\n";
    for (const auto& r : rows) out += line(r);
    return out;
  }
};

class Renderer {
 public:
  explicit Renderer(const ResultGrid& grid) : grid_(grid) {}

  RenderedReport run() {
    for (Phase phase : grid_.phases()) {
      switch (phase) {
        case Phase::TaskSpecific: task_specific(); break;
        case Phase::MultiTask: multi_task(); break;
        case Phase::ZeroShot: zero_shot(); break;
      }
    }
    if (!grid_.warnings().empty()) {
      out_.text += "Warnings:\n";
      for (const auto& w : grid_.warnings()) out_.text += "  " + w + "\n";
    }
    if (!out_.text.empty() || !csv_rows_.empty()) {
      out_.csv = std::string(kCsvHeader) + "\n";
      for (const auto& r : csv_rows_) out_.csv += r + "\n";
    }
    return out_;
  }

 private:
  std::vector<std::string> models_in(Phase phase) const {
    std::vector<std::string> out;
    const auto& rows = grid_.cells().at(phase);
    for (const auto& m : grid_.models()) {
      bool any = std::any_of(rows.begin(), rows.end(), [&](const auto& kv) { return kv.second.count(m) > 0; });
      if (any) out.push_back(m);
    }
    return out;
  }

  void csv(Phase phase, TaskKind task, const std::string& dataset, const std::string& model, double f1,
           std::optional<int> rank, std::string_view arrow, std::optional<double> gain) {
    csv_rows_.push_back(fmt::format(
        "{},{},{},{},{},{},{},{}", to_string(phase), to_string(task),
        csv_field(dataset.empty() ? kTaskLevelDataset : std::string_view(dataset)), csv_field(model), f1,
        rank ? std::to_string(*rank) : "", arrow, gain ? fmt::format("{}", *gain) : ""));
  }

  bool has_own_datasets(Phase phase, TaskKind task) const {
    return !grid_.datasets(phase, task).empty();
  }

  void task_specific() {
    const Phase phase = Phase::TaskSpecific;
    const auto models = models_in(phase);
    Table table;
    table.header.push_back("Task");
    table.header.insert(table.header.end(), models.begin(), models.end());
    std::map<std::string, std::vector<int>> ranks_by_model;
    for (TaskKind task : grid_.tasks(phase)) {
      const ModelScores scores = grid_.task_scores(phase, task);
      const auto ranks = rank_models(scores);
      std::vector<std::string> row = {std::string(to_string(task))};
      for (const auto& m : models) {
        auto it = scores.find(m);
        if (it == scores.end()) {
          row.push_back("");
          continue;
        }
        const int rank = ranks.at(m);
        ranks_by_model[m].push_back(rank);
        row.push_back(fmt::format("{} ({})", fmt3(it->second), rank));
        csv(phase, task, "", m, it->second, rank, "", std::nullopt);
      }
      table.rows.push_back(std::move(row));
      for (const auto& dataset : grid_.datasets(phase, task)) {
        std::vector<std::string> drow = {"  " + dataset};
        for (const auto& m : models) {
          auto v = grid_.get(phase, RowKey{task, dataset}, m);
          drow.push_back(v ? fmt3(*v) : "");
          if (v) csv(phase, task, dataset, m, *v, std::nullopt, "", std::nullopt);
        }
        table.rows.push_back(std::move(drow));
      }
    }
    std::vector<std::string> avg = {"Avg Ranking"};
    for (const auto& m : models) {
      auto it = ranks_by_model.find(m);
      avg.push_back(it == ranks_by_model.end() ? "" : fmt::format("{:.2f}", avg_ranking(it->second)));
    }
    table.rows.push_back(std::move(avg));
    section(phase, table);
  }

  void multi_task() {
    const Phase phase = Phase::MultiTask;
    const auto models = models_in(phase);
    Table table;
    table.header.push_back("Task / Dataset");
    table.header.insert(table.header.end(), models.begin(), models.end());
    for (TaskKind task : grid_.tasks(phase)) {
      for (const auto& dataset : grid_.datasets(phase, task)) {
        const RowKey key{task, dataset};
        std::vector<std::string> row = {fmt::format("{} / {}", to_string(task), dataset)};
        for (const auto& m : models) {
          auto v = grid_.get(phase, key, m);
          if (!v) {
            row.push_back("");
            continue;
          }
          std::string arrow;
          if (auto before = grid_.get(Phase::TaskSpecific, key, m)) {
            arrow = std::string(to_string(performance_gain(*before, *v).arrow));
          }
          csv(phase, task, dataset, m, *v, std::nullopt, arrow, std::nullopt);
          row.push_back(fmt3(*v) + (arrow.empty() ? "" : " " + arrow));
        }
        table.rows.push_back(std::move(row));
      }
      std::vector<std::string> row = {has_own_datasets(phase, task) ? fmt::format("{} / Avg", to_string(task))
                                                                    : std::string(to_string(task))};
      std::vector<std::string> gains = {fmt::format("{} Performance Gain", to_string(task))};
      bool any_gain = false;
      for (const auto& m : models) {
        auto after = grid_.task_score(phase, task, m);
        if (!after) {
          row.push_back("");
          gains.push_back("");
          continue;
        }
        auto before = grid_.task_score(Phase::TaskSpecific, task, m);
        std::optional<Gain> gain;
        if (before) gain = performance_gain(*before, *after);
        std::string arrow = gain ? std::string(to_string(gain->arrow)) : "";
        // Tasks with dataset rows show arrows there and the gain row here.
        row.push_back(fmt3(*after) + (has_own_datasets(phase, task) || arrow.empty() ? "" : " " + arrow));
        csv(phase, task, "", m, *after, std::nullopt, arrow,
            gain ? std::optional<double>(gain->points) : std::nullopt);
        gains.push_back(gain ? gain->rendered + "%" : "");
        any_gain = any_gain || gain.has_value();
      }
      table.rows.push_back(std::move(row));
      if (any_gain) table.rows.push_back(std::move(gains));
    }
    section(phase, table);
  }

  void zero_shot() {
    const Phase phase = Phase::ZeroShot;
    const auto models = models_in(phase);
    Table table;
    table.header.push_back("Dataset");
    table.header.insert(table.header.end(), models.begin(), models.end());
    for (TaskKind task : grid_.tasks(phase)) {
      std::vector<std::pair<RowKey, std::string>> rows;
      for (const auto& dataset : grid_.datasets(phase, task)) rows.push_back({RowKey{task, dataset}, dataset});
      if (rows.empty()) rows.push_back({RowKey{task, ""}, std::string(to_string(task))});
      for (const auto& [key, label] : rows) {
        ModelScores scores;
        for (const auto& m : models) {
          if (auto v = grid_.get(phase, key, m)) scores[m] = *v;
        }
        const auto ranks = rank_models(scores);
        std::vector<std::string> row = {label};
        for (const auto& m : models) {
          auto it = scores.find(m);
          if (it == scores.end()) {
            row.push_back("");
            continue;
          }
          const bool best_two = ranks.at(m) <= 2;
          row.push_back(fmt3(it->second) + (best_two ? " *" : ""));
          csv(phase, task, key.dataset, m, it->second, ranks.at(m), "", std::nullopt);
        }
        table.rows.push_back(std::move(row));
      }
    }
    section(phase, table, "(* marks the two best models per row)\n");
  }

  void section(Phase phase, const Table& table, std::string_view footer = {}) {
    out_.text += fmt::format("== {} ==\n", to_string(phase));
    out_.text += table.render();
    out_.text += footer;
    out_.text += "\n";
  }

  const ResultGrid& grid_;
  RenderedReport out_;
  std::vector<std::string> csv_rows_;
};

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

}  // namespace

RenderedReport render_tables(const ResultGrid& grid) { return Renderer(grid).run(); }

std::vector<CsvRow> parse_report_csv(std::string_view csv) {
  std::vector<CsvRow> rows;
  bool header = true;
  for (const auto& line : text::split(csv, "\n")) {
    if (line.empty()) continue;
    if (header) {
      if (line != kCsvHeader) throw Error(ErrorCode::MalformedRow, "unexpected report CSV header");
      header = false;
      continue;
    }
    auto f = split_csv_line(line);
    if (f.size() != 8) throw Error(ErrorCode::MalformedRow, fmt::format("bad report CSV line '{}'", line));
    CsvRow r;
    r.phase = parse_phase(f[0]);
    r.task = parse_task(f[1]);
    r.dataset = f[2] == kTaskLevelDataset ? "" : f[2];
    r.model = f[3];
    r.f1 = std::stod(f[4]);
    if (!f[5].empty()) r.rank = std::stoi(f[5]);
    r.arrow = f[6];
    if (!f[7].empty()) r.gain_points = std::stod(f[7]);
    rows.push_back(std::move(r));
  }
  return rows;
}

ResultGrid load_runs(const fs::path& runs_dir) {
  ResultGrid grid;
  if (!fs::is_directory(runs_dir)) {
    throw Error(ErrorCode::MissingFile, fmt::format("runs directory not found: {}", runs_dir.string()));
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(runs_dir)) {
    if (entry.is_regular_file() && entry.path().filename() == "metrics.json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    const fs::path rel = fs::relative(file, runs_dir);
    std::vector<std::string> parts;
    for (const auto& p : rel) parts.push_back(p.string());
    if (parts.size() != 4) continue;  // not runs/{phase}/{model}/{task}/metrics.json
    const Phase phase = parse_phase(parts[0]);
    const std::string& model = parts[1];
    json doc = io::read_json(file);
    std::vector<json> reports;
    if (doc.is_array()) {
      reports.assign(doc.begin(), doc.end());
    } else {
      reports.push_back(doc);
    }
    for (const auto& r : reports) {
      const scorer::MetricReport m = scorer::report_from_json(r);
      grid.set(phase, m.task, m.dataset, model, m.f1);
    }
  }
  return grid;
}

void write_report(const fs::path& out_dir, const RenderedReport& report) {
  io::write_file_atomic(out_dir / "report.csv", report.csv);
  io::write_file_atomic(out_dir / "report.txt", report.text);
}

}  // namespace finbench::report
