#include "finbench/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "finbench/io.hpp"
#include "finbench/rng.hpp"
#include "finbench/text.hpp"

namespace finbench::corpus {

using nlohmann::json;
namespace fs = std::filesystem;

const std::array<std::string_view, kHeadlineQuestionCount> kHeadlineQuestions = {
    "Does the news headline talk about price?",
    "Does the news headline talk about price going up?",
    "Does the news headline talk about price staying constant?",
    "Does the news headline talk about price going down?",
    "Does the news headline talk about a past price?",
    "Does the news headline talk about a future price?",
    "Does the news headline talk about a general event (apart from prices) in the past?",
    "Does the news headline talk about a general event (apart from prices) in the future?",
    "Does the news headline compare gold with any other asset?",
};

std::string_view to_string(SourceFormat format) {
  switch (format) {
    case SourceFormat::Csv: return "csv";
    case SourceFormat::Tsv: return "tsv";
    case SourceFormat::JsonLines: return "json-lines";
  }
  return "?";
}

namespace {

[[noreturn]] void manifest_error(const std::string& name, const std::string& what) {
  throw Error(ErrorCode::MalformedManifest,
              fmt::format("manifest '{}': {}", name.empty() ? "<unnamed>" : name, what));
}

[[noreturn]] void row_error(const DatasetManifest& m, size_t row, const std::string& reason) {
  throw Error(ErrorCode::MalformedRow, fmt::format("{}: row {}: {}", m.name, row, reason));
}

std::string row_id(std::string_view dataset, size_t index) {
  return fmt::format("{}-{:06d}", dataset, index);
}

const std::set<std::string>& manifest_keys() {
  static const std::set<std::string> keys = {
      "name", "task", "source_path", "format", "field_mapping",
      "label_vocabulary", "expected_count", "split"};
  return keys;
}

std::vector<std::string> required_fields(TaskKind task) {
  switch (task) {
    case TaskKind::HC: {
      std::vector<std::string> f = {"text"};
      for (size_t q = 0; q < kHeadlineQuestionCount; ++q) f.push_back(fmt::format("q{}", q));
      return f;
    }
    case TaskKind::NER: return {"text", "entities"};
    case TaskKind::RE: return {"text", "relations"};
    default: return {"text", "label"};
  }
}

// A source row with uniform access regardless of the file format.
class RowView {
 public:
  RowView(const DatasetManifest& m, size_t index) : manifest_(m), index_(index) {}
  virtual ~RowView() = default;

  size_t index() const { return index_; }

  // Looks up the semantic field through the manifest's mapping.
  std::optional<json> field(const std::string& semantic) const {
    auto it = manifest_.field_mapping.find(semantic);
    if (it == manifest_.field_mapping.end()) return std::nullopt;
    return column(it->second);
  }

  std::string string_field(const std::string& semantic) const {
    auto v = field(semantic);
    if (!v || v->is_null()) row_error(manifest_, index_, fmt::format("missing field '{}'", semantic));
    return scalar_to_string(*v, semantic);
  }

  std::string scalar_to_string(const json& v, const std::string& what) const {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<int64_t>());
    if (v.is_number()) return fmt::format("{}", v.get<double>());
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    row_error(manifest_, index_, fmt::format("field '{}' is not a scalar", what));
  }

  virtual std::optional<json> column(const std::string& name) const = 0;

 protected:
  const DatasetManifest& manifest_;
  size_t index_;
};

class TableRow : public RowView {
 public:
  TableRow(const DatasetManifest& m, size_t index, const io::Table& table,
           const std::vector<std::string>& cells)
      : RowView(m, index), table_(table), cells_(cells) {}

  std::optional<json> column(const std::string& name) const override {
    auto it = std::find(table_.header.begin(), table_.header.end(), name);
    if (it == table_.header.end()) return std::nullopt;
    size_t c = static_cast<size_t>(it - table_.header.begin());
    if (c >= cells_.size()) return std::nullopt;
    return json(cells_[c]);
  }

 private:
  const io::Table& table_;
  const std::vector<std::string>& cells_;
};

class JsonRow : public RowView {
 public:
  JsonRow(const DatasetManifest& m, size_t index, const json& object)
      : RowView(m, index), object_(object) {}

  std::optional<json> column(const std::string& name) const override {
    auto it = object_.find(name);
    if (it == object_.end()) return std::nullopt;
    return std::optional<json>(std::in_place, *it);
  }

 private:
  const json& object_;
};

std::string match_label(const DatasetManifest& m, size_t row, std::string_view raw) {
  std::string label = text::normalize_whitespace(raw);
  for (const auto& v : m.label_vocabulary) {
    if (text::iequals(v, label)) return v;
  }
  throw Error(ErrorCode::UnknownLabel,
              fmt::format("{}: row {}: label '{}' not in vocabulary", m.name, row, label));
}

std::string normalized_text(const RowView& row, const DatasetManifest& m) {
  std::string t = text::normalize_whitespace(row.string_field("text"));
  if (t.empty()) row_error(m, row.index(), "empty text");
  return t;
}

// Entity-type / relation inventories are optional for the generation tasks;
// when declared they are enforced.
std::string check_inventory(const DatasetManifest& m, size_t row, const std::string& value) {
  if (m.label_vocabulary.empty()) return value;
  return match_label(m, row, value);
}

Entities parse_entities_cell(const DatasetManifest& m, const RowView& row, const json& cell) {
  Entities out;
  auto add = [&](std::string surface, std::string type) {
    surface = text::normalize_whitespace(surface);
    type = text::normalize_whitespace(type);
    if (surface.empty() || type.empty()) row_error(m, row.index(), "entity with empty surface or type");
    out.push_back({std::move(surface), check_inventory(m, row.index(), type)});
  };
  if (cell.is_string()) {
    std::string s = text::normalize_whitespace(cell.get<std::string>());
    if (s.empty() || text::iequals(s, "none")) return out;
    for (const auto& entry : text::split(s, "; ")) {
      size_t pos = entry.rfind(", ");
      if (pos == std::string::npos) row_error(m, row.index(), fmt::format("bad entity entry '{}'", entry));
      add(entry.substr(0, pos), entry.substr(pos + 2));
    }
    return out;
  }
  if (!cell.is_array()) row_error(m, row.index(), "entities must be an array or a string");
  for (const auto& e : cell) {
    if (e.is_array() && e.size() == 2 && e[0].is_string() && e[1].is_string()) {
      add(e[0].get<std::string>(), e[1].get<std::string>());
    } else if (e.is_object() && e.contains("surface") && e.contains("type")) {
      add(e.at("surface").get<std::string>(), e.at("type").get<std::string>());
    } else {
      row_error(m, row.index(), fmt::format("bad entity {}", e.dump()));
    }
  }
  return out;
}

Relations parse_relations_cell(const DatasetManifest& m, const RowView& row, const json& cell) {
  Relations out;
  auto add = [&](std::string rel, std::string subj, std::string obj) {
    rel = text::normalize_whitespace(rel);
    subj = text::normalize_whitespace(subj);
    obj = text::normalize_whitespace(obj);
    if (rel.empty() || subj.empty() || obj.empty()) row_error(m, row.index(), "relation with empty part");
    out.push_back({check_inventory(m, row.index(), rel), std::move(subj), std::move(obj)});
  };
  if (cell.is_string()) {
    std::string s = text::normalize_whitespace(cell.get<std::string>());
    if (s.empty() || text::iequals(s, "none")) return out;
    for (const auto& entry : text::split(s, "; ")) {
      size_t colon = entry.find(": ");
      size_t comma = entry.rfind(", ");
      if (colon == std::string::npos || comma == std::string::npos || comma < colon) {
        row_error(m, row.index(), fmt::format("bad relation entry '{}'", entry));
      }
      add(entry.substr(0, colon), entry.substr(colon + 2, comma - colon - 2), entry.substr(comma + 2));
    }
    return out;
  }
  if (!cell.is_array()) row_error(m, row.index(), "relations must be an array or a string");
  for (const auto& r : cell) {
    if (r.is_array() && r.size() == 3 && r[0].is_string() && r[1].is_string() && r[2].is_string()) {
      add(r[0].get<std::string>(), r[1].get<std::string>(), r[2].get<std::string>());
    } else if (r.is_object() && r.contains("relation") && r.contains("subject") && r.contains("object")) {
      add(r.at("relation").get<std::string>(), r.at("subject").get<std::string>(),
          r.at("object").get<std::string>());
    } else {
      row_error(m, row.index(), fmt::format("bad relation {}", r.dump()));
    }
  }
  return out;
}

// Rows whose entire source line fails UTF-8 decoding are reported by the
// nearest 0-based data row.
void check_utf8(const DatasetManifest& m, std::string_view contents, bool has_header) {
  if (text::is_valid_utf8(contents)) return;
  size_t line = 0;
  size_t start = 0;
  while (start < contents.size()) {
    size_t end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    if (!text::is_valid_utf8(contents.substr(start, end - start))) {
      size_t row = (has_header && line > 0) ? line - 1 : line;
      row_error(m, row, "invalid UTF-8");
    }
    ++line;
    start = end + 1;
  }
  row_error(m, 0, "invalid UTF-8");
}

std::vector<Split> assign_splits(const DatasetManifest& m, const std::vector<std::unique_ptr<RowView>>& rows) {
  std::vector<Split> splits(rows.size(), Split::Train);
  if (m.split.column) {
    for (size_t i = 0; i < rows.size(); ++i) {
      auto v = rows[i]->column(*m.split.column);
      if (!v || !v->is_string()) row_error(m, i, fmt::format("missing split column '{}'", *m.split.column));
      std::string s = text::casefold(text::trim(v->get<std::string>()));
      if (s == "train") splits[i] = Split::Train;
      else if (s == "test") splits[i] = Split::Test;
      else row_error(m, i, fmt::format("split value '{}' is neither train nor test", s));
    }
    return splits;
  }
  std::vector<size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  rng::Rng gen(rng::derive_seed(m.split.seed, "split", m.name));
  gen.shuffle(std::span<size_t>(order));
  auto n_test = static_cast<size_t>(std::llround(m.split.test_fraction * static_cast<double>(rows.size())));
  for (size_t k = 0; k < n_test && k < order.size(); ++k) splits[order[k]] = Split::Test;
  return splits;
}

std::string normalize_yes_no(const DatasetManifest& m, size_t row, size_t q, const std::string& raw,
                             std::string_view yes, std::string_view no) {
  std::string v = text::casefold(text::trim(raw));
  if (v == "1" || v == "yes" || v == "y" || v == "true" || v == "1.0") return std::string(yes);
  if (v == "0" || v == "no" || v == "n" || v == "false" || v == "0.0") return std::string(no);
  row_error(m, row, fmt::format("question {} answer '{}' is not binary", q, raw));
}

}  // namespace

DatasetManifest parse_manifest(const json& object, const fs::path& base_dir) {
  std::string name = object.is_object() && object.contains("name") && object["name"].is_string()
                         ? object["name"].get<std::string>()
                         : std::string();
  if (!object.is_object()) manifest_error(name, "expected a JSON object");
  for (const auto& [key, _] : object.items()) {
    if (!manifest_keys().count(key)) manifest_error(name, fmt::format("unknown key '{}'", key));
  }
  for (const char* key : {"name", "task", "source_path", "format", "field_mapping", "label_vocabulary"}) {
    if (!object.contains(key)) manifest_error(name, fmt::format("missing key '{}'", key));
  }
  DatasetManifest m;
  try {
    m.name = object.at("name").get<std::string>();
    if (m.name.empty()) manifest_error(name, "empty name");
    auto task = try_parse_task(object.at("task").get<std::string>());
    if (!task) manifest_error(name, fmt::format("unknown task '{}'", object.at("task").get<std::string>()));
    m.task = *task;
    fs::path src = object.at("source_path").get<std::string>();
    m.source_path = (src.is_relative() && !base_dir.empty()) ? base_dir / src : src;
    std::string format = object.at("format").get<std::string>();
    if (format == "csv") m.format = SourceFormat::Csv;
    else if (format == "tsv") m.format = SourceFormat::Tsv;
    else if (format == "json-lines") m.format = SourceFormat::JsonLines;
    else manifest_error(name, fmt::format("unknown format '{}'", format));
    m.field_mapping = object.at("field_mapping").get<std::map<std::string, std::string>>();
    m.label_vocabulary = object.at("label_vocabulary").get<std::vector<std::string>>();
    if (object.contains("expected_count") && !object["expected_count"].is_null()) {
      auto c = object["expected_count"].get<int64_t>();
      if (c < 0) manifest_error(name, "expected_count must be nonnegative");
      m.expected_count = static_cast<size_t>(c);
    }
    if (object.contains("split") && !object["split"].is_null()) {
      const auto& s = object["split"];
      if (!s.is_object()) manifest_error(name, "split must be an object or null");
      for (const auto& [key, _] : s.items()) {
        if (key != "test_fraction" && key != "seed" && key != "column") {
          manifest_error(name, fmt::format("unknown split key '{}'", key));
        }
      }
      if (s.contains("test_fraction")) m.split.test_fraction = s["test_fraction"].get<double>();
      if (s.contains("seed")) m.split.seed = s["seed"].get<uint64_t>();
      if (s.contains("column")) m.split.column = s["column"].get<std::string>();
      if (!(m.split.test_fraction >= 0.0 && m.split.test_fraction <= 1.0)) {
        manifest_error(name, "test_fraction must lie in [0, 1]");
      }
    }
  } catch (const json::exception& e) {
    manifest_error(name, e.what());
  }

  if (is_classification(m.task) && m.label_vocabulary.empty()) {
    manifest_error(m.name, "classification tasks need a label_vocabulary");
  }
  std::set<std::string> folded;
  for (const auto& label : m.label_vocabulary) {
    if (text::trim(label).empty()) manifest_error(m.name, "empty label in vocabulary");
    if (label.find('/') != std::string::npos || label.find('\n') != std::string::npos) {
      manifest_error(m.name, fmt::format("label '{}' contains '/' or a newline", label));
    }
    if (!folded.insert(text::casefold(label)).second) {
      manifest_error(m.name, fmt::format("duplicate label '{}'", label));
    }
  }
  for (const auto& field : required_fields(m.task)) {
    if (!m.field_mapping.count(field)) {
      manifest_error(m.name, fmt::format("field_mapping lacks '{}'", field));
    }
  }
  if (m.task == TaskKind::HC) {
    bool has_yes = false, has_no = false;
    for (const auto& label : m.label_vocabulary) {
      has_yes |= text::iequals(label, "yes");
      has_no |= text::iequals(label, "no");
    }
    if (!has_yes || !has_no || m.label_vocabulary.size() != 2) {
      manifest_error(m.name, "HC vocabulary must be exactly {Yes, No}");
    }
  }
  return m;
}

json manifest_to_json(const DatasetManifest& m) {
  json split = json::object();
  if (m.split.column) {
    split["column"] = *m.split.column;
  } else {
    split["test_fraction"] = m.split.test_fraction;
    split["seed"] = m.split.seed;
  }
  return json{{"name", m.name},
              {"task", to_string(m.task)},
              {"source_path", m.source_path.string()},
              {"format", to_string(m.format)},
              {"field_mapping", m.field_mapping},
              {"label_vocabulary", m.label_vocabulary},
              {"expected_count", m.expected_count ? json(*m.expected_count) : json(nullptr)},
              {"split", split}};
}

std::vector<DatasetManifest> read_manifest_file(const fs::path& path) {
  json doc = io::read_json(path);
  fs::path base = path.parent_path();
  std::vector<DatasetManifest> out;
  if (doc.is_array()) {
    for (const auto& object : doc) out.push_back(parse_manifest(object, base));
  } else {
    out.push_back(parse_manifest(doc, base));
  }
  std::set<std::string> names;
  for (const auto& m : out) {
    if (!names.insert(m.name).second) manifest_error(m.name, "duplicate dataset name");
  }
  return out;
}

std::vector<Sample> load_dataset(const DatasetManifest& m) {
  for (const auto& field : required_fields(m.task)) {
    if (!m.field_mapping.count(field)) manifest_error(m.name, fmt::format("field_mapping lacks '{}'", field));
  }
  const std::string contents = io::read_file(m.source_path);
  check_utf8(m, contents, m.format != SourceFormat::JsonLines);

  io::Table table;
  std::vector<json> json_rows;
  std::vector<std::unique_ptr<RowView>> rows;
  if (m.format == SourceFormat::JsonLines) {
    json_rows = io::parse_jsonl(contents, m.source_path.string());
    for (size_t i = 0; i < json_rows.size(); ++i) {
      if (!json_rows[i].is_object()) row_error(m, i, "not a JSON object");
      rows.push_back(std::make_unique<JsonRow>(m, i, json_rows[i]));
    }
  } else {
    table = m.format == SourceFormat::Csv ? io::parse_csv(contents) : io::parse_tsv(contents);
    for (const auto& [semantic, column] : m.field_mapping) {
      if (!table.header.empty() &&
          std::find(table.header.begin(), table.header.end(), column) == table.header.end()) {
        manifest_error(m.name, fmt::format("column '{}' (for '{}') absent from header", column, semantic));
      }
    }
    for (size_t i = 0; i < table.rows.size(); ++i) {
      if (table.rows[i].size() != table.header.size()) {
        row_error(m, i, fmt::format("expected {} columns, found {}", table.header.size(), table.rows[i].size()));
      }
      rows.push_back(std::make_unique<TableRow>(m, i, table, table.rows[i]));
    }
  }

  const std::vector<Split> splits = assign_splits(m, rows);
  std::vector<Sample> samples;

  if (m.task == TaskKind::HC) {
    std::vector<HeadlineRow> raw;
    raw.reserve(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      HeadlineRow h;
      h.row_index = i;
      h.headline = normalized_text(*rows[i], m);
      for (size_t q = 0; q < kHeadlineQuestionCount; ++q) {
        auto cell = rows[i]->field(fmt::format("q{}", q));
        if (cell && !cell->is_null()) {
          std::string s = rows[i]->scalar_to_string(*cell, fmt::format("q{}", q));
          if (!text::trim(s).empty()) h.answers[q] = std::move(s);
        }
      }
      h.meta[kMetaSplit] = std::string(to_string(splits[i]));
      raw.push_back(std::move(h));
    }
    std::string yes = "Yes", no = "No";
    for (const auto& label : m.label_vocabulary) {
      if (text::iequals(label, "yes")) yes = label;
      if (text::iequals(label, "no")) no = label;
    }
    samples = expand_headline(m.name, raw, yes, no);
  } else {
    samples.reserve(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      const RowView& row = *rows[i];
      Sample s;
      s.id = row_id(m.name, i);
      s.dataset = m.name;
      s.task = m.task;
      s.input_text = normalized_text(row, m);
      if (m.task == TaskKind::NER) {
        auto cell = row.field("entities");
        s.gold = cell && !cell->is_null() ? parse_entities_cell(m, row, *cell) : Entities{};
      } else if (m.task == TaskKind::RE) {
        auto cell = row.field("relations");
        s.gold = cell && !cell->is_null() ? parse_relations_cell(m, row, *cell) : Relations{};
      } else {
        s.gold = Label{match_label(m, i, row.string_field("label"))};
      }
      s.meta[kMetaSplit] = std::string(to_string(splits[i]));
      s.meta[kMetaSourceRow] = std::to_string(i);
      samples.push_back(std::move(s));
    }
  }

  if (m.expected_count && *m.expected_count != samples.size()) {
    throw Error(ErrorCode::CountMismatch,
                fmt::format("{}: expected {} samples, loaded {}", m.name, *m.expected_count, samples.size()));
  }
  return samples;
}

std::vector<Sample> expand_headline(std::string_view dataset, std::span<const HeadlineRow> rows,
                                    std::string_view yes_label, std::string_view no_label) {
  DatasetManifest context;
  context.name = std::string(dataset);
  std::vector<Sample> out;
  out.reserve(rows.size() * kHeadlineQuestionCount);
  for (const auto& row : rows) {
    for (size_t q = 0; q < kHeadlineQuestionCount; ++q) {
      if (!row.answers[q] || text::trim(*row.answers[q]).empty()) {
        throw Error(ErrorCode::MissingQuestionAnswer,
                    fmt::format("{}: row {}: no answer for question {}", dataset, row.row_index, q));
      }
      Sample s;
      s.id = fmt::format("{}-q{}", row_id(dataset, row.row_index), q);
      s.dataset = std::string(dataset);
      s.task = TaskKind::HC;
      s.input_text = fmt::format("{}\nQuestion: {}", row.headline, kHeadlineQuestions[q]);
      s.gold = Label{normalize_yes_no(context, row.row_index, q, *row.answers[q], yes_label, no_label)};
      s.meta = row.meta;
      s.meta[kMetaQuestionIndex] = std::to_string(q);
      s.meta[kMetaSourceRow] = std::to_string(row.row_index);
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::string ner_cls_input(std::string_view sentence, std::string_view surface) {
  return fmt::format("{}\nEntity: {}", sentence, surface);
}

std::string re_cls_input(std::string_view sentence, std::string_view subject, std::string_view object) {
  return fmt::format("{}\nSubject: {} Object: {}", sentence, subject, object);
}

namespace {

Sample derived_from(const Sample& src, std::string id, std::string dataset, TaskKind task,
                    std::string input, std::string label) {
  Sample d;
  d.id = std::move(id);
  d.dataset = std::move(dataset);
  d.task = task;
  d.input_text = std::move(input);
  d.gold = Label{std::move(label)};
  if (auto it = src.meta.find(kMetaSplit); it != src.meta.end()) d.meta[kMetaSplit] = it->second;
  d.meta[kMetaSourceSampleId] = src.id;
  return d;
}

}  // namespace

std::vector<Sample> derive_ner_cls(std::span<const Sample> ner_samples) {
  std::vector<Sample> out;
  for (const auto& s : ner_samples) {
    if (s.task != TaskKind::NER) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("derive_ner_cls: sample {} is not NER", s.id));
    }
    const auto& entities = std::get<Entities>(s.gold);
    for (size_t k = 0; k < entities.size(); ++k) {
      out.push_back(derived_from(s, fmt::format("{}-e{}", s.id, k), kNerClsDataset, TaskKind::NER_CLS,
                                 ner_cls_input(s.input_text, entities[k].surface), entities[k].entity_type));
    }
  }
  return out;
}

std::vector<Sample> derive_re_cls(std::span<const Sample> re_samples) {
  std::vector<Sample> out;
  for (const auto& s : re_samples) {
    if (s.task != TaskKind::RE) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("derive_re_cls: sample {} is not RE", s.id));
    }
    const auto& relations = std::get<Relations>(s.gold);
    for (size_t k = 0; k < relations.size(); ++k) {
      const auto& r = relations[k];
      out.push_back(derived_from(s, fmt::format("{}-r{}", s.id, k), kReClsDataset, TaskKind::RE_CLS,
                                 re_cls_input(s.input_text, r.subject, r.object), r.relation));
    }
  }
  return out;
}

const std::map<std::string, size_t>& reference_counts() {
  static const std::map<std::string, size_t> counts = {
      {"FPB", 3634},   {"FiQA-SA", 938},        {"TFNS", 9543},
      {"NWGI", 16184}, {"NER", 609},            {"Headline", 11412 * 9},
      {"FinRED", 6768}, {kNerClsDataset, 1003}, {kReClsDataset, 9657},
  };
  return counts;
}

CountReport validate_counts(const std::map<std::string, std::vector<Sample>>& samples_by_dataset,
                            const std::map<std::string, size_t>& overrides) {
  CountReport report;
  for (const auto& [name, samples] : samples_by_dataset) {
    CountEntry entry;
    entry.actual = samples.size();
    if (auto it = overrides.find(name); it != overrides.end()) {
      entry.expected = it->second;
    } else if (auto ref = reference_counts().find(name); ref != reference_counts().end()) {
      entry.expected = ref->second;
    }
    entry.pass = !entry.expected || *entry.expected == entry.actual;
    report.pass = report.pass && entry.pass;
    report.entries.emplace(name, entry);
  }
  return report;
}

json count_report_to_json(const CountReport& report) {
  json entries = json::object();
  for (const auto& [name, e] : report.entries) {
    entries[name] = {{"expected", e.expected ? json(*e.expected) : json(nullptr)},
                     {"actual", e.actual},
                     {"pass", e.pass}};
  }
  return json{{"pass", report.pass}, {"datasets", entries}};
}

namespace {

std::vector<std::string> observed_labels(const std::vector<Sample>& samples) {
  std::set<std::string> labels;
  for (const auto& s : samples) labels.insert(std::get<Label>(s.gold).value);
  return {labels.begin(), labels.end()};
}

}  // namespace

std::vector<Dataset> ingest(std::span<const DatasetManifest> manifests) {
  std::vector<Dataset> out;
  std::vector<Sample> ner_all, re_all;
  std::vector<std::string> ner_inventory, re_inventory;
  for (const auto& m : manifests) {
    Dataset d{m.name, m.task, m.label_vocabulary, load_dataset(m)};
    if (m.task == TaskKind::NER) {
      ner_all.insert(ner_all.end(), d.samples.begin(), d.samples.end());
      for (const auto& t : m.label_vocabulary) {
        if (std::find(ner_inventory.begin(), ner_inventory.end(), t) == ner_inventory.end()) ner_inventory.push_back(t);
      }
    } else if (m.task == TaskKind::RE) {
      re_all.insert(re_all.end(), d.samples.begin(), d.samples.end());
      for (const auto& t : m.label_vocabulary) {
        if (std::find(re_inventory.begin(), re_inventory.end(), t) == re_inventory.end()) re_inventory.push_back(t);
      }
    }
    out.push_back(std::move(d));
  }
  auto add_derived = [&](const std::vector<Sample>& src, const char* name, TaskKind task,
                         auto derive, const std::vector<std::string>& inventory) {
    bool exists = std::any_of(out.begin(), out.end(), [&](const Dataset& d) { return d.name == name; });
    if (src.empty() || exists) return;
    Dataset d{name, task, {}, derive(std::span<const Sample>(src))};
    d.vocabulary = inventory.empty() ? observed_labels(d.samples) : inventory;
    out.push_back(std::move(d));
  };
  add_derived(ner_all, kNerClsDataset, TaskKind::NER_CLS, derive_ner_cls, ner_inventory);
  add_derived(re_all, kReClsDataset, TaskKind::RE_CLS, derive_re_cls, re_inventory);
  return out;
}

json sample_to_json(const Sample& s) {
  json gold;
  if (const auto* label = std::get_if<Label>(&s.gold)) {
    gold = {{"label", label->value}};
  } else if (const auto* entities = std::get_if<Entities>(&s.gold)) {
    json arr = json::array();
    for (const auto& e : *entities) arr.push_back({{"surface", e.surface}, {"type", e.entity_type}});
    gold = {{"entities", arr}};
  } else {
    json arr = json::array();
    for (const auto& r : std::get<Relations>(s.gold)) {
      arr.push_back({{"relation", r.relation}, {"subject", r.subject}, {"object", r.object}});
    }
    gold = {{"relations", arr}};
  }
  return json{{"id", s.id},       {"dataset", s.dataset}, {"task", to_string(s.task)},
              {"input", s.input_text}, {"gold", gold},       {"meta", s.meta}};
}

Sample sample_from_json(const json& row) {
  try {
    Sample s;
    s.id = row.at("id").get<std::string>();
    s.dataset = row.at("dataset").get<std::string>();
    s.task = parse_task(row.at("task").get<std::string>());
    s.input_text = row.at("input").get<std::string>();
    const json& gold = row.at("gold");
    if (gold.contains("label")) {
      s.gold = Label{gold.at("label").get<std::string>()};
    } else if (gold.contains("entities")) {
      Entities entities;
      for (const auto& e : gold.at("entities")) {
        entities.push_back({e.at("surface").get<std::string>(), e.at("type").get<std::string>()});
      }
      s.gold = std::move(entities);
    } else if (gold.contains("relations")) {
      Relations relations;
      for (const auto& r : gold.at("relations")) {
        relations.push_back({r.at("relation").get<std::string>(), r.at("subject").get<std::string>(),
                             r.at("object").get<std::string>()});
      }
      s.gold = std::move(relations);
    } else {
      throw Error(ErrorCode::MalformedRow, fmt::format("sample {}: gold has no known variant", s.id));
    }
    bool label_shaped = std::holds_alternative<Label>(s.gold);
    if (label_shaped != is_classification(s.task)) {
      throw Error(ErrorCode::MalformedRow, fmt::format("sample {}: gold does not match task", s.id));
    }
    s.meta = row.value("meta", json::object()).get<std::map<std::string, std::string>>();
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRow, fmt::format("bad sample row: {}", e.what()));
  }
}

void write_sample_store(const fs::path& path, std::span<const Sample> samples) {
  std::string out;
  for (const auto& s : samples) {
    out += sample_to_json(s).dump();
    out += '\n';
  }
  io::write_file_atomic(path, out);
}

std::vector<Sample> read_sample_store(const fs::path& path) {
  std::vector<Sample> out;
  for (const auto& row : io::read_jsonl(path)) out.push_back(sample_from_json(row));
  return out;
}

void write_datasets(const fs::path& samples_dir, std::span<const Dataset> datasets) {
  json index = json::array();
  for (const auto& d : datasets) {
    std::string file = d.name + ".jsonl";
    write_sample_store(samples_dir / file, d.samples);
    index.push_back({{"name", d.name},
                     {"task", to_string(d.task)},
                     {"vocabulary", d.vocabulary},
                     {"count", d.samples.size()},
                     {"file", file}});
  }
  io::write_file_atomic(samples_dir / "index.json", io::dump_json(json{{"datasets", index}}));
}

std::vector<Dataset> read_datasets(const fs::path& samples_dir) {
  json index = io::read_json(samples_dir / "index.json");
  std::vector<Dataset> out;
  for (const auto& entry : index.at("datasets")) {
    Dataset d;
    d.name = entry.at("name").get<std::string>();
    d.task = parse_task(entry.at("task").get<std::string>());
    d.vocabulary = entry.at("vocabulary").get<std::vector<std::string>>();
    d.samples = read_sample_store(samples_dir / entry.at("file").get<std::string>());
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace finbench::corpus
