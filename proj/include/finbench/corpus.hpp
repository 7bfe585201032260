#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "finbench/common.hpp"

namespace finbench::corpus {

struct EntityMention {
  std::string surface;
  std::string entity_type;

  auto operator<=>(const EntityMention&) const = default;
};

struct RelationTriple {
  std::string relation;
  std::string subject;
  std::string object;

  auto operator<=>(const RelationTriple&) const = default;
};

struct Label {
  std::string value;
  auto operator<=>(const Label&) const = default;
};

using Entities = std::vector<EntityMention>;
using Relations = std::vector<RelationTriple>;
using Gold = std::variant<Label, Entities, Relations>;

struct Sample {
  std::string id;
  std::string dataset;
  TaskKind task = TaskKind::SA;
  std::string input_text;
  Gold gold;
  std::map<std::string, std::string> meta;

  bool operator==(const Sample&) const = default;
};

// Meta keys written by the loaders.
inline constexpr const char* kMetaSplit = "split";
inline constexpr const char* kMetaSourceSampleId = "source_sample_id";
inline constexpr const char* kMetaQuestionIndex = "question_index";
inline constexpr const char* kMetaSourceRow = "source_row";

enum class SourceFormat { Csv, Tsv, JsonLines };

std::string_view to_string(SourceFormat format);

// How a dataset is divided into train and test. Either a column carrying
// "train"/"test" per row, or a seeded permutation that routes the first
// round(test_fraction * rows) rows to test.
struct SplitSpec {
  double test_fraction = 0.2;
  uint64_t seed = 0;
  std::optional<std::string> column;
};

struct DatasetManifest {
  std::string name;
  TaskKind task = TaskKind::SA;
  std::filesystem::path source_path;
  SourceFormat format = SourceFormat::Csv;
  std::map<std::string, std::string> field_mapping;  // semantic -> source column
  std::vector<std::string> label_vocabulary;
  std::optional<size_t> expected_count;
  SplitSpec split;
};

// Parses one manifest object. Relative source paths resolve against base_dir.
DatasetManifest parse_manifest(const nlohmann::json& object,
                               const std::filesystem::path& base_dir = {});
nlohmann::json manifest_to_json(const DatasetManifest& manifest);

// A manifest file holds one object per dataset (a JSON array, or a single
// object).
std::vector<DatasetManifest> read_manifest_file(const std::filesystem::path& path);

std::vector<Sample> load_dataset(const DatasetManifest& manifest);

inline constexpr size_t kHeadlineQuestionCount = 9;
extern const std::array<std::string_view, kHeadlineQuestionCount> kHeadlineQuestions;

struct HeadlineRow {
  size_t row_index = 0;
  std::string headline;
  // Raw cell per question; nullopt or blank means the answer is missing.
  std::array<std::optional<std::string>, kHeadlineQuestionCount> answers;
  std::map<std::string, std::string> meta;
};

// Nine HC samples per row. yes_label/no_label set the canonical spelling.
std::vector<Sample> expand_headline(std::string_view dataset,
                                    std::span<const HeadlineRow> rows,
                                    std::string_view yes_label = "Yes",
                                    std::string_view no_label = "No");

inline constexpr const char* kNerClsDataset = "NER_CLS";
inline constexpr const char* kReClsDataset = "RE_CLS";

std::vector<Sample> derive_ner_cls(std::span<const Sample> ner_samples);
std::vector<Sample> derive_re_cls(std::span<const Sample> re_samples);

// Canonical rendering of the classification inputs derived from NER and RE.
std::string ner_cls_input(std::string_view sentence, std::string_view surface);
std::string re_cls_input(std::string_view sentence, std::string_view subject,
                         std::string_view object);

struct CountEntry {
  std::optional<size_t> expected;
  size_t actual = 0;
  bool pass = true;
};

struct CountReport {
  std::map<std::string, CountEntry> entries;
  bool pass = true;
};

const std::map<std::string, size_t>& reference_counts();

// Expected values come from `overrides` first, then reference_counts().
// Datasets with neither are reported without an expectation and pass.
CountReport validate_counts(const std::map<std::string, std::vector<Sample>>& samples_by_dataset,
                            const std::map<std::string, size_t>& overrides = {});

nlohmann::json count_report_to_json(const CountReport& report);

// A loaded dataset plus what downstream stages need to know about it.
struct Dataset {
  std::string name;
  TaskKind task = TaskKind::SA;
  std::vector<std::string> vocabulary;
  std::vector<Sample> samples;
};

// Loads every manifest and appends the NER_CLS / RE_CLS derivations. The
// derived vocabulary is the source manifest's inventory when declared,
// otherwise the sorted set of observed types.
std::vector<Dataset> ingest(std::span<const DatasetManifest> manifests);

nlohmann::json sample_to_json(const Sample& sample);
Sample sample_from_json(const nlohmann::json& row);

void write_sample_store(const std::filesystem::path& path, std::span<const Sample> samples);
std::vector<Sample> read_sample_store(const std::filesystem::path& path);

// work_dir/samples/{dataset}.jsonl plus index.json describing each dataset.
void write_datasets(const std::filesystem::path& samples_dir, std::span<const Dataset> datasets);
std::vector<Dataset> read_datasets(const std::filesystem::path& samples_dir);

}  // namespace finbench::corpus
