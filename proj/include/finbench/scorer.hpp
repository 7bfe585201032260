#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "finbench/common.hpp"
#include "finbench/corpus.hpp"
#include "finbench/instruct.hpp"

namespace finbench::scorer {

struct Unparsed {
  std::string raw;
  bool operator==(const Unparsed&) const = default;
};

struct ParsedPrediction {
  std::variant<corpus::Label, corpus::Entities, corpus::Relations, Unparsed> value;
  size_t dropped_entries = 0;

  bool is_unparsed() const { return std::holds_alternative<Unparsed>(value); }
};

// Earliest case-insensitive occurrence wins; a tie on position goes to the
// longer option. Decisions depend only on text positions, never list order.
ParsedPrediction parse_classification(std::string_view completion,
                                      std::span<const std::string> options);

// Entries separated by "; ", each split on its last ", ". Surfaces are
// whitespace-normalized, types case-folded, duplicates collapsed.
ParsedPrediction parse_entities(std::string_view completion);

// Entries "relation: subject, object" separated by "; ".
ParsedPrediction parse_relations(std::string_view completion);

// Normal forms used when comparing gold and predicted structures.
corpus::EntityMention normalize(const corpus::EntityMention& e);
std::string normalize_relation_label(std::string_view relation);

struct ClassScore {
  double precision = 0, recall = 0, f1 = 0;
  size_t support = 0;
};

struct MetricReport {
  TaskKind task = TaskKind::SA;
  std::string dataset;
  double precision = 0, recall = 0, f1 = 0;
  size_t support = 0;
  size_t unparsed_count = 0;
  double macro_f1 = 0, micro_f1 = 0;
  size_t dropped_entries = 0;
  std::map<std::string, ClassScore> per_class;  // classification only
};

double f1_from(double precision, double recall);

// f1 is the support-weighted mean of one-vs-rest F1 over the vocabulary;
// precision and recall are weighted the same way. Unparsed predictions and
// labels outside the vocabulary count against the gold class only.
MetricReport score_classification(std::span<const std::string> gold,
                                  std::span<const ParsedPrediction> pred,
                                  std::span<const std::string> vocabulary);

// Corpus-level micro P/R/F1 over exact (surface, type) matches.
MetricReport score_ner(std::span<const corpus::Entities> gold,
                       std::span<const ParsedPrediction> pred);

// Corpus-level micro P/R/F1 over relation labels only; per-sample matching is
// multiset intersection.
MetricReport score_re(std::span<const corpus::Relations> gold,
                      std::span<const ParsedPrediction> pred);

std::vector<instruct::InstructionRecord> filter_neutral(
    std::span<const instruct::InstructionRecord> records);

nlohmann::json report_to_json(const MetricReport& report);
MetricReport report_from_json(const nlohmann::json& object);

// Completion rows {"id", "completion"} joined 1:1 with the eval records.
// Throws ProtocolViolation naming the first missing, duplicate or unknown id.
std::map<std::string, std::string> join_completions(
    std::span<const instruct::InstructionRecord> eval,
    std::span<const nlohmann::json> completion_rows);

// Scores every (task, dataset) group of an eval set. Classification records
// are parsed against their options when present, otherwise against
// `vocabularies[dataset]`, falling back to the sorted set of gold answers.
std::vector<MetricReport> score_eval_set(
    std::span<const instruct::InstructionRecord> eval,
    const std::map<std::string, std::string>& completions,
    const std::map<std::string, std::vector<std::string>>& vocabularies = {});

}  // namespace finbench::scorer
