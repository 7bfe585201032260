#include "finbench/scorer.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "finbench/text.hpp"

namespace finbench::scorer {

using corpus::Entities;
using corpus::EntityMention;
using corpus::Label;
using corpus::Relations;
using corpus::RelationTriple;
using nlohmann::json;

ParsedPrediction parse_classification(std::string_view completion,
                                      std::span<const std::string> options) {
  const std::string haystack = text::casefold(completion);
  const std::string* best = nullptr;
  size_t best_pos = std::string::npos;
  for (const auto& option : options) {
    if (option.empty()) continue;
    size_t pos = haystack.find(text::casefold(option));
    if (pos == std::string::npos) continue;
    if (pos < best_pos || (pos == best_pos && option.size() > best->size())) {
      best = &option;
      best_pos = pos;
    }
  }
  if (!best) return {Unparsed{std::string(completion)}, 0};
  return {Label{*best}, 0};
}

EntityMention normalize(const EntityMention& e) {
  return {text::normalize_whitespace(e.surface), text::casefold(text::normalize_whitespace(e.entity_type))};
}

std::string normalize_relation_label(std::string_view relation) {
  return text::casefold(text::normalize_whitespace(relation));
}

namespace {

// Empty output and the sentinel both mean "no structures".
bool is_empty_answer(std::string_view trimmed) {
  return trimmed.empty() || text::iequals(trimmed, "none");
}

}  // namespace

ParsedPrediction parse_entities(std::string_view completion) {
  ParsedPrediction out{Entities{}, 0};
  auto& entities = std::get<Entities>(out.value);
  const std::string_view trimmed = text::trim(completion);
  if (is_empty_answer(trimmed)) return out;
  std::set<EntityMention> seen;
  for (const auto& entry : text::split(trimmed, "; ")) {
    size_t pos = entry.rfind(", ");
    if (pos == std::string::npos) {
      ++out.dropped_entries;
      continue;
    }
    EntityMention e = normalize({entry.substr(0, pos), entry.substr(pos + 2)});
    if (e.surface.empty() || e.entity_type.empty()) {
      ++out.dropped_entries;
      continue;
    }
    if (seen.insert(e).second) entities.push_back(std::move(e));
  }
  return out;
}

ParsedPrediction parse_relations(std::string_view completion) {
  ParsedPrediction out{Relations{}, 0};
  auto& relations = std::get<Relations>(out.value);
  const std::string_view trimmed = text::trim(completion);
  if (is_empty_answer(trimmed)) return out;
  for (const auto& entry : text::split(trimmed, "; ")) {
    size_t colon = entry.find(": ");
    size_t comma = entry.rfind(", ");
    if (colon == std::string::npos || comma == std::string::npos || comma <= colon) {
      ++out.dropped_entries;
      continue;
    }
    RelationTriple r{text::normalize_whitespace(entry.substr(0, colon)),
                     text::normalize_whitespace(entry.substr(colon + 2, comma - colon - 2)),
                     text::normalize_whitespace(entry.substr(comma + 2))};
    if (r.relation.empty() || r.subject.empty() || r.object.empty()) {
      ++out.dropped_entries;
      continue;
    }
    relations.push_back(std::move(r));
  }
  return out;
}

double f1_from(double precision, double recall) {
  return precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
}

namespace {

double ratio(size_t num, size_t den) {
  return den ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

void check_lengths(size_t gold, size_t pred) {
  if (gold != pred) {
    throw Error(ErrorCode::LengthMismatch,
                fmt::format("{} gold items but {} predictions", gold, pred));
  }
}

// A completion that produced no structure while dropping entries is treated
// as unparsed for reporting.
bool counts_as_unparsed(const ParsedPrediction& p, size_t produced) {
  return p.is_unparsed() || (produced == 0 && p.dropped_entries > 0);
}

MetricReport micro_report(TaskKind task, size_t tp, size_t pred_total, size_t gold_total) {
  MetricReport r;
  r.task = task;
  r.precision = ratio(tp, pred_total);
  r.recall = ratio(tp, gold_total);
  r.f1 = tp ? f1_from(r.precision, r.recall) : 0.0;
  r.micro_f1 = r.f1;
  r.macro_f1 = r.f1;
  r.support = gold_total;
  return r;
}

}  // namespace

MetricReport score_classification(std::span<const std::string> gold,
                                  std::span<const ParsedPrediction> pred,
                                  std::span<const std::string> vocabulary) {
  check_lengths(gold.size(), pred.size());
  std::map<std::string, size_t> index;
  for (size_t c = 0; c < vocabulary.size(); ++c) index.emplace(vocabulary[c], c);

  const size_t k = vocabulary.size();
  std::vector<size_t> tp(k, 0), fp(k, 0), fn(k, 0), support(k, 0);
  MetricReport report;
  report.task = TaskKind::SA;
  size_t parsed_in_vocab = 0;
  for (size_t i = 0; i < gold.size(); ++i) {
    auto g = index.find(gold[i]);
    if (g == index.end()) {
      throw Error(ErrorCode::UnknownLabel, fmt::format("gold label '{}' not in vocabulary", gold[i]));
    }
    const size_t gc = g->second;
    ++support[gc];
    if (pred[i].is_unparsed()) {
      ++report.unparsed_count;
      ++fn[gc];
      continue;
    }
    const auto* label = std::get_if<Label>(&pred[i].value);
    auto p = label ? index.find(label->value) : index.end();
    if (p == index.end()) {
      ++fn[gc];
      continue;
    }
    ++parsed_in_vocab;
    if (p->second == gc) {
      ++tp[gc];
    } else {
      ++fp[p->second];
      ++fn[gc];
    }
  }

  const size_t n = gold.size();
  double macro_sum = 0;
  size_t macro_classes = 0;
  size_t tp_total = 0;
  for (size_t c = 0; c < k; ++c) {
    ClassScore cs;
    cs.precision = ratio(tp[c], tp[c] + fp[c]);
    cs.recall = ratio(tp[c], tp[c] + fn[c]);
    cs.f1 = f1_from(cs.precision, cs.recall);
    cs.support = support[c];
    report.per_class.emplace(vocabulary[c], cs);
    const double weight = ratio(support[c], n);
    report.precision += weight * cs.precision;
    report.recall += weight * cs.recall;
    report.f1 += weight * cs.f1;
    if (support[c] > 0 || fp[c] > 0) {
      macro_sum += cs.f1;
      ++macro_classes;
    }
    tp_total += tp[c];
  }
  report.macro_f1 = macro_classes ? macro_sum / static_cast<double>(macro_classes) : 0.0;
  report.micro_f1 = f1_from(ratio(tp_total, parsed_in_vocab), ratio(tp_total, n));
  report.support = n;
  return report;
}

MetricReport score_ner(std::span<const Entities> gold, std::span<const ParsedPrediction> pred) {
  check_lengths(gold.size(), pred.size());
  size_t tp = 0, pred_total = 0, gold_total = 0, unparsed = 0, dropped = 0;
  for (size_t i = 0; i < gold.size(); ++i) {
    std::set<EntityMention> g;
    for (const auto& e : gold[i]) g.insert(normalize(e));
    std::set<EntityMention> p;
    if (const auto* entities = std::get_if<Entities>(&pred[i].value)) {
      for (const auto& e : *entities) p.insert(normalize(e));
    }
    if (counts_as_unparsed(pred[i], p.size())) ++unparsed;
    dropped += pred[i].dropped_entries;
    for (const auto& e : p) tp += g.count(e);
    pred_total += p.size();
    gold_total += g.size();
  }
  MetricReport r = micro_report(TaskKind::NER, tp, pred_total, gold_total);
  r.unparsed_count = unparsed;
  r.dropped_entries = dropped;
  return r;
}

MetricReport score_re(std::span<const Relations> gold, std::span<const ParsedPrediction> pred) {
  check_lengths(gold.size(), pred.size());
  size_t tp = 0, pred_total = 0, gold_total = 0, unparsed = 0, dropped = 0;
  for (size_t i = 0; i < gold.size(); ++i) {
    std::map<std::string, size_t> g;
    for (const auto& r : gold[i]) ++g[normalize_relation_label(r.relation)];
    size_t produced = 0;
    if (const auto* relations = std::get_if<Relations>(&pred[i].value)) {
      std::map<std::string, size_t> p;
      for (const auto& r : *relations) ++p[normalize_relation_label(r.relation)];
      for (const auto& [label, count] : p) {
        auto it = g.find(label);
        if (it != g.end()) tp += std::min(count, it->second);
      }
      produced = relations->size();
    }
    if (counts_as_unparsed(pred[i], produced)) ++unparsed;
    dropped += pred[i].dropped_entries;
    pred_total += produced;
    gold_total += gold[i].size();
  }
  MetricReport r = micro_report(TaskKind::RE, tp, pred_total, gold_total);
  r.unparsed_count = unparsed;
  r.dropped_entries = dropped;
  return r;
}

std::vector<instruct::InstructionRecord> filter_neutral(
    std::span<const instruct::InstructionRecord> records) {
  std::vector<instruct::InstructionRecord> out;
  for (const auto& r : records) {
    if (r.task != TaskKind::SA) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("filter_neutral: record {} is {} not SA", r.id, to_string(r.task)));
    }
    if (text::casefold(text::trim(r.answer)) != "neutral") out.push_back(r);
  }
  return out;
}

json report_to_json(const MetricReport& r) {
  json per_class = json::object();
  for (const auto& [label, cs] : r.per_class) {
    per_class[label] = {{"precision", cs.precision}, {"recall", cs.recall}, {"f1", cs.f1}, {"support", cs.support}};
  }
  json out = {{"task", to_string(r.task)},
              {"dataset", r.dataset},
              {"precision", r.precision},
              {"recall", r.recall},
              {"f1", r.f1},
              {"support", r.support},
              {"unparsed_count", r.unparsed_count},
              {"macro_f1", r.macro_f1},
              {"micro_f1", r.micro_f1},
              {"dropped_entries", r.dropped_entries}};
  if (!r.per_class.empty()) out["per_class"] = per_class;
  return out;
}

MetricReport report_from_json(const json& o) {
  try {
    MetricReport r;
    r.task = parse_task(o.at("task").get<std::string>());
    r.dataset = o.at("dataset").get<std::string>();
    r.precision = o.at("precision").get<double>();
    r.recall = o.at("recall").get<double>();
    r.f1 = o.at("f1").get<double>();
    r.support = o.at("support").get<size_t>();
    r.unparsed_count = o.at("unparsed_count").get<size_t>();
    r.macro_f1 = o.value("macro_f1", 0.0);
    r.micro_f1 = o.value("micro_f1", 0.0);
    r.dropped_entries = o.value("dropped_entries", size_t{0});
    if (o.contains("per_class")) {
      for (const auto& [label, cs] : o["per_class"].items()) {
        r.per_class[label] = {cs.at("precision").get<double>(), cs.at("recall").get<double>(),
                              cs.at("f1").get<double>(), cs.at("support").get<size_t>()};
      }
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRow, fmt::format("bad metric report: {}", e.what()));
  }
}

std::map<std::string, std::string> join_completions(
    std::span<const instruct::InstructionRecord> eval, std::span<const json> rows) {
  std::map<std::string, std::string> completions;
  for (size_t i = 0; i < rows.size(); ++i) {
    const json& row = rows[i];
    if (!row.is_object() || !row.contains("id") || !row["id"].is_string() ||
        !row.contains("completion") || !row["completion"].is_string()) {
      throw Error(ErrorCode::ProtocolViolation,
                  fmt::format("completion row {} lacks string 'id' and 'completion'", i + 1));
    }
    std::string id = row["id"].get<std::string>();
    if (!completions.emplace(id, row["completion"].get<std::string>()).second) {
      throw Error(ErrorCode::ProtocolViolation, fmt::format("duplicate completion for id '{}'", id));
    }
  }
  std::set<std::string> expected;
  for (const auto& r : eval) {
    if (!expected.insert(r.id).second) {
      throw Error(ErrorCode::ProtocolViolation, fmt::format("eval set repeats id '{}'", r.id));
    }
    if (!completions.count(r.id)) {
      throw Error(ErrorCode::ProtocolViolation, fmt::format("no completion for id '{}'", r.id));
    }
  }
  for (const auto& [id, _] : completions) {
    if (!expected.count(id)) {
      throw Error(ErrorCode::ProtocolViolation, fmt::format("completion for unknown id '{}'", id));
    }
  }
  return completions;
}

std::vector<MetricReport> score_eval_set(
    std::span<const instruct::InstructionRecord> eval,
    const std::map<std::string, std::string>& completions,
    const std::map<std::string, std::vector<std::string>>& vocabularies) {
  // Groups keep first-appearance order so output is stable.
  std::vector<std::pair<TaskKind, std::string>> keys;
  std::map<std::pair<TaskKind, std::string>, std::vector<const instruct::InstructionRecord*>> groups;
  for (const auto& r : eval) {
    auto key = std::make_pair(r.task, r.dataset);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) keys.push_back(key);
    it->second.push_back(&r);
  }

  auto completion_of = [&](const instruct::InstructionRecord& r) -> const std::string& {
    auto it = completions.find(r.id);
    if (it == completions.end()) {
      throw Error(ErrorCode::ProtocolViolation, fmt::format("no completion for id '{}'", r.id));
    }
    return it->second;
  };

  std::vector<MetricReport> reports;
  for (const auto& key : keys) {
    const auto& records = groups.at(key);
    const TaskKind task = key.first;
    MetricReport report;
    if (task == TaskKind::NER) {
      std::vector<Entities> gold;
      std::vector<ParsedPrediction> pred;
      for (const auto* r : records) {
        gold.push_back(std::get<Entities>(parse_entities(r->answer).value));
        pred.push_back(parse_entities(completion_of(*r)));
      }
      report = score_ner(gold, pred);
    } else if (task == TaskKind::RE) {
      std::vector<Relations> gold;
      std::vector<ParsedPrediction> pred;
      for (const auto* r : records) {
        gold.push_back(std::get<Relations>(parse_relations(r->answer).value));
        pred.push_back(parse_relations(completion_of(*r)));
      }
      report = score_re(gold, pred);
    } else {
      std::vector<std::string> vocabulary;
      if (auto it = vocabularies.find(key.second); it != vocabularies.end()) {
        vocabulary = it->second;
      }
      std::set<std::string> extra;
      for (const auto* r : records) {
        if (r->options) extra.insert(r->options->begin(), r->options->end());
        extra.insert(r->answer);
      }
      for (const auto& label : extra) {
        if (std::find(vocabulary.begin(), vocabulary.end(), label) == vocabulary.end()) {
          vocabulary.push_back(label);
        }
      }
      std::vector<std::string> gold;
      std::vector<ParsedPrediction> pred;
      for (const auto* r : records) {
        gold.push_back(r->answer);
        const std::vector<std::string>& options = r->options ? *r->options : vocabulary;
        pred.push_back(parse_classification(completion_of(*r), options));
      }
      report = score_classification(gold, pred, vocabulary);
    }
    report.task = task;
    report.dataset = key.second;
    reports.push_back(std::move(report));
  }
  return reports;
}

}  // namespace finbench::scorer
