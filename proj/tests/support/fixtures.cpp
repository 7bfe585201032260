#include "fixtures.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

#include "finbench/io.hpp"

namespace fixtures {

using finbench::TaskKind;
using finbench::corpus::Sample;
using nlohmann::json;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() / fmt::format("{}-{}-{}", tag, ::getpid(), counter++);
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_text(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << contents;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::vector<size_t> counts_summing_to(size_t n, size_t total, size_t max_each, uint64_t seed) {
  if (n * max_each < total) throw std::invalid_argument("total unreachable");
  std::mt19937_64 gen(seed);
  std::vector<size_t> counts(n, 0);
  size_t placed = 0;
  while (placed < total) {
    size_t i = gen() % n;
    if (counts[i] < max_each) {
      ++counts[i];
      ++placed;
    }
  }
  return counts;
}

CorpusSizes reference_sizes() { return {}; }

CorpusSizes small_sizes() {
  CorpusSizes s;
  s.fpb = 40;
  s.fiqa = 24;
  s.tfns = 30;
  s.nwgi = 36;
  s.ner = 20;
  s.ner_entities = 33;
  s.headline_rows = 12;
  s.finred = 18;
  s.finred_triples = 27;
  return s;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

json manifest(const std::string& name, const std::string& task, const std::string& file, const std::string& format,
              json mapping, std::vector<std::string> vocab, std::optional<size_t> expected) {
  json m = {{"name", name},
            {"task", task},
            {"source_path", file},
            {"format", format},
            {"field_mapping", mapping},
            {"label_vocabulary", vocab},
            {"split", {{"test_fraction", 0.2}, {"seed", 5}}}};
  if (expected) m["expected_count"] = *expected;
  return m;
}

void write_sa_csv(const fs::path& path, size_t n, std::mt19937_64& gen) {
  std::string out = "sentence,label\n";
  for (size_t i = 0; i < n; ++i) {
    const std::string& label = kSentiment[gen() % kSentiment.size()];
    out += csv_field(fmt::format("Company {} said revenue, per share, moved {} in quarter {}.", gen() % 97, label, i));
    out += ',' + label + '\n';
  }
  write_text(path, out);
}

}  // namespace

json write_corpus(const fs::path& dir, const CorpusSizes& s, bool with_expected, uint64_t seed) {
  std::mt19937_64 gen(seed);
  auto expect = [&](size_t n) { return with_expected ? std::optional<size_t>(n) : std::nullopt; };
  json manifests = json::array();
  const json sa_map = {{"text", "sentence"}, {"label", "label"}};
  for (const auto& [name, file, n] : {std::tuple{"FPB", "fpb.csv", s.fpb}, std::tuple{"FiQA-SA", "fiqa.csv", s.fiqa},
                                      std::tuple{"TFNS", "tfns.csv", s.tfns}, std::tuple{"NWGI", "nwgi.csv", s.nwgi}}) {
    write_sa_csv(dir / file, n, gen);
    manifests.push_back(manifest(name, "SA", file, "csv", sa_map, kSentiment, expect(n)));
  }

  {
    std::string out = "headline";
    for (size_t q = 0; q < 9; ++q) out += fmt::format(",q{}", q);
    out += '\n';
    for (size_t i = 0; i < s.headline_rows; ++i) {
      out += fmt::format("Gold futures move {} points in session {}", gen() % 50, i);
      for (size_t q = 0; q < 9; ++q) out += (gen() % 2) ? ",1" : ",0";
      out += '\n';
    }
    write_text(dir / "headline.csv", out);
    json mapping = {{"text", "headline"}};
    for (size_t q = 0; q < 9; ++q) mapping[fmt::format("q{}", q)] = fmt::format("q{}", q);
    manifests.push_back(
        manifest("Headline", "HC", "headline.csv", "csv", mapping, {"Yes", "No"}, expect(s.headline_rows * 9)));
  }

  {
    const auto counts = counts_summing_to(s.ner, s.ner_entities, 4, seed + 1);
    std::string out;
    for (size_t i = 0; i < s.ner; ++i) {
      json entities = json::array();
      std::string text = fmt::format("Filing {}:", i);
      for (size_t k = 0; k < counts[i]; ++k) {
        std::string surface = fmt::format("Entity{}x{}", i, k);
        text += " " + surface;
        entities.push_back({surface, kEntityTypes[gen() % kEntityTypes.size()]});
      }
      out += json{{"text", text + "."}, {"entities", entities}}.dump() + "\n";
    }
    write_text(dir / "ner.jsonl", out);
    manifests.push_back(manifest("NER", "NER", "ner.jsonl", "json-lines", {{"text", "text"}, {"entities", "entities"}},
                                 kEntityTypes, expect(s.ner)));
  }

  {
    const auto counts = counts_summing_to(s.finred, s.finred_triples, 4, seed + 2);
    std::string out;
    for (size_t i = 0; i < s.finred; ++i) {
      json relations = json::array();
      for (size_t k = 0; k < counts[i]; ++k) {
        relations.push_back(
            {kRelationTypes[gen() % kRelationTypes.size()], fmt::format("Sub{}x{}", i, k), fmt::format("Obj{}x{}", i, k)});
      }
      out += json{{"text", fmt::format("Report {} on holdings.", i)}, {"relations", relations}}.dump() + "\n";
    }
    write_text(dir / "finred.jsonl", out);
    manifests.push_back(manifest("FinRED", "RE", "finred.jsonl", "json-lines",
                                 {{"text", "text"}, {"relations", "relations"}}, kRelationTypes, expect(s.finred)));
  }
  return manifests;
}

fs::path write_manifest_file(const fs::path& dir, const json& manifests) {
  const fs::path path = dir / "manifests.json";
  write_text(path, manifests.dump(2));
  return path;
}

std::vector<Sample> sa_samples(const std::string& dataset, size_t n, uint64_t seed,
                               const std::vector<std::string>& labels) {
  std::mt19937_64 gen(seed);
  std::vector<Sample> out;
  for (size_t i = 0; i < n; ++i) {
    Sample s;
    s.id = fmt::format("{}-{:06d}", dataset, i);
    s.dataset = dataset;
    s.task = TaskKind::SA;
    s.input_text = fmt::format("Sentence {} from {}.", i, dataset);
    s.gold = finbench::corpus::Label{labels[gen() % labels.size()]};
    s.meta["split"] = (gen() % 5 == 0) ? "test" : "train";
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> ner_samples(const std::string& dataset, const std::vector<size_t>& per_sample) {
  std::vector<Sample> out;
  for (size_t i = 0; i < per_sample.size(); ++i) {
    Sample s;
    s.id = fmt::format("{}-{:06d}", dataset, i);
    s.dataset = dataset;
    s.task = TaskKind::NER;
    s.input_text = fmt::format("Sentence {}.", i);
    finbench::corpus::Entities entities;
    for (size_t k = 0; k < per_sample[i]; ++k) {
      entities.push_back({fmt::format("E{}_{}", i, k), kEntityTypes[(i + k) % kEntityTypes.size()]});
    }
    s.gold = entities;
    s.meta["split"] = i % 4 == 0 ? "test" : "train";
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> re_samples(const std::string& dataset, const std::vector<size_t>& per_sample) {
  std::vector<Sample> out;
  for (size_t i = 0; i < per_sample.size(); ++i) {
    Sample s;
    s.id = fmt::format("{}-{:06d}", dataset, i);
    s.dataset = dataset;
    s.task = TaskKind::RE;
    s.input_text = fmt::format("Sentence {}.", i);
    finbench::corpus::Relations relations;
    for (size_t k = 0; k < per_sample[i]; ++k) {
      relations.push_back({kRelationTypes[(i + k) % kRelationTypes.size()], fmt::format("S{}", i),
                           fmt::format("O{}_{}", i, k)});
    }
    s.gold = relations;
    s.meta["split"] = i % 4 == 0 ? "test" : "train";
    out.push_back(std::move(s));
  }
  return out;
}

finbench::instruct::PromptPool pool_for(TaskKind task, size_t size) {
  finbench::instruct::PromptPool pool;
  pool.task = task;
  for (size_t i = 0; i < size; ++i) {
    pool.prompts.push_back(fmt::format("Prompt {} for {}.", i, finbench::to_string(task)));
  }
  return pool;
}

std::string sha256_of(const fs::path& path) { return finbench::io::sha256_file(path); }

int run_shell(const std::string& command) {
  const int status = std::system(command.c_str());
  if (status == -1) return -1;
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return -1;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

finbench::pipeline::Settings prepared_workspace(const fs::path& dir, uint64_t seed) {
  namespace pl = finbench::pipeline;
  using finbench::instruct::Mode;
  pl::Settings s;
  s.work_dir = dir / "work";
  s.runs_dir = dir / "runs";
  s.seed = seed;
  const auto manifests = write_corpus(dir / "data", small_sizes(), true, seed);
  pl::ingest(s, write_manifest_file(dir / "data", manifests));
  for (finbench::TaskKind t : finbench::kAllTasks) {
    pl::build(s, t, Mode::Standard, seed);
    if (finbench::is_classification(t)) pl::build(s, t, Mode::ZeroShot, seed);
  }
  return s;
}

}  // namespace fixtures
