#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "finbench/corpus.hpp"
#include "finbench/instruct.hpp"
#include "finbench/pipeline.hpp"

namespace fixtures {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "fb");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

void write_text(const fs::path& path, const std::string& contents);

// `n` nonnegative counts in [0, max_each] summing to `total`, seeded.
std::vector<size_t> counts_summing_to(size_t n, size_t total, size_t max_each, uint64_t seed);

inline const std::vector<std::string> kSentiment = {"negative", "neutral", "positive"};
inline const std::vector<std::string> kEntityTypes = {"PER", "ORG", "LOC"};
inline const std::vector<std::string> kRelationTypes = {"subsidiary", "owned_by", "product_or_material_produced",
                                                        "chief_executive_officer"};

// Source files plus manifest objects for the seven datasets. Writes under
// `dir` and returns the manifest JSON array (no expected_count keys unless
// `with_expected` is set, in which case the reference source counts are used).
struct CorpusSizes {
  size_t fpb = 3634, fiqa = 938, tfns = 9543, nwgi = 16184;
  size_t ner = 609, ner_entities = 1003;
  size_t headline_rows = 11412;
  size_t finred = 6768, finred_triples = 9657;
};

CorpusSizes reference_sizes();
CorpusSizes small_sizes();

nlohmann::json write_corpus(const fs::path& dir, const CorpusSizes& sizes, bool with_expected, uint64_t seed = 11);

// Manifest file path after writing `manifests` to dir/manifests.json.
fs::path write_manifest_file(const fs::path& dir, const nlohmann::json& manifests);

// Direct sample construction without files.
std::vector<finbench::corpus::Sample> sa_samples(const std::string& dataset, size_t n, uint64_t seed,
                                                 const std::vector<std::string>& labels = kSentiment);
std::vector<finbench::corpus::Sample> ner_samples(const std::string& dataset, const std::vector<size_t>& per_sample);
std::vector<finbench::corpus::Sample> re_samples(const std::string& dataset, const std::vector<size_t>& per_sample);

// Small synthetic corpus under dir/data, ingested and built for every task
// (standard mode) and every classification task (zero-shot mode).
finbench::pipeline::Settings prepared_workspace(const fs::path& dir, uint64_t seed = 1);

finbench::instruct::PromptPool pool_for(finbench::TaskKind task, size_t size = 10);

std::string sha256_of(const fs::path& path);

// Runs a shell command; returns the exit status (or 128 + signal).
int run_shell(const std::string& command);
std::string shell_quote(const std::string& s);

}  // namespace fixtures
