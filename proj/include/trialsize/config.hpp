#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "trialsize/embeddings.hpp"
#include "trialsize/features.hpp"
#include "trialsize/svm.hpp"

namespace trialsize {

// Collects every validation problem before failing.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct EmbeddingConfig {
  std::string path;  // load vectors from here when set, else train skip-gram
  SkipGramOptions skipgram;
};

struct ClusterConfig {
  std::string path;  // precomputed cluster model JSON
  std::size_t k = 500;
  std::size_t max_iters = 100;
  double tol = 1e-6;
  bool normalize = false;
};

struct LexiconConfig {
  std::string population;
  std::string temporal;
  std::string likely_labels;
};

struct RunConfig {
  std::string train_corpus;
  std::string test_corpus;
  std::string unlabeled_corpus;
  std::string corpus;  // input of predict / extract
  std::string model;
  bool plain_input = false;

  EmbeddingConfig embeddings;
  ClusterConfig clusters;
  LexiconConfig lexicons;
  FeatureGroups features;
  GridSpec grid = GridSpec::defaults();
  SmoOptions smo;
  std::size_t grid_cv_folds = 0;
  std::size_t cv_folds = 10;
  std::int64_t min_candidate_value = 10;
  bool dump_features = false;

  std::size_t synth_train = 201;
  std::size_t synth_test = 50;

  std::string output_dir = "out";
  std::uint64_t seed = 42;
  unsigned jobs = 1;

  nlohmann::json to_json() const;
  // Unknown keys are rejected; missing keys keep their defaults.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);

  // Checks fields and that every referenced path exists. `required` names the
  // path fields the current command needs.
  void validate(const std::vector<std::string>& required) const;

  std::uint64_t seed_for(std::string_view consumer) const;
  Lexicons resolve_lexicons() const;
};

}  // namespace trialsize
