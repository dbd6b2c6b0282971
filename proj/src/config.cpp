#include "trialsize/config.hpp"

#include <fstream>
#include <map>
#include <set>

#include "trialsize/random.hpp"

namespace trialsize {
namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string s = "invalid configuration:";
  for (const auto& p : problems) s += "\n  - " + p;
  return s;
}

// Reads j[key] into out when present, recording type errors.
template <typename T>
void read(const nlohmann::json& j, const char* key, T& out, std::vector<std::string>& problems,
          const std::string& scope) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    problems.push_back(scope + key + ": wrong type (" + j.at(key).dump() + ")");
  }
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known,
                    std::vector<std::string>& problems, const std::string& scope) {
  if (!j.is_object()) {
    problems.push_back(scope + ": expected an object");
    return;
  }
  std::set<std::string> names(known.begin(), known.end());
  for (const auto& [key, value] : j.items())
    if (!names.count(key)) problems.push_back("unknown key " + scope + key);
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

nlohmann::json RunConfig::to_json() const {
  const auto& sg = embeddings.skipgram;
  return {
      {"train_corpus", train_corpus},
      {"test_corpus", test_corpus},
      {"unlabeled_corpus", unlabeled_corpus},
      {"corpus", corpus},
      {"model", model},
      {"plain_input", plain_input},
      {"embeddings",
       {{"path", embeddings.path},
        {"dimension", sg.dimension},
        {"window", sg.window},
        {"negatives", sg.negatives},
        {"epochs", sg.epochs},
        {"min_count", sg.min_count},
        {"learning_rate", sg.learning_rate}}},
      {"clusters",
       {{"path", clusters.path},
        {"k", clusters.k},
        {"max_iters", clusters.max_iters},
        {"tol", clusters.tol},
        {"normalize", clusters.normalize}}},
      {"lexicons",
       {{"population", lexicons.population},
        {"temporal", lexicons.temporal},
        {"likely_labels", lexicons.likely_labels}}},
      {"features", features.names()},
      {"grid", {{"cost", grid.cost_values}, {"gamma", grid.gamma_values}}},
      {"smo",
       {{"tol", smo.tol},
        {"max_iter", smo.max_iter},
        {"cache_mb", smo.cache_bytes >> 20},
        {"positive_weight", smo.positive_weight}}},
      {"grid_cv_folds", grid_cv_folds},
      {"cv_folds", cv_folds},
      {"min_candidate_value", min_candidate_value},
      {"dump_features", dump_features},
      {"synth_train", synth_train},
      {"synth_test", synth_test},
      {"output_dir", output_dir},
      {"seed", seed},
      {"jobs", jobs},
  };
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  std::vector<std::string> problems;
  reject_unknown(j,
                 {"train_corpus", "test_corpus", "unlabeled_corpus", "corpus", "model",
                  "plain_input", "embeddings", "clusters", "lexicons", "features", "grid", "smo",
                  "grid_cv_folds", "cv_folds", "min_candidate_value", "dump_features",
                  "synth_train", "synth_test", "output_dir", "seed", "jobs"},
                 problems, "");
  if (!problems.empty()) throw ConfigError(problems);
  read(j, "train_corpus", c.train_corpus, problems, "");
  read(j, "test_corpus", c.test_corpus, problems, "");
  read(j, "unlabeled_corpus", c.unlabeled_corpus, problems, "");
  read(j, "corpus", c.corpus, problems, "");
  read(j, "model", c.model, problems, "");
  read(j, "plain_input", c.plain_input, problems, "");
  if (j.contains("embeddings")) {
    const auto& e = j["embeddings"];
    reject_unknown(e, {"path", "dimension", "window", "negatives", "epochs", "min_count",
                       "learning_rate"},
                   problems, "embeddings.");
    auto& sg = c.embeddings.skipgram;
    read(e, "path", c.embeddings.path, problems, "embeddings.");
    read(e, "dimension", sg.dimension, problems, "embeddings.");
    read(e, "window", sg.window, problems, "embeddings.");
    read(e, "negatives", sg.negatives, problems, "embeddings.");
    read(e, "epochs", sg.epochs, problems, "embeddings.");
    read(e, "min_count", sg.min_count, problems, "embeddings.");
    read(e, "learning_rate", sg.learning_rate, problems, "embeddings.");
  }
  if (j.contains("clusters")) {
    const auto& k = j["clusters"];
    reject_unknown(k, {"path", "k", "max_iters", "tol", "normalize"}, problems, "clusters.");
    read(k, "path", c.clusters.path, problems, "clusters.");
    read(k, "k", c.clusters.k, problems, "clusters.");
    read(k, "max_iters", c.clusters.max_iters, problems, "clusters.");
    read(k, "tol", c.clusters.tol, problems, "clusters.");
    read(k, "normalize", c.clusters.normalize, problems, "clusters.");
  }
  if (j.contains("lexicons")) {
    const auto& l = j["lexicons"];
    reject_unknown(l, {"population", "temporal", "likely_labels"}, problems, "lexicons.");
    read(l, "population", c.lexicons.population, problems, "lexicons.");
    read(l, "temporal", c.lexicons.temporal, problems, "lexicons.");
    read(l, "likely_labels", c.lexicons.likely_labels, problems, "lexicons.");
  }
  if (j.contains("features")) {
    std::vector<std::string> names;
    read(j, "features", names, problems, "");
    try {
      c.features = FeatureGroups::from_names(names);
    } catch (const std::exception& e) {
      problems.push_back(std::string("features: ") + e.what());
    }
  }
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    reject_unknown(g, {"cost", "gamma"}, problems, "grid.");
    read(g, "cost", c.grid.cost_values, problems, "grid.");
    read(g, "gamma", c.grid.gamma_values, problems, "grid.");
  }
  if (j.contains("smo")) {
    const auto& s = j["smo"];
    reject_unknown(s, {"tol", "max_iter", "cache_mb", "positive_weight"}, problems, "smo.");
    read(s, "tol", c.smo.tol, problems, "smo.");
    read(s, "max_iter", c.smo.max_iter, problems, "smo.");
    std::size_t mb = c.smo.cache_bytes >> 20;
    read(s, "cache_mb", mb, problems, "smo.");
    c.smo.cache_bytes = mb << 20;
    read(s, "positive_weight", c.smo.positive_weight, problems, "smo.");
  }
  read(j, "grid_cv_folds", c.grid_cv_folds, problems, "");
  read(j, "cv_folds", c.cv_folds, problems, "");
  read(j, "min_candidate_value", c.min_candidate_value, problems, "");
  read(j, "dump_features", c.dump_features, problems, "");
  read(j, "synth_train", c.synth_train, problems, "");
  read(j, "synth_test", c.synth_test, problems, "");
  read(j, "output_dir", c.output_dir, problems, "");
  read(j, "seed", c.seed, problems, "");
  read(j, "jobs", c.jobs, problems, "");
  if (!problems.empty()) throw ConfigError(problems);
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file " + path.string()});
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError({"config file " + path.string() + " is not valid JSON: " + e.what()});
  }
  return from_json(j);
}

void RunConfig::validate(const std::vector<std::string>& required) const {
  std::vector<std::string> problems;
  const std::map<std::string, const std::string*> paths{
      {"train_corpus", &train_corpus},
      {"test_corpus", &test_corpus},
      {"unlabeled_corpus", &unlabeled_corpus},
      {"corpus", &corpus},
      {"model", &model},
      {"embeddings.path", &embeddings.path},
      {"clusters.path", &clusters.path},
      {"lexicons.population", &lexicons.population},
      {"lexicons.temporal", &lexicons.temporal},
      {"lexicons.likely_labels", &lexicons.likely_labels},
  };
  for (const auto& name : required) {
    const auto it = paths.find(name);
    if (it != paths.end() && it->second->empty()) problems.push_back(name + " is required");
  }
  for (const auto& [name, value] : paths)
    if (!value->empty() && !std::filesystem::exists(*value))
      problems.push_back(name + ": path does not exist: " + *value);
  if (features.empty()) problems.push_back("features: at least one group is required");
  if (grid.cost_values.empty()) problems.push_back("grid.cost: must be nonempty");
  if (grid.gamma_values.empty()) problems.push_back("grid.gamma: must be nonempty");
  for (double v : grid.cost_values)
    if (!(v > 0)) problems.push_back("grid.cost: values must be positive");
  for (double v : grid.gamma_values)
    if (!(v > 0)) problems.push_back("grid.gamma: values must be positive");
  if (!(smo.tol > 0)) problems.push_back("smo.tol: must be positive");
  if (!(smo.positive_weight > 0)) problems.push_back("smo.positive_weight: must be positive");
  if (clusters.k == 0) problems.push_back("clusters.k: must be positive");
  if (embeddings.skipgram.dimension < 2) problems.push_back("embeddings.dimension: must be >= 2");
  if (cv_folds < 2) problems.push_back("cv_folds: must be >= 2");
  if (grid_cv_folds == 1) problems.push_back("grid_cv_folds: must be 0 or >= 2");
  if (min_candidate_value < 0) problems.push_back("min_candidate_value: must be >= 0");
  if (jobs == 0) problems.push_back("jobs: must be >= 1");
  if (output_dir.empty()) problems.push_back("output_dir: must be set");
  if (!problems.empty()) throw ConfigError(problems);
}

std::uint64_t RunConfig::seed_for(std::string_view consumer) const {
  return derive_seed(seed, consumer);
}

Lexicons RunConfig::resolve_lexicons() const {
  Lexicons lex = Lexicons::defaults();
  if (!lexicons.population.empty())
    lex.population_terms = stem_terms(load_term_list(lexicons.population));
  if (!lexicons.temporal.empty())
    lex.temporal_terms = stem_terms(load_term_list(lexicons.temporal));
  if (!lexicons.likely_labels.empty()) {
    lex.likely_labels.clear();
    for (const auto& t : load_term_list(lexicons.likely_labels)) lex.likely_labels.insert(to_lower(t));
  }
  return lex;
}

}  // namespace trialsize
