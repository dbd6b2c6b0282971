#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "trialsize/candidates.hpp"
#include "trialsize/corpus.hpp"
#include "trialsize/embeddings.hpp"

namespace trialsize {

struct NamedFeature {
  std::string name;
  double value = 1.0;
  bool numeric = false;

  friend bool operator==(const NamedFeature&, const NamedFeature&) = default;
};

enum class FeatureFamily { kContextual, kLexical, kStructural };

// Family owning a feature name, from its namespace prefix.
std::optional<FeatureFamily> family_of(std::string_view feature_name);

struct Lexicons {
  std::set<std::string> population_terms;  // stems
  std::set<std::string> temporal_terms;    // stems
  std::set<std::string> likely_labels;     // lowercase substrings

  static Lexicons defaults();

  nlohmann::json to_json() const;
  static Lexicons from_json(const nlohmann::json& j);

  friend bool operator==(const Lexicons&, const Lexicons&) = default;
};

// One term per line, '#' starts a comment, blank lines ignored.
std::vector<std::string> load_term_list(const std::filesystem::path& path);
// Lowercases and stems each term.
std::set<std::string> stem_terms(const std::vector<std::string>& terms);

// Name -> dense id. Once frozen, unknown names are never inserted.
class FeatureVocabulary {
 public:
  std::optional<std::uint32_t> lookup(std::string_view name) const;
  // Inserts when unfrozen; returns nullopt for unknown names when frozen.
  std::optional<std::uint32_t> resolve(const std::string& name);

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  nlohmann::json to_json() const;
  static FeatureVocabulary from_json(const nlohmann::json& j);
  std::uint64_t content_hash() const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
  bool frozen_ = false;
};

// Numeric feature name -> (min, max) observed in training.
using ScalingTable = std::map<std::string, std::pair<double, double>>;

ScalingTable fit_scaling(const std::vector<std::vector<NamedFeature>>& rows);
double scale_value(const ScalingTable& table, const std::string& name, double value);

// Sparse vector, entries sorted by id with unique ids.
struct FeatureVector {
  std::vector<std::pair<std::uint32_t, double>> entries;

  double squared_norm() const;
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

// Unfrozen vocabularies grow with unseen names; frozen ones drop them.
FeatureVector vectorize(const std::vector<NamedFeature>& features, FeatureVocabulary& vocab,
                        const ScalingTable& scaling);
// Lookup-only variant; unseen names are dropped.
FeatureVector vectorize(const std::vector<NamedFeature>& features, const FeatureVocabulary& vocab,
                        const ScalingTable& scaling);

// --- feature families ---------------------------------------------------------

std::vector<NamedFeature> contextual_features(const Candidate& c, const ClusterModel& clusters,
                                              const Lexicons& lex);
std::vector<NamedFeature> lexical_features(const Candidate& c, const Abstract& a);
std::vector<NamedFeature> structural_features(const Candidate& c, const Abstract& a,
                                              const Lexicons& lex);

struct FeatureGroups {
  bool contextual = true;
  bool lexical = true;
  bool structural = true;

  bool empty() const { return !contextual && !lexical && !structural; }
  // "All", "Contextual", "- Lexical", ... as in an ablation table.
  std::string display_name() const;
  std::vector<std::string> names() const;
  static FeatureGroups from_names(const std::vector<std::string>& names);

  friend bool operator==(const FeatureGroups&, const FeatureGroups&) = default;
};

// The seven selections of an ablation run: all, each family alone, and each
// family left out.
std::vector<FeatureGroups> ablation_selections();

class FeatureExtractor {
 public:
  FeatureExtractor(FeatureGroups groups, const ClusterModel& clusters, const Lexicons& lex);

  std::vector<NamedFeature> operator()(const Candidate& c, const Abstract& a) const;
  const FeatureGroups& groups() const { return groups_; }

 private:
  FeatureGroups groups_;
  const ClusterModel* clusters_;
  const Lexicons* lex_;
};

// Throws std::invalid_argument for an empty selection.
FeatureExtractor feature_groups(FeatureGroups selection, const ClusterModel& clusters,
                                const Lexicons& lex);

nlohmann::json features_to_json(const std::vector<NamedFeature>& features);

}  // namespace trialsize
