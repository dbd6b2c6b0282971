#include "trialsize/features.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "trialsize/porter.hpp"
#include "trialsize/random.hpp"

namespace trialsize {
namespace {

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

std::string offset_key(std::string_view family, int offset) {
  std::string key(family);
  key.push_back('[');
  key.push_back(offset < 0 ? '-' : '+');
  key += std::to_string(std::abs(offset));
  key.push_back(']');
  return key;
}

NamedFeature indicator(std::string name) { return {std::move(name), 1.0, false}; }
NamedFeature numeric(std::string name, double v) { return {std::move(name), v, true}; }

}  // namespace

std::optional<FeatureFamily> family_of(std::string_view name) {
  for (auto p : {"ctx[", "ctxstr=", "cluster[", "pop_in_window", "pop_distance",
                 "temporal_adjacent"})
    if (starts_with(name, p)) return FeatureFamily::kContextual;
  for (auto p : {"ngram", "year"})
    if (starts_with(name, p)) return FeatureFamily::kLexical;
  for (auto p : {"cat=", "label=", "likely_label", "cand_pos_", "sent_pos_"})
    if (starts_with(name, p)) return FeatureFamily::kStructural;
  return std::nullopt;
}

// --- lexicons -------------------------------------------------------------------

std::set<std::string> stem_terms(const std::vector<std::string>& terms) {
  std::set<std::string> out;
  for (const auto& t : terms) out.insert(porter_stem(to_lower(t)));
  return out;
}

Lexicons Lexicons::defaults() {
  Lexicons lex;
  lex.population_terms = stem_terms({"patient", "subject", "participant", "man", "men", "woman",
                                     "women", "child", "children", "adult", "adolescent",
                                     "infant", "volunteer", "individual", "male", "female",
                                     "elderly", "boy", "girl"});
  lex.temporal_terms =
      stem_terms({"year", "month", "week", "day", "hour", "minute", "yr", "mo", "wk"});
  lex.likely_labels = {"patient", "participant", "method", "population", "subject"};
  return lex;
}

nlohmann::json Lexicons::to_json() const {
  return {{"population_terms", population_terms},
          {"temporal_terms", temporal_terms},
          {"likely_labels", likely_labels}};
}

Lexicons Lexicons::from_json(const nlohmann::json& j) {
  Lexicons lex;
  lex.population_terms = j.at("population_terms").get<std::set<std::string>>();
  lex.temporal_terms = j.at("temporal_terms").get<std::set<std::string>>();
  lex.likely_labels = j.at("likely_labels").get<std::set<std::string>>();
  return lex;
}

std::vector<std::string> load_term_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexicon file " + path.string());
  std::vector<std::string> terms;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    terms.push_back(line.substr(b, e - b + 1));
  }
  return terms;
}

// --- vocabulary and scaling -------------------------------------------------------

std::optional<std::uint32_t> FeatureVocabulary::lookup(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint32_t> FeatureVocabulary::resolve(const std::string& name) {
  if (const auto it = index_.find(name); it != index_.end()) return it->second;
  if (frozen_) return std::nullopt;
  const auto id = static_cast<std::uint32_t>(names_.size());
  names_.push_back(name);
  index_.emplace(name, id);
  return id;
}

nlohmann::json FeatureVocabulary::to_json() const { return names_; }

FeatureVocabulary FeatureVocabulary::from_json(const nlohmann::json& j) {
  FeatureVocabulary v;
  for (const auto& n : j) {
    const auto name = n.get<std::string>();
    if (v.lookup(name)) throw std::runtime_error("duplicate vocabulary entry '" + name + "'");
    v.resolve(name);
  }
  v.freeze();
  return v;
}

std::uint64_t FeatureVocabulary::content_hash() const {
  std::uint64_t h = fnv1a64("");
  for (const auto& n : names_) {
    h = fnv1a64(n, h);
    h = fnv1a64(std::string_view("\0", 1), h);
  }
  return h;
}

ScalingTable fit_scaling(const std::vector<std::vector<NamedFeature>>& rows) {
  ScalingTable table;
  for (const auto& row : rows) {
    for (const auto& f : row) {
      if (!f.numeric) continue;
      auto [it, fresh] = table.try_emplace(f.name, f.value, f.value);
      if (!fresh) {
        it->second.first = std::min(it->second.first, f.value);
        it->second.second = std::max(it->second.second, f.value);
      }
    }
  }
  return table;
}

double scale_value(const ScalingTable& table, const std::string& name, double value) {
  double scaled = value;
  if (const auto it = table.find(name); it != table.end()) {
    const auto [lo, hi] = it->second;
    scaled = hi > lo ? (value - lo) / (hi - lo) : 0.0;
  }
  return std::clamp(scaled, 0.0, 1.0);
}

double FeatureVector::squared_norm() const {
  double s = 0.0;
  for (const auto& [id, v] : entries) s += v * v;
  return s;
}

namespace {

template <typename Resolve>
FeatureVector vectorize_with(const std::vector<NamedFeature>& features, const ScalingTable& scaling,
                             Resolve&& resolve) {
  FeatureVector out;
  for (const auto& f : features) {
    const auto id = resolve(f.name);
    if (!id) continue;
    out.entries.emplace_back(*id, f.numeric ? scale_value(scaling, f.name, f.value) : f.value);
  }
  std::stable_sort(out.entries.begin(), out.entries.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  // Repeated indicators (an n-gram seen twice) collapse to one entry.
  out.entries.erase(std::unique(out.entries.begin(), out.entries.end(),
                                [](const auto& a, const auto& b) { return a.first == b.first; }),
                    out.entries.end());
  return out;
}

}  // namespace

FeatureVector vectorize(const std::vector<NamedFeature>& features, FeatureVocabulary& vocab,
                        const ScalingTable& scaling) {
  return vectorize_with(features, scaling, [&](const std::string& n) { return vocab.resolve(n); });
}

FeatureVector vectorize(const std::vector<NamedFeature>& features, const FeatureVocabulary& vocab,
                        const ScalingTable& scaling) {
  return vectorize_with(features, scaling, [&](const std::string& n) { return vocab.lookup(n); });
}

// --- families -----------------------------------------------------------------------

std::vector<NamedFeature> contextual_features(const Candidate& c, const ClusterModel& clusters,
                                              const Lexicons& lex) {
  std::vector<NamedFeature> out;
  std::string joined;
  std::optional<int> pop_distance;
  for (int off = -kContextRadius; off <= kContextRadius; ++off) {
    const auto& slot = c.context[static_cast<std::size_t>(off + kContextRadius)];
    if (off != -kContextRadius) joined.push_back('|');
    joined += slot.stem;
    out.push_back(indicator(offset_key("cluster", off) + "=" +
                            std::to_string(clusters.cluster_of(slot.lower))));
    if (off == 0) continue;
    out.push_back(indicator(offset_key("ctx", off) + "=" + slot.stem));
    if (!slot.pad && lex.population_terms.count(slot.stem)) {
      const int d = std::abs(off);
      if (!pop_distance || d < *pop_distance) pop_distance = d;
    }
  }
  out.push_back(indicator("ctxstr=" + joined));
  if (pop_distance) {
    out.push_back(indicator("pop_in_window"));
    out.push_back(numeric("pop_distance", *pop_distance));
  }
  for (int off : {-1, 1}) {
    const auto& slot = c.context[static_cast<std::size_t>(off + kContextRadius)];
    if (!slot.pad && lex.temporal_terms.count(slot.stem)) {
      out.push_back(indicator("temporal_adjacent"));
      break;
    }
  }
  return out;
}

std::vector<NamedFeature> lexical_features(const Candidate& c, const Abstract& a) {
  std::vector<NamedFeature> out;
  const auto& tokens = a.sentence(c.sentence_index).tokens;
  for (std::size_t n = 1; n <= 3; ++n) {
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string name = "ngram" + std::to_string(n) + "=";
      for (std::size_t k = 0; k < n; ++k) {
        if (k) name.push_back(' ');
        name += tokens[i + k].stem;
      }
      out.push_back(indicator(std::move(name)));
    }
  }
  if (c.value >= 1950 && c.value <= 2020) out.push_back(indicator("year"));
  return out;
}

std::vector<NamedFeature> structural_features(const Candidate& c, const Abstract& a,
                                              const Lexicons& lex) {
  std::vector<NamedFeature> out;
  const auto& section = a.sections.at(c.section_index);
  if (section.category) out.push_back(indicator("cat=" + *section.category));
  if (section.label) {
    const std::string label = to_lower(*section.label);
    out.push_back(indicator("label=" + label));
    for (const auto& likely : lex.likely_labels) {
      if (label.find(likely) != std::string::npos) {
        out.push_back(indicator("likely_label"));
        break;
      }
    }
  }
  const auto& sentence = a.sentence(c.sentence_index);
  const double len = static_cast<double>(sentence.tokens.size());
  const double pos = static_cast<double>(c.token_position);
  out.push_back(numeric("cand_pos_abs", pos));
  out.push_back(numeric("cand_pos_rel", len > 0 ? pos / len : 0.0));
  const double total = static_cast<double>(a.sentence_count());
  const double idx = static_cast<double>(c.sentence_index);
  out.push_back(numeric("sent_pos_abs", idx));
  out.push_back(numeric("sent_pos_rel", total > 0 ? idx / total : 0.0));
  return out;
}

std::string FeatureGroups::display_name() const {
  const int n = contextual + lexical + structural;
  if (n == 3) return "All";
  if (n == 1) return contextual ? "Contextual" : lexical ? "Lexical" : "Structural";
  if (n == 2) return !contextual ? "- Contextual" : !lexical ? "- Lexical" : "- Structural";
  return "None";
}

std::vector<std::string> FeatureGroups::names() const {
  std::vector<std::string> out;
  if (contextual) out.emplace_back("CONTEXTUAL");
  if (lexical) out.emplace_back("LEXICAL");
  if (structural) out.emplace_back("STRUCTURAL");
  return out;
}

FeatureGroups FeatureGroups::from_names(const std::vector<std::string>& names) {
  FeatureGroups g{false, false, false};
  for (const auto& raw : names) {
    const std::string n = to_lower(raw);
    if (n == "contextual") g.contextual = true;
    else if (n == "lexical") g.lexical = true;
    else if (n == "structural") g.structural = true;
    else throw std::invalid_argument("unknown feature group '" + raw + "'");
  }
  return g;
}

std::vector<FeatureGroups> ablation_selections() {
  return {
      {true, true, true},   {true, false, false}, {false, false, true}, {false, true, false},
      {false, true, true},  {true, true, false},  {true, false, true},
  };
}

FeatureExtractor::FeatureExtractor(FeatureGroups groups, const ClusterModel& clusters,
                                   const Lexicons& lex)
    : groups_(groups), clusters_(&clusters), lex_(&lex) {
  if (groups_.empty()) throw std::invalid_argument("feature group selection is empty");
}

std::vector<NamedFeature> FeatureExtractor::operator()(const Candidate& c, const Abstract& a) const {
  std::vector<NamedFeature> out;
  auto append = [&out](std::vector<NamedFeature> part) {
    out.insert(out.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  };
  if (groups_.contextual) append(contextual_features(c, *clusters_, *lex_));
  if (groups_.lexical) append(lexical_features(c, a));
  if (groups_.structural) append(structural_features(c, a, *lex_));
  return out;
}

FeatureExtractor feature_groups(FeatureGroups selection, const ClusterModel& clusters,
                                const Lexicons& lex) {
  return FeatureExtractor(selection, clusters, lex);
}

nlohmann::json features_to_json(const std::vector<NamedFeature>& features) {
  auto j = nlohmann::json::array();
  for (const auto& f : features)
    j.push_back({{"name", f.name}, {"value", f.value}, {"numeric", f.numeric}});
  return j;
}

}  // namespace trialsize
