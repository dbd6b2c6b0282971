#include "trialsize/candidates.hpp"

#include <stdexcept>

namespace trialsize {

std::vector<Candidate> extract_candidates(const Abstract& abstract, std::int64_t min_value) {
  std::vector<Candidate> out;
  for (std::size_t sec = 0; sec < abstract.sections.size(); ++sec) {
    for (const auto& sentence : abstract.sections[sec].sentences) {
      const auto& tokens = sentence.tokens;
      for (const auto& tok : tokens) {
        if (!tok.numeric_value || *tok.numeric_value < min_value) continue;
        Candidate c;
        c.abstract_id = abstract.id;
        c.section_index = sec;
        c.sentence_index = sentence.index_in_abstract;
        c.token_position = tok.position;
        c.value = *tok.numeric_value;
        c.surface = tok.surface;
        for (int off = -kContextRadius; off <= kContextRadius; ++off) {
          auto& slot = c.context[static_cast<std::size_t>(off + kContextRadius)];
          const auto p = static_cast<std::ptrdiff_t>(tok.position) + off;
          if (p < 0 || p >= static_cast<std::ptrdiff_t>(tokens.size())) {
            slot = {std::string(kPad), std::string(kPad), true};
          } else {
            const auto& t = tokens[static_cast<std::size_t>(p)];
            slot = {t.lower, t.stem, false};
          }
        }
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

std::vector<LabeledCandidate> label_candidates(const Abstract& abstract, std::int64_t min_value) {
  if (!abstract.gold_size)
    throw std::invalid_argument("abstract '" + abstract.id + "' has no gold size");
  std::vector<LabeledCandidate> out;
  for (auto& c : extract_candidates(abstract, min_value)) {
    const bool positive = c.value == *abstract.gold_size;
    out.push_back({std::move(c), positive});
  }
  return out;
}

std::size_t corpus_candidate_count(const std::vector<Abstract>& corpus, std::int64_t min_value) {
  std::size_t n = 0;
  for (const auto& a : corpus) n += extract_candidates(a, min_value).size();
  return n;
}

nlohmann::json candidate_to_json(const Candidate& c) {
  auto context = nlohmann::json::array();
  for (const auto& slot : c.context) context.push_back(slot.lower);
  return {
      {"abstract_id", c.abstract_id},   {"sentence_index", c.sentence_index},
      {"token_position", c.token_position}, {"value", c.value},
      {"surface", c.surface},           {"context", context},
  };
}

}  // namespace trialsize
