#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "trialsize/corpus.hpp"

namespace trialsize {

inline constexpr std::int64_t kDefaultMinCandidate = 10;
inline constexpr std::string_view kPad = "<pad>";

struct ContextSlot {
  std::string lower;
  std::string stem;
  bool pad = true;

  friend bool operator==(const ContextSlot&, const ContextSlot&) = default;
};

// Offsets -3..+3 around the candidate token; slot 3 is the candidate.
inline constexpr int kContextRadius = 3;
inline constexpr std::size_t kContextSize = 2 * kContextRadius + 1;
using ContextWindow = std::array<ContextSlot, kContextSize>;

struct Candidate {
  std::string abstract_id;
  std::size_t section_index = 0;
  std::size_t sentence_index = 0;  // abstract-wide
  std::size_t token_position = 0;
  std::int64_t value = 0;
  std::string surface;
  ContextWindow context;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct LabeledCandidate {
  Candidate candidate;
  bool is_size = false;
};

// Every numeric token with value >= min_value, in document order.
std::vector<Candidate> extract_candidates(const Abstract& abstract,
                                          std::int64_t min_value = kDefaultMinCandidate);

// All candidates whose value equals the gold size are positive. Throws
// std::invalid_argument when the abstract has no gold size.
std::vector<LabeledCandidate> label_candidates(const Abstract& abstract,
                                               std::int64_t min_value = kDefaultMinCandidate);

std::size_t corpus_candidate_count(const std::vector<Abstract>& corpus,
                                   std::int64_t min_value = kDefaultMinCandidate);

// {"abstract_id", "sentence_index", "token_position", "value", "surface", "context"}
nlohmann::json candidate_to_json(const Candidate& c);

}  // namespace trialsize
