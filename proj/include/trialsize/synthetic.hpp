#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "trialsize/corpus.hpp"

namespace trialsize {

struct SyntheticOptions {
  std::size_t abstracts = 251;
  std::uint64_t seed = 7;
  std::string id_prefix = "syn";
  // Share of abstracts whose size is only given as per-arm counts.
  double arm_only_rate = 0.02;
  // Share of abstracts without section headings.
  double unstructured_rate = 0.08;
};

// Trial-like abstracts with a planted enrolment size, population-term
// contexts, year ranges and sentences crowded with other numbers.
std::vector<Abstract> generate_synthetic_corpus(const SyntheticOptions& options);

}  // namespace trialsize
