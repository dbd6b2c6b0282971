#pragma once

#include <string>
#include <vector>

#include "trialsize/config.hpp"
#include "trialsize/corpus.hpp"
#include "trialsize/embeddings.hpp"

namespace trialsize {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitConfig = 2;

// Reads a JSON-lines corpus, or plain-text abstracts (a file or a directory of
// files, ids taken from file stems) when `plain` is set.
std::vector<Abstract> read_corpus_input(const std::string& path, bool plain);

// Cluster model from the configured cluster file, else k-means over loaded or
// freshly trained word vectors. `text` feeds the skip-gram trainer.
ClusterModel resolve_clusters(const RunConfig& config, const std::vector<Abstract>& text);

// Lowercased token sequences, one per sentence.
std::vector<std::vector<std::string>> lowercase_sentences(const std::vector<Abstract>& corpus);

int cli_main(int argc, char** argv);

}  // namespace trialsize
