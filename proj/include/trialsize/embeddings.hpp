#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace trialsize {

class EmbeddingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Word -> dense vector map with a fixed dimension. Insertion order is kept so
// serialization and clustering are deterministic.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dimension = 0) : dimension_(dimension) {}

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }

  const std::vector<std::string>& words() const { return words_; }
  std::span<const double> vector(std::size_t i) const {
    return {data_.data() + i * dimension_, dimension_};
  }
  std::optional<std::size_t> find(std::string_view word) const;

  // Inserts or replaces. Returns true when an existing entry was replaced.
  bool set(std::string_view word, std::span<const double> values);

 private:
  std::size_t dimension_;
  std::vector<std::string> words_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Text format: "<vocab_size> <dimension>" header, then "word f1 ... fdim".
// Duplicate words keep the last vector and add a warning.
EmbeddingTable read_embeddings(std::istream& in, std::vector<std::string>* warnings = nullptr);
EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               std::vector<std::string>* warnings = nullptr);
void write_embeddings(std::ostream& out, const EmbeddingTable& table);
void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);

// --- skip-gram with negative sampling ---------------------------------------

struct SkipGramOptions {
  std::size_t dimension = 100;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  std::size_t min_count = 1;
  double learning_rate = 0.025;
  std::uint64_t seed = 1;
};

// Loss -log s(u_o.v_c) - sum_k log s(-u_k.v_c) for one (center, context) pair
// and its negative samples, with gradients written to the output spans.
// d_negatives is row-major, one row of length dim per negative.
double sgns_loss_gradient(std::span<const double> center, std::span<const double> context,
                          std::span<const std::span<const double>> negatives,
                          std::span<double> d_center, std::span<double> d_context,
                          std::span<double> d_negatives);

EmbeddingTable train_skipgram(const std::vector<std::vector<std::string>>& sentences,
                              const SkipGramOptions& options);

// --- k-means word clusters ----------------------------------------------------

class ClusterModel {
 public:
  ClusterModel() = default;
  ClusterModel(std::size_t k, std::vector<std::vector<double>> centroids,
               std::map<std::string, std::size_t> assignment);

  std::size_t k() const { return k_; }
  std::size_t oov_id() const { return k_; }
  const std::vector<std::vector<double>>& centroids() const { return centroids_; }
  const std::map<std::string, std::size_t>& assignment() const { return assignment_; }

  // Cluster id of the lowercased word, or oov_id() when unassigned.
  std::size_t cluster_of(std::string_view word) const;

  nlohmann::json to_json() const;
  static ClusterModel from_json(const nlohmann::json& j);
  std::uint64_t content_hash() const;

  friend bool operator==(const ClusterModel&, const ClusterModel&) = default;

 private:
  std::size_t k_ = 0;
  std::vector<std::vector<double>> centroids_;
  std::map<std::string, std::size_t> assignment_;
};

struct KMeansOptions {
  std::size_t k = 500;
  std::uint64_t seed = 1;
  std::size_t max_iters = 100;
  double tol = 1e-6;
  bool normalize = false;
};

struct KMeansResult {
  ClusterModel model;
  // Within-cluster SSE after every assignment step, initial one included.
  std::vector<double> sse_history;
  std::size_t iterations = 0;
};

// k-means++ seeding followed by Lloyd iterations. Ties go to the lowest id.
KMeansResult kmeans(const EmbeddingTable& table, const KMeansOptions& options);

}  // namespace trialsize
