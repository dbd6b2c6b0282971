#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "trialsize/corpus.hpp"
#include "trialsize/embeddings.hpp"
#include "trialsize/features.hpp"

namespace trialsize {

class SvmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KernelParams {
  double cost = 1.0;
  double gamma = 1.0;

  void validate() const;
  friend bool operator==(const KernelParams&, const KernelParams&) = default;
};

double squared_distance(const FeatureVector& x, const FeatureVector& y);
// exp(-gamma * |x - y|^2) over the sparse union of indices.
double rbf(const FeatureVector& x, const FeatureVector& y, double gamma);

// Pairwise squared distances of a dataset, computed once and shared between
// trainings that use different gamma values.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(std::span<const FeatureVector> xs);
  double operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  std::vector<double> d_;
};

// RBF kernel columns over a subset of a dataset, kept in an LRU cache bounded
// by a byte budget. Cached and recomputed columns are bit-identical.
class KernelCache {
 public:
  KernelCache(std::span<const FeatureVector> dataset, std::vector<std::size_t> subset,
              double gamma, std::size_t budget_bytes,
              std::shared_ptr<const DistanceMatrix> distances = nullptr);

  std::span<const double> column(std::size_t i);
  std::size_t size() const { return subset_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t computed_columns() const { return computed_; }

 private:
  std::span<const FeatureVector> dataset_;
  std::vector<std::size_t> subset_;
  double gamma_;
  std::shared_ptr<const DistanceMatrix> distances_;
  std::size_t capacity_;
  std::size_t computed_ = 0;
  std::list<std::size_t> lru_;
  struct Entry {
    std::vector<double> values;
    std::list<std::size_t>::iterator pos;
  };
  std::unordered_map<std::size_t, Entry> entries_;
};

struct SmoOptions {
  double tol = 1e-3;            // stop when the maximal KKT violation m - M < tol
  std::size_t max_iter = 0;     // 0 -> max(100000, 100 n)
  std::size_t cache_bytes = std::size_t{256} << 20;
  double positive_weight = 1.0; // cost multiplier for the positive class
  bool track_objective = false;
};

struct RawSvm {
  KernelParams params;
  std::vector<FeatureVector> support_vectors;
  std::vector<double> dual_coefs;  // alpha_i * y_i
  double bias = 0.0;

  // sum_i coef_i K(sv_i, x) + bias
  double decision_value(const FeatureVector& x) const;
};

struct SmoSolution {
  RawSvm svm;
  std::vector<double> alpha;               // one per training point
  std::vector<std::size_t> support;        // indices with alpha > 0
  std::vector<double> training_decisions;  // decision value of every training point
  double dual_objective = 0.0;             // sum alpha - 1/2 a'Qa
  std::vector<double> objective_history;   // after every update (if tracked)
  double kkt_gap = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Dual SMO with second-order working-pair selection. Labels are +1/-1.
SmoSolution train_smo(std::span<const FeatureVector> xs, std::span<const int> ys,
                      const KernelParams& params, const SmoOptions& options = {});

// Same, on a subset of a larger dataset with optional shared distances.
SmoSolution train_smo(std::span<const FeatureVector> dataset, std::span<const std::size_t> subset,
                      std::span<const int> ys, const KernelParams& params,
                      const SmoOptions& options,
                      std::shared_ptr<const DistanceMatrix> distances);

struct PlattParams {
  double a = 0.0;
  double b = 0.0;
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
};

struct PlattOptions {
  std::size_t max_iter = 100;
  double min_step = 1e-10;
  double sigma = 1e-12;
  double gradient_tol = 1e-8;
};

// Fits p(f) = 1 / (1 + exp(a f + b)) by Newton's method with backtracking on
// the log-loss against smoothed targets (N+ + 1)/(N+ + 2) and 1/(N- + 2).
PlattParams platt_fit(std::span<const double> decision_values, std::span<const int> labels,
                      const PlattOptions& options = {});

// Calibrated log-odds -(a f + b): strictly order-preserving with the
// probability but never saturates.
double platt_log_odds(const PlattParams& p, double decision_value);
// Probability, kept strictly inside (0, 1).
double platt_probability(double log_odds);

// Index of the largest score, earliest on ties. Empty input -> nullopt.
std::optional<std::size_t> argmax_index(std::span<const double> scores);

// --- trained model ------------------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SvmModel {
  RawSvm svm;
  PlattParams platt;
  FeatureVocabulary vocabulary;
  ScalingTable scaling;
  Lexicons lexicons;
  ClusterModel clusters;
  FeatureGroups groups;
  std::int64_t min_candidate_value = 10;

  double log_odds(const FeatureVector& x) const {
    return platt_log_odds(platt, svm.decision_value(x));
  }
  double probability(const FeatureVector& x) const { return platt_probability(log_odds(x)); }

  nlohmann::json to_json() const;
  // Refuses models whose vocabulary or cluster hashes do not match.
  static SvmModel from_json(const nlohmann::json& j);
  std::string serialize() const;
  void save(const std::filesystem::path& path) const;
  static SvmModel load(const std::filesystem::path& path);
};

// --- grid search ----------------------------------------------------------------------

struct GridSpec {
  std::vector<double> cost_values;
  std::vector<double> gamma_values;

  // C in 2^-5, 2^-3, ..., 2^15 and gamma in 2^-15, 2^-13, ..., 2^3.
  static GridSpec defaults();
  void validate() const;
};

// Candidates of a labeled corpus, featurized against one vocabulary.
struct TrainingSet {
  std::vector<FeatureVector> vectors;
  std::vector<int> labels;
  std::vector<std::int64_t> values;
  std::vector<std::vector<std::size_t>> by_abstract;  // candidate indices per abstract
  std::vector<std::int64_t> gold;
  std::vector<std::string> abstract_ids;
  FeatureVocabulary vocabulary;  // frozen
  ScalingTable scaling;

  std::size_t positives() const;
};

TrainingSet build_training_set(const std::vector<Abstract>& corpus,
                               const FeatureExtractor& extractor, std::int64_t min_value);

struct GridSearchOptions {
  SmoOptions smo;
  PlattOptions platt;
  std::size_t cv_folds = 0;  // 0 -> score on the training abstracts themselves
  std::uint64_t seed = 1;
  unsigned jobs = 1;
};

struct GridCell {
  KernelParams params;
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::size_t iterations = 0;
  bool converged = true;
};

struct TrainedSvm {
  RawSvm svm;
  PlattParams platt;
};

// Trains on the given candidate indices (all when empty) and calibrates.
TrainedSvm train_calibrated(const TrainingSet& data, std::span<const std::size_t> subset,
                            const KernelParams& params, const SmoOptions& smo,
                            const PlattOptions& platt,
                            std::shared_ptr<const DistanceMatrix> distances = nullptr,
                            SmoSolution* solution = nullptr);

struct GridSearchResult {
  KernelParams best;
  double best_accuracy = 0.0;
  std::vector<GridCell> cells;  // cost-major order
  TrainedSvm model;             // retrained on all candidates at `best`
};

// Picks (C, gamma) maximizing abstract-level argmax accuracy; ties go to the
// smaller C, then the smaller gamma.
GridSearchResult grid_search(const TrainingSet& data, const GridSpec& grid,
                             const GridSearchOptions& options);

}  // namespace trialsize
