#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "trialsize/candidates.hpp"
#include "trialsize/corpus.hpp"
#include "trialsize/embeddings.hpp"
#include "trialsize/features.hpp"
#include "trialsize/svm.hpp"

namespace trialsize {

struct Prediction {
  std::string abstract_id;
  std::optional<std::int64_t> predicted_value;
  std::optional<Candidate> winning_candidate;
  std::optional<double> probability;
  // Every candidate with its calibrated probability, in document order.
  std::vector<std::pair<Candidate, double>> candidate_probabilities;
  std::vector<double> log_odds;
};

// Picks the highest-scoring candidate (earliest on ties). Scores may be any
// order-preserving transform of the candidate probabilities.
Prediction decode(std::string abstract_id, std::vector<Candidate> candidates,
                  std::span<const double> log_odds);

Prediction predict_size(const SvmModel& model, const Abstract& abstract);
std::vector<Prediction> predict_corpus(const SvmModel& model, const std::vector<Abstract>& corpus,
                                       unsigned jobs = 1);

// {"id", "size", "probability", "runner_up"}; runner_up is the second-best
// candidate as {"value", "probability"} or null.
nlohmann::json prediction_to_json(const Prediction& p);

// --- evaluation ---------------------------------------------------------------

// Exact binomial interval from beta quantiles. low = 0 when successes = 0,
// high = 1 when successes = n. Throws std::invalid_argument on bad input.
std::pair<double, double> clopper_pearson(std::int64_t successes, std::int64_t n,
                                          double confidence = 0.95);

// Percentage for display: integers, except values below 10 get one decimal.
std::string format_percent(double fraction);

struct EvalRow {
  std::string id;
  std::int64_t gold = 0;
  std::optional<std::int64_t> predicted;
  bool correct = false;
};

struct EvalReport {
  std::size_t n_abstracts = 0;
  std::size_t n_correct = 0;
  double accuracy = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<EvalRow> per_abstract;

  // "88 (76 – 95)"
  std::string summary() const;
  nlohmann::json to_json() const;
};

EvalReport score_predictions(const std::vector<Abstract>& corpus,
                             const std::vector<Prediction>& predictions);
EvalReport evaluate(const SvmModel& model, const std::vector<Abstract>& corpus, unsigned jobs = 1);

// --- training -----------------------------------------------------------------

struct TrainOptions {
  FeatureGroups groups;
  GridSpec grid = GridSpec::defaults();
  GridSearchOptions search;
  std::int64_t min_candidate_value = kDefaultMinCandidate;
};

struct TrainOutcome {
  SvmModel model;
  GridSearchResult search;
  std::size_t candidate_count = 0;
  std::size_t positive_count = 0;
};

// Extracts candidates, featurizes, grid-searches (C, gamma) on abstract-level
// accuracy and returns the calibrated model at the winning cell.
TrainOutcome train_model(const std::vector<Abstract>& corpus, const ClusterModel& clusters,
                         const Lexicons& lexicons, const TrainOptions& options);

struct AblationRow {
  FeatureGroups groups;
  std::optional<EvalReport> report;
  std::optional<KernelParams> params;
  std::string error;
};

struct AblationTable {
  std::vector<AblationRow> rows;

  nlohmann::json to_json() const;
  // Aligned text table: Features | Accuracy (%) | 95% CI
  std::string to_text() const;
};

// Trains and evaluates every selection of ablation_selections(). A failing
// row records its error and the rest still run.
AblationTable ablate(const std::vector<Abstract>& train, const std::vector<Abstract>& test,
                     const ClusterModel& clusters, const Lexicons& lexicons,
                     const TrainOptions& options);

struct CvReport {
  std::size_t k = 0;
  std::vector<std::vector<std::size_t>> folds;  // abstract indices per fold
  std::vector<EvalReport> fold_reports;
  std::vector<KernelParams> fold_params;
  double mean_accuracy = 0.0;

  nlohmann::json to_json() const;
};

// Abstract-level folds from a seeded shuffle.
std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t k, std::uint64_t seed);

CvReport cross_validate(const std::vector<Abstract>& corpus, std::size_t k, std::uint64_t seed,
                        const ClusterModel& clusters, const Lexicons& lexicons,
                        const TrainOptions& options);

}  // namespace trialsize
