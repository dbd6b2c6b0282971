#include "trialsize/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/beta.hpp>

#include "trialsize/parallel.hpp"
#include "trialsize/random.hpp"

namespace trialsize {

Prediction decode(std::string abstract_id, std::vector<Candidate> candidates,
                  std::span<const double> log_odds) {
  Prediction p;
  p.abstract_id = std::move(abstract_id);
  p.log_odds.assign(log_odds.begin(), log_odds.end());
  if (const auto best = argmax_index(log_odds)) {
    p.predicted_value = candidates[*best].value;
    p.winning_candidate = candidates[*best];
    p.probability = platt_probability(log_odds[*best]);
  }
  for (std::size_t i = 0; i < candidates.size(); ++i)
    p.candidate_probabilities.emplace_back(std::move(candidates[i]),
                                           platt_probability(log_odds[i]));
  return p;
}

Prediction predict_size(const SvmModel& model, const Abstract& abstract) {
  auto candidates = extract_candidates(abstract, model.min_candidate_value);
  const FeatureExtractor extract(model.groups, model.clusters, model.lexicons);
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const auto& c : candidates)
    scores.push_back(model.log_odds(vectorize(extract(c, abstract), model.vocabulary, model.scaling)));
  return decode(abstract.id, std::move(candidates), scores);
}

std::vector<Prediction> predict_corpus(const SvmModel& model, const std::vector<Abstract>& corpus,
                                       unsigned jobs) {
  std::vector<Prediction> out(corpus.size());
  parallel_for(corpus.size(), jobs, [&](std::size_t i) { out[i] = predict_size(model, corpus[i]); });
  return out;
}

nlohmann::json prediction_to_json(const Prediction& p) {
  nlohmann::json j;
  j["id"] = p.abstract_id;
  j["size"] = p.predicted_value ? nlohmann::json(*p.predicted_value) : nlohmann::json(nullptr);
  j["probability"] = p.probability ? nlohmann::json(*p.probability) : nlohmann::json(nullptr);
  j["runner_up"] = nullptr;
  if (p.winning_candidate && p.log_odds.size() > 1) {
    std::optional<std::size_t> second;
    const auto& win = *p.winning_candidate;
    for (std::size_t i = 0; i < p.log_odds.size(); ++i) {
      const auto& c = p.candidate_probabilities[i].first;
      if (c.sentence_index == win.sentence_index && c.token_position == win.token_position)
        continue;
      if (!second || p.log_odds[i] > p.log_odds[*second]) second = i;
    }
    if (second)
      j["runner_up"] = {{"value", p.candidate_probabilities[*second].first.value},
                        {"probability", p.candidate_probabilities[*second].second}};
  }
  return j;
}

// --- evaluation -----------------------------------------------------------------

std::pair<double, double> clopper_pearson(std::int64_t successes, std::int64_t n,
                                          double confidence) {
  if (n <= 0) throw std::invalid_argument("clopper_pearson: n must be positive");
  if (successes < 0 || successes > n)
    throw std::invalid_argument("clopper_pearson: successes must lie in [0, n]");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw std::invalid_argument("clopper_pearson: confidence must lie in (0, 1)");
  const double tail = (1.0 - confidence) / 2.0;
  const auto x = static_cast<double>(successes);
  const auto m = static_cast<double>(n);
  double low = 0.0, high = 1.0;
  if (successes > 0)
    low = boost::math::quantile(boost::math::beta_distribution<double>(x, m - x + 1.0), tail);
  if (successes < n)
    high = boost::math::quantile(boost::math::beta_distribution<double>(x + 1.0, m - x),
                                 1.0 - tail);
  return {low, high};
}

std::string format_percent(double fraction) {
  const double pct = 100.0 * fraction;
  char buf[32];
  if (std::round(pct * 10.0) / 10.0 < 10.0)
    std::snprintf(buf, sizeof buf, "%.1f", pct);
  else
    std::snprintf(buf, sizeof buf, "%.0f", pct);
  return buf;
}

std::string EvalReport::summary() const {
  return format_percent(accuracy) + " (" + format_percent(ci_low) + " – " +
         format_percent(ci_high) + ")";
}

nlohmann::json EvalReport::to_json() const {
  auto rows = nlohmann::json::array();
  for (const auto& r : per_abstract)
    rows.push_back({{"id", r.id},
                    {"gold", r.gold},
                    {"predicted", r.predicted ? nlohmann::json(*r.predicted) : nlohmann::json(nullptr)},
                    {"correct", r.correct}});
  return {{"n_abstracts", n_abstracts}, {"n_correct", n_correct}, {"accuracy", accuracy},
          {"ci_low", ci_low},           {"ci_high", ci_high},     {"summary", summary()},
          {"per_abstract", rows}};
}

EvalReport score_predictions(const std::vector<Abstract>& corpus,
                             const std::vector<Prediction>& predictions) {
  if (corpus.size() != predictions.size())
    throw std::invalid_argument("prediction count does not match corpus size");
  if (corpus.empty()) throw std::invalid_argument("cannot evaluate an empty corpus");
  EvalReport r;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& a = corpus[i];
    if (!a.gold_size) throw std::invalid_argument("abstract '" + a.id + "' has no gold size");
    EvalRow row{a.id, *a.gold_size, predictions[i].predicted_value, false};
    row.correct = row.predicted && *row.predicted == row.gold;
    r.n_correct += row.correct;
    r.per_abstract.push_back(std::move(row));
  }
  r.n_abstracts = corpus.size();
  r.accuracy = static_cast<double>(r.n_correct) / static_cast<double>(r.n_abstracts);
  std::tie(r.ci_low, r.ci_high) = clopper_pearson(static_cast<std::int64_t>(r.n_correct),
                                                  static_cast<std::int64_t>(r.n_abstracts));
  return r;
}

EvalReport evaluate(const SvmModel& model, const std::vector<Abstract>& corpus, unsigned jobs) {
  for (const auto& a : corpus)
    if (!a.gold_size) throw std::invalid_argument("abstract '" + a.id + "' has no gold size");
  return score_predictions(corpus, predict_corpus(model, corpus, jobs));
}

// --- training -----------------------------------------------------------------

TrainOutcome train_model(const std::vector<Abstract>& corpus, const ClusterModel& clusters,
                         const Lexicons& lexicons, const TrainOptions& options) {
  const FeatureExtractor extractor(options.groups, clusters, lexicons);
  TrainingSet data = build_training_set(corpus, extractor, options.min_candidate_value);
  TrainOutcome out;
  out.candidate_count = data.vectors.size();
  out.positive_count = data.positives();
  out.search = grid_search(data, options.grid, options.search);
  out.model.svm = out.search.model.svm;
  out.model.platt = out.search.model.platt;
  out.model.vocabulary = std::move(data.vocabulary);
  out.model.scaling = std::move(data.scaling);
  out.model.lexicons = lexicons;
  out.model.clusters = clusters;
  out.model.groups = options.groups;
  out.model.min_candidate_value = options.min_candidate_value;
  return out;
}

AblationTable ablate(const std::vector<Abstract>& train, const std::vector<Abstract>& test,
                     const ClusterModel& clusters, const Lexicons& lexicons,
                     const TrainOptions& options) {
  AblationTable table;
  for (const auto& groups : ablation_selections()) {
    AblationRow row;
    row.groups = groups;
    try {
      TrainOptions opt = options;
      opt.groups = groups;
      const TrainOutcome trained = train_model(train, clusters, lexicons, opt);
      row.params = trained.search.best;
      row.report = evaluate(trained.model, test, options.search.jobs);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

nlohmann::json AblationTable::to_json() const {
  auto rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j;
    j["features"] = r.groups.display_name();
    j["groups"] = r.groups.names();
    if (r.report) {
      j["accuracy"] = r.report->accuracy;
      j["n_correct"] = r.report->n_correct;
      j["n_abstracts"] = r.report->n_abstracts;
      j["ci_low"] = r.report->ci_low;
      j["ci_high"] = r.report->ci_high;
      j["summary"] = r.report->summary();
    }
    if (r.params) j["params"] = {{"cost", r.params->cost}, {"gamma", r.params->gamma}};
    if (!r.error.empty()) j["error"] = r.error;
    rows_json.push_back(std::move(j));
  }
  return {{"rows", rows_json}};
}

std::string AblationTable::to_text() const {
  std::ostringstream out;
  out << std::left << std::setw(16) << "Features" << std::setw(16) << "Accuracy (%)"
      << "95% CI\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(16) << r.groups.display_name();
    if (r.report) {
      out << std::setw(16) << format_percent(r.report->accuracy)
          << format_percent(r.report->ci_low) << " – " << format_percent(r.report->ci_high);
    } else {
      out << "error: " << r.error;
    }
    out << '\n';
  }
  return out.str();
}

std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("cross-validation needs k >= 2");
  if (k > n)
    throw std::invalid_argument("k = " + std::to_string(k) + " exceeds corpus size " +
                                std::to_string(n));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t p = 0; p < n; ++p) folds[p % k].push_back(order[p]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

CvReport cross_validate(const std::vector<Abstract>& corpus, std::size_t k, std::uint64_t seed,
                        const ClusterModel& clusters, const Lexicons& lexicons,
                        const TrainOptions& options) {
  CvReport report;
  report.k = k;
  report.folds = make_folds(corpus.size(), k, seed);
  double sum = 0.0;
  for (const auto& fold : report.folds) {
    std::vector<bool> held(corpus.size(), false);
    for (std::size_t i : fold) held[i] = true;
    std::vector<Abstract> train, test;
    for (std::size_t i = 0; i < corpus.size(); ++i) (held[i] ? test : train).push_back(corpus[i]);
    const TrainOutcome trained = train_model(train, clusters, lexicons, options);
    report.fold_params.push_back(trained.search.best);
    report.fold_reports.push_back(evaluate(trained.model, test, options.search.jobs));
    sum += report.fold_reports.back().accuracy;
  }
  report.mean_accuracy = sum / static_cast<double>(k);
  return report;
}

nlohmann::json CvReport::to_json() const {
  auto folds_json = nlohmann::json::array();
  for (std::size_t f = 0; f < fold_reports.size(); ++f) {
    folds_json.push_back({{"fold", f},
                          {"abstracts", folds[f].size()},
                          {"accuracy", fold_reports[f].accuracy},
                          {"n_correct", fold_reports[f].n_correct},
                          {"params", {{"cost", fold_params[f].cost}, {"gamma", fold_params[f].gamma}}}});
  }
  return {{"k", k}, {"mean_accuracy", mean_accuracy}, {"folds", folds_json}};
}

}  // namespace trialsize
