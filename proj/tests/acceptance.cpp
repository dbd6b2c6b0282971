// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance <path-to-trialsize-cli> <work-dir>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "oracles.hpp"
#include "trialsize/candidates.hpp"
#include "trialsize/embeddings.hpp"
#include "trialsize/pipeline.hpp"
#include "trialsize/random.hpp"
#include "trialsize/svm.hpp"

using namespace trialsize;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string g_cli;
fs::path g_work;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args) {
  const std::string cmd = g_cli + " " + args + " --quiet 2>>" + (g_work / "cli.log").string() +
                          " >>" + (g_work / "cli.log").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string fmt(double v, int digits = 3) {
  std::ostringstream ss;
  ss.precision(digits);
  ss << v;
  return ss.str();
}

// --- 1 ------------------------------------------------------------------------

Outcome rule_fixtures() {
  auto values = [](const Abstract& a) {
    std::multiset<std::int64_t> out;
    for (const auto& c : extract_candidates(a)) out.insert(c.value);
    return out;
  };
  const auto clustered = build_abstract(
      "fixture-1",
      {{"METHODS", "Methods",
        "Between 1996 and 2001, 1477 patients from 70 hospitals in 14 countries were enrolled."}},
      1477);
  const auto arms = build_abstract(
      "fixture-2",
      {{"METHODS", "Methods",
        "Patients were randomized to treatment with either drug before meals (n = 76) or "
        "placebo twice a day (n = 69)."}},
      145);
  const bool first = values(clustered) == std::multiset<std::int64_t>{1996, 2001, 1477, 70, 14};
  const bool second = values(arms) == std::multiset<std::int64_t>{76, 69};
  int positives = 0;
  for (const auto& l : label_candidates(arms)) positives += l.is_size;
  return {first && second && positives == 0,
          "clustered={1996,2001,1477,70,14}:" + std::string(first ? "yes" : "no") +
              " arms={76,69}:" + (second ? "yes" : "no") +
              " positives=" + std::to_string(positives)};
}

// --- 2 ------------------------------------------------------------------------

Outcome ci_reproduction() {
  struct Row {
    const char* name;
    int correct;
    const char* printed;
  };
  const Row rows[] = {{"All", 44, "76 – 95"},          {"Contextual", 40, "66 – 90"},
                      {"Structural", 38, "62 – 87"},   {"Lexical", 6, "4.5 – 24"},
                      {"- Contextual", 41, "69 – 91"}, {"- Structural", 40, "66 – 90"},
                      {"- Lexical", 42, "71 – 93"}};
  int ok = 0;
  std::string mismatches;
  for (const auto& r : rows) {
    const auto [lo, hi] = clopper_pearson(r.correct, 50, 0.95);
    const std::string got = format_percent(lo) + " – " + format_percent(hi);
    if (got == r.printed) ++ok;
    else mismatches += std::string(" ") + r.name + "=" + got;
  }
  return {ok == 7, std::to_string(ok) + "/7 intervals match" + mismatches};
}

// --- 3 ------------------------------------------------------------------------

Outcome smo_oracle() {
  Rng rng(20240501);
  SmoOptions opts;
  opts.tol = 1e-10;
  int instances = 0, matched = 0, kkt_ok = 0;
  double worst_gap = 0, worst_kkt = 0;
  while (instances < 250) {
    const std::size_t n = 2 + rng.below(7);
    const auto dim = static_cast<std::uint32_t>(2 + rng.below(12));
    std::vector<FeatureVector> xs(n);
    std::vector<int> ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::uint32_t d = 0; d < dim; ++d)
        if (rng.uniform() < 0.35) xs[i].entries.emplace_back(d, rng.uniform(-1, 1));
      ys[i] = rng.below(2) ? 1 : -1;
    }
    ys[rng.below(n)] = 1;
    std::size_t neg = rng.below(n);
    while (ys[neg] == 1 && std::count(ys.begin(), ys.end(), 1) == static_cast<long>(n)) {
      ys[neg] = -1;
    }
    if (std::count(ys.begin(), ys.end(), 1) == 0 || std::count(ys.begin(), ys.end(), -1) == 0)
      continue;
    const KernelParams params{std::pow(2.0, rng.uniform(-4, 6)), std::pow(2.0, rng.uniform(-5, 3))};
    const auto sol = train_smo(xs, ys, params, opts);
    Eigen::MatrixXd K(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) K(i, j) = rbf(xs[i], xs[j], params.gamma);
    const auto ref = oracle::brute_force_dual(K, ys, params.cost);
    const double gap = std::abs(sol.dual_objective - ref.objective);
    worst_gap = std::max(worst_gap, gap);
    matched += gap <= 1e-6;

    double violation = 0, balance = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = sol.alpha[i];
      balance += a * ys[i];
      const double m = ys[i] * sol.svm.decision_value(xs[i]);
      if (a < 0 || a > params.cost) violation = std::max(violation, 1.0);
      if (a == 0) violation = std::max(violation, 1 - m);
      else if (a == params.cost) violation = std::max(violation, m - 1);
      else violation = std::max(violation, std::abs(m - 1));
    }
    violation = std::max(violation, std::abs(balance));
    worst_kkt = std::max(worst_kkt, violation);
    kkt_ok += violation <= 1e-6;
    ++instances;
  }
  return {matched == instances && kkt_ok == instances,
          std::to_string(instances) + " instances, objective match " + std::to_string(matched) +
              " (worst gap " + fmt(worst_gap) + "), KKT " + std::to_string(kkt_ok) +
              " (worst violation " + fmt(worst_kkt) + ")"};
}

// --- 4 ------------------------------------------------------------------------

Outcome platt() {
  Rng rng(99);
  int stationary = 0, monotone = 0, negative_slope = 0;
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 10 + static_cast<int>(rng.below(400));
    const double shift = rng.uniform(0.2, 3.0);
    std::vector<double> f(n);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      y[i] = rng.uniform() < rng.uniform(0.1, 0.5) ? 1 : -1;
      f[i] = y[i] * shift + rng.normal() * rng.uniform(0.5, 2.0);
    }
    y[0] = 1;
    y[1] = -1;
    const auto p = platt_fit(f, y);
    double np = 0, nn = 0;
    for (int v : y) (v == 1 ? np : nn) += 1;
    const double tp = (np + 1) / (np + 2), tn = 1 / (nn + 2);
    double ga = 0, gb = 0;
    for (int i = 0; i < n; ++i) {
      const double t = y[i] == 1 ? tp : tn;
      const double prob = 1 / (1 + std::exp(p.a * f[i] + p.b));
      ga += (t - prob) * f[i];
      gb += t - prob;
    }
    const double norm = std::hypot(ga, gb);
    worst = std::max(worst, norm);
    stationary += norm < 1e-6;

    const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
    // Increasing when a < 0, decreasing when a > 0; a = 0 is not monotone.
    const double direction = p.a < 0 ? 1.0 : -1.0;
    bool strict = p.a != 0;
    double prev = 0;
    for (int k = 0; k <= 200; ++k) {
      const double x = *lo + (*hi - *lo) * k / 200.0;
      const double prob = platt_probability(platt_log_odds(p, x));
      if ((k > 0 && !(direction * (prob - prev) > 0)) || prob <= 0 || prob >= 1) strict = false;
      prev = prob;
    }
    monotone += strict;
    negative_slope += p.a < 0;
  }
  return {stationary == 50 && monotone == 50,
          "gradient < 1e-6 on " + std::to_string(stationary) + "/50 (worst " + fmt(worst) +
              "), strictly monotone on " + std::to_string(monotone) + "/50 (increasing on " +
              std::to_string(negative_slope) + " with a < 0)"};
}

// --- 5 ------------------------------------------------------------------------

Outcome clustering_and_embeddings() {
  Rng rng(5);
  int monotone = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 10 + rng.below(150), dim = 2 + rng.below(8);
    EmbeddingTable t(dim);
    std::vector<double> v(dim);
    const std::size_t centers = 1 + rng.below(6);
    for (std::size_t i = 0; i < n; ++i) {
      const double c = static_cast<double>(i % centers) * rng.uniform(0, 4);
      for (auto& x : v) x = c + rng.normal();
      t.set("w" + std::to_string(i), v);
    }
    KMeansOptions o;
    o.k = 1 + rng.below(std::min<std::size_t>(n, 12));
    o.seed = static_cast<std::uint64_t>(trial);
    const auto r = kmeans(t, o);
    bool ok = true;
    for (std::size_t i = 1; i < r.sse_history.size(); ++i)
      if (r.sse_history[i] > r.sse_history[i - 1]) ok = false;
    monotone += ok;
  }

  EmbeddingTable blobs(2);
  std::vector<int> truth;
  const double centers[3][2] = {{0, 0}, {10, 0}, {5, 9}};
  for (int i = 0; i < 150; ++i) {
    const int b = i % 3;
    const double p[2] = {centers[b][0] + 0.4 * rng.normal(), centers[b][1] + 0.4 * rng.normal()};
    blobs.set("b" + std::to_string(i), p);
    truth.push_back(b);
  }
  KMeansOptions o;
  o.k = 3;
  o.seed = 3;
  const auto model = kmeans(blobs, o).model;
  bool recovered = true;
  std::set<std::pair<int, std::size_t>> pairs;
  for (int i = 0; i < 150; ++i) pairs.insert({truth[i], model.cluster_of(blobs.words()[i])});
  std::set<std::size_t> ids;
  for (const auto& [b, id] : pairs) ids.insert(id);
  recovered = pairs.size() == 3 && ids.size() == 3;

  // Five-word vocabulary: center, context and three negatives.
  const std::size_t dim = 8;
  std::vector<std::vector<double>> words(5, std::vector<double>(dim));
  for (auto& w : words)
    for (auto& x : w) x = 0.6 * rng.normal();
  auto loss = [&](const std::vector<std::vector<double>>& ws, std::vector<double>* grads) {
    std::vector<std::span<const double>> ns{ws[2], ws[3], ws[4]};
    std::vector<double> a(dim), b(dim), c(3 * dim);
    const double l = sgns_loss_gradient(ws[0], ws[1], ns, a, b, c);
    if (grads) {
      grads->assign(a.begin(), a.end());
      grads->insert(grads->end(), b.begin(), b.end());
      grads->insert(grads->end(), c.begin(), c.end());
    }
    return l;
  };
  std::vector<double> analytic;
  loss(words, &analytic);
  double worst_rel = 0;
  const double h = 1e-6;
  for (std::size_t w = 0; w < 5; ++w) {
    for (std::size_t d = 0; d < dim; ++d) {
      auto plus = words, minus = words;
      plus[w][d] += h;
      minus[w][d] -= h;
      const double fd = (loss(plus, nullptr) - loss(minus, nullptr)) / (2 * h);
      const double an = analytic[w * dim + d];
      const double rel = std::abs(fd - an) / std::max(std::abs(fd), 1e-6);
      worst_rel = std::max(worst_rel, rel);
    }
  }
  return {monotone == 100 && recovered && worst_rel < 1e-4,
          "SSE non-increasing on " + std::to_string(monotone) + "/100, blobs recovered: " +
              (recovered ? "yes" : "no") + ", gradient worst relative error " + fmt(worst_rel)};
}

// --- 6 and 7 ------------------------------------------------------------------

fs::path write_config() {
  const auto path = g_work / "experiment.json";
  nlohmann::json cfg{{"clusters", {{"k", 40}}}, {"embeddings", {{"dimension", 50}}}, {"seed", 42}};
  std::ofstream(path) << cfg.dump(2) << "\n";
  return path;
}

Outcome end_to_end(const fs::path& config) {
  const auto data = g_work / "data";
  if (cli("synth --config " + config.string() + " --out " + data.string()) != 0)
    return {false, "synth failed"};
  const auto train = data / "train.jsonl", test = data / "test.jsonl";
  if (cli("train --config " + config.string() + " --train " + train.string() + " --out " +
          (g_work / "train").string()) != 0)
    return {false, "train failed"};
  if (cli("evaluate --config " + config.string() + " --model " +
          (g_work / "train" / "model.json").string() + " --test " + test.string() + " --out " +
          (g_work / "evaluate").string()) != 0)
    return {false, "evaluate failed"};
  const auto eval = nlohmann::json::parse(slurp(g_work / "evaluate" / "evaluation.json"));
  const double accuracy = eval["accuracy"];

  if (cli("ablate --config " + config.string() + " --train " + train.string() + " --test " +
          test.string() + " --out " + (g_work / "ablate").string()) != 0)
    return {false, "ablate failed"};
  const auto table = nlohmann::json::parse(slurp(g_work / "ablate" / "ablation.json"));
  double lexical = -1, others_min = 2;
  std::string rows;
  for (const auto& r : table["rows"]) {
    const std::string name = r["features"];
    const double acc = r["accuracy"];
    rows += " " + name + "=" + format_percent(acc);
    if (name == "Lexical") lexical = acc;
    else others_min = std::min(others_min, acc);
  }
  const bool ok = accuracy >= 0.90 && lexical >= 0 && lexical < others_min;
  return {ok, "test accuracy " + eval["summary"].get<std::string>() + "; ablation:" + rows};
}

Outcome determinism(const fs::path& config) {
  const auto data = g_work / "data";
  const auto reference = g_work / "train" / "model.json";
  std::vector<std::string> models, predictions;
  for (const unsigned jobs : {1u, 2u, 1u}) {
    const auto dir = g_work / ("determinism-" + std::to_string(models.size()));
    if (cli("train --config " + config.string() + " --jobs " + std::to_string(jobs) +
            " --train " + (data / "train.jsonl").string() + " --out " + (dir / "train").string()) != 0)
      return {false, "train failed"};
    if (cli("predict --config " + config.string() + " --jobs " + std::to_string(jobs) +
            " --model " + (dir / "train" / "model.json").string() + " --corpus " +
            (data / "test.jsonl").string() + " --out " + (dir / "predict").string()) != 0)
      return {false, "predict failed"};
    models.push_back(slurp(dir / "train" / "model.json"));
    predictions.push_back(slurp(dir / "predict" / "predictions.jsonl"));
  }
  const bool same_models = std::all_of(models.begin(), models.end(),
                                       [&](const std::string& m) { return m == models[0]; }) &&
                           models[0] == slurp(reference);
  const bool same_predictions =
      std::all_of(predictions.begin(), predictions.end(),
                  [&](const std::string& p) { return p == predictions[0]; });
  return {same_models && same_predictions && !predictions[0].empty(),
          "3 runs (jobs 1, 2, 1): models identical: " + std::string(same_models ? "yes" : "no") +
              ", predictions identical: " + (same_predictions ? "yes" : "no")};
}

// --- 8 ------------------------------------------------------------------------

Outcome argmax_invariance() {
  Rng rng(8);
  const std::vector<std::function<double(double)>> transforms{
      [](double p) { return std::log(p); },
      [](double p) { return std::log(p / (1 - p)); },
      [](double p) { return p * p * p; },
      [](double p) { return 3.5 * p - 7.0; },
      [](double p) { return std::exp(4 * p); },
      [](double p) { return std::sqrt(p); },
      [](double p) { return p / (1 + p); },
  };
  int sets = 0, stable = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(12);
    std::vector<Candidate> cs(n);
    std::vector<double> probs(n);
    for (std::size_t i = 0; i < n; ++i) {
      cs[i].abstract_id = "x";
      cs[i].token_position = i;
      cs[i].value = 10 + static_cast<std::int64_t>(rng.below(1000));
      // A coarse grid makes ties common.
      probs[i] = (1 + static_cast<double>(rng.below(15))) / 16.0;
    }
    const auto base = decode("x", cs, probs);
    bool same = true;
    for (const auto& t : transforms) {
      std::vector<double> mapped(n);
      for (std::size_t i = 0; i < n; ++i) mapped[i] = t(probs[i]);
      const auto p = decode("x", cs, mapped);
      if (p.predicted_value != base.predicted_value ||
          p.winning_candidate->token_position != base.winning_candidate->token_position)
        same = false;
    }
    ++sets;
    stable += same;
  }
  return {stable == sets, std::to_string(stable) + "/" + std::to_string(sets) +
                              " prediction sets unchanged under 7 increasing transforms"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: acceptance <trialsize-cli> <work-dir>\n";
    return 2;
  }
  g_cli = argv[1];
  g_work = argv[2];
  fs::remove_all(g_work);
  fs::create_directories(g_work);

  const fs::path config = write_config();
  struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "rule-oracle fixtures", 1, rule_fixtures},
      {2, "confidence interval reproduction", 1, ci_reproduction},
      {3, "SMO brute-force equivalence", 60, smo_oracle},
      {4, "Platt calibration", 10, platt},
      {5, "k-means and skip-gram properties", 60, clustering_and_embeddings},
      {6, "end-to-end synthetic experiment", 600, [&] { return end_to_end(config); }},
      {7, "determinism across runs and --jobs", 0, [&] { return determinism(config); }},
      {8, "argmax invariance", 5, argmax_invariance},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.limit_seconds <= 0 || secs < c.limit_seconds;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): "
              << o.detail << " [" << fmt(secs, 3) << " s";
    if (c.limit_seconds > 0) std::cout << ", limit " << c.limit_seconds << " s";
    std::cout << "]" << std::endl;
  }
  std::cout << (failed ? "FAILED: " + std::to_string(failed) + " criteria" : "ALL CRITERIA PASSED")
            << std::endl;
  return failed ? 1 : 0;
}
