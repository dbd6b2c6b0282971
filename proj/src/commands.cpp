#include "trialsize/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "trialsize/candidates.hpp"
#include "trialsize/features.hpp"
#include "trialsize/pipeline.hpp"
#include "trialsize/synthetic.hpp"

namespace trialsize {
namespace fs = std::filesystem;

namespace {

bool g_quiet = false;

void log(const std::string& msg) {
  if (!g_quiet) std::cerr << "[trialsize] " << msg << '\n';
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_file(path, j.dump(2) + "\n"); }

fs::path prepare_output(const RunConfig& config) {
  fs::path out(config.output_dir);
  fs::create_directories(out);
  write_json(out / "config.json", config.to_json());
  return out;
}

void require_gold(const std::vector<Abstract>& corpus, const std::string& what) {
  std::vector<std::string> problems;
  for (const auto& a : corpus)
    if (!a.gold_size) problems.push_back(what + ": abstract '" + a.id + "' has no gold_size");
  if (!problems.empty()) throw ConfigError(problems);
}

std::vector<Abstract> load_labeled(const RunConfig& config, const std::string& path,
                                   const std::string& what) {
  auto corpus = read_corpus_input(path, config.plain_input);
  if (corpus.empty()) throw ConfigError({what + ": corpus " + path + " is empty"});
  require_gold(corpus, what);
  return corpus;
}

TrainOptions train_options(const RunConfig& config) {
  TrainOptions o;
  o.groups = config.features;
  o.grid = config.grid;
  o.search.smo = config.smo;
  o.search.cv_folds = config.grid_cv_folds;
  o.search.seed = config.seed_for("grid-cv");
  o.search.jobs = config.jobs;
  o.min_candidate_value = config.min_candidate_value;
  return o;
}

std::vector<Abstract> concat(std::vector<Abstract> a, const std::vector<Abstract>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::vector<Abstract> unlabeled_text(const RunConfig& config) {
  if (config.unlabeled_corpus.empty()) return {};
  return read_corpus_input(config.unlabeled_corpus, config.plain_input);
}

nlohmann::json params_json(const KernelParams& p) { return {{"C", p.cost}, {"gamma", p.gamma}}; }

// --- subcommands --------------------------------------------------------------

int cmd_train(RunConfig config) {
  config.validate({"train_corpus"});
  const auto train = load_labeled(config, config.train_corpus, "train_corpus");
  const auto out = prepare_output(config);
  const auto clusters = resolve_clusters(config, concat(train, unlabeled_text(config)));
  const auto lexicons = config.resolve_lexicons();
  log("training on " + std::to_string(train.size()) + " abstracts");
  const auto outcome = train_model(train, clusters, lexicons, train_options(config));
  outcome.model.save(out / "model.json");

  const auto fit = evaluate(outcome.model, train, config.jobs);
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : outcome.search.cells)
    cells.push_back({{"C", c.params.cost},
                     {"gamma", c.params.gamma},
                     {"correct", c.correct},
                     {"total", c.total},
                     {"accuracy", c.accuracy},
                     {"iterations", c.iterations},
                     {"converged", c.converged}});
  nlohmann::json report{{"abstracts", train.size()},
                        {"candidate_count", outcome.candidate_count},
                        {"positive_count", outcome.positive_count},
                        {"best", params_json(outcome.search.best)},
                        {"grid_accuracy", outcome.search.best_accuracy},
                        {"training_accuracy", fit.accuracy},
                        {"features", config.features.display_name()},
                        {"support_vectors", outcome.model.svm.support_vectors.size()},
                        {"grid", cells}};
  write_json(out / "train_report.json", report);
  log("candidates " + std::to_string(outcome.candidate_count) + ", best C=" +
      std::to_string(outcome.search.best.cost) + " gamma=" +
      std::to_string(outcome.search.best.gamma) + ", training accuracy " + fit.summary());
  return kExitOk;
}

int cmd_predict(RunConfig config) {
  config.validate({"model", "corpus"});
  const auto model = SvmModel::load(config.model);
  const auto corpus = read_corpus_input(config.corpus, config.plain_input);
  const auto out = prepare_output(config);
  const auto predictions = predict_corpus(model, corpus, config.jobs);
  std::string lines;
  for (const auto& p : predictions) lines += prediction_to_json(p).dump() + "\n";
  write_file(out / "predictions.jsonl", lines);
  log("wrote " + std::to_string(predictions.size()) + " predictions");
  return kExitOk;
}

int cmd_evaluate(RunConfig config) {
  config.validate({"model", "test_corpus"});
  const auto model = SvmModel::load(config.model);
  const auto test = load_labeled(config, config.test_corpus, "test_corpus");
  const auto out = prepare_output(config);
  const auto predictions = predict_corpus(model, test, config.jobs);
  const auto report = score_predictions(test, predictions);
  std::string lines;
  for (const auto& p : predictions) lines += prediction_to_json(p).dump() + "\n";
  write_file(out / "predictions.jsonl", lines);
  write_json(out / "evaluation.json", report.to_json());
  write_file(out / "evaluation.txt", "Accuracy (%)  95% CI\n" + report.summary() + "\n");
  std::cout << "accuracy " << report.summary() << " (" << report.n_correct << "/"
            << report.n_abstracts << ")\n";
  return kExitOk;
}

int cmd_ablate(RunConfig config) {
  config.validate({"train_corpus", "test_corpus"});
  const auto train = load_labeled(config, config.train_corpus, "train_corpus");
  const auto test = load_labeled(config, config.test_corpus, "test_corpus");
  const auto out = prepare_output(config);
  const auto clusters = resolve_clusters(config, concat(train, unlabeled_text(config)));
  const auto table = ablate(train, test, clusters, config.resolve_lexicons(), train_options(config));
  write_json(out / "ablation.json", table.to_json());
  const auto text = table.to_text();
  write_file(out / "ablation.txt", text);
  std::cout << text;
  const bool any_failed = std::any_of(table.rows.begin(), table.rows.end(),
                                      [](const AblationRow& r) { return !r.report; });
  return any_failed ? kExitError : kExitOk;
}

int cmd_cv(RunConfig config) {
  config.validate({"train_corpus"});
  const auto train = load_labeled(config, config.train_corpus, "train_corpus");
  if (config.cv_folds > train.size())
    throw ConfigError({"cv_folds (" + std::to_string(config.cv_folds) +
                       ") exceeds the number of abstracts (" + std::to_string(train.size()) + ")"});
  const auto out = prepare_output(config);
  const auto clusters = resolve_clusters(config, concat(train, unlabeled_text(config)));
  const auto report = cross_validate(train, config.cv_folds, config.seed_for("cv-folds"), clusters,
                                     config.resolve_lexicons(), train_options(config));
  write_json(out / "cv_report.json", report.to_json());
  std::cout << "mean accuracy over " << report.k << " folds: "
            << format_percent(report.mean_accuracy) << "%\n";
  return kExitOk;
}

int cmd_cluster(RunConfig config) {
  config.validate({});
  std::vector<Abstract> text;
  if (!config.train_corpus.empty())
    text = read_corpus_input(config.train_corpus, config.plain_input);
  text = concat(std::move(text), unlabeled_text(config));
  if (config.embeddings.path.empty() && text.empty())
    throw ConfigError({"cluster needs embeddings.path or a corpus to train vectors on"});
  const auto out = prepare_output(config);
  RunConfig fresh = config;
  fresh.clusters.path.clear();
  const auto model = resolve_clusters(fresh, text);
  write_json(out / "clusters.json", model.to_json());
  log("clustered " + std::to_string(model.assignment().size()) + " words into " +
      std::to_string(model.k()) + " clusters");
  return kExitOk;
}

int cmd_extract(RunConfig config) {
  config.validate({"corpus"});
  const auto corpus = read_corpus_input(config.corpus, config.plain_input);
  const auto out = prepare_output(config);
  std::optional<SvmModel> model;
  if (!config.model.empty()) model = SvmModel::load(config.model);

  std::optional<ClusterModel> clusters;
  std::optional<Lexicons> lexicons;
  if (config.dump_features && !model) {
    clusters = resolve_clusters(config, concat(corpus, unlabeled_text(config)));
    lexicons = config.resolve_lexicons();
  }
  const std::int64_t min_value = model ? model->min_candidate_value : config.min_candidate_value;

  std::string lines;
  std::size_t count = 0;
  for (const auto& a : corpus) {
    for (const auto& c : extract_candidates(a, min_value)) {
      auto j = candidate_to_json(c);
      if (config.dump_features) {
        const auto extractor =
            model ? feature_groups(model->groups, model->clusters, model->lexicons)
                  : feature_groups(config.features, *clusters, *lexicons);
        j["features"] = features_to_json(extractor(c, a));
      }
      if (a.gold_size) j["is_size"] = c.value == *a.gold_size;
      lines += j.dump() + "\n";
      ++count;
    }
  }
  write_file(out / "candidates.jsonl", lines);
  log("extracted " + std::to_string(count) + " candidates from " +
      std::to_string(corpus.size()) + " abstracts");
  return kExitOk;
}

int cmd_embed_train(RunConfig config) {
  config.validate({});
  std::vector<Abstract> text;
  if (!config.train_corpus.empty())
    text = read_corpus_input(config.train_corpus, config.plain_input);
  text = concat(std::move(text), unlabeled_text(config));
  if (!config.corpus.empty())
    text = concat(std::move(text), read_corpus_input(config.corpus, config.plain_input));
  if (text.empty()) throw ConfigError({"embed-train needs at least one corpus"});
  const auto out = prepare_output(config);
  auto opts = config.embeddings.skipgram;
  opts.seed = config.seed_for("skipgram");
  const auto table = train_skipgram(lowercase_sentences(text), opts);
  save_embeddings(out / "embeddings.txt", table);
  log("trained " + std::to_string(table.size()) + " vectors of dimension " +
      std::to_string(table.dimension()));
  return kExitOk;
}

int cmd_synth(RunConfig config) {
  config.validate({});
  if (config.synth_train == 0) throw ConfigError({"synth_train must be positive"});
  const auto out = prepare_output(config);
  SyntheticOptions opts;
  opts.abstracts = config.synth_train + config.synth_test;
  opts.seed = config.seed_for("synth");
  auto all = generate_synthetic_corpus(opts);
  std::vector<Abstract> train(all.begin(), all.begin() + config.synth_train);
  std::vector<Abstract> test(all.begin() + config.synth_train, all.end());
  write_corpus(out / "train.jsonl", train);
  write_corpus(out / "test.jsonl", test);
  log("wrote " + std::to_string(train.size()) + " train and " + std::to_string(test.size()) +
      " test abstracts");
  return kExitOk;
}

std::vector<double> parse_number_list(const std::string& s) {
  std::vector<double> values;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    // "2^-5" style powers of two are accepted alongside plain decimals.
    const auto caret = item.find('^');
    try {
      if (caret != std::string::npos)
        values.push_back(std::pow(std::stod(item.substr(0, caret)), std::stod(item.substr(caret + 1))));
      else
        values.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError({"cannot parse number '" + item + "'"});
    }
  }
  return values;
}

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> names;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) names.push_back(item);
  return names;
}

}  // namespace

std::vector<Abstract> read_corpus_input(const std::string& path, bool plain) {
  if (!plain) {
    auto load = load_corpus(path);
    for (const auto& d : load.diagnostics) log(d);
    return std::move(load.abstracts);
  }
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }
  std::vector<Abstract> out;
  for (const auto& f : files) out.push_back(import_plain(read_file(f), f.stem().string()));
  return out;
}

std::vector<std::vector<std::string>> lowercase_sentences(const std::vector<Abstract>& corpus) {
  std::vector<std::vector<std::string>> out;
  for (const auto& a : corpus)
    for (const auto& sec : a.sections)
      for (const auto& s : sec.sentences) {
        std::vector<std::string> words;
        words.reserve(s.tokens.size());
        for (const auto& t : s.tokens) words.push_back(t.lower);
        if (!words.empty()) out.push_back(std::move(words));
      }
  return out;
}

ClusterModel resolve_clusters(const RunConfig& config, const std::vector<Abstract>& text) {
  if (!config.clusters.path.empty()) {
    log("loading clusters from " + config.clusters.path);
    return ClusterModel::from_json(nlohmann::json::parse(read_file(config.clusters.path)));
  }
  EmbeddingTable table(0);
  if (!config.embeddings.path.empty()) {
    std::vector<std::string> warnings;
    table = load_embeddings(config.embeddings.path, &warnings);
    for (const auto& w : warnings) log(w);
  } else {
    auto opts = config.embeddings.skipgram;
    opts.seed = config.seed_for("skipgram");
    log("training skip-gram vectors");
    table = train_skipgram(lowercase_sentences(text), opts);
  }
  KMeansOptions km;
  km.k = config.clusters.k;
  km.seed = config.seed_for("kmeans");
  km.max_iters = config.clusters.max_iters;
  km.tol = config.clusters.tol;
  km.normalize = config.clusters.normalize;
  log("clustering " + std::to_string(table.size()) + " vectors into " + std::to_string(km.k));
  return kmeans(table, km).model;
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Sample-size extraction from trial abstracts"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out, train, test, unlabeled, corpus, model, embeddings, clusters,
      population, temporal, likely, features, cost, gamma;
  std::optional<unsigned> jobs;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k, cv_folds, grid_cv_folds, synth_train, synth_test, dimension, epochs;
  std::optional<std::int64_t> min_value;
  bool normalize = false, dump = false, plain = false, quiet = false;

  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", out, "Output directory");
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Global seed");
  app.add_flag("--quiet", quiet, "Suppress progress logging");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--train", train, "Labeled training corpus (JSON lines)");
    sub->add_option("--test", test, "Labeled test corpus (JSON lines)");
    sub->add_option("--unlabeled", unlabeled, "Extra text for skip-gram training");
    sub->add_option("--corpus", corpus, "Input corpus");
    sub->add_option("--model", model, "Model file");
    sub->add_option("--embeddings", embeddings, "Word vectors in text format");
    sub->add_option("--clusters", clusters, "Cluster model JSON");
    sub->add_option("--k", k, "Number of word clusters");
    sub->add_flag("--normalize", normalize, "Length-normalize vectors before clustering");
    sub->add_option("--dimension", dimension, "Skip-gram vector dimension");
    sub->add_option("--epochs", epochs, "Skip-gram epochs");
    sub->add_option("--population-terms", population, "Population term list");
    sub->add_option("--temporal-terms", temporal, "Temporal term list");
    sub->add_option("--likely-labels", likely, "Likely section label substrings");
    sub->add_option("--features", features,
                    "Comma-separated groups: contextual,lexical,structural");
    sub->add_option("--cost", cost, "Comma-separated C values (e.g. 2^-5,2^-3)");
    sub->add_option("--gamma", gamma, "Comma-separated gamma values");
    sub->add_option("--grid-cv-folds", grid_cv_folds, "Abstract-level CV folds inside grid search");
    sub->add_option("--folds", cv_folds, "Cross-validation folds");
    sub->add_option("--min-value", min_value, "Smallest candidate value");
    sub->add_flag("--dump-features", dump, "Include named features in extract output");
    sub->add_flag("--plain", plain, "Inputs are plain-text abstracts");
    sub->add_option("--n-train", synth_train, "Synthetic training abstracts");
    sub->add_option("--n-test", synth_test, "Synthetic test abstracts");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "Global seed");
    sub->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_flag("--quiet", quiet, "Suppress progress logging");
  };

  const std::vector<std::pair<std::string, std::string>> commands{
      {"train", "Train a model and write model.json"},
      {"predict", "Predict sample sizes for a corpus"},
      {"evaluate", "Score a model on a labeled corpus"},
      {"ablate", "Run the feature-group ablation table"},
      {"cv", "Abstract-level cross-validation"},
      {"cluster", "Cluster word vectors with k-means"},
      {"extract", "Emit candidates as JSON lines"},
      {"embed-train", "Train skip-gram word vectors"},
      {"synth", "Generate a synthetic train/test corpus"},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    subs[name] = app.add_subcommand(name, help);
    add_common(subs[name]);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  g_quiet = quiet;

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
    if (out) config.output_dir = *out;
    if (jobs) config.jobs = *jobs;
    if (seed) config.seed = *seed;
    if (train) config.train_corpus = *train;
    if (test) config.test_corpus = *test;
    if (unlabeled) config.unlabeled_corpus = *unlabeled;
    if (corpus) config.corpus = *corpus;
    if (model) config.model = *model;
    if (embeddings) config.embeddings.path = *embeddings;
    if (clusters) config.clusters.path = *clusters;
    if (k) config.clusters.k = *k;
    if (normalize) config.clusters.normalize = true;
    if (dimension) config.embeddings.skipgram.dimension = *dimension;
    if (epochs) config.embeddings.skipgram.epochs = *epochs;
    if (population) config.lexicons.population = *population;
    if (temporal) config.lexicons.temporal = *temporal;
    if (likely) config.lexicons.likely_labels = *likely;
    if (features) {
      try {
        config.features = FeatureGroups::from_names(split_names(*features));
      } catch (const std::invalid_argument& e) {
        throw ConfigError({std::string("--features: ") + e.what()});
      }
    }
    if (cost) config.grid.cost_values = parse_number_list(*cost);
    if (gamma) config.grid.gamma_values = parse_number_list(*gamma);
    if (grid_cv_folds) config.grid_cv_folds = *grid_cv_folds;
    if (cv_folds) config.cv_folds = *cv_folds;
    if (min_value) config.min_candidate_value = *min_value;
    if (dump) config.dump_features = true;
    if (plain) config.plain_input = true;
    if (synth_train) config.synth_train = *synth_train;
    if (synth_test) config.synth_test = *synth_test;

    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "train") return cmd_train(config);
    if (name == "predict") return cmd_predict(config);
    if (name == "evaluate") return cmd_evaluate(config);
    if (name == "ablate") return cmd_ablate(config);
    if (name == "cv") return cmd_cv(config);
    if (name == "cluster") return cmd_cluster(config);
    if (name == "extract") return cmd_extract(config);
    if (name == "embed-train") return cmd_embed_train(config);
    if (name == "synth") return cmd_synth(config);
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace trialsize
