#include "trialsize/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "trialsize/corpus.hpp"
#include "trialsize/random.hpp"

namespace trialsize {

std::optional<std::size_t> EmbeddingTable::find(std::string_view word) const {
  const auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool EmbeddingTable::set(std::string_view word, std::span<const double> values) {
  if (values.size() != dimension_)
    throw EmbeddingError("vector for '" + std::string(word) + "' has dimension " +
                         std::to_string(values.size()) + ", expected " +
                         std::to_string(dimension_));
  if (const auto i = find(word)) {
    std::copy(values.begin(), values.end(), data_.begin() + static_cast<std::ptrdiff_t>(*i * dimension_));
    return true;
  }
  index_.emplace(std::string(word), words_.size());
  words_.emplace_back(word);
  data_.insert(data_.end(), values.begin(), values.end());
  return false;
}

namespace {

std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t s = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > s) out.push_back(line.substr(s, i - s));
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

EmbeddingTable read_embeddings(std::istream& in, std::vector<std::string>* warnings) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> declared;
  EmbeddingTable table;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (!have_header) {
      std::size_t vocab = 0, dim = 0;
      if (fields.size() != 2 ||
          std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), vocab).ec !=
              std::errc() ||
          std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), dim).ec !=
              std::errc() ||
          dim == 0)
        throw EmbeddingError("line " + std::to_string(line_no) +
                             ": expected header '<vocab_size> <dimension>'");
      declared = vocab;
      table = EmbeddingTable(dim);
      have_header = true;
      continue;
    }
    if (fields.size() != table.dimension() + 1)
      throw EmbeddingError("line " + std::to_string(line_no) + ": expected " +
                           std::to_string(table.dimension()) + " values, found " +
                           std::to_string(fields.size() - 1));
    std::vector<double> values(table.dimension());
    for (std::size_t d = 0; d < values.size(); ++d) {
      const auto v = parse_double(fields[d + 1]);
      if (!v)
        throw EmbeddingError("line " + std::to_string(line_no) + ": bad number '" +
                             std::string(fields[d + 1]) + "'");
      values[d] = *v;
    }
    const std::string word = to_lower(fields[0]);
    if (table.set(word, values) && warnings)
      warnings->push_back("line " + std::to_string(line_no) + ": duplicate word '" + word +
                          "', keeping the last vector");
  }
  if (declared && *declared != table.size() && warnings)
    warnings->push_back("header declares " + std::to_string(*declared) + " words, found " +
                        std::to_string(table.size()));
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw EmbeddingError("cannot open embedding file " + path.string());
  return read_embeddings(in, warnings);
}

void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  out << table.size() << ' ' << table.dimension() << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.words()[i];
    for (double v : table.vector(i)) out << ' ' << format_double(v);
    out << '\n';
  }
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw EmbeddingError("cannot write embedding file " + path.string());
  write_embeddings(out, table);
}

// --- skip-gram ----------------------------------------------------------------

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

double sgns_loss_gradient(std::span<const double> center, std::span<const double> context,
                          std::span<const std::span<const double>> negatives,
                          std::span<double> d_center, std::span<double> d_context,
                          std::span<double> d_negatives) {
  const std::size_t dim = center.size();
  std::fill(d_center.begin(), d_center.end(), 0.0);
  const double pos = dot(center, context);
  double loss = -log_sigmoid(pos);
  // d/dx -log s(x) = s(x) - 1
  const double g_pos = sigmoid(pos) - 1.0;
  for (std::size_t d = 0; d < dim; ++d) {
    d_center[d] += g_pos * context[d];
    d_context[d] = g_pos * center[d];
  }
  for (std::size_t k = 0; k < negatives.size(); ++k) {
    const auto neg = negatives[k];
    const double s = dot(center, neg);
    loss -= log_sigmoid(-s);
    // d/dx -log s(-x) = s(x)
    const double g_neg = sigmoid(s);
    for (std::size_t d = 0; d < dim; ++d) {
      d_center[d] += g_neg * neg[d];
      d_negatives[k * dim + d] = g_neg * center[d];
    }
  }
  return loss;
}

EmbeddingTable train_skipgram(const std::vector<std::vector<std::string>>& sentences,
                              const SkipGramOptions& opt) {
  if (opt.dimension < 2) throw EmbeddingError("skip-gram dimension must be >= 2");
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& s : sentences)
    for (const auto& w : s) ++counts[w];
  std::vector<std::pair<std::string, std::size_t>> vocab;
  for (auto& [w, c] : counts)
    if (c >= std::max<std::size_t>(1, opt.min_count)) vocab.emplace_back(w, c);
  if (vocab.empty()) throw EmbeddingError("skip-gram corpus is empty");
  std::sort(vocab.begin(), vocab.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::unordered_map<std::string, std::size_t> id;
  for (std::size_t i = 0; i < vocab.size(); ++i) id.emplace(vocab[i].first, i);

  std::vector<std::vector<std::size_t>> corpus;
  std::size_t total_tokens = 0;
  for (const auto& s : sentences) {
    std::vector<std::size_t> ids;
    for (const auto& w : s)
      if (const auto it = id.find(w); it != id.end()) ids.push_back(it->second);
    total_tokens += ids.size();
    if (ids.size() > 1) corpus.push_back(std::move(ids));
  }

  // Unigram^0.75 noise distribution.
  std::vector<double> noise_cdf(vocab.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    acc += std::pow(static_cast<double>(vocab[i].second), 0.75);
    noise_cdf[i] = acc;
  }

  const std::size_t dim = opt.dimension;
  const std::size_t V = vocab.size();
  Rng rng(opt.seed);
  std::vector<double> in(V * dim), out(V * dim, 0.0);
  for (auto& x : in) x = (rng.uniform() - 0.5) / static_cast<double>(dim);

  auto row = [dim](std::vector<double>& m, std::size_t i) {
    return std::span<double>(m.data() + i * dim, dim);
  };
  auto sample_noise = [&]() {
    const double u = rng.uniform() * acc;
    const auto it = std::upper_bound(noise_cdf.begin(), noise_cdf.end(), u);
    return static_cast<std::size_t>(std::min<std::ptrdiff_t>(
        it - noise_cdf.begin(), static_cast<std::ptrdiff_t>(V - 1)));
  };

  std::vector<double> d_center(dim), d_context(dim), d_neg(opt.negatives * dim);
  std::vector<std::size_t> neg_ids;
  std::vector<std::span<const double>> neg_rows;
  const double total_work = static_cast<double>(std::max<std::size_t>(1, opt.epochs * total_tokens));
  std::size_t processed = 0;
  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    for (const auto& sent : corpus) {
      for (std::size_t pos = 0; pos < sent.size(); ++pos, ++processed) {
        const double lr = std::max(opt.learning_rate * 1e-4,
                                   opt.learning_rate * (1.0 - processed / total_work));
        const std::size_t reach = 1 + static_cast<std::size_t>(rng.below(std::max<std::size_t>(1, opt.window)));
        const std::size_t lo = pos >= reach ? pos - reach : 0;
        const std::size_t hi = std::min(sent.size() - 1, pos + reach);
        for (std::size_t c = lo; c <= hi; ++c) {
          if (c == pos) continue;
          const std::size_t center = sent[pos];
          const std::size_t context = sent[c];
          neg_ids.clear();
          neg_rows.clear();
          for (std::size_t k = 0; k < opt.negatives; ++k) {
            const std::size_t n = sample_noise();
            if (n == context) continue;
            neg_ids.push_back(n);
            neg_rows.emplace_back(row(out, n));
          }
          sgns_loss_gradient(row(in, center), row(out, context), neg_rows, d_center, d_context,
                             std::span<double>(d_neg.data(), neg_ids.size() * dim));
          auto v = row(in, center);
          auto u = row(out, context);
          for (std::size_t d = 0; d < dim; ++d) {
            v[d] -= lr * d_center[d];
            u[d] -= lr * d_context[d];
          }
          for (std::size_t k = 0; k < neg_ids.size(); ++k) {
            auto nr = row(out, neg_ids[k]);
            for (std::size_t d = 0; d < dim; ++d) nr[d] -= lr * d_neg[k * dim + d];
          }
        }
      }
    }
  }

  EmbeddingTable table(dim);
  for (std::size_t i = 0; i < V; ++i) table.set(vocab[i].first, row(in, i));
  return table;
}

// --- k-means --------------------------------------------------------------------

ClusterModel::ClusterModel(std::size_t k, std::vector<std::vector<double>> centroids,
                           std::map<std::string, std::size_t> assignment)
    : k_(k), centroids_(std::move(centroids)), assignment_(std::move(assignment)) {
  if (centroids_.size() != k_)
    throw EmbeddingError("cluster model has " + std::to_string(centroids_.size()) +
                         " centroids, expected " + std::to_string(k_));
  for (const auto& [w, c] : assignment_)
    if (c >= k_) throw EmbeddingError("cluster id out of range for word '" + w + "'");
}

std::size_t ClusterModel::cluster_of(std::string_view word) const {
  if (word == "<pad>") return oov_id();
  const auto it = assignment_.find(to_lower(word));
  return it == assignment_.end() ? oov_id() : it->second;
}

nlohmann::json ClusterModel::to_json() const {
  return {{"k", k_}, {"oov_id", oov_id()}, {"assignment", assignment_}, {"centroids", centroids_}};
}

ClusterModel ClusterModel::from_json(const nlohmann::json& j) {
  try {
    const auto k = j.at("k").get<std::size_t>();
    if (j.at("oov_id").get<std::size_t>() != k)
      throw EmbeddingError("cluster model oov_id must equal k");
    return ClusterModel(k, j.at("centroids").get<std::vector<std::vector<double>>>(),
                        j.at("assignment").get<std::map<std::string, std::size_t>>());
  } catch (const nlohmann::json::exception& e) {
    throw EmbeddingError(std::string("malformed cluster model: ") + e.what());
  }
}

std::uint64_t ClusterModel::content_hash() const { return fnv1a64(to_json().dump()); }

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Nearest-centroid assignment; returns the SSE.
double assign(const std::vector<std::vector<double>>& points,
              const std::vector<std::vector<double>>& centroids, std::vector<std::size_t>& labels) {
  double sse = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = squared_distance(points[i], centroids[c]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    labels[i] = best;
    sse += best_d;
  }
  return sse;
}

}  // namespace

KMeansResult kmeans(const EmbeddingTable& table, const KMeansOptions& opt) {
  const std::size_t n = table.size();
  if (n == 0) throw EmbeddingError("k-means needs a nonempty embedding table");
  if (opt.k == 0) throw EmbeddingError("k-means needs k >= 1");
  if (opt.k > n)
    throw EmbeddingError("k = " + std::to_string(opt.k) + " exceeds vocabulary size " +
                         std::to_string(n));
  const std::size_t dim = table.dimension();
  std::vector<std::vector<double>> points(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = table.vector(i);
    points[i].assign(v.begin(), v.end());
    if (opt.normalize) {
      const double norm = std::sqrt(squared_distance(points[i], std::vector<double>(dim, 0.0)));
      if (norm > 0)
        for (auto& x : points[i]) x /= norm;
    }
  }

  // k-means++ seeding.
  Rng rng(opt.seed);
  std::vector<std::vector<double>> centroids;
  std::vector<bool> chosen(n, false);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t first = static_cast<std::size_t>(rng.below(n));
  centroids.push_back(points[first]);
  chosen[first] = true;
  while (centroids.size() < opt.k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points[i], centroids.back()));
      total += d2[i];
    }
    std::size_t pick = n;
    if (total > 0) {
      double u = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0) continue;
        pick = i;
        if (u < d2[i]) break;
        u -= d2[i];
      }
    } else {
      // All remaining points coincide with a centroid; take an unused one.
      std::vector<std::size_t> unused;
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) unused.push_back(i);
      pick = unused[static_cast<std::size_t>(rng.below(unused.size()))];
    }
    centroids.push_back(points[pick]);
    chosen[pick] = true;
  }

  KMeansResult result;
  std::vector<std::size_t> labels(n);
  result.sse_history.push_back(assign(points, centroids, labels));
  for (std::size_t it = 0; it < opt.max_iters; ++it) {
    std::vector<std::vector<double>> sums(opt.k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> sizes(opt.k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++sizes[labels[i]];
      for (std::size_t d = 0; d < dim; ++d) sums[labels[i]][d] += points[i][d];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < opt.k; ++c) {
      if (sizes[c] == 0) continue;  // empty cluster keeps its centroid
      for (auto& x : sums[c]) x /= static_cast<double>(sizes[c]);
      shift = std::max(shift, std::sqrt(squared_distance(sums[c], centroids[c])));
      centroids[c] = std::move(sums[c]);
    }
    result.sse_history.push_back(assign(points, centroids, labels));
    result.iterations = it + 1;
    if (shift < opt.tol) break;
  }

  std::map<std::string, std::size_t> assignment;
  for (std::size_t i = 0; i < n; ++i) assignment.emplace(table.words()[i], labels[i]);
  result.model = ClusterModel(opt.k, std::move(centroids), std::move(assignment));
  return result;
}

}  // namespace trialsize
