#include "trialsize/svm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "trialsize/candidates.hpp"
#include "trialsize/parallel.hpp"
#include "trialsize/random.hpp"

namespace trialsize {

void KernelParams::validate() const {
  if (!(cost > 0) || !std::isfinite(cost)) throw SvmError("cost must be positive");
  if (!(gamma > 0) || !std::isfinite(gamma)) throw SvmError("gamma must be positive");
}

double squared_distance(const FeatureVector& x, const FeatureVector& y) {
  double s = 0.0;
  auto a = x.entries.begin();
  auto b = y.entries.begin();
  while (a != x.entries.end() || b != y.entries.end()) {
    if (b == y.entries.end() || (a != x.entries.end() && a->first < b->first)) {
      s += a->second * a->second;
      ++a;
    } else if (a == x.entries.end() || b->first < a->first) {
      s += b->second * b->second;
      ++b;
    } else {
      const double d = a->second - b->second;
      s += d * d;
      ++a;
      ++b;
    }
  }
  return s;
}

double rbf(const FeatureVector& x, const FeatureVector& y, double gamma) {
  return std::exp(-gamma * squared_distance(x, y));
}

DistanceMatrix::DistanceMatrix(std::span<const FeatureVector> xs)
    : n_(xs.size()), d_(xs.size() * xs.size(), 0.0) {
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) {
      const double d = squared_distance(xs[i], xs[j]);
      d_[i * n_ + j] = d;
      d_[j * n_ + i] = d;
    }
  }
}

KernelCache::KernelCache(std::span<const FeatureVector> dataset, std::vector<std::size_t> subset,
                         double gamma, std::size_t budget_bytes,
                         std::shared_ptr<const DistanceMatrix> distances)
    : dataset_(dataset),
      subset_(std::move(subset)),
      gamma_(gamma),
      distances_(std::move(distances)) {
  const std::size_t column_bytes = std::max<std::size_t>(1, subset_.size()) * sizeof(double);
  capacity_ = std::max<std::size_t>(2, budget_bytes / column_bytes);
}

std::span<const double> KernelCache::column(std::size_t i) {
  if (const auto it = entries_.find(i); it != entries_.end()) {
    lru_.splice(lru_.begin(), lru_, it->second.pos);
    return it->second.values;
  }
  if (entries_.size() >= capacity_) {
    entries_.erase(lru_.back());
    lru_.pop_back();
  }
  std::vector<double> values(subset_.size());
  const std::size_t gi = subset_[i];
  for (std::size_t t = 0; t < subset_.size(); ++t) {
    const std::size_t gt = subset_[t];
    const double d = gi == gt       ? 0.0
                     : distances_ ? (*distances_)(gi, gt)
                                  : squared_distance(dataset_[gi], dataset_[gt]);
    values[t] = std::exp(-gamma_ * d);
  }
  ++computed_;
  lru_.push_front(i);
  auto& entry = entries_[i];
  entry.values = std::move(values);
  entry.pos = lru_.begin();
  return entry.values;
}

double RawSvm::decision_value(const FeatureVector& x) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < support_vectors.size(); ++i)
    acc += dual_coefs[i] * rbf(support_vectors[i], x, params.gamma);
  return acc + bias;
}

// --- SMO --------------------------------------------------------------------------

namespace {

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

double dual_objective(const std::vector<double>& alpha, const std::vector<double>& grad) {
  // G = Q a - 1, so sum a - a'Qa/2 = -sum a (G - 1) / 2
  double s = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) s += alpha[i] * (grad[i] - 1.0);
  return -0.5 * s;
}

}  // namespace

SmoSolution train_smo(std::span<const FeatureVector> xs, std::span<const int> ys,
                      const KernelParams& params, const SmoOptions& options) {
  std::vector<std::size_t> all(xs.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return train_smo(xs, all, ys, params, options, nullptr);
}

SmoSolution train_smo(std::span<const FeatureVector> dataset, std::span<const std::size_t> subset,
                      std::span<const int> ys, const KernelParams& params,
                      const SmoOptions& options, std::shared_ptr<const DistanceMatrix> distances) {
  params.validate();
  const std::size_t n = subset.size();
  if (ys.size() != n) throw SvmError("label count does not match training points");
  bool has_pos = false, has_neg = false;
  for (int y : ys) {
    if (y == 1) has_pos = true;
    else if (y == -1) has_neg = true;
    else throw SvmError("labels must be +1 or -1");
  }
  if (!has_pos || !has_neg) throw SvmError("training data must contain both classes");
  if (!(options.positive_weight > 0)) throw SvmError("positive_weight must be positive");

  const double c_pos = params.cost * options.positive_weight;
  const double c_neg = params.cost;
  auto bound = [&](std::size_t t) { return ys[t] > 0 ? c_pos : c_neg; };

  KernelCache cache(dataset, std::vector<std::size_t>(subset.begin(), subset.end()), params.gamma,
                    options.cache_bytes, std::move(distances));
  const std::size_t max_iter =
      options.max_iter ? options.max_iter : std::max<std::size_t>(100000, 100 * n);

  std::vector<double> alpha(n, 0.0), grad(n, -1.0);
  auto upper = [&](std::size_t t) { return alpha[t] >= bound(t); };
  auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  SmoSolution sol;
  std::size_t iter = 0;
  double gap = 0.0;
  for (; iter < max_iter; ++iter) {
    // Maximal violating i, then j by second-order gain.
    double gmax = -kInf, gmax2 = -kInf, obj_diff_min = kInf;
    std::ptrdiff_t gmax_idx = -1, gmin_idx = -1;
    for (std::size_t t = 0; t < n; ++t) {
      if (ys[t] == 1) {
        if (!upper(t) && -grad[t] >= gmax) {
          gmax = -grad[t];
          gmax_idx = static_cast<std::ptrdiff_t>(t);
        }
      } else if (!lower(t) && grad[t] >= gmax) {
        gmax = grad[t];
        gmax_idx = static_cast<std::ptrdiff_t>(t);
      }
    }
    if (gmax_idx < 0) {
      gap = 0.0;
      sol.converged = true;
      break;
    }
    const auto i = static_cast<std::size_t>(gmax_idx);
    const auto k_i = cache.column(i);
    for (std::size_t t = 0; t < n; ++t) {
      double grad_diff;
      if (ys[t] == 1) {
        if (lower(t)) continue;
        grad_diff = gmax + grad[t];
        gmax2 = std::max(gmax2, grad[t]);
      } else {
        if (upper(t)) continue;
        grad_diff = gmax - grad[t];
        gmax2 = std::max(gmax2, -grad[t]);
      }
      if (grad_diff <= 0) continue;
      const double quad = 2.0 - 2.0 * k_i[t];
      const double obj_diff = -(grad_diff * grad_diff) / (quad > 0 ? quad : kTau);
      if (obj_diff <= obj_diff_min) {
        gmin_idx = static_cast<std::ptrdiff_t>(t);
        obj_diff_min = obj_diff;
      }
    }
    gap = gmax + gmax2;
    if (gap < options.tol || gmin_idx < 0) {
      sol.converged = true;
      break;
    }
    const auto j = static_cast<std::size_t>(gmin_idx);
    const auto k_j = cache.column(j);
    const double yi = ys[i], yj = ys[j];
    const double c_i = bound(i), c_j = bound(j);
    const double old_i = alpha[i], old_j = alpha[j];
    if (yi != yj) {
      double quad = 2.0 - 2.0 * k_i[j];
      if (quad <= 0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > c_i - c_j) {
        if (alpha[i] > c_i) {
          alpha[i] = c_i;
          alpha[j] = c_i - diff;
        }
      } else if (alpha[j] > c_j) {
        alpha[j] = c_j;
        alpha[i] = c_j + diff;
      }
    } else {
      double quad = 2.0 - 2.0 * k_i[j];
      if (quad <= 0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c_i) {
        if (alpha[i] > c_i) {
          alpha[i] = c_i;
          alpha[j] = sum - c_i;
        }
      } else if (alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > c_j) {
        if (alpha[j] > c_j) {
          alpha[j] = c_j;
          alpha[i] = sum - c_j;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }
    const double d_i = alpha[i] - old_i;
    const double d_j = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t)
      grad[t] += ys[t] * (yi * k_i[t] * d_i + yj * k_j[t] * d_j);
    if (options.track_objective) sol.objective_history.push_back(dual_objective(alpha, grad));
  }
  sol.iterations = iter;
  sol.kkt_gap = gap;

  // Bias from free vectors, else the midpoint of the feasible interval.
  double ub = kInf, lb = -kInf, sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = ys[t] * grad[t];
    if (upper(t)) {
      if (ys[t] == -1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (ys[t] == 1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;

  sol.svm.params = params;
  sol.svm.bias = -rho;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] <= 0) continue;
    sol.support.push_back(t);
    sol.svm.support_vectors.push_back(dataset[subset[t]]);
    sol.svm.dual_coefs.push_back(alpha[t] * ys[t]);
  }
  // Same summation order as RawSvm::decision_value, so values are bit-identical.
  std::vector<double> acc(n, 0.0);
  for (std::size_t s = 0; s < sol.support.size(); ++s) {
    const auto col = cache.column(sol.support[s]);
    const double coef = sol.svm.dual_coefs[s];
    for (std::size_t t = 0; t < n; ++t) acc[t] += coef * col[t];
  }
  sol.training_decisions.resize(n);
  for (std::size_t t = 0; t < n; ++t) sol.training_decisions[t] = acc[t] + sol.svm.bias;
  sol.dual_objective = dual_objective(alpha, grad);
  sol.alpha = std::move(alpha);
  return sol;
}

// --- Platt ------------------------------------------------------------------------

PlattParams platt_fit(std::span<const double> f, std::span<const int> labels,
                      const PlattOptions& opt) {
  if (f.size() != labels.size()) throw SvmError("platt_fit: size mismatch");
  double n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!std::isfinite(f[i])) throw SvmError("platt_fit: non-finite decision value");
    if (labels[i] == 1) ++n_pos;
    else if (labels[i] == -1) ++n_neg;
    else throw SvmError("platt_fit: labels must be +1 or -1");
  }
  if (n_pos == 0 || n_neg == 0) throw SvmError("platt_fit: both classes are required");
  const double hi = (n_pos + 1.0) / (n_pos + 2.0);
  const double lo = 1.0 / (n_neg + 2.0);
  std::vector<double> t(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) t[i] = labels[i] == 1 ? hi : lo;

  auto loss = [&](double a, double b) {
    double v = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double z = f[i] * a + b;
      v += z >= 0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1.0) * z + std::log1p(std::exp(z));
    }
    return v;
  };

  PlattParams p;
  p.a = 0.0;
  p.b = std::log((n_neg + 1.0) / (n_pos + 1.0));
  double fval = loss(p.a, p.b);
  for (p.iterations = 0; p.iterations < opt.max_iter; ++p.iterations) {
    double h11 = opt.sigma, h22 = opt.sigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double z = f[i] * p.a + p.b;
      double prob, q;
      if (z >= 0) {
        const double e = std::exp(-z);
        prob = e / (1.0 + e);
        q = 1.0 / (1.0 + e);
      } else {
        const double e = std::exp(z);
        prob = 1.0 / (1.0 + e);
        q = e / (1.0 + e);
      }
      const double d2 = prob * q;
      h11 += f[i] * f[i] * d2;
      h22 += d2;
      h21 += f[i] * d2;
      const double d1 = t[i] - prob;
      g1 += f[i] * d1;
      g2 += d1;
    }
    p.gradient_norm = std::hypot(g1, g2);
    if (p.gradient_norm < opt.gradient_tol) break;
    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;
    double step = 1.0;
    // Armijo test with a rounding allowance so converged iterates are not
    // rejected for last-bit noise in the loss.
    const double slack = 1e-14 * std::max(1.0, std::abs(fval));
    while (step >= opt.min_step) {
      const double na = p.a + step * da, nb = p.b + step * db;
      const double nf = loss(na, nb);
      if (nf < fval + 1e-4 * step * gd + slack) {
        p.a = na;
        p.b = nb;
        fval = nf;
        break;
      }
      step /= 2.0;
    }
    if (step < opt.min_step) break;
  }
  return p;
}

double platt_log_odds(const PlattParams& p, double f) { return -(p.a * f + p.b); }

double platt_probability(double log_odds) {
  double prob;
  if (log_odds >= 0) {
    prob = 1.0 / (1.0 + std::exp(-log_odds));
  } else {
    const double e = std::exp(log_odds);
    prob = e / (1.0 + e);
  }
  if (prob >= 1.0) prob = std::nextafter(1.0, 0.0);
  if (prob <= 0.0) prob = std::numeric_limits<double>::denorm_min();
  return prob;
}

std::optional<std::size_t> argmax_index(std::span<const double> scores) {
  if (scores.empty()) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

// --- model file -----------------------------------------------------------------------

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

nlohmann::json vector_to_json(const FeatureVector& v) {
  auto j = nlohmann::json::array();
  for (const auto& [id, x] : v.entries) j.push_back({id, x});
  return j;
}

FeatureVector vector_from_json(const nlohmann::json& j, std::size_t vocab_size) {
  FeatureVector v;
  for (const auto& e : j) {
    const auto id = e.at(0).get<std::uint32_t>();
    if (id >= vocab_size) throw ModelError("support vector id outside the vocabulary");
    if (!v.entries.empty() && id <= v.entries.back().first)
      throw ModelError("support vector ids must be strictly increasing");
    v.entries.emplace_back(id, e.at(1).get<double>());
  }
  return v;
}

}  // namespace

nlohmann::json SvmModel::to_json() const {
  nlohmann::json j;
  j["format"] = "trialsize-svm-model";
  j["version"] = kModelFormatVersion;
  j["params"] = {{"cost", svm.params.cost}, {"gamma", svm.params.gamma}};
  j["bias"] = svm.bias;
  j["platt"] = {{"a", platt.a}, {"b", platt.b}};
  j["dual_coefs"] = svm.dual_coefs;
  auto& svs = j["support_vectors"] = nlohmann::json::array();
  for (const auto& v : svm.support_vectors) svs.push_back(vector_to_json(v));
  j["vocabulary"] = vocabulary.to_json();
  j["vocabulary_hash"] = hex64(vocabulary.content_hash());
  auto& sc = j["scaling"] = nlohmann::json::object();
  for (const auto& [name, range] : scaling) sc[name] = {range.first, range.second};
  j["lexicons"] = lexicons.to_json();
  j["clusters"] = clusters.to_json();
  j["clusters_hash"] = hex64(clusters.content_hash());
  j["feature_groups"] = groups.names();
  j["min_candidate_value"] = min_candidate_value;
  return j;
}

SvmModel SvmModel::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "trialsize-svm-model")
      throw ModelError("not a trialsize model file");
    if (j.at("version").get<int>() != kModelFormatVersion)
      throw ModelError("unsupported model version " + j.at("version").dump());
    SvmModel m;
    m.vocabulary = FeatureVocabulary::from_json(j.at("vocabulary"));
    if (hex64(m.vocabulary.content_hash()) != j.at("vocabulary_hash").get<std::string>())
      throw ModelError("vocabulary hash mismatch; refusing to use this model");
    m.clusters = ClusterModel::from_json(j.at("clusters"));
    if (hex64(m.clusters.content_hash()) != j.at("clusters_hash").get<std::string>())
      throw ModelError("cluster hash mismatch; refusing to use this model");
    m.svm.params = {j.at("params").at("cost").get<double>(), j.at("params").at("gamma").get<double>()};
    m.svm.params.validate();
    m.svm.bias = j.at("bias").get<double>();
    m.platt.a = j.at("platt").at("a").get<double>();
    m.platt.b = j.at("platt").at("b").get<double>();
    m.svm.dual_coefs = j.at("dual_coefs").get<std::vector<double>>();
    for (const auto& v : j.at("support_vectors"))
      m.svm.support_vectors.push_back(vector_from_json(v, m.vocabulary.size()));
    if (m.svm.support_vectors.size() != m.svm.dual_coefs.size())
      throw ModelError("support vector and coefficient counts differ");
    for (const auto& [name, range] : j.at("scaling").items())
      m.scaling[name] = {range.at(0).get<double>(), range.at(1).get<double>()};
    m.lexicons = Lexicons::from_json(j.at("lexicons"));
    m.groups = FeatureGroups::from_names(j.at("feature_groups").get<std::vector<std::string>>());
    if (m.groups.empty()) throw ModelError("model has no feature groups");
    m.min_candidate_value = j.at("min_candidate_value").get<std::int64_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("malformed model file: ") + e.what());
  } catch (const EmbeddingError& e) {
    throw ModelError(e.what());
  } catch (const SvmError& e) {
    throw ModelError(e.what());
  } catch (const std::invalid_argument& e) {
    throw ModelError(e.what());
  }
}

std::string SvmModel::serialize() const { return to_json().dump(1) + "\n"; }

void SvmModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelError("cannot write model file " + path.string());
  out << serialize();
  if (!out) throw ModelError("failed writing model file " + path.string());
}

SvmModel SvmModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open model file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("model file is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

// --- grid search ------------------------------------------------------------------------

GridSpec GridSpec::defaults() {
  GridSpec g;
  for (int e = -5; e <= 15; e += 2) g.cost_values.push_back(std::ldexp(1.0, e));
  for (int e = -15; e <= 3; e += 2) g.gamma_values.push_back(std::ldexp(1.0, e));
  return g;
}

void GridSpec::validate() const {
  if (cost_values.empty() || gamma_values.empty()) throw SvmError("grid must be nonempty");
  for (double c : cost_values) KernelParams{c, 1.0}.validate();
  for (double g : gamma_values) KernelParams{1.0, g}.validate();
}

std::size_t TrainingSet::positives() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

TrainingSet build_training_set(const std::vector<Abstract>& corpus,
                               const FeatureExtractor& extractor, std::int64_t min_value) {
  TrainingSet set;
  std::vector<std::vector<NamedFeature>> rows;
  for (const auto& a : corpus) {
    auto& ids = set.by_abstract.emplace_back();
    set.abstract_ids.push_back(a.id);
    set.gold.push_back(a.gold_size.value_or(0));
    for (const auto& lc : label_candidates(a, min_value)) {
      ids.push_back(rows.size());
      rows.push_back(extractor(lc.candidate, a));
      set.labels.push_back(lc.is_size ? 1 : -1);
      set.values.push_back(lc.candidate.value);
    }
  }
  set.scaling = fit_scaling(rows);
  set.vectors.reserve(rows.size());
  for (const auto& r : rows) set.vectors.push_back(vectorize(r, set.vocabulary, set.scaling));
  set.vocabulary.freeze();
  return set;
}

TrainedSvm train_calibrated(const TrainingSet& data, std::span<const std::size_t> subset,
                            const KernelParams& params, const SmoOptions& smo,
                            const PlattOptions& platt,
                            std::shared_ptr<const DistanceMatrix> distances,
                            SmoSolution* solution) {
  std::vector<std::size_t> idx(subset.begin(), subset.end());
  if (idx.empty()) {
    idx.resize(data.vectors.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
  }
  std::vector<int> ys(idx.size());
  for (std::size_t t = 0; t < idx.size(); ++t) ys[t] = data.labels[idx[t]];
  SmoSolution sol = train_smo(data.vectors, idx, ys, params, smo, std::move(distances));
  TrainedSvm out;
  out.platt = platt_fit(sol.training_decisions, ys, platt);
  out.svm = sol.svm;
  if (solution) *solution = std::move(sol);
  return out;
}

namespace {

// Number of abstracts in `abstracts` whose argmax candidate carries the gold value.
std::size_t count_correct(const TrainingSet& data, std::span<const std::size_t> abstracts,
                          const std::vector<double>& log_odds_by_candidate) {
  std::size_t correct = 0;
  std::vector<double> scores;
  for (std::size_t a : abstracts) {
    const auto& cands = data.by_abstract[a];
    scores.clear();
    for (std::size_t c : cands) scores.push_back(log_odds_by_candidate[c]);
    const auto best = argmax_index(scores);
    if (best && data.values[cands[*best]] == data.gold[a]) ++correct;
  }
  return correct;
}

}  // namespace

GridSearchResult grid_search(const TrainingSet& data, const GridSpec& grid,
                             const GridSearchOptions& options) {
  grid.validate();
  if (data.vectors.empty()) throw SvmError("no training abstract has any candidate");
  if (data.positives() == 0)
    throw SvmError("no candidate matches a gold size; nothing to learn from");
  if (data.positives() == data.labels.size())
    throw SvmError("every candidate is positive; nothing to learn from");

  const std::size_t n = data.vectors.size();
  std::shared_ptr<const DistanceMatrix> distances;
  if (n * n * sizeof(double) <= options.smo.cache_bytes)
    distances = std::make_shared<DistanceMatrix>(data.vectors);

  const std::size_t n_abstracts = data.by_abstract.size();
  std::vector<std::vector<std::size_t>> folds;
  if (options.cv_folds > 0) {
    if (options.cv_folds < 2 || options.cv_folds > n_abstracts)
      throw SvmError("grid cross-validation needs 2 <= k <= number of abstracts");
    std::vector<std::size_t> order(n_abstracts);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(options.seed);
    rng.shuffle(order);
    folds.resize(options.cv_folds);
    for (std::size_t p = 0; p < order.size(); ++p) folds[p % options.cv_folds].push_back(order[p]);
    for (auto& f : folds) std::sort(f.begin(), f.end());
  }

  const std::size_t n_gamma = grid.gamma_values.size();
  std::vector<GridCell> cells(grid.cost_values.size() * n_gamma);
  parallel_for(cells.size(), options.jobs, [&](std::size_t idx) {
    GridCell& cell = cells[idx];
    cell.params = {grid.cost_values[idx / n_gamma], grid.gamma_values[idx % n_gamma]};
    cell.total = n_abstracts;
    std::vector<double> log_odds(n, 0.0);
    if (folds.empty()) {
      SmoSolution sol;
      const TrainedSvm m =
          train_calibrated(data, {}, cell.params, options.smo, options.platt, distances, &sol);
      for (std::size_t c = 0; c < n; ++c)
        log_odds[c] = platt_log_odds(m.platt, sol.training_decisions[c]);
      std::vector<std::size_t> all(n_abstracts);
      std::iota(all.begin(), all.end(), std::size_t{0});
      cell.correct = count_correct(data, all, log_odds);
      cell.iterations = sol.iterations;
      cell.converged = sol.converged;
    } else {
      for (std::size_t f = 0; f < folds.size(); ++f) {
        std::vector<bool> held(n_abstracts, false);
        for (std::size_t a : folds[f]) held[a] = true;
        std::vector<std::size_t> train_idx;
        for (std::size_t a = 0; a < n_abstracts; ++a)
          if (!held[a])
            train_idx.insert(train_idx.end(), data.by_abstract[a].begin(),
                             data.by_abstract[a].end());
        std::vector<int> ys;
        for (std::size_t c : train_idx) ys.push_back(data.labels[c]);
        // A fold without both classes cannot be trained; its abstracts score 0.
        if (std::count(ys.begin(), ys.end(), 1) == 0 ||
            std::count(ys.begin(), ys.end(), -1) == 0)
          continue;
        SmoSolution sol;
        const TrainedSvm m = train_calibrated(data, train_idx, cell.params, options.smo,
                                              options.platt, distances, &sol);
        for (std::size_t a : folds[f])
          for (std::size_t c : data.by_abstract[a])
            log_odds[c] = platt_log_odds(m.platt, m.svm.decision_value(data.vectors[c]));
        cell.correct += count_correct(data, folds[f], log_odds);
        cell.iterations += sol.iterations;
        cell.converged = cell.converged && sol.converged;
      }
    }
    cell.accuracy = static_cast<double>(cell.correct) / static_cast<double>(cell.total);
  });

  const GridCell* best = nullptr;
  for (const auto& cell : cells) {
    if (!best || cell.correct > best->correct ||
        (cell.correct == best->correct &&
         (cell.params.cost < best->params.cost ||
          (cell.params.cost == best->params.cost && cell.params.gamma < best->params.gamma))))
      best = &cell;
  }
  GridSearchResult result;
  result.best = best->params;
  result.best_accuracy = best->accuracy;
  result.model = train_calibrated(data, {}, best->params, options.smo, options.platt, distances);
  result.cells = std::move(cells);
  return result;
}

}  // namespace trialsize
