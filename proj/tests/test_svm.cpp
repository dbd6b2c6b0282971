#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "trialsize/random.hpp"
#include "trialsize/svm.hpp"

using namespace trialsize;

namespace {

FeatureVector dense(std::initializer_list<double> values) {
  FeatureVector v;
  std::uint32_t i = 0;
  for (double x : values) {
    if (x != 0) v.entries.emplace_back(i, x);
    ++i;
  }
  return v;
}

FeatureVector random_sparse(Rng& rng, std::uint32_t dim, double density) {
  FeatureVector v;
  for (std::uint32_t i = 0; i < dim; ++i)
    if (rng.uniform() < density) v.entries.emplace_back(i, rng.below(2) ? 1.0 : rng.uniform());
  return v;
}

struct Instance {
  std::vector<FeatureVector> xs;
  std::vector<int> ys;
  KernelParams params;
};

Instance random_instance(Rng& rng, std::size_t max_n) {
  Instance in;
  const std::size_t n = 2 + rng.below(max_n - 1);
  const auto dim = static_cast<std::uint32_t>(2 + rng.below(10));
  for (std::size_t i = 0; i < n; ++i) {
    in.xs.push_back(random_sparse(rng, dim, 0.4));
    in.ys.push_back(rng.below(2) ? 1 : -1);
  }
  in.ys[0] = 1;
  in.ys[1] = -1;
  in.params.cost = std::pow(2.0, rng.uniform(-3, 5));
  in.params.gamma = std::pow(2.0, rng.uniform(-4, 2));
  return in;
}

}  // namespace

TEST_CASE("rbf kernel") {
  const auto x = dense({1, 0}), y = dense({0, 1});
  CHECK(rbf(x, x, 0.5) == 1.0);
  CHECK(rbf(x, y, 0.5) == doctest::Approx(std::exp(-1.0)));
  CHECK(rbf(x, y, 1e4) >= 0.0);
  CHECK(rbf(x, y, 1e4) < 1e-300 + 1e-12);
  Rng rng(1);
  for (int i = 0; i < 500; ++i) {
    const auto a = random_sparse(rng, 30, 0.3), b = random_sparse(rng, 30, 0.3);
    const double g = rng.uniform(0.01, 3);
    CHECK(rbf(a, b, g) == rbf(b, a, g));
    CHECK(rbf(a, b, g) <= 1.0);
    CHECK(rbf(a, b, g) > 0.0);
    CHECK(rbf(a, a, g) == 1.0);
    double dense_sq = 0;
    for (std::uint32_t d = 0; d < 30; ++d) {
      double va = 0, vb = 0;
      for (auto [id, v] : a.entries) if (id == d) va = v;
      for (auto [id, v] : b.entries) if (id == d) vb = v;
      dense_sq += (va - vb) * (va - vb);
    }
    CHECK(squared_distance(a, b) == doctest::Approx(dense_sq));
  }
}

TEST_CASE("kernel params validation") {
  CHECK_THROWS(KernelParams{0.0, 1.0}.validate());
  CHECK_THROWS(KernelParams{1.0, -1.0}.validate());
  CHECK_NOTHROW(KernelParams{1.0, 1.0}.validate());
}

TEST_CASE("two separable points") {
  std::vector<FeatureVector> xs{dense({1, 0}), dense({0, 1})};
  std::vector<int> ys{1, -1};
  auto sol = train_smo(xs, ys, {10.0, 1.0});
  CHECK(sol.support.size() == 2);
  CHECK(sol.svm.decision_value(xs[0]) > 0);
  CHECK(sol.svm.decision_value(xs[1]) < 0);
}

TEST_CASE("xor with rbf") {
  std::vector<FeatureVector> xs{dense({0, 0}), dense({1, 1}), dense({1, 0}), dense({0, 1})};
  std::vector<int> ys{1, 1, -1, -1};
  auto sol = train_smo(xs, ys, {100.0, 2.0});
  for (std::size_t i = 0; i < 4; ++i) CHECK(ys[i] * sol.svm.decision_value(xs[i]) > 0);
}

TEST_CASE("single class is an error") {
  std::vector<FeatureVector> xs{dense({1}), dense({2})};
  std::vector<int> ys{1, 1};
  CHECK_THROWS_AS(train_smo(xs, ys, {1.0, 1.0}), SvmError);
}

TEST_CASE("smo matches the brute-force dual and satisfies KKT") {
  Rng rng(77);
  SmoOptions opts;
  opts.tol = 1e-9;
  opts.track_objective = true;
  for (int trial = 0; trial < 60; ++trial) {
    auto in = random_instance(rng, 8);
    const auto n = in.xs.size();
    auto sol = train_smo(in.xs, in.ys, in.params, opts);
    Eigen::MatrixXd K(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) K(i, j) = rbf(in.xs[i], in.xs[j], in.params.gamma);
    const auto ref = oracle::brute_force_dual(K, in.ys, in.params.cost);
    CHECK(std::abs(sol.dual_objective - ref.objective) < 1e-6);

    double balance = 0;
    for (std::size_t i = 0; i < n; ++i) {
      balance += sol.alpha[i] * in.ys[i];
      CHECK(sol.alpha[i] >= 0.0);
      CHECK(sol.alpha[i] <= in.params.cost);
      const double margin = in.ys[i] * sol.svm.decision_value(in.xs[i]);
      const double tol = 1e-6;
      if (sol.alpha[i] == 0.0) CHECK(margin >= 1 - tol);
      else if (sol.alpha[i] == in.params.cost) CHECK(margin <= 1 + tol);
      else CHECK(std::abs(margin - 1) <= tol);
    }
    CHECK(std::abs(balance) < 1e-8);
    for (std::size_t i = 1; i < sol.objective_history.size(); ++i)
      CHECK(sol.objective_history[i] >= sol.objective_history[i - 1] - 1e-12);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(sol.training_decisions[i] == doctest::Approx(sol.svm.decision_value(in.xs[i])));
    CHECK(sol.support.size() == sol.svm.support_vectors.size());
    for (double c : sol.svm.dual_coefs) CHECK(std::abs(c) <= in.params.cost);
  }
}

TEST_CASE("kernel cache size does not change the solution") {
  Rng rng(5);
  std::vector<FeatureVector> xs;
  std::vector<int> ys;
  for (int i = 0; i < 120; ++i) {
    xs.push_back(random_sparse(rng, 40, 0.2));
    ys.push_back(i % 3 == 0 ? 1 : -1);
  }
  SmoOptions big, tiny;
  tiny.cache_bytes = 1;
  auto a = train_smo(xs, ys, {4.0, 0.5}, big);
  auto b = train_smo(xs, ys, {4.0, 0.5}, tiny);
  CHECK(a.alpha == b.alpha);
  CHECK(a.svm.bias == b.svm.bias);
  CHECK(a.iterations == b.iterations);

  std::vector<std::size_t> all(xs.size());
  std::iota(all.begin(), all.end(), 0);
  auto shared = std::make_shared<const DistanceMatrix>(xs);
  auto c = train_smo(xs, all, ys, {4.0, 0.5}, big, shared);
  CHECK(c.alpha == a.alpha);
  KernelCache cache(xs, all, 0.5, 1, shared);
  CHECK(cache.capacity() >= 2);
  const auto col = std::vector<double>(cache.column(3).begin(), cache.column(3).end());
  cache.column(4);
  cache.column(5);
  const auto again = cache.column(3);
  CHECK(std::equal(col.begin(), col.end(), again.begin()));
}

TEST_CASE("platt scaling") {
  SUBCASE("sign convention on separated values") {
    std::vector<double> f{-2, -1.5, -1, 1, 1.5, 2};
    std::vector<int> y{-1, -1, -1, 1, 1, 1};
    auto p = platt_fit(f, y);
    CHECK(p.a < 0);
    CHECK(platt_probability(platt_log_odds(p, 2)) > 0.5);
    CHECK(platt_probability(platt_log_odds(p, -2)) < 0.5);
  }
  SUBCASE("uninformative decision values give the prior") {
    Rng rng(3);
    std::vector<double> f;
    std::vector<int> y;
    int pos = 0;
    for (int i = 0; i < 4000; ++i) {
      f.push_back(rng.normal());
      y.push_back(rng.uniform() < 0.2 ? 1 : -1);
      pos += y.back() == 1;
    }
    auto p = platt_fit(f, y);
    const double prior = pos / 4000.0;
    for (double x : {-2.0, 0.0, 2.0})
      CHECK(std::abs(platt_probability(platt_log_odds(p, x)) - prior) < 0.05);
  }
  SUBCASE("gradient vanishes at the fit") {
    Rng rng(8);
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<double> f;
      std::vector<int> y;
      const int n = 20 + static_cast<int>(rng.below(200));
      for (int i = 0; i < n; ++i) {
        const int label = rng.uniform() < 0.3 ? 1 : -1;
        y.push_back(label);
        f.push_back(label * rng.uniform(0, 2) + rng.normal());
      }
      y[0] = 1;
      y[1] = -1;
      auto p = platt_fit(f, y);
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
      CHECK(std::hypot(ga, gb) < 1e-6);
    }
  }
  SUBCASE("errors") {
    std::vector<double> f{1, 2};
    std::vector<int> same{1, 1};
    CHECK_THROWS(platt_fit(f, same));
    std::vector<double> bad{1, NAN};
    std::vector<int> y{1, -1};
    CHECK_THROWS(platt_fit(bad, y));
  }
  SUBCASE("probabilities stay inside the unit interval") {
    CHECK(platt_probability(1e6) < 1.0);
    CHECK(platt_probability(-1e6) > 0.0);
    CHECK(platt_probability(0.0) == 0.5);
  }
}

TEST_CASE("argmax picks the earliest maximum") {
  std::vector<double> s{1, 3, 3, 2};
  CHECK(argmax_index(s) == 1);
  CHECK(argmax_index(std::span<const double>{}) == std::nullopt);
}

TEST_CASE("default grid") {
  auto g = GridSpec::defaults();
  REQUIRE(g.cost_values.size() == 11);
  REQUIRE(g.gamma_values.size() == 10);
  CHECK(g.cost_values.front() == std::pow(2.0, -5));
  CHECK(g.cost_values.back() == std::pow(2.0, 15));
  CHECK(g.gamma_values.front() == std::pow(2.0, -15));
  CHECK(g.gamma_values.back() == std::pow(2.0, 3));
  CHECK_THROWS(GridSpec{{}, {1.0}}.validate());
}
