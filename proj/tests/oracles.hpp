// Independent reference implementations used only by tests.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// P(X >= k) for X ~ Binomial(n, p), summed term by term.
inline long double upper_tail(int k, int n, long double p) {
  long double s = 0;
  for (int i = k; i <= n; ++i) {
    const long double logc = std::lgamma((long double)n + 1) - std::lgamma((long double)i + 1) -
                             std::lgamma((long double)(n - i) + 1);
    const long double lp = i == 0 ? 0.0L : i * std::log(p);
    const long double lq = (n - i) == 0 ? 0.0L : (n - i) * std::log1p(-p);
    s += std::exp(logc + lp + lq);
  }
  return s;
}

inline long double lower_tail(int k, int n, long double p) { return 1.0L - upper_tail(k + 1, n, p); }

// Bisection on an increasing function of p over (0, 1).
template <typename F>
double bisect(F f, long double target) {
  long double lo = 0, hi = 1;
  for (int it = 0; it < 200; ++it) {
    const long double mid = (lo + hi) / 2;
    if (f(mid) < target) lo = mid;
    else hi = mid;
  }
  return static_cast<double>((lo + hi) / 2);
}

// Exact binomial interval by inverting the two tails.
inline std::pair<double, double> exact_interval(int k, int n, double confidence) {
  const long double a = (1.0L - confidence) / 2;
  const double low = k == 0 ? 0.0 : bisect([&](long double p) { return upper_tail(k, n, p); }, a);
  const double high =
      k == n ? 1.0 : bisect([&](long double p) { return 1.0L - lower_tail(k, n, p); }, 1.0L - a);
  return {low, high};
}

struct QpResult {
  double objective = -std::numeric_limits<double>::infinity();
  std::vector<double> alpha;
};

// Maximizes sum(a) - a'Qa/2 subject to 0 <= a <= C and y'a = 0 by trying every
// assignment of each variable to {0, C, free} and solving the KKT system on
// the free set. Practical for n <= 8.
inline QpResult brute_force_dual(const Eigen::MatrixXd& K, std::span<const int> y, double C) {
  const int n = static_cast<int>(y.size());
  Eigen::MatrixXd Q(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) Q(i, j) = y[i] * y[j] * K(i, j);
  QpResult best;
  int total = 1;
  for (int i = 0; i < n; ++i) total *= 3;
  std::vector<int> state(n);
  for (int code = 0; code < total; ++code) {
    int c = code;
    std::vector<int> free_set;
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      state[i] = c % 3;
      c /= 3;
      if (state[i] == 1) alpha[i] = C;
      if (state[i] == 2) free_set.push_back(i);
    }
    const int m = static_cast<int>(free_set.size());
    if (m == 0) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += y[i] * alpha[i];
      if (std::abs(s) > 1e-12) continue;
    } else {
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m + 1, m + 1);
      Eigen::VectorXd rhs(m + 1);
      double ysum = 0;
      for (int i = 0; i < n; ++i)
        if (state[i] != 2) ysum += y[i] * alpha[i];
      for (int a = 0; a < m; ++a) {
        const int i = free_set[a];
        double r = 1.0;
        for (int j = 0; j < n; ++j)
          if (state[j] != 2) r -= Q(i, j) * alpha[j];
        rhs[a] = r;
        for (int b = 0; b < m; ++b) A(a, b) = Q(i, free_set[b]);
        A(a, m) = y[i];
        A(m, a) = y[i];
      }
      rhs[m] = -ysum;
      const Eigen::VectorXd sol = A.completeOrthogonalDecomposition().solve(rhs);
      if ((A * sol - rhs).norm() > 1e-9 * (1 + rhs.norm())) continue;
      bool feasible = true;
      for (int a = 0; a < m; ++a) {
        if (sol[a] < -1e-10 || sol[a] > C + 1e-10) feasible = false;
        alpha[free_set[a]] = std::clamp(sol[a], 0.0, C);
      }
      if (!feasible) continue;
    }
    const double obj = alpha.sum() - 0.5 * alpha.dot(Q * alpha);
    if (obj > best.objective) {
      best.objective = obj;
      best.alpha.assign(alpha.data(), alpha.data() + n);
    }
  }
  return best;
}

}  // namespace oracle
