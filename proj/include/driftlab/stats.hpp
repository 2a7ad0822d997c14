#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "driftlab/errors.hpp"

namespace driftlab {

struct RegressionFit {
  double slope = 0.0;      // per bin
  double intercept = 0.0;
  double residual_sse = 0.0;
  int n_points = 0;
};

// Ordinary least squares over (bin_index, value) points, computed in
// centered form for numerical stability. Requires at least two points with
// distinct x.
inline RegressionFit fit_drift(std::span<const std::pair<int, double>> points) {
  if (points.size() < 2)
    throw Error(Errc::insufficient_data, "regression needs at least 2 points");
  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& [x, y] : points) {
    mean_x += x;
    mean_y += y;
  }
  mean_x /= static_cast<double>(points.size());
  mean_y /= static_cast<double>(points.size());

  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : points) {
    const double dx = x - mean_x;
    sxx += dx * dx;
    sxy += dx * (y - mean_y);
  }
  if (sxx == 0.0)
    throw Error(Errc::insufficient_data, "regression needs 2 distinct bin indices");

  RegressionFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  fit.n_points = static_cast<int>(points.size());
  for (const auto& [x, y] : points) {
    const double r = y - (fit.intercept + fit.slope * x);
    fit.residual_sse += r * r;
  }
  return fit;
}

inline RegressionFit fit_drift(const std::vector<std::pair<int, double>>& points) {
  return fit_drift(std::span<const std::pair<int, double>>(points));
}

// --- Mann-Whitney U ----------------------------------------------------------

enum class MwMethod { automatic, exact, normal_approx };

struct UTestResult {
  double u_statistic = 0.0;  // U of the first sample
  double p_value = 1.0;      // two-sided
  MwMethod method = MwMethod::normal_approx;
};

namespace detail {

struct PooledValues {
  std::vector<double> values;  // distinct, ascending
  std::vector<int> count_a;
  std::vector<int> count_b;
};

inline PooledValues pool_samples(std::span<const double> a, std::span<const double> b) {
  std::map<double, std::pair<int, int>> merged;
  for (double v : a) merged[v].first++;
  for (double v : b) merged[v].second++;
  PooledValues p;
  for (const auto& [v, counts] : merged) {
    p.values.push_back(v);
    p.count_a.push_back(counts.first);
    p.count_b.push_back(counts.second);
  }
  return p;
}

// U of sample a in doubled units (so ties stay integral): for each a-value,
// 2*(number of b below) + (number of b tied).
inline long long observed_u2(const PooledValues& p) {
  long long u2 = 0;
  long long b_below = 0;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    u2 += static_cast<long long>(p.count_a[i]) * (2 * b_below + p.count_b[i]);
    b_below += p.count_b[i];
  }
  return u2;
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Distribution of U2 over all ways to relabel the pooled multiset, as a map
// U2 -> number of assignments. Walks the distinct values, choosing how many
// ties of each go to sample a.
inline void u2_distribution(const PooledValues& p, int n1,
                            std::vector<double>& weight_by_u2) {
  const std::size_t m = p.values.size();
  std::vector<int> totals(m);
  for (std::size_t i = 0; i < m; ++i) totals[i] = p.count_a[i] + p.count_b[i];

  struct Frame {
    std::size_t i;
    int a_used;
    long long u2;
    long long b_below;
    double mult;
  };
  std::vector<int> remaining_after(m + 1, 0);
  for (std::size_t i = m; i-- > 0;) remaining_after[i] = remaining_after[i + 1] + totals[i];

  std::vector<Frame> stack;
  stack.push_back({0, 0, 0, 0, 1.0});
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    if (f.i == m) {
      weight_by_u2[static_cast<std::size_t>(f.u2)] += f.mult;
      continue;
    }
    const int t = totals[f.i];
    const int lo = std::max(0, n1 - f.a_used - remaining_after[f.i + 1]);
    const int hi = std::min(t, n1 - f.a_used);
    for (int a = lo; a <= hi; ++a) {
      const int b = t - a;
      Frame next = f;
      next.i = f.i + 1;
      next.a_used = f.a_used + a;
      next.u2 = f.u2 + static_cast<long long>(a) * (2 * f.b_below + b);
      next.b_below = f.b_below + b;
      next.mult = f.mult * binomial(t, a);
      stack.push_back(next);
    }
  }
}

inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace detail

// Mann-Whitney U with midrank ties. Exact mode enumerates the full
// relabeling distribution (default when both samples have at most 8
// observations); otherwise a normal approximation with tie-corrected
// variance and continuity correction. p is two-sided.
inline UTestResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                                  MwMethod method = MwMethod::automatic) {
  if (a.empty() || b.empty())
    throw Error(Errc::contract, "mann_whitney_u requires nonempty samples");
  const int n1 = static_cast<int>(a.size());
  const int n2 = static_cast<int>(b.size());

  const auto pooled = detail::pool_samples(a, b);
  const long long u2_obs = detail::observed_u2(pooled);

  UTestResult res;
  res.u_statistic = static_cast<double>(u2_obs) / 2.0;

  bool exact = method == MwMethod::exact ||
               (method == MwMethod::automatic && n1 <= 8 && n2 <= 8);
  if (exact && static_cast<double>(detail::binomial(n1 + n2, n1)) > 2e7)
    exact = false;  // guard for forced-exact on large inputs

  if (exact) {
    const long long mu2 = static_cast<long long>(n1) * n2;  // 2 * n1*n2/2
    std::vector<double> weights(static_cast<std::size_t>(2 * mu2) + 1, 0.0);
    detail::u2_distribution(pooled, n1, weights);
    double total = 0.0, tail = 0.0;
    const long long dev = std::llabs(u2_obs - mu2);
    for (long long u2 = 0; u2 < static_cast<long long>(weights.size()); ++u2) {
      total += weights[static_cast<std::size_t>(u2)];
      if (std::llabs(u2 - mu2) >= dev) tail += weights[static_cast<std::size_t>(u2)];
    }
    res.p_value = tail / total;
    res.method = MwMethod::exact;
    return res;
  }

  const double n = n1 + n2;
  const double mu = 0.5 * n1 * n2;
  double tie_term = 0.0;
  for (std::size_t i = 0; i < pooled.values.size(); ++i) {
    const double t = pooled.count_a[i] + pooled.count_b[i];
    tie_term += t * t * t - t;
  }
  const double var =
      (static_cast<double>(n1) * n2 / 12.0) * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (var <= 0.0) {
    res.p_value = 1.0;  // all pooled values identical
    res.method = MwMethod::normal_approx;
    return res;
  }
  const double u = res.u_statistic;
  const double z = std::max(0.0, std::abs(u - mu) - 0.5) / std::sqrt(var);
  res.p_value = std::min(1.0, 2.0 * detail::normal_sf(z));
  res.method = MwMethod::normal_approx;
  return res;
}

inline UTestResult mann_whitney_u(const std::vector<double>& a,
                                  const std::vector<double>& b,
                                  MwMethod method = MwMethod::automatic) {
  return mann_whitney_u(std::span<const double>(a), std::span<const double>(b), method);
}

}  // namespace driftlab
