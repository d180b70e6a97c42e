// Test-only reference implementations, kept independent of the library code
// they check.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <vector>

#include "hyperkg/dataset.hpp"
#include "hyperkg/evaluator.hpp"
#include "hyperkg/model.hpp"

namespace oracles {

// Mobius addition evaluated scalar-by-scalar in extended precision.
inline std::vector<double> mobius_add_ld(const std::vector<double>& x,
                                         const std::vector<double>& y,
                                         double curvature) {
  const long double c = curvature;
  long double xy = 0, xx = 0, yy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    xy += (long double)x[i] * (long double)y[i];
    xx += (long double)x[i] * (long double)x[i];
    yy += (long double)y[i] * (long double)y[i];
  }
  const long double a = 1.0L + 2.0L * c * xy + c * yy;
  const long double b = 1.0L - c * xx;
  const long double den = 1.0L + 2.0L * c * xy + c * c * xx * yy;
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i)
    out[i] = (double)((a * (long double)x[i] + b * (long double)y[i]) / den);
  return out;
}

inline double poincare_distance_ld(const std::vector<double>& x,
                                   const std::vector<double>& y,
                                   double curvature) {
  std::vector<double> neg_x(x.size());
  for (size_t i = 0; i < x.size(); ++i) neg_x[i] = -x[i];
  const std::vector<double> w = mobius_add_ld(neg_x, y, curvature);
  long double n = 0;
  for (double v : w) n += (long double)v * (long double)v;
  n = sqrtl(n);
  const long double sc = sqrtl((long double)curvature);
  return (double)(2.0L / sc * atanhl(sc * n));
}

// ---------------------------------------------------------------------------
// Filtered-ranking oracle: materialize every candidate score, sort, and count
// positions with explicit tie handling.

inline int64_t rank_oracle(const hyperkg::ModelParams& params,
                           const hyperkg::Triple& test,
                           const hyperkg::TruthIndex& truth,
                           hyperkg::TieBreak tie) {
  std::vector<double> scores;
  const double target = hyperkg::score(params, test.s, test.r, test.o);
  for (int32_t e = 0; e < params.n_entities; ++e) {
    if (e == test.o) continue;
    if (truth.contains(test.s, test.r, e)) continue;
    scores.push_back(hyperkg::score(params, test.s, test.r, e));
  }
  std::sort(scores.begin(), scores.end(), std::greater<double>());
  const int64_t greater =
      std::lower_bound(scores.begin(), scores.end(), target, std::greater<double>()) -
      scores.begin();
  const int64_t greater_or_equal =
      std::upper_bound(scores.begin(), scores.end(), target, std::greater<double>()) -
      scores.begin();
  const int64_t equal = greater_or_equal - greater;
  switch (tie) {
    case hyperkg::TieBreak::optimistic:
      return 1 + greater;
    case hyperkg::TieBreak::pessimistic:
      return 1 + greater + equal;
    default:
      return 1 + greater + (equal + 1) / 2;
  }
}

struct ReportOracle {
  double mrr = 0, hits1 = 0, hits3 = 0, hits10 = 0;
  std::vector<int64_t> ranks;
  // per base relation: count, mrr, hits@{1,3,10}
  std::map<int32_t, std::array<double, 5>> per_relation;
};

inline ReportOracle evaluate_oracle(const hyperkg::ModelParams& params,
                                    const std::vector<hyperkg::Triple>& test,
                                    const hyperkg::TruthIndex& truth,
                                    int32_t n_r_base, hyperkg::TieBreak tie) {
  ReportOracle out;
  for (const auto& t : test) {
    out.ranks.push_back(rank_oracle(params, t, truth, tie));
    out.ranks.push_back(
        rank_oracle(params, {t.o, t.r + n_r_base, t.s}, truth, tie));
  }
  for (size_t i = 0; i < out.ranks.size(); ++i) {
    const int64_t r = out.ranks[i];
    out.mrr += 1.0 / (double)r;
    out.hits1 += r <= 1;
    out.hits3 += r <= 3;
    out.hits10 += r <= 10;
    auto& rel = out.per_relation[test[i / 2].r];
    rel[0] += 1;
    rel[1] += 1.0 / (double)r;
    rel[2] += r <= 1;
    rel[3] += r <= 3;
    rel[4] += r <= 10;
  }
  const double n = (double)out.ranks.size();
  out.mrr /= n;
  out.hits1 /= n;
  out.hits3 /= n;
  out.hits10 /= n;
  for (auto& [rel, acc] : out.per_relation)
    for (int k = 1; k < 5; ++k) acc[k] /= acc[0];
  return out;
}

// ---------------------------------------------------------------------------
// Reachability by repeated boolean squaring, Khs and Floyd-Warshall paths.

inline std::vector<std::vector<bool>> closure_by_squaring(
    const std::vector<std::vector<bool>>& adjacency) {
  const size_t n = adjacency.size();
  std::vector<std::vector<bool>> reach = adjacency;
  // R = A + A^2 + ... computed as repeated squaring of (A) with additions
  for (size_t step = 1; step < n; step *= 2) {
    std::vector<std::vector<bool>> next = reach;
    for (size_t i = 0; i < n; ++i)
      for (size_t k = 0; k < n; ++k)
        if (reach[i][k])
          for (size_t j = 0; j < n; ++j)
            if (reach[k][j]) next[i][j] = true;
    reach = next;
  }
  return reach;
}

inline std::optional<double> khs_oracle(const std::vector<std::vector<bool>>& adjacency) {
  const auto reach = closure_by_squaring(adjacency);
  const size_t n = adjacency.size();
  int64_t reachable = 0, oneway = 0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (i == j || !reach[i][j]) continue;
      ++reachable;
      if (!reach[j][i]) ++oneway;
    }
  }
  if (reachable == 0) return std::nullopt;
  return (double)oneway / (double)reachable;
}

struct PathOracle {
  std::optional<int64_t> max_path;
  std::optional<double> avg_path;
};

inline PathOracle path_oracle(const std::vector<std::vector<bool>>& adjacency) {
  const size_t n = adjacency.size();
  const int64_t inf = INT64_MAX / 4;
  std::vector<std::vector<int64_t>> dist(n, std::vector<int64_t>(n, inf));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      if (adjacency[i][j]) dist[i][j] = 1;
  for (size_t k = 0; k < n; ++k)
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j)
        dist[i][j] = std::min(dist[i][j], dist[i][k] + dist[k][j]);
  PathOracle out;
  int64_t count = 0, sum = 0, mx = 0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (i == j || dist[i][j] >= inf) continue;
      ++count;
      sum += dist[i][j];
      mx = std::max(mx, dist[i][j]);
    }
  }
  if (count > 0) {
    out.max_path = mx;
    out.avg_path = (double)sum / (double)count;
  }
  return out;
}

}  // namespace oracles
