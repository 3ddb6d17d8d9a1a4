#pragma once

// Independent reference computations used to cross-check the library. Written
// from the textbook definitions, deliberately without reusing library code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

inline constexpr double kZ95 = 1.959963984540054;

struct Tally {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
};

inline Tally tally(const std::vector<std::pair<int, int>>& predicted_actual) {
  Tally t;
  for (auto [p, a] : predicted_actual) {
    if (p == 1 && a == 1) ++t.tp;
    else if (p == 0 && a == 0) ++t.tn;
    else if (p == 1 && a == 0) ++t.fp;
    else ++t.fn;
  }
  return t;
}

/// Wilson interval written out term by term.
inline std::pair<double, double> wilson(std::uint64_t x, std::uint64_t n, double z = kZ95) {
  const double ph = double(x) / double(n);
  const double a = ph + z * z / (2.0 * n);
  const double b = z * std::sqrt(ph * (1 - ph) / n + z * z / (4.0 * n * n));
  const double c = 1 + z * z / n;
  return {(a - b) / c, (a + b) / c};
}

struct Scored {
  double score;
  int actual;
};

/// Probability that a random positive outscores a random negative, ties 1/2.
inline double auc_pairs(const std::vector<Scored>& d) {
  double wins = 0, pairs = 0;
  for (const auto& p : d) {
    if (p.actual != 1) continue;
    for (const auto& n : d) {
      if (n.actual != 0) continue;
      pairs += 1;
      if (p.score > n.score) wins += 1;
      else if (p.score == n.score) wins += 0.5;
    }
  }
  return wins / pairs;
}

struct Point {
  double threshold;
  std::uint64_t tp, fp;
  double tpr, fpr;
};

/// Thresholds at +inf and at every distinct score, evaluated by brute force.
inline std::vector<Point> threshold_sweep(const std::vector<Scored>& d) {
  std::set<double, std::greater<>> thresholds;
  for (const auto& s : d) thresholds.insert(s.score);
  std::uint64_t pos = 0, neg = 0;
  for (const auto& s : d) (s.actual ? pos : neg)++;
  std::vector<Point> out;
  auto eval = [&](double t) {
    Point p{t, 0, 0, 0, 0};
    for (const auto& s : d) {
      if (s.score >= t) (s.actual ? p.tp : p.fp)++;
    }
    p.tpr = double(p.tp) / double(pos);
    p.fpr = double(p.fp) / double(neg);
    return p;
  };
  out.push_back(eval(std::numeric_limits<double>::infinity()));
  for (double t : thresholds) out.push_back(eval(t));
  return out;
}

/// Best point by `score` over the sweep (values within 1e-12 tie); ties go to the higher tp, then to the lower threshold.
template <class Score>
inline Point best_point(const std::vector<Point>& pts, Score score, bool minimise) {
  const Point* best = nullptr;
  double best_v = 0;
  for (const auto& p : pts) {
    const double v = score(p);
    const bool tie = best && std::abs(v - best_v) <= 1e-12;
    const bool take = !best || (!tie && (minimise ? v < best_v : v > best_v)) ||
                      (tie && (p.tp > best->tp || (p.tp == best->tp && p.threshold < best->threshold)));
    if (take) {
      best = &p;
      best_v = v;
    }
  }
  return *best;
}

/// DeLong variance of the AUC from placement values computed by pair counting.
inline double delong_variance(const std::vector<Scored>& d) {
  std::vector<double> pos, neg;
  for (const auto& s : d) (s.actual ? pos : neg).push_back(s.score);
  auto psi = [](double a, double b) { return a > b ? 1.0 : a == b ? 0.5 : 0.0; };
  const double a = auc_pairs(d);
  double s10 = 0, s01 = 0;
  for (double x : pos) {
    double v = 0;
    for (double y : neg) v += psi(x, y);
    v /= double(neg.size());
    s10 += (v - a) * (v - a);
  }
  for (double y : neg) {
    double v = 0;
    for (double x : pos) v += psi(x, y);
    v /= double(pos.size());
    s01 += (v - a) * (v - a);
  }
  s10 /= double(pos.size() - 1);
  s01 /= double(neg.size() - 1);
  return s10 / double(pos.size()) + s01 / double(neg.size());
}

/// Exact two-sided Mann-Whitney p-value by enumerating every assignment of
/// the pooled observations to the first group.
inline double mann_whitney_exact(const std::vector<double>& x, const std::vector<double>& y, double* u_out = nullptr) {
  std::vector<double> pooled = x;
  pooled.insert(pooled.end(), y.begin(), y.end());
  const std::size_t n = pooled.size(), m = x.size();
  // doubled U avoids half-integers
  auto u2 = [&](const std::vector<bool>& in_x) {
    long long s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_x[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (in_x[j]) continue;
        if (pooled[i] > pooled[j]) s += 2;
        else if (pooled[i] == pooled[j]) s += 1;
      }
    }
    return s;
  };
  std::vector<bool> obs(n, false);
  for (std::size_t i = 0; i < m; ++i) obs[i] = true;
  const long long mean2 = static_cast<long long>(m * (n - m));
  const long long u_obs = u2(obs);
  if (u_out) *u_out = u_obs / 2.0;
  const long long dev = std::llabs(u_obs - mean2);
  std::vector<bool> sel(n, false);
  std::fill(sel.begin(), sel.begin() + static_cast<long>(m), true);
  long long extreme = 0, total = 0;
  // prev_permutation over a sorted-descending bool vector visits every m-subset once
  do {
    ++total;
    if (std::llabs(u2(sel) - mean2) >= dev) ++extreme;
  } while (std::prev_permutation(sel.begin(), sel.end()));
  return double(extreme) / double(total);
}

/// Cohen's kappa from proportions, as written in textbooks.
inline double kappa(const std::vector<std::vector<std::uint64_t>>& t) {
  const std::size_t k = t.size();
  double total = 0;
  for (const auto& r : t)
    for (auto c : r) total += double(c);
  double p0 = 0, pe = 0;
  for (std::size_t i = 0; i < k; ++i) {
    p0 += double(t[i][i]) / total;
    double row = 0, col = 0;
    for (std::size_t j = 0; j < k; ++j) {
      row += double(t[i][j]);
      col += double(t[j][i]);
    }
    pe += (row / total) * (col / total);
  }
  return (p0 - pe) / (1 - pe);
}

inline std::uint64_t ceil_sample_size(double z, double p, double d) {
  return static_cast<std::uint64_t>(std::ceil(z * z * p * (1 - p) / (d * d)));
}

} // namespace oracle

namespace gen {

using Rng = std::mt19937_64;

inline std::uint64_t uniform(Rng& rng, std::uint64_t lo, std::uint64_t hi) {
  return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng);
}

inline double unit(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

/// 2..max_n scored outcomes with both classes present; scores drawn from a
/// small grid so ties are common.
inline std::vector<oracle::Scored> scored(Rng& rng, std::size_t max_n = 20, int grid = 10) {
  for (;;) {
    const auto n = uniform(rng, 2, max_n);
    std::vector<oracle::Scored> d;
    int pos = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      const int a = static_cast<int>(uniform(rng, 0, 1));
      pos += a;
      d.push_back({double(uniform(rng, 0, grid)) / grid, a});
    }
    if (pos > 0 && pos < static_cast<int>(n)) return d;
  }
}

} // namespace gen
