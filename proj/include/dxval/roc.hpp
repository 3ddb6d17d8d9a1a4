#pragma once

// ROC construction from scored predictions, AUC with a confidence interval,
// and activation-threshold (cut-off) selection.
//
// Convention throughout: a study is predicted positive when score >= threshold.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dxval/detail/numeric.hpp"
#include "dxval/error.hpp"
#include "dxval/io.hpp"
#include "dxval/metrics.hpp"

namespace dxval::roc {

struct ScoredOutcome {
  double score = 0.0;
  int actual = 0;
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // +inf for the (0,0) anchor
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
};

/// Points ordered by strictly decreasing threshold; first is (0,0) at +inf,
/// last is (1,1) at the minimum observed score.
struct RocCurve {
  std::vector<RocPoint> points;
  std::uint64_t n_pos = 0;
  std::uint64_t n_neg = 0;
};

enum class AucCiMethod { DeLong, HanleyMcNeil };

inline std::string_view to_string(AucCiMethod m) {
  return m == AucCiMethod::DeLong ? "delong" : "hanley_mcneil";
}

struct AucResult {
  double auc = 0.0;
  Interval ci;
  double confidence = 0.95;
  AucCiMethod method = AucCiMethod::DeLong;
  VerdictBand verdict = VerdictBand::Unsuitable;
};

struct Cutoff {
  double threshold = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double criterion = 0.0;  // distance to (0,1) for d-min, J for Youden
  std::size_t index = 0;   // position in RocCurve::points
};

struct RocSummary {
  RocCurve curve;
  AucResult auc;
  Cutoff dmin;
  Cutoff youden;
};

inline std::vector<ScoredOutcome> scored_from(std::span<const io::PairedOutcome> pairs) {
  std::vector<ScoredOutcome> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({p.predicted, p.actual});
  return out;
}

namespace detail {

inline void validate(std::span<const ScoredOutcome> scored) {
  for (const auto& s : scored) {
    if (!std::isfinite(s.score)) throw DomainError("ROC input contains a non-finite score");
    if (s.actual != 0 && s.actual != 1) throw DomainError("ROC input contains a non-binary label");
  }
}

inline void require_valid(const RocCurve& c) {
  if (c.points.size() < 2 || c.n_pos == 0 || c.n_neg == 0) {
    throw DomainError("invalid ROC curve: needs both classes and at least two points");
  }
}

/// Mid-ranks (1-based, ties averaged) of `v`.
inline std::vector<double> midranks(const std::vector<double>& v) {
  const auto n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = mid;
    i = j + 1;
  }
  return r;
}

inline Interval clamp_unit(double centre, double half) {
  return {std::clamp(centre - half, 0.0, 1.0), std::clamp(centre + half, 0.0, 1.0)};
}

} // namespace detail

/// Builds the empirical ROC curve: one point per distinct score (tied scores
/// form a single diagonal step) plus the (0,0) anchor at threshold +inf.
inline RocCurve roc_curve(std::span<const ScoredOutcome> scored) {
  detail::validate(scored);
  RocCurve c;
  for (const auto& s : scored) (s.actual ? c.n_pos : c.n_neg)++;
  if (c.n_pos == 0) throw DomainError("ROC undefined: no reference-positive cases (TPR undefined)");
  if (c.n_neg == 0) throw DomainError("ROC undefined: no reference-negative cases (FPR undefined)");

  std::vector<ScoredOutcome> sorted(scored.begin(), scored.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.score > b.score; });

  const double P = static_cast<double>(c.n_pos);
  const double N = static_cast<double>(c.n_neg);
  c.points.push_back({0.0, 0.0, dxval::detail::kInf, 0, 0});
  std::uint64_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double t = sorted[i].score;
    while (i < sorted.size() && sorted[i].score == t) {
      (sorted[i].actual ? tp : fp)++;
      ++i;
    }
    c.points.push_back({static_cast<double>(fp) / N, static_cast<double>(tp) / P, t, tp, fp});
  }
  return c;
}

/// Trapezoidal area under the curve, evaluated in integer cell units so it
/// coincides exactly with the Mann-Whitney pair count (ties count one half).
inline double trapezoid_area(const RocCurve& c) {
  detail::require_valid(c);
  // Sum of (dfp * (tp_k + tp_{k-1})) equals 2 * (ordered pairs + ties / 2).
  long double twice = 0.0L;
  for (std::size_t k = 1; k < c.points.size(); ++k) {
    const auto dfp = c.points[k].fp - c.points[k - 1].fp;
    twice += static_cast<long double>(dfp) *
             static_cast<long double>(c.points[k].tp + c.points[k - 1].tp);
  }
  return static_cast<double>(twice / (2.0L * static_cast<long double>(c.n_pos) *
                                      static_cast<long double>(c.n_neg)));
}

/// AUC with a confidence interval. DeLong's variance is used when both classes
/// have at least three members; otherwise Hanley-McNeil, flagged in `method`.
inline AucResult auc(const RocCurve& curve, std::span<const ScoredOutcome> scored,
                     double confidence = 0.95) {
  detail::require_valid(curve);
  detail::validate(scored);
  const double z = dxval::detail::z_two_sided(confidence);

  AucResult r;
  r.confidence = confidence;
  r.auc = trapezoid_area(curve);
  r.verdict = verdict(r.auc);

  std::vector<double> pos, neg;
  for (const auto& s : scored) (s.actual ? pos : neg).push_back(s.score);
  if (pos.size() != curve.n_pos || neg.size() != curve.n_neg) {
    throw DomainError("auc: scored data does not match the curve's class counts");
  }
  const double P = static_cast<double>(pos.size());
  const double N = static_cast<double>(neg.size());

  if (pos.size() < 3 || neg.size() < 3) {
    const double a = r.auc;
    const double q1 = a / (2.0 - a);
    const double q2 = 2.0 * a * a / (1.0 + a);
    const double var = (a * (1.0 - a) + (P - 1.0) * (q1 - a * a) + (N - 1.0) * (q2 - a * a)) / (P * N);
    r.method = AucCiMethod::HanleyMcNeil;
    r.ci = detail::clamp_unit(a, z * std::sqrt(std::max(0.0, var)));
  } else {
    // Structural components from mid-ranks.
    std::vector<double> pooled = pos;
    pooled.insert(pooled.end(), neg.begin(), neg.end());
    const auto rank_all = detail::midranks(pooled);
    const auto rank_pos = detail::midranks(pos);
    const auto rank_neg = detail::midranks(neg);
    double s10 = 0.0, s01 = 0.0;
    for (std::size_t i = 0; i < pos.size(); ++i) {
      const double v10 = (rank_all[i] - rank_pos[i]) / N;
      s10 += (v10 - r.auc) * (v10 - r.auc);
    }
    for (std::size_t j = 0; j < neg.size(); ++j) {
      const double v01 = 1.0 - (rank_all[pos.size() + j] - rank_neg[j]) / P;
      s01 += (v01 - r.auc) * (v01 - r.auc);
    }
    s10 /= (P - 1.0);
    s01 /= (N - 1.0);
    r.method = AucCiMethod::DeLong;
    r.ci = detail::clamp_unit(r.auc, z * std::sqrt(s10 / P + s01 / N));
  }
  r.ci.low = std::min(r.ci.low, r.auc);
  r.ci.high = std::max(r.ci.high, r.auc);
  return r;
}

namespace detail {

inline Cutoff make_cutoff(const RocCurve& c, std::size_t k, double criterion) {
  const auto& p = c.points[k];
  return {p.threshold, p.tpr, 1.0 - p.fpr, criterion, k};
}

/// True when candidate b should replace the incumbent a on an exact tie:
/// higher sensitivity first, then lower threshold.
inline bool wins_tie(const RocPoint& a, const RocPoint& b) {
  if (b.tp != a.tp) return b.tp > a.tp;
  return b.threshold < a.threshold;
}

} // namespace detail

/// Point closest to the ideal corner (fpr 0, tpr 1). Distances are compared
/// exactly in integer units; ties go to higher sensitivity, then lower threshold.
inline Cutoff cutoff_dmin(const RocCurve& c) {
  detail::require_valid(c);
  using i128 = __int128;
  const i128 P = c.n_pos, N = c.n_neg;
  auto scaled = [&](const RocPoint& p) {
    const i128 miss = (P - static_cast<i128>(p.tp)) * N;
    const i128 false_pos = static_cast<i128>(p.fp) * P;
    return miss * miss + false_pos * false_pos;
  };
  std::size_t best = 0;
  i128 best_d = scaled(c.points[0]);
  for (std::size_t k = 1; k < c.points.size(); ++k) {
    const i128 d = scaled(c.points[k]);
    if (d < best_d || (d == best_d && detail::wins_tie(c.points[best], c.points[k]))) {
      best = k;
      best_d = d;
    }
  }
  const auto& p = c.points[best];
  return detail::make_cutoff(c, best, std::hypot(1.0 - p.tpr, p.fpr));
}

/// Point maximizing Youden's J = tpr - fpr, compared exactly; ties go to
/// higher sensitivity, then lower threshold.
inline Cutoff cutoff_youden(const RocCurve& c) {
  detail::require_valid(c);
  using i128 = __int128;
  const i128 P = c.n_pos, N = c.n_neg;
  auto scaled = [&](const RocPoint& p) {
    return static_cast<i128>(p.tp) * N - static_cast<i128>(p.fp) * P;
  };
  std::size_t best = 0;
  i128 best_j = scaled(c.points[0]);
  for (std::size_t k = 1; k < c.points.size(); ++k) {
    const i128 j = scaled(c.points[k]);
    if (j > best_j || (j == best_j && detail::wins_tie(c.points[best], c.points[k]))) {
      best = k;
      best_j = j;
    }
  }
  const auto& p = c.points[best];
  return detail::make_cutoff(c, best, p.tpr - p.fpr);
}

/// Confusion matrix obtained by declaring positive every study whose score is
/// >= threshold. A threshold of +inf predicts nothing positive.
inline ConfusionMatrix operating_point(std::span<const ScoredOutcome> scored, double threshold) {
  if (std::isnan(threshold)) throw DomainError("operating_point: threshold is NaN");
  detail::validate(scored);
  ConfusionMatrix cm;
  for (const auto& s : scored) {
    const bool pred = s.score >= threshold;
    if (s.actual) (pred ? cm.tp : cm.fn)++;
    else (pred ? cm.fp : cm.tn)++;
  }
  return cm;
}

/// Binarizes paired score outcomes at the given threshold.
inline std::vector<io::PairedOutcome> apply_threshold(std::span<const io::PairedOutcome> pairs,
                                                      double threshold) {
  std::vector<io::PairedOutcome> out(pairs.begin(), pairs.end());
  for (auto& p : out) p.predicted = p.predicted >= threshold ? 1.0 : 0.0;
  return out;
}

inline RocSummary summarize(std::span<const ScoredOutcome> scored, double confidence = 0.95) {
  RocSummary s;
  s.curve = roc_curve(scored);
  s.auc = auc(s.curve, scored, confidence);
  s.dmin = cutoff_dmin(s.curve);
  s.youden = cutoff_youden(s.curve);
  return s;
}

/// Curve export for external plotting: `threshold,fpr,tpr`, one row per point.
inline std::string to_csv(const RocCurve& c) {
  std::ostringstream os;
  os << "threshold,fpr,tpr\n";
  for (const auto& p : c.points) {
    os << dxval::detail::shortest(p.threshold) << ',' << dxval::detail::shortest(p.fpr) << ','
       << dxval::detail::shortest(p.tpr) << '\n';
  }
  return os.str();
}

} // namespace dxval::roc
