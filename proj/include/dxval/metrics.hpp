#pragma once

// Confusion matrices, the standard diagnostic metric set with confidence
// intervals, verdict banding, and the with/without-software timing comparison.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dxval/detail/numeric.hpp"
#include "dxval/error.hpp"
#include "dxval/io.hpp"

namespace dxval {

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t positives() const noexcept { return tp + fn; }
  std::uint64_t negatives() const noexcept { return tn + fp; }
  std::uint64_t total() const noexcept { return tp + tn + fp + fn; }

  bool operator==(const ConfusionMatrix&) const = default;
};

/// Ordered so that `a < b` means "a is the stricter (worse) band".
enum class VerdictBand { Unsuitable = 0, RevisionRequired = 1, Admissible = 2 };

inline std::string_view to_string(VerdictBand v) {
  switch (v) {
    case VerdictBand::Unsuitable: return "unsuitable";
    case VerdictBand::RevisionRequired: return "revision_required";
    case VerdictBand::Admissible: return "admissible";
  }
  return "?";
}

inline std::string_view describe(VerdictBand v) {
  switch (v) {
    case VerdictBand::Unsuitable: return "unsuitable";
    case VerdictBand::RevisionRequired: return "revision required";
    case VerdictBand::Admissible: return "admissible for clinical validation";
  }
  return "?";
}

/// Bands a [0,1]-ranged quality value:
///   value <= 0.60         -> Unsuitable
///   0.60 < value < 0.81   -> RevisionRequired
///   value >= 0.81         -> Admissible
inline VerdictBand verdict(double value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw DomainError("verdict requires a value in [0,1], got " + detail::shortest(value));
  }
  if (value <= 0.60) return VerdictBand::Unsuitable;
  if (value < 0.81) return VerdictBand::RevisionRequired;
  return VerdictBand::Admissible;
}

struct Interval {
  double low = 0.0;
  double high = 0.0;

  bool contains(double x) const noexcept { return low <= x && x <= high; }
  bool operator==(const Interval&) const = default;
};

/// One reported statistic. An absent estimate means the statistic is
/// undefined for this matrix; `note` then says why.
struct Metric {
  std::optional<double> estimate;
  Interval ci;
  std::optional<VerdictBand> verdict;
  std::string note;

  bool defined() const noexcept { return estimate.has_value(); }
};

struct MetricSet {
  ConfusionMatrix source;
  double confidence = 0.95;
  Metric sensitivity;
  Metric specificity;
  Metric accuracy;
  Metric ppv;
  Metric npv;
  Metric fpr;
  Metric lr_pos;
  Metric lr_neg;
};

/// Wilson score interval for a binomial proportion, clamped to [0,1]. The
/// bounds are exactly 0 when successes == 0 and exactly 1 when
/// successes == trials.
inline Interval proportion_ci(std::uint64_t successes, std::uint64_t trials,
                              double confidence = 0.95) {
  if (trials == 0) throw DomainError("proportion_ci: trials must be >= 1");
  if (successes > trials) throw DomainError("proportion_ci: successes exceed trials");
  const double z = detail::z_two_sided(confidence);
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  Interval ci{std::max(0.0, center - half), std::min(1.0, center + half)};
  if (successes == 0) ci.low = 0.0;
  if (successes == trials) ci.high = 1.0;
  // Guard against rounding placing p a hair outside the interval.
  ci.low = std::min(ci.low, p);
  ci.high = std::max(ci.high, p);
  return ci;
}

namespace detail {

inline Metric proportion_metric(std::uint64_t num, std::uint64_t den, double confidence,
                                std::string_view undefined_reason) {
  Metric m;
  if (den == 0) {
    m.note = std::string(undefined_reason);
    return m;
  }
  const double est = static_cast<double>(num) / static_cast<double>(den);
  m.estimate = est;
  m.ci = proportion_ci(num, den, confidence);
  m.verdict = verdict(est);
  return m;
}

/// Likelihood ratio (hit/group_a) / (miss/group_b) with a log-method CI.
/// Cells equal to zero switch the CI to Haldane-corrected counts (+0.5 per
/// cell); an infinite ratio gets a one-sided interval.
inline Metric likelihood_ratio(std::uint64_t hit, std::uint64_t group_a, std::uint64_t miss,
                               std::uint64_t group_b, double confidence, std::string_view label) {
  Metric m;
  if (group_a == 0 || group_b == 0) {
    m.note = std::string(label) + " undefined: reference set lacks " +
             (group_a == 0 ? "positive" : "negative") + " cases";
    return m;
  }
  if (hit == 0 && miss == 0) {
    m.note = std::string(label) + " undefined: 0/0";
    return m;
  }
  const double z = z_two_sided(confidence);
  const double a = static_cast<double>(hit);
  const double b = static_cast<double>(miss);
  const double na = static_cast<double>(group_a);
  const double nb = static_cast<double>(group_b);

  auto corrected = [&] {
    const double ac = a + 0.5, bc = b + 0.5, nac = na + 1.0, nbc = nb + 1.0;
    const double lr = (ac / nac) / (bc / nbc);
    const double se = std::sqrt(1.0 / ac - 1.0 / nac + 1.0 / bc - 1.0 / nbc);
    return Interval{std::exp(std::log(lr) - z * se), std::exp(std::log(lr) + z * se)};
  };

  if (miss == 0) {
    m.estimate = kInf;
    m.ci = Interval{corrected().low, kInf};
    m.note = "infinite ratio; one-sided interval from continuity-corrected counts";
    return m;
  }
  if (hit == 0) {
    m.estimate = 0.0;
    m.ci = Interval{0.0, corrected().high};
    m.note = "zero ratio; upper bound from continuity-corrected counts";
    return m;
  }
  const double lr = (a / na) / (b / nb);
  const double se = std::sqrt(1.0 / a - 1.0 / na + 1.0 / b - 1.0 / nb);
  m.estimate = lr;
  m.ci = Interval{std::min(lr, std::exp(std::log(lr) - z * se)),
                  std::max(lr, std::exp(std::log(lr) + z * se))};
  return m;
}

} // namespace detail

/// Tallies paired binary outcomes. Predictions must already be 0 or 1; score
/// outputs have to be thresholded first (see roc::operating_point).
inline ConfusionMatrix build_confusion(std::span<const io::PairedOutcome> pairs) {
  ConfusionMatrix cm;
  for (const auto& p : pairs) {
    if (p.predicted != 0.0 && p.predicted != 1.0) {
      throw DomainError("non-binary prediction " + detail::shortest(p.predicted) + " for study '" +
                        p.study_id + "'; threshold scores before building a confusion matrix");
    }
    if (p.actual != 0 && p.actual != 1) {
      throw DomainError("non-binary reference label for study '" + p.study_id + "'");
    }
    const bool pred = p.predicted == 1.0;
    const bool act = p.actual == 1;
    if (pred && act) ++cm.tp;
    else if (!pred && !act) ++cm.tn;
    else if (pred) ++cm.fp;
    else ++cm.fn;
  }
  return cm;
}

inline MetricSet standard_metrics(const ConfusionMatrix& cm, double confidence = 0.95) {
  if (cm.total() == 0) throw DomainError("standard_metrics: confusion matrix is empty");
  detail::z_two_sided(confidence);  // validates the level

  MetricSet s;
  s.source = cm;
  s.confidence = confidence;
  s.sensitivity = detail::proportion_metric(cm.tp, cm.positives(), confidence,
                                            "sensitivity undefined: no reference-positive cases");
  s.specificity = detail::proportion_metric(cm.tn, cm.negatives(), confidence,
                                            "specificity undefined: no reference-negative cases");
  s.accuracy = detail::proportion_metric(cm.tp + cm.tn, cm.total(), confidence, "");
  s.ppv = detail::proportion_metric(cm.tp, cm.tp + cm.fp, confidence,
                                    "PPV undefined: no positive index-test results");
  s.npv = detail::proportion_metric(cm.tn, cm.tn + cm.fn, confidence,
                                    "NPV undefined: no negative index-test results");

  // FPR is carried as the exact complement of specificity.
  if (s.specificity.defined()) {
    s.fpr.estimate = 1.0 - *s.specificity.estimate;
    s.fpr.ci = Interval{1.0 - s.specificity.ci.high, 1.0 - s.specificity.ci.low};
    s.fpr.verdict = verdict(*s.fpr.estimate);
  } else {
    s.fpr.note = "FPR undefined: no reference-negative cases";
  }

  s.lr_pos = detail::likelihood_ratio(cm.tp, cm.positives(), cm.fp, cm.negatives(), confidence, "LR+");
  s.lr_neg = detail::likelihood_ratio(cm.fn, cm.positives(), cm.tn, cm.negatives(), confidence, "LR-");
  return s;
}

// ---------------------------------------------------------------------------
// Timing study

struct TimingComparison {
  double median_with = 0.0;
  double median_without = 0.0;
  double u_statistic = 0.0;  // Mann-Whitney U of the with-software sample
  double p_value = 1.0;      // two-sided
  bool significant = false;  // p_value < 0.05
  bool exact = false;        // exact permutation distribution vs normal approximation
};

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Doubled mid-ranks of the pooled sample (integers, so ties stay exact).
/// Also returns the tie correction sum over groups of (t^3 - t).
inline std::vector<std::int64_t> doubled_midranks(const std::vector<double>& pooled,
                                                  double* tie_term) {
  const auto n = pooled.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
  std::vector<std::int64_t> ranks(n);
  double ties = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const auto doubled = static_cast<std::int64_t>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = doubled;
    const double t = static_cast<double>(j - i + 1);
    ties += t * t * t - t;
    i = j + 1;
  }
  if (tie_term) *tie_term = ties;
  return ranks;
}

/// Exact two-sided p-value of the rank-sum statistic: the fraction of all
/// size-m subsets of the pooled ranks whose (doubled) rank sum lies at least
/// as far from its mean as the observed one. Ties are handled through the
/// mid-rank values themselves.
inline double exact_rank_sum_p(const std::vector<std::int64_t>& ranks, std::size_t m,
                               std::int64_t observed) {
  const std::size_t n = ranks.size();
  std::vector<std::int64_t> sorted = ranks;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const std::int64_t max_sum =
      std::accumulate(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(m), std::int64_t{0});
  const auto width = static_cast<std::size_t>(max_sum + 1);
  // counts[j][s]: number of j-subsets with doubled rank sum s.
  std::vector<std::vector<double>> counts(m + 1, std::vector<double>(width, 0.0));
  counts[0][0] = 1.0;
  for (std::size_t e = 0; e < n; ++e) {
    const auto r = static_cast<std::size_t>(ranks[e]);
    for (std::size_t j = std::min(m, e + 1); j >= 1; --j) {
      auto& dst = counts[j];
      const auto& src = counts[j - 1];
      for (std::size_t s = width; s-- > r;) {
        if (src[s - r] != 0.0) dst[s] += src[s - r];
      }
    }
  }
  // Mean doubled rank sum is m * (n + 1).
  const std::int64_t mean2 = static_cast<std::int64_t>(m) * static_cast<std::int64_t>(n + 1);
  const std::int64_t dev = std::llabs(observed - mean2);
  double extreme = 0.0, total = 0.0;
  for (std::size_t s = 0; s < width; ++s) {
    const double c = counts[m][s];
    if (c == 0.0) continue;
    total += c;
    if (std::llabs(static_cast<std::int64_t>(s) - mean2) >= dev) extreme += c;
  }
  return std::clamp(extreme / total, 0.0, 1.0);
}

} // namespace detail

/// Largest pooled sample size for which the exact distribution is enumerated.
inline constexpr std::size_t kExactTimingPooledLimit = 1000;
inline constexpr std::size_t kExactTimingSmallGroup = 8;

/// Two-sided Mann-Whitney U comparison of workflow durations with and without
/// the software. Exact when the smaller group has at most 8 observations (and
/// the pooled sample is at most 1000), otherwise the tie-corrected normal
/// approximation with continuity correction.
inline TimingComparison compare_timing(std::span<const double> with_ai,
                                       std::span<const double> without_ai) {
  if (with_ai.empty() || without_ai.empty()) {
    throw DomainError("compare_timing: both samples must be non-empty");
  }
  for (double t : with_ai) {
    if (!std::isfinite(t)) throw DomainError("compare_timing: non-finite duration");
  }
  for (double t : without_ai) {
    if (!std::isfinite(t)) throw DomainError("compare_timing: non-finite duration");
  }
  const std::size_t n1 = with_ai.size(), n2 = without_ai.size(), n = n1 + n2;
  std::vector<double> pooled(with_ai.begin(), with_ai.end());
  pooled.insert(pooled.end(), without_ai.begin(), without_ai.end());
  double tie_term = 0.0;
  const auto ranks = detail::doubled_midranks(pooled, &tie_term);
  const std::int64_t r1_doubled = std::accumulate(
      ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(n1), std::int64_t{0});

  TimingComparison out;
  out.median_with = detail::median({with_ai.begin(), with_ai.end()});
  out.median_without = detail::median({without_ai.begin(), without_ai.end()});
  const double dn1 = static_cast<double>(n1), dn2 = static_cast<double>(n2);
  out.u_statistic = static_cast<double>(r1_doubled) / 2.0 - dn1 * (dn1 + 1.0) / 2.0;

  if (std::min(n1, n2) <= kExactTimingSmallGroup && n <= kExactTimingPooledLimit) {
    out.exact = true;
    // Enumerate over the smaller group; the two-sided p-value is identical
    // either way because the two rank sums add to a constant.
    if (n1 <= n2) {
      out.p_value = detail::exact_rank_sum_p(ranks, n1, r1_doubled);
    } else {
      std::vector<std::int64_t> swapped(ranks.begin() + static_cast<std::ptrdiff_t>(n1), ranks.end());
      swapped.insert(swapped.end(), ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(n1));
      const std::int64_t r2_doubled =
          static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n + 1) - r1_doubled;
      out.p_value = detail::exact_rank_sum_p(swapped, n2, r2_doubled);
    }
  } else {
    const double dn = static_cast<double>(n);
    const double mu = dn1 * dn2 / 2.0;
    const double var = dn1 * dn2 / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
    if (var <= 0.0) {
      out.p_value = 1.0;
    } else {
      const double z = std::max(0.0, std::abs(out.u_statistic - mu) - 0.5) / std::sqrt(var);
      out.p_value = std::clamp(2.0 * detail::normal_sf(z), 0.0, 1.0);
    }
  }
  out.significant = out.p_value < 0.05;
  return out;
}

} // namespace dxval
