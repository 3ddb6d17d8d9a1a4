#include <gtest/gtest.h>

#include <cmath>

#include "dxval/roc.hpp"
#include "support/oracles.hpp"

using namespace dxval;
using namespace dxval::roc;

namespace {

std::vector<ScoredOutcome> make(std::vector<double> pos, std::vector<double> neg) {
  std::vector<ScoredOutcome> out;
  for (double p : pos) out.push_back({p, 1});
  for (double n : neg) out.push_back({n, 0});
  return out;
}

std::vector<ScoredOutcome> convert(const std::vector<oracle::Scored>& d) {
  std::vector<ScoredOutcome> out;
  for (const auto& s : d) out.push_back({s.score, s.actual});
  return out;
}

} // namespace

TEST(RocCurve, PerfectSeparation) {
  const auto c = roc_curve(make({0.9}, {0.1}));
  ASSERT_EQ(c.points.size(), 3u);
  EXPECT_EQ(c.points[0].fpr, 0.0);
  EXPECT_EQ(c.points[0].tpr, 0.0);
  EXPECT_TRUE(std::isinf(c.points[0].threshold));
  EXPECT_EQ(c.points[1].fpr, 0.0);
  EXPECT_EQ(c.points[1].tpr, 1.0);
  EXPECT_EQ(c.points[2].fpr, 1.0);
  EXPECT_EQ(c.points[2].tpr, 1.0);
}

TEST(RocCurve, AllScoresIdentical) {
  const auto s = make({0.5, 0.5}, {0.5, 0.5, 0.5});
  const auto c = roc_curve(s);
  ASSERT_EQ(c.points.size(), 2u);
  EXPECT_EQ(c.points[1].fpr, 1.0);
  EXPECT_EQ(c.points[1].tpr, 1.0);
  EXPECT_EQ(auc(c, s).auc, 0.5);
  const auto y = cutoff_youden(c);
  EXPECT_EQ(y.criterion, 0.0);
  EXPECT_EQ(y.threshold, 0.5);
}

TEST(RocCurve, FivePointsMatchSweep) {
  const auto s = make({0.9, 0.4}, {0.6, 0.1});
  const auto c = roc_curve(s);
  ASSERT_EQ(c.points.size(), 5u);
  std::vector<oracle::Scored> o{{0.9, 1}, {0.4, 1}, {0.6, 0}, {0.1, 0}};
  const auto sweep = oracle::threshold_sweep(o);
  ASSERT_EQ(sweep.size(), c.points.size());
  for (std::size_t k = 0; k < sweep.size(); ++k) {
    EXPECT_EQ(c.points[k].threshold, sweep[k].threshold);
    EXPECT_EQ(c.points[k].tpr, sweep[k].tpr);
    EXPECT_EQ(c.points[k].fpr, sweep[k].fpr);
  }
  EXPECT_EQ(auc(c, s).auc, 0.75);
}

TEST(RocCurve, Errors) {
  EXPECT_THROW(roc_curve(make({0.2, 0.3}, {})), DomainError);
  EXPECT_THROW(roc_curve(make({}, {0.2})), DomainError);
  EXPECT_THROW(roc_curve(make({std::nan("")}, {0.2})), DomainError);
  EXPECT_THROW(trapezoid_area(RocCurve{}), DomainError);
}

TEST(Auc, PerfectSeparation) {
  const auto s = make({0.9, 0.8, 0.7}, {0.3, 0.2, 0.1});
  const auto r = auc(roc_curve(s), s);
  EXPECT_EQ(r.auc, 1.0);
  EXPECT_EQ(r.verdict, VerdictBand::Admissible);
  EXPECT_EQ(r.method, AucCiMethod::DeLong);
  EXPECT_EQ(r.ci.high, 1.0);
}

TEST(Auc, SmallClassFallsBackToHanleyMcNeil) {
  const auto s = make({0.9, 0.4}, {0.6, 0.1, 0.3});
  const auto r = auc(roc_curve(s), s);
  EXPECT_EQ(r.method, AucCiMethod::HanleyMcNeil);
  EXPECT_TRUE(r.ci.contains(r.auc));
  EXPECT_GE(r.ci.low, 0.0);
  EXPECT_LE(r.ci.high, 1.0);
}

TEST(Auc, DeLongMatchesPlacementOracle) {
  gen::Rng rng(21);
  int checked = 0;
  while (checked < 200) {
    const auto d = gen::scored(rng, 30);
    std::size_t pos = 0;
    for (const auto& x : d) pos += x.actual;
    if (pos < 3 || d.size() - pos < 3) continue;
    ++checked;
    const auto s = convert(d);
    const auto r = auc(roc_curve(s), s);
    ASSERT_EQ(r.method, AucCiMethod::DeLong);
    const double half = oracle::kZ95 * std::sqrt(oracle::delong_variance(d));
    EXPECT_NEAR(r.ci.low, std::clamp(r.auc - half, 0.0, 1.0), 1e-9);
    EXPECT_NEAR(r.ci.high, std::clamp(r.auc + half, 0.0, 1.0), 1e-9);
  }
}

TEST(Cutoff, PerfectSeparation) {
  const auto c = roc_curve(make({0.9, 0.8}, {0.3, 0.2}));
  const auto d = cutoff_dmin(c);
  EXPECT_EQ(d.threshold, 0.8);
  EXPECT_EQ(d.criterion, 0.0);
  const auto y = cutoff_youden(c);
  EXPECT_EQ(y.threshold, 0.8);
  EXPECT_EQ(y.criterion, 1.0);
}

TEST(Cutoff, SevenCandidatePoints) {
  const auto c = roc_curve(make({0.9, 0.8, 0.7}, {0.6, 0.3, 0.2}));
  ASSERT_EQ(c.points.size(), 7u);
  const auto d = cutoff_dmin(c);
  EXPECT_EQ(d.threshold, 0.7);
  EXPECT_EQ(d.sensitivity, 1.0);
  EXPECT_EQ(d.specificity, 1.0);
  const auto y = cutoff_youden(c);
  EXPECT_EQ(y.threshold, 0.7);
  EXPECT_EQ(y.criterion, 1.0);
}

TEST(Cutoff, TieGoesToHigherSensitivity) {
  // (fpr, tpr) = (0, 0.5) at 0.9 and (0.5, 1) at 0.5 are equidistant from (0,1) and share J = 0.5
  const auto c = roc_curve(make({0.9, 0.5}, {0.7, 0.3}));
  const auto d = cutoff_dmin(c);
  EXPECT_EQ(d.threshold, 0.5);
  EXPECT_EQ(d.sensitivity, 1.0);
  const auto y = cutoff_youden(c);
  EXPECT_EQ(y.threshold, 0.5);
  EXPECT_DOUBLE_EQ(y.criterion, 0.5);
}

TEST(Cutoff, EqualSensitivityTieGoesToLowerThreshold) {
  // J = 0 at every point; (1,1) points have the largest tp, and the lowest threshold among them wins
  const auto c = roc_curve(make({0.5}, {0.5}));
  EXPECT_EQ(cutoff_youden(c).threshold, 0.5);
}

TEST(OperatingPoint, Examples) {
  const auto s = make({0.9, 0.4}, {0.6, 0.1});
  const auto none = operating_point(s, dxval::detail::kInf);
  EXPECT_EQ(none.tp, 0u);
  EXPECT_EQ(none.fp, 0u);
  const auto all = operating_point(s, 0.0);
  EXPECT_EQ(all.tn, 0u);
  EXPECT_EQ(all.fn, 0u);
  EXPECT_EQ(operating_point(s, 0.7), (ConfusionMatrix{1, 2, 0, 1}));
}

TEST(ApplyThreshold, Binarizes) {
  std::vector<io::PairedOutcome> p{{"a", 0.7, 1}, {"b", 0.69, 0}};
  const auto b = apply_threshold(p, 0.7);
  EXPECT_EQ(b[0].predicted, 1.0);
  EXPECT_EQ(b[1].predicted, 0.0);
}

TEST(RocCsv, AnchorRow) {
  const auto text = to_csv(roc_curve(make({0.9}, {0.1})));
  EXPECT_EQ(text, "threshold,fpr,tpr\ninf,0,0\n0.9,0,1\n0.1,1,1\n");
}

TEST(RocProperty, AucEqualsPairCountingAndInvariants) {
  gen::Rng rng(31);
  for (int i = 0; i < 500; ++i) {
    const auto d = gen::scored(rng, 20);
    const auto s = convert(d);
    const auto c = roc_curve(s);
    const double a = trapezoid_area(c);
    EXPECT_NEAR(a, oracle::auc_pairs(d), 1e-12);

    // strictly increasing transform
    auto t = s;
    for (auto& x : t) x.score = std::exp(3 * x.score) - 7;
    EXPECT_NEAR(trapezoid_area(roc_curve(t)), a, 1e-12);

    // label swap
    auto f = s;
    for (auto& x : f) x.actual = 1 - x.actual;
    EXPECT_NEAR(trapezoid_area(roc_curve(f)), 1 - a, 1e-12);

    // every point reproduces itself through operating_point
    for (const auto& p : c.points) {
      const auto cm = operating_point(s, p.threshold);
      EXPECT_EQ(cm.tp, p.tp);
      EXPECT_EQ(cm.fp, p.fp);
      EXPECT_EQ(double(cm.tp) / double(c.n_pos), p.tpr);
      EXPECT_EQ(double(cm.fp) / double(c.n_neg), p.fpr);
    }
  }
}

TEST(RocProperty, CutoffsMatchExhaustiveSearch) {
  gen::Rng rng(41);
  for (int i = 0; i < 200; ++i) {
    const auto d = gen::scored(rng, 25, 12);
    const auto c = roc_curve(convert(d));
    const auto sweep = oracle::threshold_sweep(d);
    const auto yo = oracle::best_point(sweep, [](const oracle::Point& p) { return p.tpr - p.fpr; }, false);
    const auto dm = oracle::best_point(
        sweep, [](const oracle::Point& p) { return std::hypot(1 - p.tpr, p.fpr); }, true);
    const auto y = cutoff_youden(c);
    const auto m = cutoff_dmin(c);
    EXPECT_EQ(y.threshold, yo.threshold);
    EXPECT_EQ(m.threshold, dm.threshold);
    for (const auto& p : c.points) EXPECT_GE(y.criterion + 1e-12, p.tpr - p.fpr);
  }
}
