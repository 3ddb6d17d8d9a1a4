#include <gtest/gtest.h>

#include <set>

#include "dxval/governance.hpp"
#include "support/oracles.hpp"

using namespace dxval;
using namespace dxval::governance;

namespace {

constexpr std::array<Category, 3> kCats{Category::A, Category::B, Category::C};
constexpr std::array<InfoValue, 3> kVals{InfoValue::I, InfoValue::II, InfoValue::III};

AdmissionAnswers all_yes(double auc = 0.9, double time = 30) {
  AdmissionAnswers a;
  for (const auto& c : kAdmissionClauses) a.answers[std::string(c.id)] = true;
  a.measured_auc = auc;
  a.processing_time_s = time;
  return a;
}

bool cites(const AdmissionDecision& d, const std::string& clause) {
  return std::any_of(d.failed_items.begin(), d.failed_items.end(), [&](const auto& f) { return f.clause == clause; });
}

} // namespace

TEST(Risk, TableCells) {
  const std::array<std::array<std::string_view, 3>, 3> expected{{{"3", "2b", "2a"}, {"2b", "2a", "1"}, {"2a", "1", "1"}}};
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t v = 0; v < 3; ++v) EXPECT_EQ(to_string(table_class(kCats[c], kVals[v])), expected[c][v]);
}

TEST(Risk, Examples) {
  EXPECT_EQ(classify_risk({{{Category::A, InfoValue::I}}}), SoftwareClass::Class3);
  EXPECT_EQ(classify_risk({{{Category::C, InfoValue::III}}}), SoftwareClass::Class1);
  EXPECT_EQ(classify_risk({{{Category::B, InfoValue::II}}, false}), SoftwareClass::Class2b);
  EXPECT_EQ(classify_risk({{{Category::B, InfoValue::II}}, true}), SoftwareClass::Class2a);
  EXPECT_EQ(classify_risk({{{Category::C, InfoValue::III}, {Category::A, InfoValue::II}}}), SoftwareClass::Class2b);
  EXPECT_THROW(classify_risk({}), DomainError);
}

TEST(Risk, EscalationProperties) {
  for (bool sup : {true, false}) EXPECT_EQ(escalate(Category::A, sup), Category::A);
  for (auto c : kCats) EXPECT_EQ(escalate(c, true), c);
  EXPECT_EQ(escalate(Category::C, false), Category::C);
}

TEST(Risk, PairsAreMaxOfSingles) {
  int cases = 0;
  for (auto c1 : kCats)
    for (auto v1 : kVals)
      for (auto c2 : kCats)
        for (auto v2 : kVals) {
          ++cases;
          for (bool sup : {true, false}) {
            const auto pair = classify_risk({{{c1, v1}, {c2, v2}}, sup});
            const auto single = std::max(classify_risk({{{c1, v1}}, sup}), classify_risk({{{c2, v2}}, sup}));
            EXPECT_EQ(pair, single);
          }
        }
  EXPECT_EQ(cases, 81);
}

TEST(Risk, Json) {
  EXPECT_EQ(classify_risk(risk_from_json(nlohmann::json::parse(
                R"({"provisions":[{"category":"B","info_value":"II"}],"supervised_use":false})"))),
            SoftwareClass::Class2b);
  EXPECT_THROW(risk_from_json(nlohmann::json::parse(R"({"provisions":[{"category":"D","info_value":"I"}]})")),
               ParseError);
  EXPECT_THROW(risk_from_json(nlohmann::json::parse(R"({"provisions":[]})")), ParseError);
}

TEST(Admission, Examples) {
  EXPECT_TRUE(score_admission(all_yes()).pass);

  auto alt = all_yes();
  alt.answers["2.1"] = false;
  EXPECT_TRUE(score_admission(alt).pass);

  alt.answers["2.2"] = false;
  const auto fail = score_admission(alt);
  EXPECT_FALSE(fail.pass);
  EXPECT_TRUE(cites(fail, "2.2"));
  EXPECT_FALSE(cites(fail, "2.1"));

  const auto low = score_admission(all_yes(0.79));
  EXPECT_FALSE(low.pass);
  ASSERT_TRUE(cites(low, "auc"));
  EXPECT_NE(low.failed_items[0].message.find("AUC ≥ 0.81"), std::string::npos);
}

TEST(Admission, CertificationTruthTable) {
  for (int mask = 0; mask < 8; ++mask) {
    auto a = all_yes();
    const bool c21 = mask & 1, c22 = mask & 2, c23 = mask & 4;
    a.answers["2.1"] = c21;
    a.answers["2.2"] = c22;
    a.answers["2.3"] = c23;
    const auto d = score_admission(a);
    EXPECT_EQ(d.pass, c21 || (c22 && c23)) << mask;
    EXPECT_EQ(cites(d, "2.2"), !c21 && !c22) << mask;
    EXPECT_EQ(cites(d, "2.3"), !c21 && !c23) << mask;
  }
}

TEST(Admission, Boundaries) {
  EXPECT_TRUE(score_admission(all_yes(0.81)).pass);
  EXPECT_FALSE(score_admission(all_yes(0.8099)).pass);
  EXPECT_TRUE(score_admission(all_yes(0.9, 60.0)).pass);
  const auto slow = score_admission(all_yes(0.9, 60.01));
  EXPECT_FALSE(slow.pass);
  EXPECT_TRUE(cites(slow, "processing_time"));
  EXPECT_TRUE(score_admission(all_yes(0.9, 90.0), {0.81, 120.0}).pass);
}

TEST(Admission, NotesAndErrors) {
  const auto d = score_admission(all_yes());
  EXPECT_GE(d.notes.size(), 3u);
  auto missing = all_yes();
  missing.answers.erase("4.2");
  EXPECT_THROW(score_admission(missing), DomainError);
  auto extra = all_yes();
  extra.answers["9.9"] = true;
  EXPECT_THROW(score_admission(extra), DomainError);
  EXPECT_THROW(score_admission(all_yes(1.2)), DomainError);
}

TEST(Admission, MonotoneInAnswers) {
  gen::Rng rng(71);
  for (int i = 0; i < 2000; ++i) {
    auto a = all_yes(0.8 + 0.02 * gen::unit(rng), 55 + 10 * gen::unit(rng));
    for (auto& [_, v] : a.answers) v = gen::uniform(rng, 0, 3) != 0;
    const bool before = score_admission(a).pass;
    const auto flip = std::next(a.answers.begin(), long(gen::uniform(rng, 0, a.answers.size() - 1)));
    if (flip->second) continue;
    flip->second = true;
    if (before) {
      EXPECT_TRUE(score_admission(a).pass);
    }
  }
}

TEST(Admission, Json) {
  nlohmann::json doc;
  for (const auto& c : kAdmissionClauses) doc["answers"][std::string(c.id)] = true;
  doc["measured"] = {{"auc", 0.79}, {"processing_time_s", 12}};
  const auto d = score_admission(admission_from_json(doc));
  EXPECT_FALSE(d.pass);
  EXPECT_EQ(to_json(d)["failed_items"][0]["clause"], "auc");
  doc["answers"]["1.1"] = "yes";
  EXPECT_THROW(admission_from_json(doc), ParseError);
}

TEST(Cqoe, Examples) {
  EXPECT_EQ(score_cqoe({{20, 20, 20, 20, 20}}), 100);
  EXPECT_EQ(score_cqoe({{0, 0, 0, 0, 0}}), 0);
  EXPECT_EQ(score_cqoe({{20, 15, 5, 0, 20}}), 60);
  EXPECT_THROW(score_cqoe({{20, 10, 5, 0, 20}}), DomainError);
  EXPECT_EQ(score_cqoe(cqoe_from_json(nlohmann::json::parse(R"({"A":20,"B":15,"C":5,"D":0,"E":20})"))), 60);
  EXPECT_THROW(cqoe_from_json(nlohmann::json::parse(R"({"A":20,"B":15,"C":5,"D":0})")), ParseError);
}

TEST(Cqoe, RangeIsReachableSums) {
  std::set<int> reachable{0};
  for (int i = 0; i < 5; ++i) {
    std::set<int> next;
    for (int r : reachable)
      for (int s : kCqoeScores) next.insert(r + s);
    reachable = next;
  }
  std::set<int> seen;
  for (int a : kCqoeScores)
    for (int b : kCqoeScores)
      for (int c : kCqoeScores)
        for (int d : kCqoeScores)
          for (int e : kCqoeScores) seen.insert(score_cqoe({{a, b, c, d, e}}));
  EXPECT_EQ(seen, reachable);
  EXPECT_EQ(*seen.begin(), 0);
  EXPECT_EQ(*seen.rbegin(), 100);
}

TEST(Bundles, ByTask) {
  EXPECT_EQ(select_metric_bundle(EvaluationTask::Detection).required, std::vector<MetricFamily>{MetricFamily::StandardSet});
  EXPECT_EQ(select_metric_bundle(EvaluationTask::Segmentation).required, std::vector<MetricFamily>{MetricFamily::Dice});
  EXPECT_EQ(select_metric_bundle(EvaluationTask::Nlp).required, std::vector<MetricFamily>{MetricFamily::Kappa});
  EXPECT_EQ(select_metric_bundle(EvaluationTask::Classification, true).required,
            (std::vector<MetricFamily>{MetricFamily::StandardSet, MetricFamily::Roc}));
  EXPECT_EQ(parse_task("nlp"), EvaluationTask::Nlp);
  EXPECT_THROW(parse_task("triage"), DomainError);
}

TEST(Pipeline, Examples) {
  ValidationPipeline p;
  EXPECT_EQ(p.stage(), Stage::Questionnaire);
  const auto next = advance_stage(p, {Stage::Questionnaire, "questionnaire.pdf"});
  EXPECT_EQ(next.stage(), Stage::SelfTest);
  EXPECT_EQ(p.stage(), Stage::Questionnaire);  // unchanged
  EXPECT_THROW(advance_stage(p, {Stage::EvidenceTest, "evidence.pdf"}), StateError);

  auto q = ValidationPipeline{};
  for (auto s : kWorkStages) q = advance_stage(q, {s, std::string(stage_deliverable(s))});
  EXPECT_TRUE(q.done());
  EXPECT_EQ(q.deliverables().size(), 6u);
  EXPECT_THROW(advance_stage(q, {Stage::FinalEvaluation, "again"}), StateError);
}

TEST(Pipeline, ReplayRejectedAndOrderIncreasing) {
  gen::Rng rng(81);
  for (int i = 0; i < 500; ++i) {
    ValidationPipeline p;
    int last = -1;
    for (int step = 0; step < 12 && !p.done(); ++step) {
      const auto s = static_cast<Stage>(gen::uniform(rng, 0, 5));
      try {
        const auto n = advance_stage(p, {s, "ref"});
        EXPECT_EQ(s, p.stage());
        EXPECT_GT(static_cast<int>(n.stage()), last);
        last = static_cast<int>(n.stage());
        EXPECT_THROW(advance_stage(n, {s, "ref"}), StateError);
        p = n;
      } catch (const StateError&) {
        EXPECT_NE(s, p.stage());
      }
    }
  }
}

TEST(Pipeline, JsonRoundTrip) {
  auto p = advance_stage(advance_stage(ValidationPipeline{}, {Stage::Questionnaire, "q"}), {Stage::SelfTest, "s"});
  const auto j = to_json(p);
  EXPECT_EQ(j["stage"], "III");
  const auto back = pipeline_from_json(j);
  EXPECT_EQ(back.stage(), p.stage());
  EXPECT_EQ(back.deliverables(), p.deliverables());
  EXPECT_THROW(pipeline_from_json(nlohmann::json::parse(R"({"stage":"III","deliverables":{"I":"q"}})")), StateError);
  EXPECT_THROW(pipeline_from_json(nlohmann::json::parse(R"({"stage":"VII"})")), Error);
}
