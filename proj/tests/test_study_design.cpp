#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "dxval/study_design.hpp"
#include "support/oracles.hpp"

using namespace dxval;
using namespace dxval::design;

namespace {

nlohmann::json load(const std::string& name) {
  std::ifstream in(std::string(DXVAL_TEST_DATA) + "/" + name);
  return nlohmann::json::parse(in);
}

const std::vector<AccuracyTarget> kTargets{{TargetMetric::Sensitivity, 0.9, 0.1, 0.95},
                                           {TargetMetric::Specificity, 0.9, 0.05, 0.95}};

} // namespace

TEST(SampleSize, Examples) {
  EXPECT_EQ(required_sample_size({0.5, 0.05, 0.95}).n, 385u);
  EXPECT_EQ(required_sample_size({0.2, 0.05, 0.95}).n, 246u);
  const auto edge = required_sample_size({0.5, 0.5, 0.95});
  EXPECT_EQ(edge.n, 4u);
  EXPECT_FALSE(edge.warnings.empty());
  EXPECT_TRUE(required_sample_size({0.5, 0.05, 0.95}).warnings.empty());
}

TEST(SampleSize, Errors) {
  EXPECT_THROW(required_sample_size({0.5, 0.0, 0.95}), DomainError);
  EXPECT_THROW(required_sample_size({0.0, 0.05, 0.95}), DomainError);
  EXPECT_THROW(required_sample_size({1.0, 0.05, 0.95}), DomainError);
  EXPECT_THROW(required_sample_size({0.5, 1.0, 0.95}), DomainError);
  EXPECT_THROW(required_sample_size({0.5, 0.05, 1.0}), DomainError);
}

TEST(SampleSize, MatchesFormulaOnGrid) {
  for (int pi = 1; pi < 100; ++pi) {
    for (double d : {0.01, 0.02, 0.05, 0.1}) {
      const double p = pi / 100.0;
      EXPECT_EQ(required_sample_size({p, d, 0.95}).n, oracle::ceil_sample_size(oracle::kZ95, p, d)) << p << " " << d;
    }
  }
}

TEST(SampleSize, Monotonicity) {
  // Distance from one half: strict on a 0.1 grid, non-strict at 0.01 where ceil can merge neighbours.
  for (double d : {0.02, 0.05, 0.1}) {
    for (double conf : {0.9, 0.95, 0.99}) {
      std::uint64_t prev = required_sample_size({0.5, d, conf}).n;
      for (double p : {0.4, 0.3, 0.2, 0.1}) {
        const auto n = required_sample_size({p, d, conf}).n;
        EXPECT_LT(n, prev);
        EXPECT_EQ(n, required_sample_size({1 - p, d, conf}).n);
        prev = n;
      }
      double prev_raw = required_sample_size({0.5, d, conf}).unrounded;
      std::uint64_t prev_n = required_sample_size({0.5, d, conf}).n;
      for (int k = 49; k >= 1; --k) {
        const auto r = required_sample_size({k / 100.0, d, conf});
        EXPECT_LT(r.unrounded, prev_raw);
        EXPECT_LE(r.n, prev_n);
        prev_raw = r.unrounded;
        prev_n = r.n;
      }
    }
  }
  for (double p : {0.1, 0.3, 0.5, 0.8}) {
    std::uint64_t prev = 0;
    for (double d : {0.2, 0.1, 0.05, 0.02, 0.01}) {
      const auto n = required_sample_size({p, d, 0.95}).n;
      EXPECT_GT(n, prev);
      prev = n;
    }
    prev = 0;
    for (double c : {0.8, 0.9, 0.95, 0.99, 0.999}) {
      const auto n = required_sample_size({p, 0.05, c}).n;
      EXPECT_GT(n, prev);
      prev = n;
    }
  }
}

TEST(Manifest, CompliantHasNoFindings) {
  const auto m = manifest_from_json(load("manifest_compliant.json"));
  EXPECT_EQ(m.abnormal_studies(), 200u);
  EXPECT_EQ(m.normal_studies(), 800u);
  const auto f = validate_manifest(m, {0.2, {}}, kTargets);
  EXPECT_TRUE(f.empty()) << render_findings(f);
  EXPECT_FALSE(has_blocking(f));
}

TEST(Manifest, SingleCenter) {
  auto m = manifest_from_json(load("manifest_compliant.json"));
  m.source_centers = {"City Hospital 1"};
  const auto f = validate_manifest(m, {0.2, {}}, kTargets);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].item, "requirement_2");
  EXPECT_EQ(f[0].severity, Severity::Blocking);
}

TEST(Manifest, PubliclyAvailable) {
  auto m = manifest_from_json(load("manifest_compliant.json"));
  m.publicly_available = true;
  const auto f = validate_manifest(m, {0.2, {}}, kTargets);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].item, "requirement_5");
  EXPECT_TRUE(has_blocking(f));
}

TEST(Manifest, PrevalenceToleranceAndTargets) {
  const auto m = manifest_from_json(load("manifest_compliant.json"));
  EXPECT_EQ(validate_manifest(m, {0.26, {}}, kTargets)[0].item, "requirement_1");
  EXPECT_TRUE(validate_manifest(m, {0.26, {}}, kTargets, 0.07).empty());
  // 385 abnormal studies needed, only 200 present
  const std::vector<AccuracyTarget> hard{{TargetMetric::Sensitivity, 0.5, 0.05, 0.95}};
  const auto f = validate_manifest(m, {0.2, {}}, hard);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].item, "requirement_4");
  EXPECT_NE(f[0].message.find("385"), std::string::npos);
  // no targets: advisory only
  const auto none = validate_manifest(m, {0.2, {}}, {});
  ASSERT_EQ(none.size(), 1u);
  EXPECT_EQ(none[0].severity, Severity::Warning);
}

TEST(Manifest, MissingDemographicsAndAdvisories) {
  auto doc = load("manifest_compliant.json");
  doc["population"].erase("sex_ratio");
  doc["population"].erase("geography");
  doc.erase("registration_certificate");
  doc["tagging_refs"] = nlohmann::json::array();
  const auto f = validate_manifest(manifest_from_json(doc), {0.2, {}}, kTargets);
  std::vector<std::string> items;
  for (const auto& x : f) items.push_back(x.item);
  EXPECT_EQ(items, (std::vector<std::string>{"requirement_3", "item_1_registration", "item_2_population",
                                             "item_8_tagging"}));
  EXPECT_NE(f[0].message.find("manual review"), std::string::npos);
}

TEST(Manifest, StructuralErrors) {
  auto doc = load("manifest_compliant.json");
  doc["counts"]["distribution"]["normal"] = 700;
  EXPECT_THROW(manifest_from_json(doc), DomainError);
  doc = load("manifest_compliant.json");
  doc["icd_codes"] = nlohmann::json::array();
  EXPECT_THROW(manifest_from_json(doc), DomainError);
  doc = load("manifest_compliant.json");
  doc["normal_to_abnormal"]["abnormal"] = 0;
  EXPECT_THROW(manifest_from_json(doc), Error);
  doc = load("manifest_compliant.json");
  doc.erase("counts");
  EXPECT_THROW(manifest_from_json(doc), ParseError);
}

TEST(Manifest, JsonRoundTripAndDeterminism) {
  const auto m = manifest_from_json(load("manifest_compliant.json"));
  EXPECT_EQ(to_json(manifest_from_json(to_json(m))), to_json(m));
  auto broken = m;
  broken.source_centers.clear();
  broken.publicly_available = true;
  broken.population.age_range.reset();
  const auto a = validate_manifest(broken, {0.5, {}}, kTargets);
  const auto b = validate_manifest(broken, {0.5, {}}, kTargets);
  EXPECT_EQ(to_json(a), to_json(b));
  std::vector<std::string> items;
  for (const auto& x : a) items.push_back(x.item);
  EXPECT_EQ(items, (std::vector<std::string>{"requirement_1", "requirement_2", "requirement_3", "requirement_5"}));
}

TEST(Targets, Parse) {
  const auto t = parse_target("specificity:0.95:0.03:0.99");
  EXPECT_EQ(t.metric, TargetMetric::Specificity);
  EXPECT_EQ(t.expected, 0.95);
  EXPECT_EQ(t.half_width, 0.03);
  EXPECT_EQ(t.confidence, 0.99);
  EXPECT_EQ(parse_target("accuracy:0.8:0.05").confidence, 0.95);
  EXPECT_THROW(parse_target("recall:0.9:0.05"), DomainError);
  EXPECT_THROW(parse_target("sensitivity:0.9"), DomainError);
  EXPECT_THROW(parse_target("sensitivity:x:0.05"), DomainError);
}
