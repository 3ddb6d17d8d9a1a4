#pragma once

// Decision tables and scoring procedures for admitting diagnostic software:
// risk classification, the admission questionnaire gate, the CQOE sheet,
// metric-bundle selection per evaluation task, and the six-stage analytical
// validation pipeline.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dxval/detail/numeric.hpp"
#include "dxval/error.hpp"

namespace dxval::governance {

// ---------------------------------------------------------------------------
// Risk classification

enum class Category { A, B, C };
enum class InfoValue { I, II, III };

/// Ordered by risk: Class1 < Class2a < Class2b < Class3.
enum class SoftwareClass { Class1 = 0, Class2a = 1, Class2b = 2, Class3 = 3 };

inline std::string_view to_string(Category c) {
  switch (c) {
    case Category::A: return "A";
    case Category::B: return "B";
    case Category::C: return "C";
  }
  return "?";
}

inline std::string_view to_string(InfoValue v) {
  switch (v) {
    case InfoValue::I: return "I";
    case InfoValue::II: return "II";
    case InfoValue::III: return "III";
  }
  return "?";
}

inline std::string_view to_string(SoftwareClass c) {
  switch (c) {
    case SoftwareClass::Class1: return "1";
    case SoftwareClass::Class2a: return "2a";
    case SoftwareClass::Class2b: return "2b";
    case SoftwareClass::Class3: return "3";
  }
  return "?";
}

struct Provision {
  Category category = Category::C;
  InfoValue info_value = InfoValue::III;
};

struct RiskInput {
  std::vector<Provision> provisions;
  bool supervised_use = true;
};

/// Clinical situation category x information value -> class.
///        I    II   III
///   A    3    2b   2a
///   B    2b   2a   1
///   C    2a   1    1
inline SoftwareClass table_class(Category c, InfoValue v) {
  using S = SoftwareClass;
  static constexpr std::array<std::array<S, 3>, 3> table{{
      {S::Class3, S::Class2b, S::Class2a},
      {S::Class2b, S::Class2a, S::Class1},
      {S::Class2a, S::Class1, S::Class1},
  }};
  return table[static_cast<std::size_t>(c)][static_cast<std::size_t>(v)];
}

/// Category B used without professional supervision is treated as A.
inline Category escalate(Category c, bool supervised_use) {
  return (c == Category::B && !supervised_use) ? Category::A : c;
}

/// Highest class over all applicable provisions.
inline SoftwareClass classify_risk(const RiskInput& input) {
  if (input.provisions.empty()) throw DomainError("risk input needs at least one provision");
  auto worst = SoftwareClass::Class1;
  for (const auto& p : input.provisions) {
    worst = std::max(worst, table_class(escalate(p.category, input.supervised_use), p.info_value));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Admission questionnaire

struct AdmissionClause {
  std::string_view id;
  std::string_view summary;
  bool organizational;  // attested by the developer rather than measurable
};

inline constexpr std::array<AdmissionClause, 17> kAdmissionClauses{{
    {"1.1", "automatic preliminary analysis of medical images", false},
    {"1.2", "worklist prioritization by detected pathology", false},
    {"1.3", "automatic draft of the radiology report", false},
    {"1.4", "comparative analysis of a patient's studies over time", false},
    {"2.1", "FDA and/or CE (class II) approval", true},
    {"2.2", "working deployments: >= 2 institutions, > 6 months, >= 1000 confirmed studies per task", true},
    {"2.3", "Q1/Q2 peer-reviewed publications with proven accuracy and workflow gains", true},
    {"3.1", "accuracy assessed on data independent of training", true},
    {"3.2", "accuracy tested on a population similar to the intended one", true},
    {"3.3", "annual update of diagnostic accuracy information", true},
    {"4.1", "built-in accuracy assessment tool", false},
    {"4.2", "per-study processing time within the set limit", false},
    {"4.3", "DICOM result series with the required annotations", false},
    {"5.1", "quality management system", true},
    {"5.2", "regular updates including accuracy information", true},
    {"5.3", "updates included in the price", true},
    {"5.4", "customer owns medical data and results", true},
}};

struct AdmissionAnswers {
  std::map<std::string, bool> answers;  // keyed by clause id, e.g. "2.1"
  double measured_auc = 0.0;
  double processing_time_s = 0.0;
};

struct AdmissionConfig {
  double min_auc = 0.81;
  double time_limit_s = 60.0;
};

struct FailedItem {
  std::string clause;
  std::string message;

  bool operator==(const FailedItem&) const = default;
};

struct AdmissionDecision {
  bool pass = false;
  std::vector<FailedItem> failed_items;
  std::vector<std::string> notes;
};

/// Scores the questionnaire. Every clause must be answered yes, except the
/// certification block, which passes on 2.1 alone or on 2.2 and 2.3 together.
/// The measured AUC must reach `min_auc` and the measured per-study processing
/// time must not exceed `time_limit_s`.
inline AdmissionDecision score_admission(const AdmissionAnswers& a, const AdmissionConfig& cfg = {}) {
  for (const auto& c : kAdmissionClauses) {
    if (!a.answers.count(std::string(c.id))) {
      throw DomainError("admission answers missing clause " + std::string(c.id));
    }
  }
  for (const auto& [key, _] : a.answers) {
    const bool known = std::any_of(kAdmissionClauses.begin(), kAdmissionClauses.end(),
                                   [&](const auto& c) { return c.id == key; });
    if (!known) throw DomainError("admission answers contain unknown clause " + key);
  }
  if (!(a.measured_auc >= 0.0 && a.measured_auc <= 1.0)) {
    throw DomainError("measured AUC must lie in [0,1]");
  }
  if (!(a.processing_time_s >= 0.0) || !std::isfinite(a.processing_time_s)) {
    throw DomainError("measured processing time must be a finite number >= 0");
  }
  if (!(cfg.time_limit_s > 0.0)) throw DomainError("processing time limit must be positive");

  AdmissionDecision d;
  auto yes = [&](std::string_view id) { return a.answers.at(std::string(id)); };
  const bool certified_directly = yes("2.1");
  for (const auto& c : kAdmissionClauses) {
    const bool ok = yes(c.id);
    if (c.id == "2.1") continue;  // optional when 2.2 and 2.3 both hold
    if ((c.id == "2.2" || c.id == "2.3") && certified_directly) continue;
    if (!ok) {
      std::string msg = "clause " + std::string(c.id) + " not satisfied: " + std::string(c.summary);
      if (c.id == "2.2" || c.id == "2.3") msg += " (required because 2.1 is 'no')";
      d.failed_items.push_back({std::string(c.id), std::move(msg)});
    }
  }
  if (!(a.measured_auc >= cfg.min_auc)) {
    d.failed_items.push_back({"auc", "measured AUC " + detail::fixed(a.measured_auc) + " below required AUC ≥ " +
                                         detail::shortest(cfg.min_auc) + " (classic ROC curve)"});
  }
  if (!(a.processing_time_s <= cfg.time_limit_s)) {
    d.failed_items.push_back({"processing_time", "measured processing time " + detail::shortest(a.processing_time_s) +
                                                     " s exceeds the limit of " + detail::shortest(cfg.time_limit_s) +
                                                     " s per study"});
  }
  d.pass = d.failed_items.empty();

  d.notes.push_back("AUC threshold " + detail::shortest(cfg.min_auc) +
                    " applied; the developer questionnaire asks for AUC ≥ 0.8, the stricter "
                    "admission value governs");
  std::string attested = "attested, not verified:";
  for (const auto& c : kAdmissionClauses) {
    if (c.organizational) attested += " " + std::string(c.id);
  }
  d.notes.push_back(attested);
  d.notes.push_back("manual review: data security and in-country hosting");
  d.notes.push_back("manual review: DICOM analysis, HL7/FHIR messaging, RADS-type classifications");
  d.notes.push_back("manual review: PACS/RIS integration");
  return d;
}

// ---------------------------------------------------------------------------
// CQOE sheet

inline constexpr std::array<char, 5> kCqoeItems{'A', 'B', 'C', 'D', 'E'};
inline constexpr std::array<int, 4> kCqoeScores{20, 15, 5, 0};

struct CqoeSheet {
  std::array<int, 5> scores{};  // items A-E
};

/// Sum of the five item scores, each drawn from {20, 15, 5, 0}.
inline int score_cqoe(const CqoeSheet& sheet) {
  int total = 0;
  for (std::size_t i = 0; i < sheet.scores.size(); ++i) {
    const int s = sheet.scores[i];
    if (std::find(kCqoeScores.begin(), kCqoeScores.end(), s) == kCqoeScores.end()) {
      throw DomainError(std::string("CQOE item ") + kCqoeItems[i] + " score " + std::to_string(s) +
                        " is not one of 20, 15, 5, 0");
    }
    total += s;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Metric bundles

enum class EvaluationTask { Detection, Classification, Segmentation, Nlp };
enum class MetricFamily { StandardSet, Roc, Dice, Kappa };

inline std::string_view to_string(EvaluationTask t) {
  switch (t) {
    case EvaluationTask::Detection: return "detection";
    case EvaluationTask::Classification: return "classification";
    case EvaluationTask::Segmentation: return "segmentation";
    case EvaluationTask::Nlp: return "nlp";
  }
  return "?";
}

inline std::string_view to_string(MetricFamily f) {
  switch (f) {
    case MetricFamily::StandardSet: return "standard_set";
    case MetricFamily::Roc: return "roc";
    case MetricFamily::Dice: return "dice";
    case MetricFamily::Kappa: return "kappa";
  }
  return "?";
}

inline EvaluationTask parse_task(std::string_view s) {
  if (s == "detection") return EvaluationTask::Detection;
  if (s == "classification") return EvaluationTask::Classification;
  if (s == "segmentation") return EvaluationTask::Segmentation;
  if (s == "nlp") return EvaluationTask::Nlp;
  throw DomainError("unknown evaluation task '" + std::string(s) + "'");
}

struct MetricBundle {
  std::vector<MetricFamily> required;
  std::vector<MetricFamily> optional;

  bool operator==(const MetricBundle&) const = default;
};

inline MetricBundle select_metric_bundle(EvaluationTask task, bool scores_available = false) {
  switch (task) {
    case EvaluationTask::Detection:
    case EvaluationTask::Classification:
      if (scores_available) return {{MetricFamily::StandardSet, MetricFamily::Roc}, {}};
      return {{MetricFamily::StandardSet}, {}};
    case EvaluationTask::Segmentation:
      return {{MetricFamily::Dice}, {MetricFamily::StandardSet}};
    case EvaluationTask::Nlp:
      return {{MetricFamily::Kappa}, {MetricFamily::StandardSet}};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Analytical validation pipeline

enum class Stage { Questionnaire = 0, SelfTest, Interview, OnlineTest, EvidenceTest, FinalEvaluation, Done };

inline constexpr std::array<Stage, 6> kWorkStages{Stage::Questionnaire, Stage::SelfTest,     Stage::Interview,
                                                  Stage::OnlineTest,    Stage::EvidenceTest, Stage::FinalEvaluation};

inline std::string_view stage_code(Stage s) {
  switch (s) {
    case Stage::Questionnaire: return "I";
    case Stage::SelfTest: return "II";
    case Stage::Interview: return "III";
    case Stage::OnlineTest: return "IV";
    case Stage::EvidenceTest: return "V";
    case Stage::FinalEvaluation: return "VI";
    case Stage::Done: return "Done";
  }
  return "?";
}

inline std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::Questionnaire: return "questionnaire";
    case Stage::SelfTest: return "self-test";
    case Stage::Interview: return "interview";
    case Stage::OnlineTest: return "online test";
    case Stage::EvidenceTest: return "evidence test";
    case Stage::FinalEvaluation: return "final evaluation";
    case Stage::Done: return "done";
  }
  return "?";
}

/// What each stage hands over on completion.
inline std::string_view stage_deliverable(Stage s) {
  switch (s) {
    case Stage::Questionnaire: return "completed questionnaire";
    case Stage::SelfTest: return "result files from processing the sample dataset";
    case Stage::Interview: return "answers to the interview protocol";
    case Stage::OnlineTest: return "per-study performance report";
    case Stage::EvidenceTest: return "diagnostic accuracy evaluation on the reference dataset";
    case Stage::FinalEvaluation: return "admission decision";
    case Stage::Done: return "";
  }
  return "";
}

inline Stage parse_stage(std::string_view code) {
  for (auto s : kWorkStages) {
    if (stage_code(s) == code) return s;
  }
  if (code == "Done") return Stage::Done;
  throw DomainError("unknown pipeline stage '" + std::string(code) + "'");
}

struct Deliverable {
  Stage stage = Stage::Questionnaire;
  std::string reference;
};

/// Immutable pipeline state. Deliverables exist exactly for the completed
/// stages, which are always a prefix of I..VI.
class ValidationPipeline {
public:
  ValidationPipeline() = default;

  /// Rebuilds a state from its parts, enforcing the invariants.
  static ValidationPipeline from_parts(Stage stage, std::map<Stage, std::string> deliverables) {
    for (auto s : kWorkStages) {
      const bool completed = static_cast<int>(s) < static_cast<int>(stage);
      const bool has = deliverables.count(s) > 0;
      if (completed != has) {
        throw StateError("pipeline state inconsistent at stage " + std::string(stage_code(s)) +
                         (completed ? ": completed stage lacks its deliverable" : ": deliverable for a stage not yet completed"));
      }
    }
    if (deliverables.count(Stage::Done)) throw StateError("pipeline state has a deliverable for Done");
    ValidationPipeline p;
    p.stage_ = stage;
    p.deliverables_ = std::move(deliverables);
    return p;
  }

  Stage stage() const noexcept { return stage_; }
  const std::map<Stage, std::string>& deliverables() const noexcept { return deliverables_; }
  bool done() const noexcept { return stage_ == Stage::Done; }

  friend ValidationPipeline advance_stage(const ValidationPipeline& p, const Deliverable& d);

private:
  Stage stage_ = Stage::Questionnaire;
  std::map<Stage, std::string> deliverables_;
};

/// Completes the current stage with its deliverable and returns the next state.
inline ValidationPipeline advance_stage(const ValidationPipeline& p, const Deliverable& d) {
  if (p.done()) throw StateError("pipeline already done; nothing left to advance");
  if (d.stage != p.stage_) {
    throw StateError("out-of-order deliverable: stage " + std::string(stage_code(d.stage)) +
                     " submitted while the pipeline is at stage " + std::string(stage_code(p.stage_)));
  }
  if (d.reference.empty()) throw DomainError("deliverable reference must not be empty");
  if (p.stage_ == Stage::FinalEvaluation) {
    for (auto s : kWorkStages) {
      if (s != Stage::FinalEvaluation && !p.deliverables_.count(s)) {
        throw StateError("final evaluation requires the deliverable of stage " + std::string(stage_code(s)));
      }
    }
  }
  ValidationPipeline next = p;
  next.deliverables_.emplace(d.stage, d.reference);
  next.stage_ = static_cast<Stage>(static_cast<int>(p.stage_) + 1);
  return next;
}

// ---------------------------------------------------------------------------
// JSON

namespace json_io {

using nlohmann::json;

inline bool answer(const json& v, const std::string& clause) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer() && (v.get<long long>() == 0 || v.get<long long>() == 1)) return v.get<long long>() == 1;
  throw ParseError("clause " + clause + ": answer must be true/false or 1/0");
}

inline double number(const json& obj, const char* key, const std::string& ctx) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) throw ParseError(ctx + ": missing numeric field '" + key + "'");
  return it->get<double>();
}

} // namespace json_io

/// `{"provisions": [{"category": "A", "info_value": "I"}, ...], "supervised_use": true}`
inline RiskInput risk_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("provisions") || !doc["provisions"].is_array()) {
    throw ParseError("risk input must be an object with a 'provisions' array");
  }
  RiskInput in;
  if (doc.contains("supervised_use")) {
    if (!doc["supervised_use"].is_boolean()) throw ParseError("risk input: supervised_use must be a boolean");
    in.supervised_use = doc["supervised_use"].get<bool>();
  }
  std::size_t i = 0;
  for (const auto& p : doc["provisions"]) {
    ++i;
    if (!p.is_object() || !p.contains("category") || !p.contains("info_value") || !p["category"].is_string() ||
        !p["info_value"].is_string()) {
      throw ParseError("risk provision needs string 'category' and 'info_value'", i);
    }
    const auto cat = p["category"].get<std::string>();
    const auto val = p["info_value"].get<std::string>();
    Provision pr;
    if (cat == "A") pr.category = Category::A;
    else if (cat == "B") pr.category = Category::B;
    else if (cat == "C") pr.category = Category::C;
    else throw ParseError("risk provision category must be A, B or C, got '" + cat + "'", i);
    if (val == "I") pr.info_value = InfoValue::I;
    else if (val == "II") pr.info_value = InfoValue::II;
    else if (val == "III") pr.info_value = InfoValue::III;
    else throw ParseError("risk provision info_value must be I, II or III, got '" + val + "'", i);
    in.provisions.push_back(pr);
  }
  if (in.provisions.empty()) throw ParseError("risk input needs at least one provision");
  return in;
}

/// `{"answers": {"1.1": true, ...}, "measured": {"auc": 0.9, "processing_time_s": 30}}`
inline AdmissionAnswers admission_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("answers") || !doc["answers"].is_object()) {
    throw ParseError("admission input must be an object with an 'answers' object");
  }
  AdmissionAnswers a;
  for (const auto& [clause, v] : doc["answers"].items()) a.answers[clause] = json_io::answer(v, clause);
  for (const auto& c : kAdmissionClauses) {
    if (!a.answers.count(std::string(c.id))) throw ParseError("admission answers missing clause " + std::string(c.id));
  }
  if (!doc.contains("measured") || !doc["measured"].is_object()) {
    throw ParseError("admission input needs a 'measured' object");
  }
  a.measured_auc = json_io::number(doc["measured"], "auc", "measured");
  a.processing_time_s = json_io::number(doc["measured"], "processing_time_s", "measured");
  return a;
}

/// `{"A": 20, "B": 15, "C": 5, "D": 0, "E": 20}`
inline CqoeSheet cqoe_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("CQOE sheet must be an object keyed A-E");
  CqoeSheet s;
  for (std::size_t i = 0; i < kCqoeItems.size(); ++i) {
    const std::string key(1, kCqoeItems[i]);
    if (!doc.contains(key) || !doc[key].is_number_integer()) {
      throw ParseError("CQOE sheet: item " + key + " missing or not an integer");
    }
    s.scores[i] = doc[key].get<int>();
  }
  for (const auto& [key, _] : doc.items()) {
    if (key.size() != 1 || std::find(kCqoeItems.begin(), kCqoeItems.end(), key[0]) == kCqoeItems.end()) {
      throw ParseError("CQOE sheet: unknown item '" + key + "'");
    }
  }
  return s;
}

inline nlohmann::json to_json(const ValidationPipeline& p) {
  nlohmann::json del = nlohmann::json::object();
  for (const auto& [s, ref] : p.deliverables()) del[std::string(stage_code(s))] = ref;
  return {{"stage", stage_code(p.stage())}, {"deliverables", del}};
}

inline ValidationPipeline pipeline_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("stage") || !doc["stage"].is_string()) {
    throw ParseError("pipeline state needs a string 'stage'");
  }
  std::map<Stage, std::string> del;
  if (doc.contains("deliverables")) {
    if (!doc["deliverables"].is_object()) throw ParseError("pipeline deliverables must be an object");
    for (const auto& [code, ref] : doc["deliverables"].items()) {
      if (!ref.is_string()) throw ParseError("pipeline deliverable for stage " + code + " must be a string");
      del[parse_stage(code)] = ref.get<std::string>();
    }
  }
  return ValidationPipeline::from_parts(parse_stage(doc["stage"].get<std::string>()), std::move(del));
}

inline nlohmann::json to_json(const AdmissionDecision& d) {
  auto failed = nlohmann::json::array();
  for (const auto& f : d.failed_items) failed.push_back({{"clause", f.clause}, {"message", f.message}});
  return {{"pass", d.pass}, {"failed_items", failed}, {"notes", d.notes}};
}

} // namespace dxval::governance
