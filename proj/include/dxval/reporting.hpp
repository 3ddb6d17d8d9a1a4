#pragma once

// STARD 2015 completeness checking and rendering of the preliminary clinical
// and technical test (PCTT) report as text plus a JSON sidecar.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dxval/detail/numeric.hpp"
#include "dxval/error.hpp"
#include "dxval/metrics.hpp"
#include "dxval/roc.hpp"
#include "dxval/study_design.hpp"

namespace dxval::reporting {

// ---------------------------------------------------------------------------
// STARD checklist

/// Checklist rows in printed order. Items 10, 12, 13 and 21 exist only as
/// their a/b sub-items.
inline constexpr std::array<std::string_view, 34> kStardItems{
    "1",  "2",  "3",  "4",  "5",  "6",  "7",  "8",   "9",   "10a", "10b", "11",
    "12a", "12b", "13a", "13b", "14", "15", "16", "17", "18", "19",  "20",  "21a",
    "21b", "22", "23", "24", "25", "26", "27", "28", "29", "30"};

inline bool is_stard_item(std::string_view id) {
  return std::find(kStardItems.begin(), kStardItems.end(), id) != kStardItems.end();
}

struct ReportEntry {
  bool present = false;
  std::string text;
};

class StudyReport {
public:
  StudyReport() = default;

  void set(const std::string& item, ReportEntry entry) {
    if (!is_stard_item(item)) throw DomainError("unknown STARD item '" + item + "'");
    entries_[item] = std::move(entry);
  }
  void set(const std::string& item, std::string text) { set(item, ReportEntry{true, std::move(text)}); }

  const ReportEntry* find(std::string_view item) const {
    auto it = entries_.find(std::string(item));
    return it == entries_.end() ? nullptr : &it->second;
  }
  const std::map<std::string, ReportEntry>& entries() const noexcept { return entries_; }

private:
  std::map<std::string, ReportEntry> entries_;
};

struct StardResult {
  bool complete = false;
  std::vector<std::string> missing;  // checklist order
  std::vector<std::string> present;  // checklist order
};

inline bool is_filled(const ReportEntry& e) {
  return e.present && std::any_of(e.text.begin(), e.text.end(),
                                  [](unsigned char c) { return !std::isspace(c); });
}

/// Splits the checklist into filled and missing items; content quality is not judged.
inline StardResult check_stard(const StudyReport& report) {
  StardResult r;
  for (auto id : kStardItems) {
    const auto* e = report.find(id);
    (e && is_filled(*e) ? r.present : r.missing).emplace_back(id);
  }
  r.complete = r.missing.empty();
  return r;
}

/// Accepts `{"23": "text"}` or `{"23": {"present": true, "text": "..."}}`.
inline StudyReport stard_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("STARD report must be a JSON object keyed by item number");
  StudyReport r;
  for (const auto& [key, v] : doc.items()) {
    if (!is_stard_item(key)) throw DomainError("unknown STARD item '" + key + "'");
    if (v.is_string()) {
      r.set(key, v.get<std::string>());
    } else if (v.is_object()) {
      ReportEntry e;
      if (auto it = v.find("present"); it != v.end()) {
        if (!it->is_boolean()) throw ParseError("STARD item " + key + ": 'present' must be a boolean");
        e.present = it->get<bool>();
      } else {
        e.present = true;
      }
      if (auto it = v.find("text"); it != v.end()) {
        if (!it->is_string()) throw ParseError("STARD item " + key + ": 'text' must be a string");
        e.text = it->get<std::string>();
      }
      r.set(key, std::move(e));
    } else if (v.is_null()) {
      r.set(key, ReportEntry{});
    } else {
      throw ParseError("STARD item " + key + " must be a string or an object");
    }
  }
  return r;
}

inline nlohmann::json to_json(const StardResult& r) {
  return {{"complete", r.complete}, {"missing", r.missing}, {"present", r.present}};
}

// ---------------------------------------------------------------------------
// PCTT report

struct PcttMetadata {
  std::string institution;
  std::string contact_details;
  std::string dates;
  std::string summary;
  std::string purpose;
  std::string data_type;
  std::string dataset_generation;
  std::string index_test;
  std::string process;
  std::string reference_threshold;
  std::string limitations;
  std::string conclusions;
  std::string funding;
  std::string other_info;
  std::vector<std::string> researchers;
  std::string report_date;
};

/// How the operating threshold was chosen.
struct ThresholdInfo {
  std::string rule = "binary";  // youden | dmin | fixed | binary
  std::optional<double> threshold;
};

/// Counts from the ingestion/join step, rendered as a textual flow summary.
struct StudyFlow {
  std::size_t predictions = 0;
  std::size_t references = 0;
  std::size_t paired = 0;
  std::size_t unmatched_predictions = 0;
  std::size_t unmatched_references = 0;
};

struct PcttInput {
  std::optional<ConfusionMatrix> confusion;
  std::optional<MetricSet> metrics;
  std::optional<roc::AucResult> auc;
  std::optional<roc::Cutoff> dmin;
  std::optional<roc::Cutoff> youden;
  ThresholdInfo threshold;
  std::optional<design::DatasetManifest> manifest;
  std::optional<StudyFlow> flow;
  std::optional<double> median_processing_time_s;
  PcttMetadata metadata;
};

struct PcttReport {
  std::string text;
  nlohmann::ordered_json json;
};

inline constexpr std::string_view kIndependenceAttestation =
    "The reference dataset used in these tests has not been used, wholly or partly, to train or "
    "calibrate the index test.";

inline constexpr std::string_view kAucNotApplicable = "not applicable (binary index test)";

namespace detail {

using ojson = nlohmann::ordered_json;

inline std::string or_unstated(const std::string& s) { return s.empty() ? "not stated" : s; }

inline ojson number(double v) {
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  return v;
}

inline std::string join(const std::vector<std::string>& v, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

inline ojson metric_json(const Metric& m) {
  if (!m.defined()) return ojson{{"undefined", m.note}};
  ojson o{{"estimate", number(*m.estimate)}, {"ci_low", number(m.ci.low)}, {"ci_high", number(m.ci.high)}};
  if (m.verdict) o["verdict"] = to_string(*m.verdict);
  if (!m.note.empty()) o["note"] = m.note;
  return o;
}

inline std::string metric_text(std::string_view label, const Metric& m) {
  std::string line = "   " + std::string(label);
  line.resize(std::max<std::size_t>(line.size(), 18), ' ');
  if (!m.defined()) return line + "undefined (" + m.note + ")";
  line += dxval::detail::fixed(*m.estimate) + "  [" + dxval::detail::fixed(m.ci.low) + ", " +
          dxval::detail::fixed(m.ci.high) + "]";
  if (m.verdict) line += "  " + std::string(describe(*m.verdict));
  return line;
}

inline std::string threshold_text(const std::optional<double>& t) {
  if (!t) return "n/a";
  return std::isinf(*t) ? "+inf" : dxval::detail::fixed(*t);
}

} // namespace detail

/// Renders the 20-item report. Pure: identical inputs give byte-identical output.
inline PcttReport render_pctt(const PcttInput& in) {
  using detail::ojson;
  using detail::or_unstated;
  if (!in.confusion) throw DomainError("PCTT report: missing result table (confusion matrix)");
  if (!in.metrics) throw DomainError("PCTT report: missing diagnostic accuracy parameters");
  if (in.metrics->source != *in.confusion) {
    throw DomainError("PCTT report: accuracy parameters were not computed from the reported result table");
  }
  if (in.threshold.rule != "binary" && !in.threshold.threshold) {
    throw DomainError("PCTT report: threshold rule '" + in.threshold.rule + "' without a threshold value");
  }
  const auto& md = in.metadata;
  const auto& cm = *in.confusion;
  const auto& ms = *in.metrics;
  const int ci_pct = static_cast<int>(std::lround(ms.confidence * 100.0));

  ojson j;
  std::ostringstream t;
  t << "PRELIMINARY CLINICAL AND TECHNICAL TEST (PCTT) REPORT\n";
  t << "=====================================================\n\n";

  auto simple = [&](int no, const char* key, std::string_view label, const std::string& value) {
    j[key] = value;
    t << no << ". " << label << ": " << value << "\n";
  };
  simple(1, "item_1_institution", "Institution", or_unstated(md.institution));
  simple(2, "item_2_contact_details", "Contact details", or_unstated(md.contact_details));
  simple(3, "item_3_dates", "Dates of PCTT", or_unstated(md.dates));
  simple(4, "item_4_summary", "Summary", or_unstated(md.summary));
  simple(5, "item_5_purpose", "Purpose, objectives and endpoints", or_unstated(md.purpose));

  // 6. Reference dataset
  t << "6. Reference test (reference dataset)\n";
  std::string data_type = md.data_type;
  std::string cases, population, dataset, pathology, sources;
  if (in.manifest) {
    const auto& m = *in.manifest;
    const auto& sc = m.study_characteristics;
    if (data_type.empty()) {
      data_type = or_unstated(sc.modality) + ", " + or_unstated(sc.anatomical_region) + "; device " +
                  or_unstated(sc.device) + "; protocol " + or_unstated(sc.protocol);
    }
    cases = std::to_string(m.counts.cases) + " cases, " + std::to_string(m.counts.studies) + " studies, " +
            std::to_string(m.counts.images) + " images, " + std::to_string(m.counts.reports) + " reports";
    std::vector<std::string> pop = m.population.descriptors;
    if (m.population.age_range) pop.push_back("age " + *m.population.age_range);
    if (m.population.sex_ratio) pop.push_back("sex ratio " + *m.population.sex_ratio);
    if (m.population.geography) pop.push_back("geography " + *m.population.geography);
    population = pop.empty() ? "not stated" : detail::join(pop, "; ");
    dataset = "registration certificate " + m.registration_certificate.value_or("none") + "; tagging methodology: " +
              (m.tagging_refs.empty() ? std::string("not stated") : detail::join(m.tagging_refs, "; "));
    pathology = "ICD-10 " + (m.icd_codes.empty() ? std::string("none") : detail::join(m.icd_codes, ", ")) +
                "; normal:abnormal = " + dxval::detail::shortest(m.normal_to_abnormal.normal) + ":" +
                dxval::detail::shortest(m.normal_to_abnormal.abnormal) + "; verification: " +
                or_unstated(m.verification_method);
    sources = std::to_string(m.source_centers.size()) + " center(s): " + detail::join(m.source_centers, ", ");
  } else {
    cases = population = dataset = pathology = sources = "not provided (no dataset manifest)";
  }
  if (in.flow) cases += "; " + std::to_string(in.flow->paired) + " studies evaluated";
  auto sub = [&](const char* no, const char* key, std::string_view label, const std::string& value) {
    j[key] = value;
    t << "   " << no << " " << label << ": " << value << "\n";
  };
  sub("6.1", "item_6_1_data_type", "Data type", or_unstated(data_type));
  sub("6.2", "item_6_2_cases", "Number of clinical cases", cases);
  sub("6.3", "item_6_3_population", "Population characteristics", population);
  sub("6.4", "item_6_4_dataset_and_tagging", "Dataset and tagging characteristics", dataset);
  sub("6.5", "item_6_5_pathology", "Pathology characteristics", pathology);
  sub("6.6", "item_6_6_generation", "Dataset generation", or_unstated(md.dataset_generation));
  sub("6.7", "item_6_7_data_sources", "Data sources", sources);
  sub("6.8", "item_6_8_independence", "Independence attestation", std::string(kIndependenceAttestation));

  std::string index_test = or_unstated(md.index_test);
  if (in.median_processing_time_s) {
    index_test += "; median processing time " + dxval::detail::fixed(*in.median_processing_time_s, 2) + " s";
  }
  simple(7, "item_7_index_test", "Index test (AI-based software)", index_test);
  if (in.median_processing_time_s) j["item_7_median_processing_time_s"] = *in.median_processing_time_s;

  std::string process = or_unstated(md.process);
  if (in.flow) {
    const auto& f = *in.flow;
    process += "; study flow: " + std::to_string(f.predictions) + " index-test results, " +
               std::to_string(f.references) + " reference labels, " + std::to_string(f.paired) + " paired, " +
               std::to_string(f.unmatched_predictions) + " without reference, " +
               std::to_string(f.unmatched_references) + " without index-test result";
    j["item_8_flow"] = {{"predictions", f.predictions},
                        {"references", f.references},
                        {"paired", f.paired},
                        {"unmatched_predictions", f.unmatched_predictions},
                        {"unmatched_references", f.unmatched_references}};
  }
  simple(8, "item_8_process", "PCTT process", process);

  // 9. Result table
  j["item_9_result_table"] = {{"tp", cm.tp}, {"fp", cm.fp}, {"fn", cm.fn}, {"tn", cm.tn}, {"total", cm.total()}};
  t << "9. Result table\n";
  t << "                    Reference +   Reference -\n";
  auto cell = [](std::uint64_t v) {
    std::string s = std::to_string(v);
    s.resize(std::max<std::size_t>(s.size(), 14), ' ');
    return s;
  };
  t << "   Index test +     " << cell(cm.tp) << cm.fp << "\n";
  t << "   Index test -     " << cell(cm.fn) << cm.tn << "\n";
  t << "   Total studies: " << cm.total() << "\n";

  // 10. Activation threshold
  ojson thr{{"rule", in.threshold.rule},
            {"classification", "score >= threshold is positive"},
            {"reference_test", or_unstated(md.reference_threshold)}};
  thr["threshold"] = in.threshold.threshold ? detail::number(*in.threshold.threshold) : ojson(nullptr);
  if (in.dmin) thr["dmin"] = {{"threshold", detail::number(in.dmin->threshold)},
                              {"sensitivity", in.dmin->sensitivity},
                              {"specificity", in.dmin->specificity},
                              {"distance", in.dmin->criterion}};
  if (in.youden) thr["youden"] = {{"threshold", detail::number(in.youden->threshold)},
                                  {"sensitivity", in.youden->sensitivity},
                                  {"specificity", in.youden->specificity},
                                  {"j", in.youden->criterion}};
  j["item_10_activation_threshold"] = thr;
  t << "10. Activation threshold: rule " << in.threshold.rule << ", threshold "
    << detail::threshold_text(in.threshold.threshold) << " (score >= threshold is positive)\n";
  if (in.dmin) {
    t << "   d-min cut-off: " << detail::threshold_text(in.dmin->threshold) << " (sensitivity "
      << dxval::detail::fixed(in.dmin->sensitivity) << ", specificity " << dxval::detail::fixed(in.dmin->specificity)
      << ", distance " << dxval::detail::fixed(in.dmin->criterion) << ")\n";
  }
  if (in.youden) {
    t << "   Youden cut-off: " << detail::threshold_text(in.youden->threshold) << " (sensitivity "
      << dxval::detail::fixed(in.youden->sensitivity) << ", specificity "
      << dxval::detail::fixed(in.youden->specificity) << ", J " << dxval::detail::fixed(in.youden->criterion) << ")\n";
  }
  t << "   Reference test: " << or_unstated(md.reference_threshold) << "\n";

  // 11. Accuracy parameters
  ojson acc{{"confidence", ms.confidence},
            {"sensitivity", detail::metric_json(ms.sensitivity)},
            {"specificity", detail::metric_json(ms.specificity)},
            {"accuracy", detail::metric_json(ms.accuracy)},
            {"ppv", detail::metric_json(ms.ppv)},
            {"npv", detail::metric_json(ms.npv)},
            {"fpr", detail::metric_json(ms.fpr)},
            {"lr_pos", detail::metric_json(ms.lr_pos)},
            {"lr_neg", detail::metric_json(ms.lr_neg)}};
  t << "11. Diagnostic accuracy parameters (estimate [" << ci_pct << "% CI])\n";
  t << detail::metric_text("Sensitivity", ms.sensitivity) << "\n";
  t << detail::metric_text("Specificity", ms.specificity) << "\n";
  t << detail::metric_text("Accuracy", ms.accuracy) << "\n";
  if (in.auc) {
    const auto& a = *in.auc;
    acc["auc"] = {{"estimate", a.auc},
                  {"ci_low", a.ci.low},
                  {"ci_high", a.ci.high},
                  {"verdict", to_string(a.verdict)},
                  {"ci_method", roc::to_string(a.method)}};
    t << "   AUC            " << dxval::detail::fixed(a.auc) << "  [" << dxval::detail::fixed(a.ci.low) << ", "
      << dxval::detail::fixed(a.ci.high) << "]  " << describe(a.verdict) << " (" << roc::to_string(a.method)
      << ")\n";
  } else {
    acc["auc"] = kAucNotApplicable;
    t << "   AUC            " << kAucNotApplicable << "\n";
  }
  t << detail::metric_text("PPV", ms.ppv) << "\n";
  t << detail::metric_text("NPV", ms.npv) << "\n";
  t << detail::metric_text("FPR", ms.fpr) << "\n";
  t << detail::metric_text("LR+", ms.lr_pos) << "\n";
  t << detail::metric_text("LR-", ms.lr_neg) << "\n";
  j["item_11_accuracy"] = acc;

  simple(12, "item_12_limitations", "Limitations", or_unstated(md.limitations));
  simple(13, "item_13_conclusions", "Conclusions", or_unstated(md.conclusions));
  simple(14, "item_14_funding", "Sources of PCTT funding", or_unstated(md.funding));
  simple(15, "item_15_other", "Other information", or_unstated(md.other_info));
  j["item_16_researchers"] = md.researchers;
  t << "16. List of researchers: " << (md.researchers.empty() ? "not stated" : detail::join(md.researchers, "; "))
    << "\n";
  simple(17, "item_17_date", "Date of signing the report", or_unstated(md.report_date));
  simple(18, "item_18_signature_responsible", "Signature of the responsible person", "[signature placeholder]");
  simple(19, "item_19_signature_head", "Signature of the head of institution", "[signature placeholder]");
  simple(20, "item_20_seal", "Seal of the institution", "[seal placeholder]");

  return {t.str(), std::move(j)};
}

inline PcttMetadata metadata_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("PCTT metadata must be a JSON object");
  PcttMetadata md;
  const std::map<std::string, std::string*> fields{
      {"institution", &md.institution},
      {"contact_details", &md.contact_details},
      {"dates", &md.dates},
      {"summary", &md.summary},
      {"purpose", &md.purpose},
      {"data_type", &md.data_type},
      {"dataset_generation", &md.dataset_generation},
      {"index_test", &md.index_test},
      {"process", &md.process},
      {"reference_threshold", &md.reference_threshold},
      {"limitations", &md.limitations},
      {"conclusions", &md.conclusions},
      {"funding", &md.funding},
      {"other_info", &md.other_info},
      {"report_date", &md.report_date}};
  for (const auto& [key, v] : doc.items()) {
    if (key == "researchers") {
      if (!v.is_array()) throw ParseError("metadata: researchers must be an array of strings");
      for (const auto& r : v) {
        if (!r.is_string()) throw ParseError("metadata: researchers must be an array of strings");
        md.researchers.push_back(r.get<std::string>());
      }
      continue;
    }
    auto it = fields.find(key);
    if (it == fields.end()) throw ParseError("metadata: unknown field '" + key + "'");
    if (!v.is_string()) throw ParseError("metadata: field '" + key + "' must be a string");
    *it->second = v.get<std::string>();
  }
  return md;
}

/// Values recovered from a PCTT JSON sidecar.
struct PcttResults {
  ConfusionMatrix confusion;
  std::map<std::string, std::optional<double>> estimates;  // nullopt: undefined metric
  std::optional<double> auc;
  std::string threshold_rule;
  std::optional<double> threshold;
};

inline PcttResults read_pctt_results(const nlohmann::json& j) {
  auto num = [](const nlohmann::json& v) -> double {
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "+inf") return dxval::detail::kInf;
      if (s == "-inf") return -dxval::detail::kInf;
      throw ParseError("PCTT JSON: non-numeric value '" + s + "'");
    }
    return v.get<double>();
  };
  try {
    PcttResults r;
    const auto& tab = j.at("item_9_result_table");
    r.confusion = {tab.at("tp").get<std::uint64_t>(), tab.at("tn").get<std::uint64_t>(),
                   tab.at("fp").get<std::uint64_t>(), tab.at("fn").get<std::uint64_t>()};
    const auto& acc = j.at("item_11_accuracy");
    for (const char* k : {"sensitivity", "specificity", "accuracy", "ppv", "npv", "fpr", "lr_pos", "lr_neg"}) {
      const auto& m = acc.at(k);
      r.estimates[k] = m.contains("estimate") ? std::optional<double>(num(m.at("estimate"))) : std::nullopt;
    }
    if (acc.at("auc").is_object()) r.auc = acc.at("auc").at("estimate").get<double>();
    const auto& thr = j.at("item_10_activation_threshold");
    r.threshold_rule = thr.at("rule").get<std::string>();
    if (!thr.at("threshold").is_null()) r.threshold = num(thr.at("threshold"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("PCTT JSON: ") + e.what());
  }
}

} // namespace dxval::reporting
