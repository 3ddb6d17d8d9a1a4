#pragma once

// Reference-dataset sizing and manifest checks.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dxval/detail/numeric.hpp"
#include "dxval/error.hpp"

namespace dxval::design {

struct SampleSizeRequest {
  double expected_proportion = 0.5;  // p
  double half_width = 0.05;          // d, half the CI width
  double confidence = 0.95;
};

struct SampleSizeResult {
  std::uint64_t n = 0;
  double z = 0.0;
  double unrounded = 0.0;  // z^2 p (1-p) / d^2 before ceiling
  std::vector<std::string> warnings;
};

/// n = ceil(z^2 p (1-p) / d^2), z the two-sided normal critical value.
inline SampleSizeResult required_sample_size(const SampleSizeRequest& req) {
  const double p = req.expected_proportion;
  const double d = req.half_width;
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("expected proportion must lie in (0,1), got " + detail::shortest(p));
  }
  if (!(d > 0.0 && d < 1.0)) {
    throw DomainError("half-width must lie in (0,1), got " + detail::shortest(d));
  }
  SampleSizeResult r;
  r.z = detail::z_two_sided(req.confidence);
  r.unrounded = r.z * r.z * p * (1.0 - p) / (d * d);
  r.n = static_cast<std::uint64_t>(std::ceil(r.unrounded));
  if (d >= std::min(p, 1.0 - p)) {
    r.warnings.push_back("half-width " + detail::shortest(d) + " reaches past 0 or 1 around p = " +
                         detail::shortest(p) + "; the normal approximation is unreliable here");
  }
  return r;
}

// ---------------------------------------------------------------------------
// Manifest

struct Population {
  std::vector<std::string> descriptors;
  std::optional<std::string> age_range;
  std::optional<std::string> sex_ratio;
  std::optional<std::string> geography;
};

struct StudyCharacteristics {
  std::string anatomical_region;
  std::string modality;
  std::string device;
  std::string protocol;
};

struct DatasetCounts {
  std::uint64_t cases = 0;
  std::uint64_t studies = 0;
  std::uint64_t images = 0;
  std::uint64_t reports = 0;
  /// Studies per diagnostic group. The key "normal" holds the normal group;
  /// every other key is an abnormal subcategory.
  std::map<std::string, std::uint64_t> distribution;
};

struct NormalToAbnormal {
  double normal = 1.0;
  double abnormal = 1.0;

  double prevalence() const { return abnormal / (normal + abnormal); }
};

struct DatasetManifest {
  std::optional<std::string> registration_certificate;
  Population population;
  std::vector<std::string> source_centers;
  StudyCharacteristics study_characteristics;
  std::vector<std::string> icd_codes;
  DatasetCounts counts;
  NormalToAbnormal normal_to_abnormal;
  std::string verification_method;
  std::vector<std::string> tagging_refs;
  bool publicly_available = false;

  std::uint64_t abnormal_studies() const {
    if (counts.distribution.empty()) {
      return static_cast<std::uint64_t>(
          std::floor(static_cast<double>(counts.studies) * normal_to_abnormal.prevalence()));
    }
    std::uint64_t n = 0;
    for (const auto& [group, c] : counts.distribution) {
      if (group != "normal") n += c;
    }
    return n;
  }
  std::uint64_t normal_studies() const { return counts.studies - abnormal_studies(); }
};

struct PopulationProfile {
  double prevalence = 0.0;
  std::vector<std::string> descriptors;
};

enum class TargetMetric { Sensitivity, Specificity, Accuracy };

inline std::string_view to_string(TargetMetric m) {
  switch (m) {
    case TargetMetric::Sensitivity: return "sensitivity";
    case TargetMetric::Specificity: return "specificity";
    case TargetMetric::Accuracy: return "accuracy";
  }
  return "?";
}

/// A claimed accuracy value and the precision it must be estimated with.
struct AccuracyTarget {
  TargetMetric metric = TargetMetric::Sensitivity;
  double expected = 0.9;
  double half_width = 0.05;
  double confidence = 0.95;
};

enum class Severity { Blocking, Warning };

inline std::string_view to_string(Severity s) { return s == Severity::Blocking ? "blocking" : "warning"; }

struct Finding {
  std::string item;
  Severity severity = Severity::Blocking;
  std::string message;

  bool operator==(const Finding&) const = default;
};

inline constexpr double kDefaultPrevalenceTolerance = 0.05;

/// Throws DomainError when the manifest violates a structural invariant.
inline void check_structure(const DatasetManifest& m) {
  if (!(m.normal_to_abnormal.normal > 0.0) || !(m.normal_to_abnormal.abnormal > 0.0) ||
      !std::isfinite(m.normal_to_abnormal.normal) || !std::isfinite(m.normal_to_abnormal.abnormal)) {
    throw DomainError("manifest: normal_to_abnormal components must be positive");
  }
  if (!m.counts.distribution.empty()) {
    std::uint64_t sum = 0;
    for (const auto& [_, c] : m.counts.distribution) sum += c;
    if (sum != m.counts.studies) {
      throw DomainError("manifest: counts.distribution sums to " + std::to_string(sum) +
                        " but counts.studies is " + std::to_string(m.counts.studies));
    }
  }
  if (m.abnormal_studies() > 0 && m.icd_codes.empty()) {
    throw DomainError("manifest: icd_codes must be non-empty when abnormal cases are present");
  }
}

/// Checks the manifest against the dataset requirements. Findings come out
/// in a fixed order: requirements 1-5, then advisory content-item warnings.
inline std::vector<Finding> validate_manifest(const DatasetManifest& m, const PopulationProfile& profile,
                                              std::span<const AccuracyTarget> targets,
                                              double prevalence_tolerance = kDefaultPrevalenceTolerance) {
  check_structure(m);
  if (!(profile.prevalence > 0.0 && profile.prevalence < 1.0)) {
    throw DomainError("population prevalence must lie in (0,1)");
  }
  if (!(prevalence_tolerance >= 0.0 && prevalence_tolerance < 1.0)) {
    throw DomainError("prevalence tolerance must lie in [0,1)");
  }
  std::vector<Finding> out;
  auto blocking = [&](std::string item, std::string msg) {
    out.push_back({std::move(item), Severity::Blocking, std::move(msg)});
  };

  // 1. Normal-to-abnormal ratio reflects population prevalence.
  const double dataset_prev = m.normal_to_abnormal.prevalence();
  if (std::abs(dataset_prev - profile.prevalence) > prevalence_tolerance) {
    blocking("requirement_1", "dataset prevalence " + detail::fixed(dataset_prev) +
                                  " differs from population prevalence " + detail::fixed(profile.prevalence) +
                                  " by more than " + detail::fixed(prevalence_tolerance));
  }
  // 2. Multiple sourcing centres.
  if (m.source_centers.size() < 2) {
    blocking("requirement_2", "dataset sourced from " + std::to_string(m.source_centers.size()) +
                                  " medical center(s); at least 2 are required for heterogeneity");
  }
  // 3. Demographics present. Correspondence to the target region cannot be
  // computed and is left to manual review.
  if (!m.population.age_range || !m.population.sex_ratio) {
    blocking("requirement_3",
             "population demographics missing (age_range and sex_ratio required); "
             "correspondence to the target population needs manual review");
  }
  // 4. Size justified by the claimed accuracy targets.
  for (const auto& t : targets) {
    const auto need = required_sample_size({t.expected, t.half_width, t.confidence});
    std::uint64_t have = m.counts.studies;
    std::string group = "studies";
    if (t.metric == TargetMetric::Sensitivity) {
      have = m.abnormal_studies();
      group = "abnormal studies";
    } else if (t.metric == TargetMetric::Specificity) {
      have = m.normal_studies();
      group = "normal studies";
    }
    if (have < need.n) {
      blocking("requirement_4", std::string(to_string(t.metric)) + " target " + detail::shortest(t.expected) +
                                    " +/- " + detail::shortest(t.half_width) + " needs " +
                                    std::to_string(need.n) + " " + group + ", dataset has " +
                                    std::to_string(have));
    }
  }
  // 5. Not publicly available.
  if (m.publicly_available) {
    blocking("requirement_5", "reference dataset is publicly available; it may have been used for training");
  }

  auto warn = [&](std::string item, std::string msg) {
    out.push_back({std::move(item), Severity::Warning, std::move(msg)});
  };
  if (!m.registration_certificate || m.registration_certificate->empty()) {
    warn("item_1_registration", "no state registration certificate number (advisable)");
  }
  if (!m.population.geography) warn("item_2_population", "population geography not stated");
  const auto& sc = m.study_characteristics;
  if (sc.anatomical_region.empty() || sc.modality.empty() || sc.device.empty() || sc.protocol.empty()) {
    warn("item_3_study_characteristics", "study characteristics incomplete (anatomical region, modality, device, protocol)");
  }
  if (m.verification_method.empty()) warn("item_7_verification", "verification method not stated");
  if (m.tagging_refs.empty()) warn("item_8_tagging", "no tagging methodology references");
  if (targets.empty()) {
    warn("requirement_4", "no accuracy targets supplied; dataset size justification not checked");
  }
  return out;
}

inline bool has_blocking(const std::vector<Finding>& findings) {
  for (const auto& f : findings) {
    if (f.severity == Severity::Blocking) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// JSON

namespace json_fields {

using nlohmann::json;

inline const json* field(const json& obj, const char* key) {
  auto it = obj.find(key);
  return (it == obj.end() || it->is_null()) ? nullptr : &*it;
}

inline std::string str(const json& obj, const char* key, const std::string& path, bool required = false) {
  const json* v = field(obj, key);
  if (!v) {
    if (required) throw ParseError("manifest: missing " + path + key);
    return {};
  }
  if (!v->is_string()) throw ParseError("manifest: " + path + key + " must be a string");
  return v->get<std::string>();
}

inline std::optional<std::string> opt_str(const json& obj, const char* key, const std::string& path) {
  if (!field(obj, key)) return std::nullopt;
  return str(obj, key, path);
}

inline std::vector<std::string> str_list(const json& obj, const char* key, const std::string& path) {
  std::vector<std::string> out;
  const json* v = field(obj, key);
  if (!v) return out;
  if (!v->is_array()) throw ParseError("manifest: " + path + key + " must be an array of strings");
  for (const auto& e : *v) {
    if (!e.is_string()) throw ParseError("manifest: " + path + key + " must be an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

inline std::uint64_t count(const json& obj, const char* key, const std::string& path) {
  const json* v = field(obj, key);
  if (!v) return 0;
  if (!v->is_number_integer() || v->get<long long>() < 0) {
    throw ParseError("manifest: " + path + key + " must be a non-negative integer");
  }
  return v->get<std::uint64_t>();
}

inline double positive(const json& obj, const char* key, const std::string& path) {
  const json* v = field(obj, key);
  if (!v || !v->is_number() || !(v->get<double>() > 0.0)) {
    throw ParseError("manifest: " + path + key + " must be a positive number");
  }
  return v->get<double>();
}

inline const json& object(const json& obj, const char* key, const std::string& path) {
  static const json empty = json::object();
  const json* v = field(obj, key);
  if (!v) return empty;
  if (!v->is_object()) throw ParseError("manifest: " + path + key + " must be an object");
  return *v;
}

} // namespace json_fields

inline DatasetManifest manifest_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("manifest must be a JSON object");
  DatasetManifest m;
  m.registration_certificate = json_fields::opt_str(doc, "registration_certificate", "");

  const auto& pop = json_fields::object(doc, "population", "");
  m.population.descriptors = json_fields::str_list(pop, "descriptors", "population.");
  m.population.age_range = json_fields::opt_str(pop, "age_range", "population.");
  m.population.sex_ratio = json_fields::opt_str(pop, "sex_ratio", "population.");
  m.population.geography = json_fields::opt_str(pop, "geography", "population.");

  m.source_centers = json_fields::str_list(doc, "source_centers", "");

  const auto& sc = json_fields::object(doc, "study_characteristics", "");
  m.study_characteristics = {json_fields::str(sc, "anatomical_region", "study_characteristics."),
                             json_fields::str(sc, "modality", "study_characteristics."),
                             json_fields::str(sc, "device", "study_characteristics."),
                             json_fields::str(sc, "protocol", "study_characteristics.")};

  m.icd_codes = json_fields::str_list(doc, "icd_codes", "");

  const auto* counts_field = json_fields::field(doc, "counts");
  if (!counts_field || !json_fields::field(*counts_field, "studies")) {
    throw ParseError("manifest: missing counts.studies");
  }
  const auto& counts = json_fields::object(doc, "counts", "");
  m.counts.cases = json_fields::count(counts, "cases", "counts.");
  m.counts.studies = json_fields::count(counts, "studies", "counts.");
  m.counts.images = json_fields::count(counts, "images", "counts.");
  m.counts.reports = json_fields::count(counts, "reports", "counts.");
  const auto& dist = json_fields::object(counts, "distribution", "counts.");
  for (const auto& [group, _] : dist.items()) {
    m.counts.distribution[group] = json_fields::count(dist, group.c_str(), "counts.distribution.");
  }

  const auto* ratio = json_fields::field(doc, "normal_to_abnormal");
  if (!ratio || !ratio->is_object()) throw ParseError("manifest: missing normal_to_abnormal object");
  m.normal_to_abnormal = {json_fields::positive(*ratio, "normal", "normal_to_abnormal."),
                          json_fields::positive(*ratio, "abnormal", "normal_to_abnormal.")};

  m.verification_method = json_fields::str(doc, "verification_method", "");
  m.tagging_refs = json_fields::str_list(doc, "tagging_refs", "");
  if (const auto* pub = json_fields::field(doc, "publicly_available")) {
    if (!pub->is_boolean()) throw ParseError("manifest: publicly_available must be a boolean");
    m.publicly_available = pub->get<bool>();
  }
  check_structure(m);
  return m;
}

inline nlohmann::json to_json(const DatasetManifest& m) {
  nlohmann::json pop{{"descriptors", m.population.descriptors}};
  if (m.population.age_range) pop["age_range"] = *m.population.age_range;
  if (m.population.sex_ratio) pop["sex_ratio"] = *m.population.sex_ratio;
  if (m.population.geography) pop["geography"] = *m.population.geography;
  nlohmann::json doc{
      {"population", pop},
      {"source_centers", m.source_centers},
      {"study_characteristics",
       {{"anatomical_region", m.study_characteristics.anatomical_region},
        {"modality", m.study_characteristics.modality},
        {"device", m.study_characteristics.device},
        {"protocol", m.study_characteristics.protocol}}},
      {"icd_codes", m.icd_codes},
      {"counts",
       {{"cases", m.counts.cases},
        {"studies", m.counts.studies},
        {"images", m.counts.images},
        {"reports", m.counts.reports},
        {"distribution", m.counts.distribution}}},
      {"normal_to_abnormal", {{"normal", m.normal_to_abnormal.normal}, {"abnormal", m.normal_to_abnormal.abnormal}}},
      {"verification_method", m.verification_method},
      {"tagging_refs", m.tagging_refs},
      {"publicly_available", m.publicly_available}};
  if (m.registration_certificate) doc["registration_certificate"] = *m.registration_certificate;
  return doc;
}

inline nlohmann::json to_json(const std::vector<Finding>& findings) {
  auto arr = nlohmann::json::array();
  for (const auto& f : findings) {
    arr.push_back({{"item", f.item}, {"severity", to_string(f.severity)}, {"message", f.message}});
  }
  return arr;
}

inline std::string render_findings(const std::vector<Finding>& findings) {
  if (findings.empty()) return "No findings: manifest meets all dataset requirements.\n";
  std::ostringstream os;
  for (const auto& f : findings) {
    os << '[' << to_string(f.severity) << "] " << f.item << ": " << f.message << '\n';
  }
  return os.str();
}

/// Parses `metric:expected:half_width[:confidence]`, e.g. `sensitivity:0.9:0.05`.
inline AccuracyTarget parse_target(std::string_view text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  if (parts.size() < 3 || parts.size() > 4) {
    throw DomainError("accuracy target must be metric:expected:half_width[:confidence], got '" +
                      std::string(text) + "'");
  }
  AccuracyTarget t;
  if (parts[0] == "sensitivity") t.metric = TargetMetric::Sensitivity;
  else if (parts[0] == "specificity") t.metric = TargetMetric::Specificity;
  else if (parts[0] == "accuracy") t.metric = TargetMetric::Accuracy;
  else throw DomainError("unknown target metric '" + parts[0] + "'");
  auto num = [&](const std::string& s) {
    auto v = dxval::detail::parse_double(s);
    if (!v) throw DomainError("malformed number '" + s + "' in accuracy target");
    return *v;
  };
  t.expected = num(parts[1]);
  t.half_width = num(parts[2]);
  if (parts.size() == 4) t.confidence = num(parts[3]);
  return t;
}

} // namespace dxval::design
