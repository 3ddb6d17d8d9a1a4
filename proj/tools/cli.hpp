#pragma once

// Command-line front end. `run` is callable in-process so tests can drive it
// without spawning a shell.

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "dxval/dxval.hpp"

namespace dxval::cli {

inline constexpr std::string_view kVersion = "0.1.0";

enum Exit : int { kOk = 0, kError = 1, kRevision = 2, kUnsuitable = 3 };

namespace fs = std::filesystem;
using nlohmann::json;
using ojson = nlohmann::ordered_json;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error("error reading '" + path + "'");
  return ss.str();
}

inline json read_json_file(const std::string& path) {
  const auto text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": malformed JSON: " + e.what());
  }
}

/// Writes through a sibling temp file and renames it into place.
inline void write_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error("error writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
  }
}

inline std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{md[i]};
  return hex.str();
}

inline io::Format format_for(const std::string& path, const std::string& forced) {
  if (forced == "csv") return io::Format::Csv;
  if (forced == "json") return io::Format::Json;
  return fs::path(path).extension() == ".json" ? io::Format::Json : io::Format::Csv;
}

inline Exit exit_for(VerdictBand worst) {
  switch (worst) {
    case VerdictBand::Admissible: return kOk;
    case VerdictBand::RevisionRequired: return kRevision;
    case VerdictBand::Unsuitable: return kUnsuitable;
  }
  return kError;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateConfig {
  std::string predictions;
  std::string reference;
  std::string manifest;
  std::string metadata;
  std::string format;  // csv | json | "" (by extension)
  std::string task = "classification";
  std::string kind = "scores";
  std::string cutoff;  // youden | dmin | fixed | "" (youden with a warning)
  std::optional<double> threshold;
  double confidence = 0.95;
  double time_limit_s = 60.0;
  std::string out_dir = ".";
  bool write_roc = false;
  bool json_out = false;
};

struct GateLine {
  std::string metric;
  std::optional<VerdictBand> verdict;  // nullopt: undefined
};

inline int cmd_evaluate(const EvaluateConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto task = governance::parse_task(cfg.task);
  if (task == governance::EvaluationTask::Segmentation || task == governance::EvaluationTask::Nlp) {
    throw DomainError("task '" + cfg.task + "' is evaluated with the 'agreement' subcommand (Dice or kappa)");
  }
  if (cfg.kind != "scores" && cfg.kind != "binary") throw DomainError("--kind must be scores or binary");
  if (!(cfg.confidence > 0.0 && cfg.confidence < 1.0)) throw DomainError("--confidence must be in (0,1)");
  if (!(cfg.time_limit_s > 0.0)) throw DomainError("--time-limit must be positive");
  const bool scores = cfg.kind == "scores";

  std::string rule = cfg.cutoff;
  if (scores) {
    if (rule.empty()) {
      rule = "youden";
      err << "warning: no --cutoff given; using the Youden index. Choose the rule to fit the study objective.\n";
    }
    if (rule != "youden" && rule != "dmin" && rule != "fixed") throw DomainError("--cutoff must be youden, dmin or fixed");
    if ((rule == "fixed") != cfg.threshold.has_value()) {
      throw DomainError("--threshold is required with --cutoff fixed and only allowed with it");
    }
  } else {
    if (!rule.empty() || cfg.threshold) throw DomainError("--cutoff/--threshold apply only to --kind scores");
    rule = "binary";
  }

  const auto pred_text = read_file(cfg.predictions);
  const auto ref_text = read_file(cfg.reference);
  std::vector<io::PredictionRecord> preds;
  std::vector<io::ReferenceRecord> refs;
  try {
    preds = io::load_predictions(pred_text, format_for(cfg.predictions, cfg.format),
                                 scores ? io::PredictionKind::Scores : io::PredictionKind::Binary);
  } catch (const Error& e) {
    throw ParseError(cfg.predictions + ": " + e.what());
  }
  try {
    refs = io::load_reference(ref_text, format_for(cfg.reference, cfg.format));
  } catch (const Error& e) {
    throw ParseError(cfg.reference + ": " + e.what());
  }
  const auto joined = io::join_records(preds, refs);
  if (joined.pairs.empty()) throw DomainError("no study ids in common between predictions and reference");
  if (!joined.unmatched_predictions.empty() || !joined.unmatched_references.empty()) {
    err << "warning: " << joined.unmatched_predictions.size() << " prediction(s) without reference and "
        << joined.unmatched_references.size() << " reference label(s) without prediction were excluded\n";
  }

  reporting::PcttInput in;
  in.threshold.rule = rule;
  in.flow = reporting::StudyFlow{preds.size(), refs.size(), joined.pairs.size(), joined.unmatched_predictions.size(),
                                 joined.unmatched_references.size()};
  std::optional<roc::RocCurve> curve;
  if (scores) {
    const auto scored = roc::scored_from(joined.pairs);
    auto summary = roc::summarize(scored, cfg.confidence);
    in.auc = summary.auc;
    in.dmin = summary.dmin;
    in.youden = summary.youden;
    const double t = rule == "fixed" ? *cfg.threshold : rule == "dmin" ? summary.dmin.threshold : summary.youden.threshold;
    in.threshold.threshold = t;
    in.confusion = roc::operating_point(scored, t);
    curve = std::move(summary.curve);
  } else {
    in.confusion = build_confusion(joined.pairs);
  }
  in.metrics = standard_metrics(*in.confusion, cfg.confidence);

  std::string manifest_text, metadata_text;
  if (!cfg.manifest.empty()) {
    manifest_text = read_file(cfg.manifest);
    try {
      in.manifest = design::manifest_from_json(json::parse(manifest_text));
    } catch (const json::parse_error& e) {
      throw ParseError(cfg.manifest + ": malformed JSON: " + e.what());
    }
  }
  if (!cfg.metadata.empty()) {
    metadata_text = read_file(cfg.metadata);
    try {
      in.metadata = reporting::metadata_from_json(json::parse(metadata_text));
    } catch (const json::parse_error& e) {
      throw ParseError(cfg.metadata + ": malformed JSON: " + e.what());
    }
  }

  std::vector<double> times;
  for (const auto& p : preds) {
    if (p.processing_time) times.push_back(*p.processing_time);
  }
  if (!times.empty()) {
    in.median_processing_time_s = detail::median(times);
    const auto slow = std::count_if(times.begin(), times.end(), [&](double t) { return t > cfg.time_limit_s; });
    if (slow > 0) {
      err << "warning: " << slow << " stud" << (slow == 1 ? "y" : "ies") << " exceeded the " << cfg.time_limit_s
          << " s processing time limit\n";
    }
  }

  const auto report = reporting::render_pctt(in);

  std::vector<GateLine> gates{{"sensitivity", in.metrics->sensitivity.verdict},
                              {"specificity", in.metrics->specificity.verdict},
                              {"accuracy", in.metrics->accuracy.verdict}};
  if (in.auc) gates.push_back({"auc", in.auc->verdict});
  VerdictBand worst = VerdictBand::Admissible;
  for (const auto& g : gates) worst = std::min(worst, g.verdict.value_or(VerdictBand::Unsuitable));

  // Outputs
  const fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + cfg.out_dir + "': " + ec.message());
  const auto pctt_json = report.json.dump(2) + "\n";
  std::vector<std::pair<std::string, std::string>> outputs{{"pctt.txt", report.text}, {"pctt.json", pctt_json}};
  if (cfg.write_roc && curve) outputs.emplace_back("roc.csv", roc::to_csv(*curve));

  ojson manifest;
  manifest["tool"] = "dxval";
  manifest["version"] = kVersion;
  manifest["command"] = "evaluate";
  manifest["config"] = {{"task", cfg.task},
                        {"kind", cfg.kind},
                        {"cutoff", rule},
                        {"threshold", in.threshold.threshold ? json(*in.threshold.threshold) : json(nullptr)},
                        {"confidence", cfg.confidence},
                        {"time_limit_s", cfg.time_limit_s}};
  ojson inputs = ojson::array();
  inputs.push_back({{"role", "predictions"}, {"path", cfg.predictions}, {"sha256", sha256_hex(pred_text)}});
  inputs.push_back({{"role", "reference"}, {"path", cfg.reference}, {"sha256", sha256_hex(ref_text)}});
  if (!cfg.manifest.empty()) {
    inputs.push_back({{"role", "manifest"}, {"path", cfg.manifest}, {"sha256", sha256_hex(manifest_text)}});
  }
  if (!cfg.metadata.empty()) {
    inputs.push_back({{"role", "metadata"}, {"path", cfg.metadata}, {"sha256", sha256_hex(metadata_text)}});
  }
  manifest["inputs"] = inputs;
  ojson outs = ojson::array();
  for (const auto& [name, content] : outputs) outs.push_back({{"file", name}, {"sha256", sha256_hex(content)}});
  manifest["outputs"] = outs;
  ojson gate_json = ojson::object();
  for (const auto& g : gates) gate_json[g.metric] = g.verdict ? std::string(to_string(*g.verdict)) : "undefined";
  manifest["gate"] = gate_json;
  manifest["exit_status"] = static_cast<int>(exit_for(worst));
  outputs.emplace_back("run_manifest.json", manifest.dump(2) + "\n");

  for (const auto& [name, content] : outputs) write_atomic(dir / name, content);

  if (cfg.json_out) {
    ojson o{{"gate", gate_json}, {"exit_status", static_cast<int>(exit_for(worst))}, {"report", report.json}};
    out << o.dump(2) << "\n";
  } else {
    out << report.text;
    out << "\nGate: ";
    for (std::size_t i = 0; i < gates.size(); ++i) {
      out << (i ? ", " : "") << gates[i].metric << " "
          << (gates[i].verdict ? to_string(*gates[i].verdict) : std::string_view("undefined"));
    }
    out << "\nWrote " << (dir / "pctt.txt").string() << ", pctt.json, run_manifest.json"
        << (cfg.write_roc && curve ? ", roc.csv" : "") << "\n";
  }
  return exit_for(worst);
}

// ---------------------------------------------------------------------------
// roc

struct RocConfig {
  std::string predictions;
  std::string reference;
  std::string format;
  double confidence = 0.95;
  std::string csv_out;
  bool json_out = false;
};

inline int cmd_roc(const RocConfig& cfg, std::ostream& out, std::ostream& err) {
  (void)err;
  const auto preds = io::load_predictions(read_file(cfg.predictions), format_for(cfg.predictions, cfg.format),
                                          io::PredictionKind::Scores);
  const auto refs = io::load_reference(read_file(cfg.reference), format_for(cfg.reference, cfg.format));
  const auto joined = io::join_records(preds, refs);
  const auto scored = roc::scored_from(joined.pairs);
  const auto s = roc::summarize(scored, cfg.confidence);
  if (!cfg.csv_out.empty()) write_atomic(cfg.csv_out, roc::to_csv(s.curve));
  auto cut = [](const roc::Cutoff& c) {
    return json{{"threshold", c.threshold}, {"sensitivity", c.sensitivity}, {"specificity", c.specificity},
                {"criterion", c.criterion}};
  };
  if (cfg.json_out) {
    json o{{"auc", s.auc.auc},
           {"ci_low", s.auc.ci.low},
           {"ci_high", s.auc.ci.high},
           {"ci_method", roc::to_string(s.auc.method)},
           {"verdict", to_string(s.auc.verdict)},
           {"points", s.curve.points.size()},
           {"dmin", cut(s.dmin)},
           {"youden", cut(s.youden)}};
    out << o.dump(2) << "\n";
  } else {
    out << "AUC " << detail::fixed(s.auc.auc) << " [" << detail::fixed(s.auc.ci.low) << ", "
        << detail::fixed(s.auc.ci.high) << "] (" << roc::to_string(s.auc.method) << "), "
        << describe(s.auc.verdict) << "\n";
    out << "d-min cut-off " << detail::shortest(s.dmin.threshold) << ": sensitivity "
        << detail::fixed(s.dmin.sensitivity) << ", specificity " << detail::fixed(s.dmin.specificity) << "\n";
    out << "Youden cut-off " << detail::shortest(s.youden.threshold) << ": sensitivity "
        << detail::fixed(s.youden.sensitivity) << ", specificity " << detail::fixed(s.youden.specificity) << "\n";
  }
  return exit_for(s.auc.verdict);
}

// ---------------------------------------------------------------------------
// agreement

inline int cmd_kappa(const std::string& table_path, bool json_out, std::ostream& out) {
  const auto r = agreement::cohen_kappa(agreement::table_from_json(read_file(table_path)));
  if (json_out) {
    out << json{{"kappa", r.kappa}, {"observed", r.observed}, {"expected", r.expected},
                {"verdict", to_string(r.verdict)}}.dump(2)
        << "\n";
  } else {
    out << "kappa " << detail::shortest(r.kappa) << " (P0 " << detail::fixed(r.observed) << ", Pe "
        << detail::fixed(r.expected) << "), " << describe(r.verdict) << "\n";
  }
  return exit_for(r.verdict);
}

inline agreement::BinaryMask load_mask(const std::string& path, const std::string& forced) {
  const auto text = read_file(path);
  const bool rle = forced == "rle" || (forced.empty() && fs::path(path).extension() == ".rle");
  try {
    return rle ? agreement::mask_from_rle(text) : agreement::mask_from_json(text);
  } catch (const Error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline int cmd_dice(const std::string& a, const std::string& b, const std::string& format, bool json_out,
                    std::ostream& out) {
  const auto r = agreement::dice(load_mask(a, format), load_mask(b, format));
  if (json_out) {
    out << json{{"dsc", r.dsc}, {"size_a", r.size_a}, {"size_b", r.size_b}, {"overlap", r.overlap},
                {"empty", r.empty}, {"verdict", to_string(r.verdict)}}.dump(2)
        << "\n";
  } else {
    out << "DSC " << detail::shortest(r.dsc) << " (|A| " << r.size_a << ", |B| " << r.size_b << ", overlap "
        << r.overlap << (r.empty ? ", both masks empty" : "") << "), " << describe(r.verdict) << "\n";
  }
  return exit_for(r.verdict);
}

// ---------------------------------------------------------------------------
// samplesize

inline int cmd_samplesize(double p, double d, double confidence, bool json_out, std::ostream& out, std::ostream& err) {
  const auto r = design::required_sample_size({p, d, confidence});
  for (const auto& w : r.warnings) err << "warning: " << w << "\n";
  if (json_out) {
    out << json{{"p", p}, {"d", d}, {"confidence", confidence}, {"z", r.z}, {"unrounded", r.unrounded}, {"n", r.n},
                {"warnings", r.warnings}}.dump(2)
        << "\n";
  } else {
    out << "n = ceil(z^2 p (1-p) / d^2) with z = " << detail::fixed(r.z) << ", p = " << detail::shortest(p)
        << ", d = " << detail::shortest(d) << "\n";
    out << r.n << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// validate-dataset

inline int cmd_validate_dataset(const std::string& manifest_path, double prevalence,
                                const std::vector<std::string>& targets, double tolerance, bool json_out,
                                std::ostream& out) {
  const auto m = design::manifest_from_json(read_json_file(manifest_path));
  std::vector<design::AccuracyTarget> parsed;
  for (const auto& t : targets) parsed.push_back(design::parse_target(t));
  const auto findings = design::validate_manifest(m, {prevalence, {}}, parsed, tolerance);
  const bool blocked = design::has_blocking(findings);
  if (json_out) {
    out << json{{"admissible", !blocked}, {"findings", design::to_json(findings)}}.dump(2) << "\n";
  } else {
    out << design::render_findings(findings);
    out << (blocked ? "Dataset NOT admissible: blocking findings present\n" : "Dataset admissible\n");
  }
  return blocked ? kRevision : kOk;
}

// ---------------------------------------------------------------------------
// governance

inline int cmd_risk(const std::string& path, bool json_out, std::ostream& out) {
  const auto cls = governance::classify_risk(governance::risk_from_json(read_json_file(path)));
  if (json_out) {
    out << json{{"class", governance::to_string(cls)}}.dump(2) << "\n";
  } else {
    out << "class " << governance::to_string(cls) << "\n";
  }
  return kOk;
}

inline int cmd_admission(const std::string& path, double min_auc, double time_limit, bool json_out,
                         std::ostream& out) {
  const auto d = governance::score_admission(governance::admission_from_json(read_json_file(path)),
                                             {min_auc, time_limit});
  if (json_out) {
    out << governance::to_json(d).dump(2) << "\n";
  } else {
    out << (d.pass ? "PASS" : "FAIL") << "\n";
    for (const auto& f : d.failed_items) out << "  failed " << f.clause << ": " << f.message << "\n";
    for (const auto& n : d.notes) out << "  note: " << n << "\n";
  }
  return d.pass ? kOk : kRevision;
}

inline int cmd_cqoe(const std::string& path, bool json_out, std::ostream& out) {
  const int total = governance::score_cqoe(governance::cqoe_from_json(read_json_file(path)));
  if (json_out) {
    out << json{{"total", total}, {"maximum", 100}}.dump(2) << "\n";
  } else {
    out << total << " / 100\n";
  }
  return kOk;
}

/// Input: `{"state": <pipeline state, optional>, "submit": [{"stage": "I", "reference": "..."}]}`.
inline int cmd_pipeline(const std::string& path, bool json_out, std::ostream& out, std::ostream& err) {
  const auto doc = read_json_file(path);
  if (!doc.is_object()) throw ParseError(path + ": pipeline input must be an object");
  auto state = doc.contains("state") ? governance::pipeline_from_json(doc["state"]) : governance::ValidationPipeline{};
  std::vector<governance::Deliverable> submit;
  if (doc.contains("submit")) {
    if (!doc["submit"].is_array()) throw ParseError(path + ": 'submit' must be an array");
    std::size_t i = 0;
    for (const auto& s : doc["submit"]) {
      ++i;
      if (!s.is_object() || !s.contains("stage") || !s["stage"].is_string() || !s.contains("reference") ||
          !s["reference"].is_string()) {
        throw ParseError("submission needs string 'stage' and 'reference'", i);
      }
      submit.push_back({governance::parse_stage(s["stage"].get<std::string>()), s["reference"].get<std::string>()});
    }
  }
  for (const auto& d : submit) {
    try {
      state = governance::advance_stage(state, d);
    } catch (const StateError& e) {
      err << "rejected: " << e.what() << "\n";
      if (json_out) {
        out << json{{"accepted", false}, {"error", e.what()}, {"state", governance::to_json(state)}}.dump(2) << "\n";
      }
      return kRevision;
    }
  }
  if (json_out) {
    out << json{{"accepted", true}, {"state", governance::to_json(state)}}.dump(2) << "\n";
  } else {
    out << "stage " << governance::stage_code(state.stage()) << " (" << governance::stage_name(state.stage())
        << ")\n";
    for (const auto& [s, ref] : state.deliverables()) {
      out << "  " << governance::stage_code(s) << " " << governance::stage_deliverable(s) << ": " << ref << "\n";
    }
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// report

inline int cmd_check_stard(const std::string& path, bool json_out, std::ostream& out) {
  const auto r = reporting::check_stard(reporting::stard_from_json(read_json_file(path)));
  if (json_out) {
    out << reporting::to_json(r).dump(2) << "\n";
  } else {
    out << (r.complete ? "complete" : "incomplete") << ": " << r.present.size() << " of "
        << reporting::kStardItems.size() << " items present\n";
    if (!r.missing.empty()) {
      out << "missing:";
      for (const auto& m : r.missing) out << " " << m;
      out << "\n";
    }
  }
  return r.complete ? kOk : kRevision;
}

// ---------------------------------------------------------------------------

/// Runs one invocation. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Validation harness for AI diagnostic software", "dxval"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  bool json_out = false;
  app.add_flag("--json", json_out, "Machine-readable output on stdout");

  EvaluateConfig ev;
  auto* evaluate = app.add_subcommand("evaluate", "Join, score and render the PCTT report (score >= threshold is positive)");
  evaluate->add_option("--predictions", ev.predictions, "Index-test results (CSV or JSON)")->required();
  evaluate->add_option("--reference", ev.reference, "Reference labels (CSV or JSON)")->required();
  evaluate->add_option("--manifest", ev.manifest, "Dataset manifest JSON");
  evaluate->add_option("--metadata", ev.metadata, "Report metadata JSON (institution, dates, ...)");
  evaluate->add_option("--format", ev.format, "Input format; default by file extension")
      ->check(CLI::IsMember({"csv", "json"}));
  evaluate->add_option("--task", ev.task, "detection | classification")->capture_default_str();
  evaluate->add_option("--kind", ev.kind, "scores | binary")->check(CLI::IsMember({"scores", "binary"}))
      ->capture_default_str();
  evaluate->add_option("--cutoff", ev.cutoff, "youden | dmin | fixed (default youden, with a warning)")
      ->check(CLI::IsMember({"youden", "dmin", "fixed"}));
  evaluate->add_option("--threshold", ev.threshold, "Threshold for --cutoff fixed");
  evaluate->add_option("--confidence", ev.confidence, "Confidence level")->capture_default_str();
  evaluate->add_option("--time-limit", ev.time_limit_s, "Per-study processing time limit, seconds")
      ->capture_default_str();
  evaluate->add_option("--out", ev.out_dir, "Output directory")->capture_default_str();
  evaluate->add_flag("--roc-csv", ev.write_roc, "Also write roc.csv");

  RocConfig rc;
  auto* roc_cmd = app.add_subcommand("roc", "ROC curve, AUC and cut-offs");
  roc_cmd->add_option("--predictions", rc.predictions)->required();
  roc_cmd->add_option("--reference", rc.reference)->required();
  roc_cmd->add_option("--format", rc.format)->check(CLI::IsMember({"csv", "json"}));
  roc_cmd->add_option("--confidence", rc.confidence)->capture_default_str();
  roc_cmd->add_option("--csv", rc.csv_out, "Write curve points to this CSV file");

  auto* agreement_cmd = app.add_subcommand("agreement", "Inter-rater agreement");
  agreement_cmd->require_subcommand(1);
  std::string table_path, mask_a, mask_b, mask_format;
  auto* kappa = agreement_cmd->add_subcommand("kappa", "Cohen's kappa over a KxK count table");
  kappa->add_option("--table", table_path, "JSON count matrix")->required();
  auto* dice = agreement_cmd->add_subcommand("dice", "Dice-Sorensen coefficient of two masks");
  dice->add_option("--a", mask_a, "First mask (JSON array or .rle)")->required();
  dice->add_option("--b", mask_b, "Second mask")->required();
  dice->add_option("--mask-format", mask_format)->check(CLI::IsMember({"json", "rle"}));

  double p = 0.0, d = 0.0, conf = 0.95;
  auto* ss = app.add_subcommand("samplesize", "Studies needed to estimate a proportion");
  ss->add_option("--p", p, "Expected proportion")->required();
  ss->add_option("--d", d, "CI half-width")->required();
  ss->add_option("--confidence", conf)->capture_default_str();

  std::string manifest_path;
  double prevalence = 0.0, tolerance = design::kDefaultPrevalenceTolerance;
  std::vector<std::string> targets;
  auto* vd = app.add_subcommand("validate-dataset", "Check a reference dataset manifest");
  vd->add_option("--manifest", manifest_path)->required();
  vd->add_option("--prevalence", prevalence, "Target population prevalence")->required();
  vd->add_option("--target", targets, "metric:expected:half_width[:confidence]");
  vd->add_option("--tolerance", tolerance, "Prevalence tolerance")->capture_default_str();

  auto* gov = app.add_subcommand("governance", "Risk class, admission, CQOE and pipeline state");
  gov->require_subcommand(1);
  std::string gov_input;
  double min_auc = 0.81, gov_time = 60.0;
  auto* risk = gov->add_subcommand("risk", "Software risk class");
  risk->add_option("--input", gov_input)->required();
  auto* adm = gov->add_subcommand("admission", "Admission questionnaire");
  adm->add_option("--input", gov_input)->required();
  adm->add_option("--min-auc", min_auc)->capture_default_str();
  adm->add_option("--time-limit", gov_time)->capture_default_str();
  auto* cqoe = gov->add_subcommand("cqoe", "Clinical quality of evaluation score");
  cqoe->add_option("--input", gov_input)->required();
  auto* pipe = gov->add_subcommand("pipeline", "Advance the analytical validation pipeline");
  pipe->add_option("--input", gov_input)->required();

  auto* report = app.add_subcommand("report", "Reporting checks");
  report->require_subcommand(1);
  std::string stard_path;
  auto* stard = report->add_subcommand("check-stard", "STARD 2015 completeness");
  stard->add_option("--input", stard_path)->required();

  for (auto* sub : {evaluate, roc_cmd, kappa, dice, ss, vd, risk, adm, cqoe, pipe, stard}) {
    sub->add_flag("--json", json_out, "Machine-readable output on stdout");
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kError;
  }

  try {
    if (*evaluate) {
      ev.json_out = json_out;
      return cmd_evaluate(ev, out, err);
    }
    if (*roc_cmd) {
      rc.json_out = json_out;
      return cmd_roc(rc, out, err);
    }
    if (*kappa) return cmd_kappa(table_path, json_out, out);
    if (*dice) return cmd_dice(mask_a, mask_b, mask_format, json_out, out);
    if (*ss) return cmd_samplesize(p, d, conf, json_out, out, err);
    if (*vd) return cmd_validate_dataset(manifest_path, prevalence, targets, tolerance, json_out, out);
    if (*risk) return cmd_risk(gov_input, json_out, out);
    if (*adm) return cmd_admission(gov_input, min_auc, gov_time, json_out, out);
    if (*cqoe) return cmd_cqoe(gov_input, json_out, out);
    if (*pipe) return cmd_pipeline(gov_input, json_out, out, err);
    if (*stard) return cmd_check_stard(stard_path, json_out, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}

} // namespace dxval::cli
