#pragma once

// Ingestion of index-test predictions and reference labels (CSV / JSON), the
// study-id join, and serialization back to the same formats.

#include <algorithm>
#include <cstddef>
#include <istream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "dxval/detail/numeric.hpp"
#include "dxval/error.hpp"

namespace dxval::io {

enum class Format { Csv, Json };

/// Declares whether the `value` column carries continuous scores or binary labels.
enum class PredictionKind { Scores, Binary };

struct PredictionRecord {
  std::string study_id;
  double value = 0.0;
  std::optional<double> processing_time;

  bool operator==(const PredictionRecord&) const = default;
};

struct ReferenceRecord {
  std::string study_id;
  int label = 0;
  std::optional<std::string> verification_note;

  bool operator==(const ReferenceRecord&) const = default;
};

struct PairedOutcome {
  std::string study_id;
  double predicted = 0.0;
  int actual = 0;

  bool operator==(const PairedOutcome&) const = default;
};

struct JoinResult {
  std::vector<PairedOutcome> pairs;
  std::vector<std::string> unmatched_predictions;
  std::vector<std::string> unmatched_references;
};

namespace detail {

inline std::string read_all(std::istream& in) {
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Rejects byte sequences that are not well-formed UTF-8.
inline void require_utf8(std::string_view s) {
  std::size_t i = 0;
  const auto n = s.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    if (c < 0x80) {
      ++i;
      continue;
    }
    if ((c & 0xE0) == 0xC0 && c >= 0xC2) extra = 1;
    else if ((c & 0xF0) == 0xE0) extra = 2;
    else if ((c & 0xF8) == 0xF0 && c <= 0xF4) extra = 3;
    else throw ParseError("input is not valid UTF-8 (byte offset " + std::to_string(i) + ")");
    for (std::size_t k = 1; k <= extra; ++k) {
      if (i + k >= n || (static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) {
        throw ParseError("input is not valid UTF-8 (byte offset " + std::to_string(i) + ")");
      }
    }
    i += extra + 1;
  }
}

struct CsvRow {
  std::size_t row = 0;  // 1-based physical row number
  std::vector<std::string> fields;
};

/// Splits CSV text into rows of fields. Handles LF and CRLF line endings and
/// RFC 4180 double-quoted fields. Blank lines are skipped.
inline std::vector<CsvRow> split_csv(std::string_view text) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  std::vector<CsvRow> rows;
  std::size_t row_no = 1;
  std::size_t i = 0;
  while (i < text.size()) {
    CsvRow row{row_no, {}};
    std::string field;
    bool quoted = false;
    bool line_done = false;
    const std::size_t start_row = row_no;
    while (i < text.size() && !line_done) {
      char c = text[i];
      if (quoted) {
        if (c == '"') {
          if (i + 1 < text.size() && text[i + 1] == '"') {
            field += '"';
            i += 2;
          } else {
            quoted = false;
            ++i;
          }
        } else {
          if (c == '\n') ++row_no;
          field += c;
          ++i;
        }
        continue;
      }
      switch (c) {
        case '"':
          if (!field.empty()) throw ParseError("stray quote inside unquoted field", start_row);
          quoted = true;
          ++i;
          break;
        case ',':
          row.fields.push_back(std::move(field));
          field.clear();
          ++i;
          break;
        case '\r':
          if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
          [[fallthrough]];
        case '\n':
          line_done = true;
          ++i;
          break;
        default:
          field += c;
          ++i;
      }
    }
    if (quoted) throw ParseError("unterminated quoted field", start_row);
    row.fields.push_back(std::move(field));
    ++row_no;
    const bool blank = row.fields.size() == 1 && row.fields[0].empty();
    if (!blank) rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return std::string(s);
}

/// Maps canonical column names to their position in the header row.
/// `aliases` maps an accepted alternative header to a canonical name.
inline std::unordered_map<std::string, std::size_t> index_header(
    const CsvRow& header, const std::vector<std::string>& known,
    const std::vector<std::pair<std::string, std::string>>& aliases) {
  std::unordered_map<std::string, std::size_t> idx;
  for (std::size_t c = 0; c < header.fields.size(); ++c) {
    std::string name = trim(header.fields[c]);
    for (const auto& [alias, canonical] : aliases) {
      if (name == alias) name = canonical;
    }
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      throw ParseError("unknown column '" + trim(header.fields[c]) + "'", header.row);
    }
    if (!idx.emplace(name, c).second) {
      throw ParseError("duplicate column header '" + name + "'", header.row);
    }
  }
  return idx;
}

inline void require_study_id(const std::string& id, std::size_t row) {
  if (id.empty()) throw ParseError("empty study_id", row);
}

inline double checked_value(double v, PredictionKind kind, std::size_t row) {
  if (kind == PredictionKind::Binary) {
    if (v != 0.0 && v != 1.0) {
      throw ParseError("binary prediction must be 0 or 1, got " + dxval::detail::shortest(v), row);
    }
  } else if (!(v >= 0.0 && v <= 1.0)) {
    throw ParseError("score outside [0,1]: " + dxval::detail::shortest(v), row);
  }
  return v;
}

inline double checked_time(double t, std::size_t row) {
  if (!(t >= 0.0) || std::isinf(t)) {
    throw ParseError("processing_time must be a finite number >= 0", row);
  }
  return t;
}

inline int checked_label(double v, std::size_t row) {
  if (v != 0.0 && v != 1.0) {
    throw ParseError("reference label must be 0 or 1, got " + dxval::detail::shortest(v), row);
  }
  return static_cast<int>(v);
}

inline double number_field(const std::string& text, const char* name, std::size_t row) {
  auto v = dxval::detail::parse_double(text);
  if (!v) throw ParseError(std::string("malformed ") + name + " '" + text + "'", row);
  return *v;
}

inline nlohmann::json parse_json_array(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_array()) throw ParseError("JSON input must be an array of records");
  return doc;
}

inline void require_known_keys(const nlohmann::json& obj, const std::vector<std::string>& known,
                               std::size_t record) {
  if (!obj.is_object()) throw ParseError("record is not a JSON object", record);
  for (const auto& [key, _] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ParseError("unknown field '" + key + "'", record);
    }
  }
}

inline std::string json_study_id(const nlohmann::json& obj, std::size_t record) {
  auto it = obj.find("study_id");
  if (it == obj.end() || !it->is_string()) throw ParseError("missing string study_id", record);
  auto id = it->get<std::string>();
  require_study_id(id, record);
  return id;
}

inline double json_number(const nlohmann::json& obj, const char* key, std::size_t record) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("missing field '") + key + "'", record);
  if (!it->is_number()) throw ParseError(std::string("field '") + key + "' is not a number", record);
  return it->get<double>();
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

} // namespace detail

/// Parses prediction records. CSV columns: `study_id,value[,processing_time]`
/// (the header `score` or `label` is accepted for `value`). JSON: an array of
/// objects with the same field names. Row order is preserved.
inline std::vector<PredictionRecord> load_predictions(std::string_view source, Format format,
                                                      PredictionKind kind) {
  detail::require_utf8(source);
  std::vector<PredictionRecord> out;
  if (format == Format::Csv) {
    auto rows = detail::split_csv(source);
    if (rows.empty()) throw ParseError("CSV input has no header row", 1);
    auto idx = detail::index_header(rows[0], {"study_id", "value", "processing_time"},
                                    {{"score", "value"}, {"label", "value"}});
    if (!idx.count("study_id") || !idx.count("value")) {
      throw ParseError("prediction CSV header must contain study_id and value", rows[0].row);
    }
    const std::size_t width = rows[0].fields.size();
    out.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& row = rows[r];
      if (row.fields.size() != width) {
        throw ParseError("expected " + std::to_string(width) + " fields, found " +
                             std::to_string(row.fields.size()),
                         row.row);
      }
      PredictionRecord rec;
      rec.study_id = detail::trim(row.fields[idx.at("study_id")]);
      detail::require_study_id(rec.study_id, row.row);
      rec.value = detail::checked_value(
          detail::number_field(row.fields[idx.at("value")], "value", row.row), kind, row.row);
      if (auto t = idx.find("processing_time"); t != idx.end()) {
        auto text = detail::trim(row.fields[t->second]);
        if (!text.empty()) {
          rec.processing_time =
              detail::checked_time(detail::number_field(text, "processing_time", row.row), row.row);
        }
      }
      out.push_back(std::move(rec));
    }
    return out;
  }

  auto doc = detail::parse_json_array(std::string(source));
  std::size_t record = 0;
  for (const auto& obj : doc) {
    ++record;
    detail::require_known_keys(obj, {"study_id", "value", "score", "label", "processing_time"}, record);
    PredictionRecord rec;
    rec.study_id = detail::json_study_id(obj, record);
    const char* key = obj.contains("value") ? "value" : obj.contains("score") ? "score" : "label";
    rec.value = detail::checked_value(detail::json_number(obj, key, record), kind, record);
    if (obj.contains("processing_time") && !obj["processing_time"].is_null()) {
      rec.processing_time =
          detail::checked_time(detail::json_number(obj, "processing_time", record), record);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::vector<PredictionRecord> load_predictions(std::istream& in, Format format,
                                                      PredictionKind kind) {
  return load_predictions(detail::read_all(in), format, kind);
}

/// Parses reference records. CSV columns: `study_id,label[,verification_note]`.
inline std::vector<ReferenceRecord> load_reference(std::string_view source, Format format) {
  detail::require_utf8(source);
  std::vector<ReferenceRecord> out;
  if (format == Format::Csv) {
    auto rows = detail::split_csv(source);
    if (rows.empty()) throw ParseError("CSV input has no header row", 1);
    auto idx = detail::index_header(rows[0], {"study_id", "label", "verification_note"}, {});
    if (!idx.count("study_id") || !idx.count("label")) {
      throw ParseError("reference CSV header must contain study_id and label", rows[0].row);
    }
    const std::size_t width = rows[0].fields.size();
    out.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& row = rows[r];
      if (row.fields.size() != width) {
        throw ParseError("expected " + std::to_string(width) + " fields, found " +
                             std::to_string(row.fields.size()),
                         row.row);
      }
      ReferenceRecord rec;
      rec.study_id = detail::trim(row.fields[idx.at("study_id")]);
      detail::require_study_id(rec.study_id, row.row);
      rec.label = detail::checked_label(
          detail::number_field(row.fields[idx.at("label")], "label", row.row), row.row);
      if (auto n = idx.find("verification_note"); n != idx.end() && !row.fields[n->second].empty()) {
        rec.verification_note = row.fields[n->second];
      }
      out.push_back(std::move(rec));
    }
    return out;
  }

  auto doc = detail::parse_json_array(std::string(source));
  std::size_t record = 0;
  for (const auto& obj : doc) {
    ++record;
    detail::require_known_keys(obj, {"study_id", "label", "verification_note"}, record);
    ReferenceRecord rec;
    rec.study_id = detail::json_study_id(obj, record);
    rec.label = detail::checked_label(detail::json_number(obj, "label", record), record);
    if (auto it = obj.find("verification_note"); it != obj.end() && !it->is_null()) {
      if (!it->is_string()) throw ParseError("verification_note must be a string", record);
      rec.verification_note = it->get<std::string>();
    }
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::vector<ReferenceRecord> load_reference(std::istream& in, Format format) {
  return load_reference(detail::read_all(in), format);
}

/// Inner join on study_id. Pairs follow prediction order; unmatched ids are
/// listed in their input order. Duplicate ids on either side are an error.
inline JoinResult join_records(const std::vector<PredictionRecord>& preds,
                               const std::vector<ReferenceRecord>& refs) {
  std::unordered_map<std::string, const ReferenceRecord*> by_id;
  by_id.reserve(refs.size());
  for (const auto& r : refs) {
    if (!by_id.emplace(r.study_id, &r).second) {
      throw ParseError("duplicate study_id '" + r.study_id + "' in reference records");
    }
  }
  std::unordered_set<std::string> seen;
  seen.reserve(preds.size());
  JoinResult out;
  for (const auto& p : preds) {
    if (!seen.insert(p.study_id).second) {
      throw ParseError("duplicate study_id '" + p.study_id + "' in prediction records");
    }
    if (auto it = by_id.find(p.study_id); it != by_id.end()) {
      out.pairs.push_back({p.study_id, p.value, it->second->label});
    } else {
      out.unmatched_predictions.push_back(p.study_id);
    }
  }
  for (const auto& r : refs) {
    if (!seen.count(r.study_id)) out.unmatched_references.push_back(r.study_id);
  }
  return out;
}

inline std::string to_csv(const std::vector<PredictionRecord>& records) {
  const bool with_time = std::any_of(records.begin(), records.end(),
                                     [](const auto& r) { return r.processing_time.has_value(); });
  std::ostringstream os;
  os << (with_time ? "study_id,value,processing_time\n" : "study_id,value\n");
  for (const auto& r : records) {
    os << detail::csv_escape(r.study_id) << ',' << dxval::detail::shortest(r.value);
    if (with_time) {
      os << ',';
      if (r.processing_time) os << dxval::detail::shortest(*r.processing_time);
    }
    os << '\n';
  }
  return os.str();
}

inline std::string to_csv(const std::vector<ReferenceRecord>& records) {
  const bool with_note = std::any_of(records.begin(), records.end(),
                                     [](const auto& r) { return r.verification_note.has_value(); });
  std::ostringstream os;
  os << (with_note ? "study_id,label,verification_note\n" : "study_id,label\n");
  for (const auto& r : records) {
    os << detail::csv_escape(r.study_id) << ',' << r.label;
    if (with_note) {
      os << ',';
      if (r.verification_note) os << detail::csv_escape(*r.verification_note);
    }
    os << '\n';
  }
  return os.str();
}

inline std::string to_json(const std::vector<PredictionRecord>& records) {
  auto arr = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json o{{"study_id", r.study_id}, {"value", r.value}};
    if (r.processing_time) o["processing_time"] = *r.processing_time;
    arr.push_back(std::move(o));
  }
  return arr.dump(2) + "\n";
}

inline std::string to_json(const std::vector<ReferenceRecord>& records) {
  auto arr = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json o{{"study_id", r.study_id}, {"label", r.label}};
    if (r.verification_note) o["verification_note"] = *r.verification_note;
    arr.push_back(std::move(o));
  }
  return arr.dump(2) + "\n";
}

} // namespace dxval::io
