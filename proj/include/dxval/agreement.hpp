#pragma once

// Agreement statistics: Cohen's kappa over a KxK contingency table and the
// Dice-Sorensen coefficient over binary masks.

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dxval/detail/numeric.hpp"
#include "dxval/error.hpp"
#include "dxval/metrics.hpp"

namespace dxval::agreement {

/// Square table of counts; rows are the second rater's categories, columns
/// the first rater's.
class AgreementTable {
public:
  explicit AgreementTable(std::vector<std::vector<std::uint64_t>> counts) : counts_(std::move(counts)) {
    const auto k = counts_.size();
    if (k < 2) throw DomainError("agreement table needs at least 2 categories");
    for (const auto& row : counts_) {
      if (row.size() != k) throw DomainError("agreement table must be square");
    }
    if (total() == 0) throw DomainError("agreement table is empty");
  }

  std::size_t categories() const noexcept { return counts_.size(); }
  std::uint64_t at(std::size_t row, std::size_t col) const { return counts_.at(row).at(col); }
  const std::vector<std::vector<std::uint64_t>>& counts() const noexcept { return counts_; }

  std::uint64_t total() const noexcept {
    std::uint64_t t = 0;
    for (const auto& row : counts_) {
      for (auto c : row) t += c;
    }
    return t;
  }

  AgreementTable transposed() const {
    auto t = counts_;
    for (std::size_t i = 0; i < t.size(); ++i) {
      for (std::size_t j = 0; j < t.size(); ++j) t[i][j] = counts_[j][i];
    }
    return AgreementTable(std::move(t));
  }

private:
  std::vector<std::vector<std::uint64_t>> counts_;
};

struct KappaResult {
  double kappa = 0.0;
  double observed = 0.0;  // P0
  double expected = 0.0;  // Pe
  VerdictBand verdict = VerdictBand::Unsuitable;
};

/// K = (P0 - Pe) / (1 - Pe) with P0 the diagonal mass and Pe the sum of
/// row-marginal x column-marginal products. Evaluated over integer counts:
/// K = (T * diag - sum_i r_i c_i) / (T^2 - sum_i r_i c_i), so tables with
/// exact rational kappa yield the correctly rounded double.
inline KappaResult cohen_kappa(const AgreementTable& table) {
  using i128 = __int128;
  const auto k = table.categories();
  std::vector<i128> rows(k, 0), cols(k, 0);
  i128 diag = 0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const i128 c = table.at(i, j);
      rows[i] += c;
      cols[j] += c;
      if (i == j) diag += c;
    }
  }
  const i128 total = table.total();
  i128 chance = 0;
  for (std::size_t i = 0; i < k; ++i) chance += rows[i] * cols[i];
  const i128 denom = total * total - chance;
  if (denom == 0) {
    throw DomainError("kappa undefined: expected agreement Pe = 1 (all mass in a single category)");
  }
  const i128 numer = total * diag - chance;
  // Correctly rounded when both operands are exactly representable.
  const auto ratio = [](i128 n, i128 d) {
    constexpr i128 exact = i128{1} << 53;
    if (n < exact && n > -exact && d < exact && d > -exact) {
      return static_cast<double>(n) / static_cast<double>(d);
    }
    return static_cast<double>(static_cast<long double>(n) / static_cast<long double>(d));
  };

  KappaResult r;
  r.kappa = ratio(numer, denom);
  r.observed = ratio(diag, total);
  r.expected = ratio(chance, total * total);
  r.verdict = verdict(std::clamp(r.kappa, 0.0, 1.0));
  return r;
}

/// Ordered sequence of 0/1 elements.
class BinaryMask {
public:
  BinaryMask() = default;
  explicit BinaryMask(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto b : bits_) {
      if (b > 1) throw DomainError("binary mask elements must be 0 or 1");
    }
  }

  std::size_t size() const noexcept { return bits_.size(); }
  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }
  std::size_t count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
  }

  bool operator==(const BinaryMask&) const = default;

private:
  std::vector<std::uint8_t> bits_;
};

struct DiceResult {
  double dsc = 0.0;
  std::size_t size_a = 0;
  std::size_t size_b = 0;
  std::size_t overlap = 0;
  bool empty = false;  // both masks had no positive elements
  VerdictBand verdict = VerdictBand::Unsuitable;
};

/// DSC = 2|A n B| / (|A| + |B|). Two empty masks agree perfectly (DSC = 1,
/// `empty` set).
inline DiceResult dice(const BinaryMask& a, const BinaryMask& b) {
  if (a.size() != b.size()) {
    throw DomainError("dice: mask lengths differ (" + std::to_string(a.size()) + " vs " +
                      std::to_string(b.size()) + ")");
  }
  DiceResult r;
  for (std::size_t i = 0; i < a.size(); ++i) {
    r.size_a += a[i];
    r.size_b += b[i];
    r.overlap += a[i] & b[i];
  }
  if (r.size_a + r.size_b == 0) {
    r.dsc = 1.0;
    r.empty = true;
  } else {
    r.dsc = static_cast<double>(2 * r.overlap) / static_cast<double>(r.size_a + r.size_b);
  }
  r.verdict = verdict(r.dsc);
  return r;
}

// ---------------------------------------------------------------------------
// Mask interchange formats

/// JSON array of 0/1 integers.
inline BinaryMask mask_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed mask JSON: ") + e.what());
  }
  if (!doc.is_array()) throw ParseError("mask JSON must be an array of 0/1");
  std::vector<std::uint8_t> bits;
  bits.reserve(doc.size());
  std::size_t i = 0;
  for (const auto& v : doc) {
    ++i;
    if (!v.is_number_integer() || (v.get<long long>() != 0 && v.get<long long>() != 1)) {
      throw ParseError("mask element is not 0 or 1", i);
    }
    bits.push_back(static_cast<std::uint8_t>(v.get<long long>()));
  }
  return BinaryMask(std::move(bits));
}

inline std::string mask_to_json(const BinaryMask& m) {
  std::string out = "[";
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (i) out += ',';
    out += m[i] ? '1' : '0';
  }
  out += "]";
  return out;
}

/// Run-length text: the declared mask length followed by `start:length` runs
/// of ones (0-based starts), whitespace-separated, e.g. `100 3:5 20:10`.
/// Runs must be in range; overlapping runs are rejected.
inline BinaryMask mask_from_rle(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string token;
  if (!(is >> token)) throw ParseError("RLE mask: missing declared length");
  auto declared = detail::parse_uint(token);
  if (!declared) throw ParseError("RLE mask: declared length '" + token + "' is not a non-negative integer");
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(*declared), 0);
  std::size_t run = 0;
  while (is >> token) {
    ++run;
    const auto colon = token.find(':');
    if (colon == std::string::npos) throw ParseError("RLE mask: run '" + token + "' is not start:length", run);
    auto start = detail::parse_uint(std::string_view(token).substr(0, colon));
    auto len = detail::parse_uint(std::string_view(token).substr(colon + 1));
    if (!start || !len) throw ParseError("RLE mask: run '" + token + "' has non-integer fields", run);
    const auto s = static_cast<std::size_t>(*start), l = static_cast<std::size_t>(*len);
    if (s > bits.size() || l > bits.size() - s) throw ParseError("RLE mask: run '" + token + "' exceeds declared length", run);
    for (std::size_t i = s; i < s + l; ++i) {
      if (bits[i]) throw ParseError("RLE mask: run '" + token + "' overlaps a previous run", run);
      bits[i] = 1;
    }
  }
  return BinaryMask(std::move(bits));
}

/// Canonical run-length text: maximal runs in ascending order.
inline std::string mask_to_rle(const BinaryMask& m) {
  std::string out = std::to_string(m.size());
  for (std::size_t i = 0; i < m.size();) {
    if (!m[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < m.size() && m[j]) ++j;
    out += ' ' + std::to_string(i) + ':' + std::to_string(j - i);
    i = j;
  }
  return out;
}

/// Reads a JSON `[[...], ...]` count matrix.
inline AgreementTable table_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed agreement table JSON: ") + e.what());
  }
  if (doc.is_object() && doc.contains("counts")) doc = doc["counts"];
  if (!doc.is_array()) throw ParseError("agreement table must be an array of rows");
  std::vector<std::vector<std::uint64_t>> counts;
  std::size_t r = 0;
  for (const auto& row : doc) {
    ++r;
    if (!row.is_array()) throw ParseError("agreement table row is not an array", r);
    auto& out = counts.emplace_back();
    for (const auto& v : row) {
      if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ParseError("agreement table cell is not a non-negative integer", r);
      }
      out.push_back(v.get<std::uint64_t>());
    }
  }
  return AgreementTable(std::move(counts));
}

} // namespace dxval::agreement
