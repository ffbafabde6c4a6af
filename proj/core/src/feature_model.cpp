#include "gangmam/feature_model.hpp"

#include <algorithm>
#include <bit>
#include <set>

#include "gangmam/error.hpp"

namespace gangmam {

namespace {

constexpr std::array<std::string_view, 7> kTags = {
    "permission", "activity", "service", "receiver", "provider", "action", "category",
};

void require_same_shape(const FeatureVector& a, const FeatureVector& b) {
  if (a.size() != b.size()) {
    throw Error(Errc::LengthMismatch, "vectors of length " + std::to_string(a.size()) + " and " +
                                          std::to_string(b.size()));
  }
  if (a.apk_hash() != b.apk_hash()) {
    throw Error(Errc::HashMismatch, a.apk_hash().str() + " vs " + b.apk_hash().str());
  }
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

std::string_view kind_tag(FeatureKind kind) noexcept {
  return kTags[static_cast<std::size_t>(kind)];
}

std::optional<FeatureKind> kind_from_tag(std::string_view tag) noexcept {
  for (auto kind : kAllFeatureKinds) {
    if (kind_tag(kind) == tag) return kind;
  }
  return std::nullopt;
}

std::optional<FeatureKind> kind_of_name(std::string_view name) noexcept {
  auto dot = name.find('.');
  if (dot == std::string_view::npos) return std::nullopt;
  return kind_from_tag(name.substr(0, dot));
}

std::string make_feature_name(FeatureKind kind, std::string_view short_name) {
  std::string name(kind_tag(kind));
  name += '.';
  name += short_name;
  return name;
}

std::string_view short_name_of(std::string_view name) noexcept {
  auto dot = name.find('.');
  return dot == std::string_view::npos ? name : name.substr(dot + 1);
}

bool is_valid_feature_name(FeatureKind kind, std::string_view name) noexcept {
  if (name.empty()) return false;
  for (char c : name) {
    if (c == ',' || c == '\n' || c == '\r' || c == '"') return false;
  }
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\v' || c == '\f'; };
  if (is_space(name.front()) || is_space(name.back())) return false;
  auto tag = kind_tag(kind);
  return name.size() > tag.size() + 1 && name.starts_with(tag) && name[tag.size()] == '.';
}

std::optional<std::size_t> FeatureCatalog::position(const FeatureDefinition& def) const {
  return position(def.kind, def.name);
}

std::optional<std::size_t> FeatureCatalog::position(FeatureKind kind,
                                                    std::string_view name) const {
  auto it = index_.find(std::pair<FeatureKind, std::string>(kind, std::string(name)));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

FeatureCatalog build_catalog_allow_empty(std::span<const FeatureDefinition> defs) {
  for (const auto& def : defs) {
    if (!is_valid_feature_name(def.kind, def.name)) {
      throw Error(Errc::MalformedName, "'" + def.name + "' is not a valid " +
                                           std::string(kind_tag(def.kind)) + " feature name");
    }
  }
  std::set<FeatureDefinition> unique(defs.begin(), defs.end());
  FeatureCatalog catalog;
  catalog.entries_.assign(unique.begin(), unique.end());
  for (std::size_t i = 0; i < catalog.entries_.size(); ++i) {
    const auto& e = catalog.entries_[i];
    catalog.index_.emplace(std::pair(e.kind, e.name), i);
  }
  return catalog;
}

FeatureCatalog build_catalog(std::span<const FeatureDefinition> defs) {
  if (defs.empty()) throw Error(Errc::EmptyDefinitionList, "no feature definitions given");
  return build_catalog_allow_empty(defs);
}

Sha256Hex::Sha256Hex(std::string hex) : hex_(std::move(hex)) {
  if (!is_valid(hex_)) throw Error(Errc::BadHash, "'" + hex_ + "' is not a lowercase SHA-256 hex");
}

bool Sha256Hex::is_valid(std::string_view hex) noexcept {
  return hex.size() == 64 && std::all_of(hex.begin(), hex.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

BitVector::BitVector(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

BitVector BitVector::from_bools(std::span<const std::uint8_t> bits) {
  BitVector v(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) v.set(i);
  }
  return v;
}

BitVector BitVector::all_ones(std::size_t size) {
  BitVector v(size);
  for (std::size_t i = 0; i < size; ++i) v.set(i);
  return v;
}

bool BitVector::test(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("BitVector::test");
  return (words_[i / 64] >> (i % 64)) & 1U;
}

void BitVector::set(std::size_t i, bool value) {
  if (i >= size_) throw std::out_of_range("BitVector::set");
  auto mask = std::uint64_t{1} << (i % 64);
  if (value) {
    words_[i / 64] |= mask;
  } else {
    words_[i / 64] &= ~mask;
  }
}

std::size_t BitVector::count() const noexcept {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

BitVector BitVector::operator|(const BitVector& other) const {
  if (size_ != other.size_) throw Error(Errc::LengthMismatch, "BitVector OR of unequal sizes");
  BitVector out(size_);
  for (std::size_t w = 0; w < words_.size(); ++w) out.words_[w] = words_[w] | other.words_[w];
  return out;
}

bool BitVector::is_subset_of(const BitVector& other) const {
  if (size_ != other.size_) return false;
  for (std::size_t w = 0; w < words_.size(); ++w) {
    if ((words_[w] & ~other.words_[w]) != 0) return false;
  }
  return true;
}

std::vector<std::uint8_t> BitVector::to_bools() const {
  std::vector<std::uint8_t> out(size_);
  for (std::size_t i = 0; i < size_; ++i) out[i] = test(i) ? 1 : 0;
  return out;
}

FeatureVector encode_vector(std::span<const FeatureDefinition> present, std::string_view hash,
                            const FeatureCatalog& catalog) {
  Sha256Hex apk_hash{std::string(hash)};
  BitVector bits(catalog.size());
  for (const auto& def : present) {
    auto pos = catalog.position(def);
    if (!pos) throw Error(Errc::UnknownFeature, def.name + " is not in the catalog");
    bits.set(*pos);
  }
  return FeatureVector(std::move(apk_hash), std::move(bits));
}

FeatureVector merge_additive(const FeatureVector& base, const FeatureVector& addition) {
  require_same_shape(base, addition);
  return FeatureVector(base.apk_hash(), base.bits() | addition.bits());
}

std::vector<FeatureDefinition> diff_added(const FeatureVector& original,
                                          const FeatureVector& modified,
                                          const FeatureCatalog& catalog) {
  require_same_shape(original, modified);
  if (original.size() != catalog.size()) {
    throw Error(Errc::CatalogMismatch, "vector length differs from catalog length");
  }
  std::vector<FeatureDefinition> added;
  for (std::size_t i = 0; i < original.size(); ++i) {
    bool before = original.test(i);
    bool after = modified.test(i);
    if (before && !after) {
      throw Error(Errc::NotAdditive, catalog.at(i).name + " would be removed");
    }
    if (!before && after) added.push_back(catalog.at(i));
  }
  return added;
}

const FeatureVector* FeatureTable::find(const Sha256Hex& hash) const {
  for (const auto& v : vectors) {
    if (v.apk_hash() == hash) return &v;
  }
  return nullptr;
}

std::string csv_encode(const FeatureCatalog& catalog, std::span<const FeatureVector> vectors) {
  std::string out = "sha256";
  for (const auto& e : catalog.entries()) {
    out += ',';
    out += e.name;
  }
  out += '\n';
  for (const auto& v : vectors) {
    if (v.size() != catalog.size()) {
      throw Error(Errc::CatalogMismatch, "vector " + v.apk_hash().str() + " has " +
                                             std::to_string(v.size()) + " bits, catalog has " +
                                             std::to_string(catalog.size()));
    }
    out += v.apk_hash().str();
    for (std::size_t i = 0; i < v.size(); ++i) {
      out += v.test(i) ? ",1" : ",0";
    }
    out += '\n';
  }
  return out;
}

FeatureTable csv_decode(std::string_view bytes) {
  if (bytes.starts_with("\xEF\xBB\xBF")) {
    throw ParseFailure(Errc::ParseError, 1, 1, "byte order mark is not allowed");
  }
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < bytes.size()) {
    auto nl = bytes.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(bytes.substr(start));
      break;
    }
    lines.push_back(bytes.substr(start, nl - start));
    start = nl + 1;
  }
  if (lines.empty()) throw ParseFailure(Errc::ParseError, 1, 1, "missing header line");

  auto header = split_fields(lines[0]);
  if (header[0] != "sha256") {
    throw ParseFailure(Errc::ParseError, 1, 1, "header must start with 'sha256'");
  }
  std::vector<FeatureDefinition> columns;
  columns.reserve(header.size() - 1);
  for (std::size_t c = 1; c < header.size(); ++c) {
    auto name = header[c];
    auto kind = kind_of_name(name);
    if (!kind || !is_valid_feature_name(*kind, name)) {
      throw ParseFailure(Errc::ParseError, 1, c + 1,
                         "'" + std::string(name) + "' is not a feature column name");
    }
    columns.push_back({*kind, std::string(name)});
  }

  FeatureTable table;
  table.catalog = build_catalog_allow_empty(columns);
  if (table.catalog.size() != columns.size()) {
    throw ParseFailure(Errc::ParseError, 1, 1, "duplicate feature column in header");
  }
  std::vector<std::size_t> column_to_position;
  column_to_position.reserve(columns.size());
  for (const auto& def : columns) column_to_position.push_back(*table.catalog.position(def));

  std::set<std::string, std::less<>> seen;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    auto line_no = ln + 1;
    auto fields = split_fields(lines[ln]);
    if (fields.size() != header.size()) {
      throw ParseFailure(Errc::RowLengthMismatch, line_no, std::min(fields.size(), header.size()),
                         "row has " + std::to_string(fields.size()) + " fields, header has " +
                             std::to_string(header.size()));
    }
    if (!Sha256Hex::is_valid(fields[0])) {
      throw ParseFailure(Errc::ParseError, line_no, 1,
                         "'" + std::string(fields[0]) + "' is not a lowercase SHA-256 hex");
    }
    if (!seen.emplace(fields[0]).second) {
      throw ParseFailure(Errc::DuplicateHashRow, line_no, 1,
                         "hash " + std::string(fields[0]) + " appears twice");
    }
    BitVector bits(columns.size());
    for (std::size_t c = 1; c < fields.size(); ++c) {
      auto cell = fields[c];
      if (cell == "1") {
        bits.set(column_to_position[c - 1]);
      } else if (cell != "0") {
        throw ParseFailure(Errc::NonBinaryCell, line_no, c + 1,
                           "cell '" + std::string(cell) + "' is not 0 or 1");
      }
    }
    table.vectors.emplace_back(Sha256Hex(std::string(fields[0])), std::move(bits));
  }
  return table;
}

}  // namespace gangmam
