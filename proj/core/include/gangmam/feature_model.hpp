#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gangmam {

enum class FeatureKind : std::uint8_t {
  Permission,
  Activity,
  Service,
  Receiver,
  Provider,
  IntentAction,
  IntentCategory,
};

inline constexpr std::array<FeatureKind, 7> kAllFeatureKinds = {
    FeatureKind::Permission, FeatureKind::Activity,     FeatureKind::Service,
    FeatureKind::Receiver,   FeatureKind::Provider,     FeatureKind::IntentAction,
    FeatureKind::IntentCategory,
};

/// Column-name prefix for a kind: "permission", "activity", ..., "action", "category".
std::string_view kind_tag(FeatureKind kind) noexcept;
std::optional<FeatureKind> kind_from_tag(std::string_view tag) noexcept;

/// Kind implied by a feature name's tag prefix (`service.Foo` -> Service).
std::optional<FeatureKind> kind_of_name(std::string_view name) noexcept;

/// `<tag>.<short_name>`; `short_name` is typically the last dotted segment.
std::string make_feature_name(FeatureKind kind, std::string_view short_name);

/// The part after `<tag>.`.
std::string_view short_name_of(std::string_view name) noexcept;

struct FeatureDefinition {
  FeatureKind kind = FeatureKind::Permission;
  std::string name;

  friend auto operator<=>(const FeatureDefinition&, const FeatureDefinition&) = default;
  friend bool operator==(const FeatureDefinition&, const FeatureDefinition&) = default;
};

/// True if `name` is CSV-safe and carries the tag of `kind`.
bool is_valid_feature_name(FeatureKind kind, std::string_view name) noexcept;

/// Ordered registry of features; the CSV column space.
class FeatureCatalog {
 public:
  FeatureCatalog() = default;

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<FeatureDefinition>& entries() const noexcept { return entries_; }
  const FeatureDefinition& at(std::size_t position) const { return entries_.at(position); }

  std::optional<std::size_t> position(const FeatureDefinition& def) const;
  std::optional<std::size_t> position(FeatureKind kind, std::string_view name) const;
  bool contains(const FeatureDefinition& def) const { return position(def).has_value(); }

  friend bool operator==(const FeatureCatalog& a, const FeatureCatalog& b) {
    return a.entries_ == b.entries_;
  }

 private:
  friend FeatureCatalog build_catalog(std::span<const FeatureDefinition> defs);
  friend FeatureCatalog build_catalog_allow_empty(std::span<const FeatureDefinition> defs);

  std::vector<FeatureDefinition> entries_;
  std::map<std::pair<FeatureKind, std::string>, std::size_t, std::less<>> index_;
};

/// Canonicalizes: dedups and sorts by (kind, name). Throws EmptyDefinitionList, MalformedName.
FeatureCatalog build_catalog(std::span<const FeatureDefinition> defs);

/// As build_catalog, but an empty input yields an empty catalog.
FeatureCatalog build_catalog_allow_empty(std::span<const FeatureDefinition> defs);

/// Lowercase 64-character hex SHA-256 digest, validated on construction.
class Sha256Hex {
 public:
  explicit Sha256Hex(std::string hex);  // throws BadHash

  static bool is_valid(std::string_view hex) noexcept;

  const std::string& str() const noexcept { return hex_; }

  friend auto operator<=>(const Sha256Hex&, const Sha256Hex&) = default;
  friend bool operator==(const Sha256Hex&, const Sha256Hex&) = default;

 private:
  std::string hex_;
};

/// Fixed-length packed bit sequence.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t size);

  static BitVector from_bools(std::span<const std::uint8_t> bits);
  static BitVector all_ones(std::size_t size);

  std::size_t size() const noexcept { return size_; }
  bool test(std::size_t i) const;
  void set(std::size_t i, bool value = true);
  std::size_t count() const noexcept;

  /// Bitwise OR; sizes must match.
  BitVector operator|(const BitVector& other) const;
  /// Every 1 in this is also a 1 in `other`.
  bool is_subset_of(const BitVector& other) const;

  std::vector<std::uint8_t> to_bools() const;

  friend bool operator==(const BitVector&, const BitVector&) = default;

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Binary static-feature vector of one APK, keyed by its SHA-256.
class FeatureVector {
 public:
  FeatureVector(Sha256Hex apk_hash, BitVector bits)
      : apk_hash_(std::move(apk_hash)), bits_(std::move(bits)) {}

  const Sha256Hex& apk_hash() const noexcept { return apk_hash_; }
  const BitVector& bits() const noexcept { return bits_; }
  std::size_t size() const noexcept { return bits_.size(); }
  bool test(std::size_t i) const { return bits_.test(i); }
  std::size_t popcount() const noexcept { return bits_.count(); }

  /// True if every bit set here is also set in `other`.
  bool dominated_by(const FeatureVector& other) const { return bits_.is_subset_of(other.bits_); }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

 private:
  Sha256Hex apk_hash_;
  BitVector bits_;
};

/// Throws UnknownFeature, BadHash.
FeatureVector encode_vector(std::span<const FeatureDefinition> present, std::string_view hash,
                            const FeatureCatalog& catalog);

/// Bitwise OR. Throws LengthMismatch, HashMismatch.
FeatureVector merge_additive(const FeatureVector& base, const FeatureVector& addition);

/// Features set in `modified` but not in `original`, in catalog order. Throws NotAdditive,
/// LengthMismatch, HashMismatch.
std::vector<FeatureDefinition> diff_added(const FeatureVector& original,
                                          const FeatureVector& modified,
                                          const FeatureCatalog& catalog);

/// Header `sha256,<names...>\n` then one `<hash>,0/1,...\n` row per vector.
std::string csv_encode(const FeatureCatalog& catalog, std::span<const FeatureVector> vectors);

struct FeatureTable {
  FeatureCatalog catalog;
  std::vector<FeatureVector> vectors;

  /// Row with the given hash, if any.
  const FeatureVector* find(const Sha256Hex& hash) const;
};

/// Throws ParseFailure (ParseError, NonBinaryCell, RowLengthMismatch, DuplicateHashRow).
FeatureTable csv_decode(std::string_view bytes);

}  // namespace gangmam
