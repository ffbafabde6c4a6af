#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "gangmam/feature_model.hpp"
#include "gangmam/hashing.hpp"
#include "gangmam/manifest.hpp"

namespace gangmam {

inline constexpr const char* kManifestFile = "AndroidManifest.xml";

/// A decoder output directory: `<root>/AndroidManifest.xml` plus `<root>/smali*/`.
struct DecodedApk {
  std::filesystem::path root_path;
  ManifestModel manifest;
  std::vector<std::filesystem::path> smali_roots;  // sorted; `smali` sorts first
  Sha256Hex source_apk_hash;
};

/// Reads and parses a decoded tree. `source_apk_hash` is the hash of the APK it came from.
/// Throws IoError when the manifest is missing, plus any parse error.
DecodedApk load_decoded_apk(const std::filesystem::path& root, Sha256Hex source_apk_hash);

/// Distinct features a manifest exhibits, in canonical order.
std::vector<FeatureDefinition> manifest_features(const ManifestModel& manifest);

/// Feature for a permission/action/category string or a component class name.
std::optional<FeatureDefinition> feature_for(FeatureKind kind, std::string_view raw_name);

/// Bits set for catalog features the manifest exhibits; others are skipped.
FeatureVector extract_features(const DecodedApk& apk, const FeatureCatalog& catalog);

struct CorpusCatalog {
  FeatureCatalog catalog;
  bool degenerate = false;  // no features observed at all
};

/// Canonical union of every feature in every manifest. Throws EmptyCorpus.
CorpusCatalog catalog_from_corpus(std::span<const DecodedApk> apks);

}  // namespace gangmam
