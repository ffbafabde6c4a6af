#include "gangmam/apk_io.hpp"

#include <algorithm>
#include <set>

#include "gangmam/error.hpp"

namespace gangmam {

namespace fs = std::filesystem;

namespace {

FeatureKind feature_kind(ComponentKind kind) {
  switch (kind) {
    case ComponentKind::Activity: return FeatureKind::Activity;
    case ComponentKind::Service: return FeatureKind::Service;
    case ComponentKind::Receiver: return FeatureKind::Receiver;
    case ComponentKind::Provider: return FeatureKind::Provider;
  }
  return FeatureKind::Activity;
}

}  // namespace

DecodedApk load_decoded_apk(const fs::path& root, Sha256Hex source_apk_hash) {
  auto manifest_path = root / kManifestFile;
  std::error_code ec;
  if (!fs::is_regular_file(manifest_path, ec)) {
    throw Error(Errc::IoError, manifest_path.string() + " not found");
  }
  DecodedApk apk{root, parse_decoded_manifest(read_file(manifest_path)), {},
                 std::move(source_apk_hash)};
  for (const auto& entry : fs::directory_iterator(root, ec)) {
    auto name = entry.path().filename().string();
    if (entry.is_directory() && name.starts_with("smali")) apk.smali_roots.push_back(entry.path());
  }
  if (ec) throw Error(Errc::IoError, "listing " + root.string() + ": " + ec.message());
  std::sort(apk.smali_roots.begin(), apk.smali_roots.end());
  return apk;
}

std::optional<FeatureDefinition> feature_for(FeatureKind kind, std::string_view raw_name) {
  auto dot = raw_name.rfind('.');
  auto tail = dot == std::string_view::npos ? raw_name : raw_name.substr(dot + 1);
  if (tail.empty()) return std::nullopt;
  FeatureDefinition def{kind, make_feature_name(kind, tail)};
  if (!is_valid_feature_name(kind, def.name)) return std::nullopt;
  return def;
}

std::vector<FeatureDefinition> manifest_features(const ManifestModel& manifest) {
  std::set<FeatureDefinition> found;
  auto add = [&](FeatureKind kind, std::string_view raw) {
    if (auto def = feature_for(kind, raw)) found.insert(std::move(*def));
  };
  for (const auto& p : manifest.permissions) add(FeatureKind::Permission, p);
  for (const auto& c : manifest.components) {
    add(feature_kind(c.kind), c.class_name);
    for (const auto& f : c.intent_filters) {
      for (const auto& a : f.actions) add(FeatureKind::IntentAction, a);
      for (const auto& cat : f.categories) add(FeatureKind::IntentCategory, cat);
    }
  }
  return {found.begin(), found.end()};
}

FeatureVector extract_features(const DecodedApk& apk, const FeatureCatalog& catalog) {
  BitVector bits(catalog.size());
  for (const auto& def : manifest_features(apk.manifest)) {
    if (auto pos = catalog.position(def)) bits.set(*pos);
  }
  return FeatureVector(apk.source_apk_hash, std::move(bits));
}

CorpusCatalog catalog_from_corpus(std::span<const DecodedApk> apks) {
  if (apks.empty()) throw Error(Errc::EmptyCorpus, "no APKs to derive a catalog from");
  std::vector<FeatureDefinition> all;
  for (const auto& apk : apks) {
    auto defs = manifest_features(apk.manifest);
    all.insert(all.end(), defs.begin(), defs.end());
  }
  CorpusCatalog out;
  out.catalog = build_catalog_allow_empty(all);
  out.degenerate = out.catalog.empty();
  return out;
}

}  // namespace gangmam
