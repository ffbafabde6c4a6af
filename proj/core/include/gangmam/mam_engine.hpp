#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gangmam/apk_io.hpp"
#include "gangmam/feature_model.hpp"
#include "gangmam/manifest.hpp"

namespace gangmam {

inline constexpr std::string_view kDefaultStubPackage = "gangmam.inert";
/// Generated receiver that holds injected intent actions/categories.
inline constexpr std::string_view kCarrierReceiverName = "InertFilterCarrier";

/// Per-APK list of features to inject. Additions only.
struct ModificationPlan {
  Sha256Hex apk_hash;
  std::vector<FeatureDefinition> additions;  // strictly increasing (catalog order)
  std::string stub_package{kDefaultStubPackage};

  /// Throws BadParams when additions are unordered/duplicated or names are unusable.
  void validate() const;

  bool empty() const noexcept { return additions.empty(); }
};

struct SmaliStub {
  std::filesystem::path relative_path;  // relative to a smali root, e.g. gangmam/inert/service/Foo.smali
  std::string class_name;               // fully qualified Java name
  std::string contents;
  ComponentKind component_kind = ComponentKind::Activity;
};

/// Throws NotAdditive, HashMismatch.
ModificationPlan build_plan(const FeatureVector& original, const FeatureVector& target,
                            const FeatureCatalog& catalog,
                            std::string stub_package = std::string(kDefaultStubPackage));

/// Stub class a component addition resolves to: `<stub_package>.<kind tag>.<short name>`.
std::string stub_class_name(const ModificationPlan& plan, const FeatureDefinition& def);
std::string carrier_class_name(const ModificationPlan& plan);

/// Appends one entry per feature not already exhibited by the manifest. Idempotent.
ManifestModel apply_manifest_edits(const ManifestModel& manifest, const ModificationPlan& plan);

/// One inert stub per component addition, plus the carrier receiver when the plan adds any
/// intent action or category.
std::vector<SmaliStub> emit_smali_stubs(const ModificationPlan& plan);

/// Smali source of an inert subclass of the platform base class for `kind`.
std::string render_smali_stub(ComponentKind kind, std::string_view class_name);

/// Rewrites `original_xml` (which parses to `before`) so that it parses to `after`, where
/// `after` only appends permissions, components and intent filters. Existing bytes are kept;
/// new elements go at the end of their parent.
std::string splice_manifest(std::string_view original_xml, const ManifestModel& before,
                            const ManifestModel& after);

/// Applies the plan in place: manifest rewrite plus stubs under the first smali root.
/// Throws HashMismatch (nothing touched), IoError.
DecodedApk apply_plan(const DecodedApk& apk, const ModificationPlan& plan);

}  // namespace gangmam
