#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gangmam {

enum class ComponentKind { Activity, Service, Receiver, Provider };

/// Manifest element name: "activity", "service", "receiver", "provider".
std::string_view element_name(ComponentKind kind) noexcept;

struct IntentFilter {
  std::vector<std::string> actions;
  std::vector<std::string> categories;

  friend bool operator==(const IntentFilter&, const IntentFilter&) = default;
};

struct Component {
  ComponentKind kind = ComponentKind::Activity;
  std::string class_name;  // fully qualified, leading-dot shorthand resolved
  std::optional<bool> exported;
  std::string authorities;  // providers only
  std::vector<IntentFilter> intent_filters;

  friend bool operator==(const Component&, const Component&) = default;
};

struct ManifestModel {
  std::string package_name;
  std::vector<std::string> permissions;
  std::vector<Component> components;

  friend bool operator==(const ManifestModel&, const ManifestModel&) = default;
};

/// True for `a`, `a.b`, `com.example.App_1`: dot-separated Java identifiers.
bool is_dotted_identifier(std::string_view name) noexcept;

/// Resolve `.Foo` / `Foo` against the package; fully-qualified names pass through.
std::string resolve_class_name(std::string_view package_name, std::string_view name);

/// Parses decoder text-XML output. Unknown elements and attributes are ignored.
/// Throws ParseFailure(XmlSyntaxError), Error(MissingPackageAttribute, UnknownRootElement).
ManifestModel parse_decoded_manifest(std::string_view xml_text);

/// Byte offsets of one element: where its start tag ends and where it closes.
struct ElementSpan {
  std::size_t start_end = 0;  // one past the `>` of the start tag
  bool self_closing = false;
  std::size_t close = 0;  // offset of `</name>`, or of `/>` when self-closing
};

/// Byte offsets needed to splice new elements into manifest text without
/// disturbing existing bytes.
struct ManifestLayout {
  std::size_t manifest_start_end = 0;  // one past the `>` of <manifest ...>
  bool manifest_self_closing = false;
  std::size_t manifest_close = 0;  // offset of `</manifest>` (or of `/>` when self-closing)

  bool has_application = false;
  bool application_self_closing = false;
  std::size_t application_start_end = 0;
  std::size_t application_close = 0;  // offset of `</application>` (or of `/>`)

  std::vector<ElementSpan> components;  // parallel to ManifestModel::components
};

ManifestLayout scan_manifest_layout(std::string_view xml_text);

}  // namespace gangmam
