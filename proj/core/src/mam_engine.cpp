#include "gangmam/mam_engine.hpp"

#include <algorithm>
#include <set>

#include "gangmam/error.hpp"

namespace gangmam {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kIndentUnit = "    ";

std::optional<ComponentKind> component_kind_of(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Activity: return ComponentKind::Activity;
    case FeatureKind::Service: return ComponentKind::Service;
    case FeatureKind::Receiver: return ComponentKind::Receiver;
    case FeatureKind::Provider: return ComponentKind::Provider;
    default: return std::nullopt;
  }
}

std::string smali_type(std::string_view class_name) {
  std::string t = "L";
  for (char c : class_name) t += c == '.' ? '/' : c;
  t += ';';
  return t;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string attr(std::string_view name, std::string_view value) {
  return " " + std::string(name) + "=\"" + xml_escape(value) + "\"";
}

std::vector<std::string> render_filter(const IntentFilter& f) {
  std::vector<std::string> lines{"<intent-filter>"};
  for (const auto& a : f.actions) {
    lines.push_back(std::string(kIndentUnit) + "<action" + attr("android:name", a) + "/>");
  }
  for (const auto& c : f.categories) {
    lines.push_back(std::string(kIndentUnit) + "<category" + attr("android:name", c) + "/>");
  }
  lines.emplace_back("</intent-filter>");
  return lines;
}

std::vector<std::string> render_component(const Component& c) {
  std::string open = "<" + std::string(element_name(c.kind)) + attr("android:name", c.class_name);
  if (!c.authorities.empty()) open += attr("android:authorities", c.authorities);
  if (c.exported) open += attr("android:exported", *c.exported ? "true" : "false");
  if (c.intent_filters.empty()) return {open + "/>"};
  std::vector<std::string> lines{open + ">"};
  for (const auto& f : c.intent_filters) {
    for (auto& l : render_filter(f)) lines.push_back(std::string(kIndentUnit) + l);
  }
  lines.push_back("</" + std::string(element_name(c.kind)) + ">");
  return lines;
}

struct Edit {
  std::size_t offset;
  std::size_t erase;
  std::string text;
};

std::size_t line_start_of(std::string_view text, std::size_t pos) {
  if (pos == 0) return 0;
  auto nl = text.rfind('\n', pos - 1);
  return nl == std::string_view::npos ? 0 : nl + 1;
}

std::string_view leading_ws_of_line(std::string_view text, std::size_t pos) {
  auto start = line_start_of(text, pos);
  auto end = start;
  while (end < text.size() && (text[end] == ' ' || text[end] == '\t')) ++end;
  return text.substr(start, end - start);
}

/// Inserts `children` at the end of the element closing at `span`.
Edit append_children(std::string_view text, const ElementSpan& span, std::string_view tag,
                     const std::vector<std::string>& children) {
  auto base = std::string(leading_ws_of_line(text, span.close));
  auto child_indent = base + std::string(kIndentUnit);
  if (span.self_closing) {
    std::string body = ">";
    for (const auto& l : children) body += "\n" + child_indent + l;
    body += "\n" + base + "</" + std::string(tag) + ">";
    return {span.close, 2, body};
  }
  // Closing tag alone on its line: insert whole lines before it.
  auto line_start = line_start_of(text, span.close);
  auto before = text.substr(line_start, span.close - line_start);
  bool only_ws = std::all_of(before.begin(), before.end(), [](char c) { return c == ' ' || c == '\t'; });
  if (only_ws && line_start > 0) {
    std::string body;
    for (const auto& l : children) body += child_indent + l + "\n";
    return {line_start, 0, body};
  }
  std::string body;
  for (const auto& l : children) body += "\n" + child_indent + l;
  body += "\n" + base;
  return {span.close, 0, body};
}

std::string apply_edits(std::string_view text, std::vector<Edit> edits) {
  std::sort(edits.begin(), edits.end(), [](const Edit& a, const Edit& b) { return a.offset > b.offset; });
  std::string out(text);
  for (const auto& e : edits) out.replace(e.offset, e.erase, e.text);
  return out;
}

bool is_intent_kind(FeatureKind kind) {
  return kind == FeatureKind::IntentAction || kind == FeatureKind::IntentCategory;
}

}  // namespace

void ModificationPlan::validate() const {
  if (!is_dotted_identifier(stub_package)) {
    throw Error(Errc::BadParams, "stub package '" + stub_package + "' is not a dotted identifier");
  }
  for (std::size_t i = 0; i < additions.size(); ++i) {
    const auto& def = additions[i];
    if (!is_valid_feature_name(def.kind, def.name)) {
      throw Error(Errc::BadParams, "addition '" + def.name + "' is not a valid feature name");
    }
    if (i > 0 && !(additions[i - 1] < def)) {
      throw Error(Errc::BadParams, "additions must be strictly increasing in catalog order");
    }
    if (component_kind_of(def.kind) && !is_dotted_identifier(short_name_of(def.name))) {
      throw Error(Errc::BadParams, "'" + def.name + "' does not name a Java class");
    }
  }
}

ModificationPlan build_plan(const FeatureVector& original, const FeatureVector& target,
                            const FeatureCatalog& catalog, std::string stub_package) {
  ModificationPlan plan{original.apk_hash(), diff_added(original, target, catalog),
                        std::move(stub_package)};
  plan.validate();
  return plan;
}

std::string stub_class_name(const ModificationPlan& plan, const FeatureDefinition& def) {
  // kind sub-package: activity.Foo and service.Foo must not share a class
  return plan.stub_package + "." + std::string(kind_tag(def.kind)) + "." +
         std::string(short_name_of(def.name));
}

std::string carrier_class_name(const ModificationPlan& plan) {
  return plan.stub_package + "." + std::string(kCarrierReceiverName);
}

ManifestModel apply_manifest_edits(const ManifestModel& manifest, const ModificationPlan& plan) {
  plan.validate();
  auto present_list = manifest_features(manifest);
  std::set<FeatureDefinition> present(present_list.begin(), present_list.end());

  ManifestModel out = manifest;
  IntentFilter carrier_filter;
  for (const auto& def : plan.additions) {
    if (present.contains(def)) continue;
    auto short_name = std::string(short_name_of(def.name));
    if (def.kind == FeatureKind::Permission) {
      out.permissions.push_back("android.permission." + short_name);
    } else if (auto kind = component_kind_of(def.kind)) {
      Component c;
      c.kind = *kind;
      c.class_name = stub_class_name(plan, def);
      c.exported = false;
      if (*kind == ComponentKind::Provider) c.authorities = c.class_name + ".stub";
      out.components.push_back(std::move(c));
    } else if (def.kind == FeatureKind::IntentAction) {
      carrier_filter.actions.push_back("android.intent.action." + short_name);
    } else {
      carrier_filter.categories.push_back("android.intent.category." + short_name);
    }
    present.insert(def);
  }

  if (!carrier_filter.actions.empty() || !carrier_filter.categories.empty()) {
    auto carrier = carrier_class_name(plan);
    auto it = std::find_if(out.components.begin(), out.components.end(), [&](const Component& c) {
      return c.kind == ComponentKind::Receiver && c.class_name == carrier;
    });
    if (it == out.components.end()) {
      Component c;
      c.kind = ComponentKind::Receiver;
      c.class_name = carrier;
      c.exported = false;
      c.intent_filters.push_back(std::move(carrier_filter));
      out.components.push_back(std::move(c));
    } else {
      it->intent_filters.push_back(std::move(carrier_filter));
    }
  }
  return out;
}

std::string render_smali_stub(ComponentKind kind, std::string_view class_name) {
  std::string_view super;
  switch (kind) {
    case ComponentKind::Activity: super = "Landroid/app/Activity;"; break;
    case ComponentKind::Service: super = "Landroid/app/Service;"; break;
    case ComponentKind::Receiver: super = "Landroid/content/BroadcastReceiver;"; break;
    case ComponentKind::Provider: super = "Landroid/content/ContentProvider;"; break;
  }
  auto simple = class_name.substr(class_name.rfind('.') + 1);
  std::string s;
  s += ".class public " + smali_type(class_name) + "\n";
  s += ".super " + std::string(super) + "\n";
  s += ".source \"" + std::string(simple) + ".java\"\n\n\n";
  s += "# direct methods\n";
  s += ".method public constructor <init>()V\n";
  s += "    .locals 0\n\n";
  s += "    invoke-direct {p0}, " + std::string(super) + "-><init>()V\n\n";
  s += "    return-void\n";
  s += ".end method\n";

  auto method = [&s](std::string_view signature, std::string_view locals, std::string_view body) {
    s += "\n.method public " + std::string(signature) + "\n";
    s += "    .locals " + std::string(locals) + "\n\n";
    s += std::string(body);
    s += ".end method\n";
  };
  constexpr std::string_view kNull = "    const/4 v0, 0x0\n\n    return-object v0\n";
  constexpr std::string_view kZero = "    const/4 v0, 0x0\n\n    return v0\n";

  switch (kind) {
    case ComponentKind::Activity:
      break;
    case ComponentKind::Service:
      s += "\n\n# virtual methods";
      method("onBind(Landroid/content/Intent;)Landroid/os/IBinder;", "1", kNull);
      break;
    case ComponentKind::Receiver:
      s += "\n\n# virtual methods";
      method("onReceive(Landroid/content/Context;Landroid/content/Intent;)V", "0",
             "    return-void\n");
      break;
    case ComponentKind::Provider:
      s += "\n\n# virtual methods";
      method("delete(Landroid/net/Uri;Ljava/lang/String;[Ljava/lang/String;)I", "1", kZero);
      method("getType(Landroid/net/Uri;)Ljava/lang/String;", "1", kNull);
      method("insert(Landroid/net/Uri;Landroid/content/ContentValues;)Landroid/net/Uri;", "1", kNull);
      method("onCreate()Z", "1", kZero);
      method("query(Landroid/net/Uri;[Ljava/lang/String;Ljava/lang/String;[Ljava/lang/String;"
             "Ljava/lang/String;)Landroid/database/Cursor;",
             "1", kNull);
      method("update(Landroid/net/Uri;Landroid/content/ContentValues;Ljava/lang/String;"
             "[Ljava/lang/String;)I",
             "1", kZero);
      break;
  }
  return s;
}

std::vector<SmaliStub> emit_smali_stubs(const ModificationPlan& plan) {
  plan.validate();
  std::vector<SmaliStub> stubs;
  auto make = [&](ComponentKind kind, std::string class_name) {
    SmaliStub stub;
    std::string rel = class_name;
    std::replace(rel.begin(), rel.end(), '.', '/');
    stub.relative_path = fs::path(rel + ".smali");
    stub.contents = render_smali_stub(kind, class_name);
    stub.class_name = std::move(class_name);
    stub.component_kind = kind;
    stubs.push_back(std::move(stub));
  };
  bool needs_carrier = false;
  for (const auto& def : plan.additions) {
    if (auto kind = component_kind_of(def.kind)) {
      make(*kind, stub_class_name(plan, def));
    } else if (is_intent_kind(def.kind)) {
      needs_carrier = true;
    }
  }
  if (needs_carrier) make(ComponentKind::Receiver, carrier_class_name(plan));
  return stubs;
}

std::string splice_manifest(std::string_view original_xml, const ManifestModel& before,
                            const ManifestModel& after) {
  auto layout = scan_manifest_layout(original_xml);
  if (after.permissions.size() < before.permissions.size() ||
      after.components.size() < before.components.size() ||
      layout.components.size() != before.components.size()) {
    throw Error(Errc::BadParams, "manifest edit is not append-only");
  }

  std::vector<Edit> edits;
  for (std::size_t i = 0; i < before.components.size(); ++i) {
    const auto& old_c = before.components[i];
    const auto& new_c = after.components[i];
    if (new_c.intent_filters.size() < old_c.intent_filters.size()) {
      throw Error(Errc::BadParams, "manifest edit removes an intent filter");
    }
    std::vector<std::string> lines;
    for (auto f = old_c.intent_filters.size(); f < new_c.intent_filters.size(); ++f) {
      auto rendered = render_filter(new_c.intent_filters[f]);
      lines.insert(lines.end(), rendered.begin(), rendered.end());
    }
    if (!lines.empty()) {
      edits.push_back(append_children(original_xml, layout.components[i],
                                      element_name(old_c.kind), lines));
    }
  }

  std::vector<std::string> new_components;
  for (auto i = before.components.size(); i < after.components.size(); ++i) {
    auto rendered = render_component(after.components[i]);
    new_components.insert(new_components.end(), rendered.begin(), rendered.end());
  }

  std::vector<std::string> manifest_children;
  for (auto i = before.permissions.size(); i < after.permissions.size(); ++i) {
    manifest_children.push_back("<uses-permission" + attr("android:name", after.permissions[i]) + "/>");
  }
  if (!new_components.empty()) {
    if (layout.has_application) {
      ElementSpan app{layout.application_start_end, layout.application_self_closing,
                      layout.application_close};
      edits.push_back(append_children(original_xml, app, "application", new_components));
    } else {
      manifest_children.emplace_back("<application>");
      for (const auto& l : new_components) manifest_children.push_back(std::string(kIndentUnit) + l);
      manifest_children.emplace_back("</application>");
    }
  }
  if (!manifest_children.empty()) {
    ElementSpan root{layout.manifest_start_end, layout.manifest_self_closing, layout.manifest_close};
    edits.push_back(append_children(original_xml, root, "manifest", manifest_children));
  }
  return apply_edits(original_xml, std::move(edits));
}

DecodedApk apply_plan(const DecodedApk& apk, const ModificationPlan& plan) {
  if (apk.source_apk_hash != plan.apk_hash) {
    throw Error(Errc::HashMismatch, "plan is for " + plan.apk_hash.str() + ", APK is " +
                                        apk.source_apk_hash.str());
  }
  plan.validate();
  auto manifest_path = apk.root_path / kManifestFile;
  auto original_xml = read_file(manifest_path);
  auto current = parse_decoded_manifest(original_xml);
  auto edited = apply_manifest_edits(current, plan);
  if (edited == current) return load_decoded_apk(apk.root_path, apk.source_apk_hash);

  std::set<std::string> new_classes;
  for (auto i = current.components.size(); i < edited.components.size(); ++i) {
    new_classes.insert(edited.components[i].class_name);
  }
  auto smali_root = apk.smali_roots.empty() ? apk.root_path / "smali" : apk.smali_roots.front();

  std::vector<std::pair<fs::path, std::string>> writes;
  for (auto& stub : emit_smali_stubs(plan)) {
    if (!new_classes.contains(stub.class_name)) continue;
    auto path = smali_root / stub.relative_path;
    std::error_code ec;
    if (fs::exists(path, ec)) {
      if (read_file(path) == stub.contents) continue;
      throw Error(Errc::IoError, path.string() + " already exists with different contents");
    }
    writes.emplace_back(std::move(path), std::move(stub.contents));
  }

  auto spliced = splice_manifest(original_xml, current, edited);
  if (parse_decoded_manifest(spliced) != edited) {
    throw Error(Errc::IoError, "spliced manifest does not reparse to the edited model");
  }
  for (const auto& [path, contents] : writes) write_file(path, contents);
  write_file(manifest_path, spliced);
  return load_decoded_apk(apk.root_path, apk.source_apk_hash);
}

}  // namespace gangmam
