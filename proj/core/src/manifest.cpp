#include "gangmam/manifest.hpp"

#include <expat.h>

#include <cctype>
#include <cstring>
#include <memory>

#include "gangmam/error.hpp"

namespace gangmam {

namespace {

struct ParserDeleter {
  void operator()(XML_Parser p) const { XML_ParserFree(p); }
};

const char* find_attr(const XML_Char** attrs, const char* name) {
  for (std::size_t i = 0; attrs[i] != nullptr; i += 2) {
    if (std::strcmp(attrs[i], name) == 0) return attrs[i + 1];
  }
  return nullptr;
}

std::optional<ComponentKind> component_kind(std::string_view element) {
  if (element == "activity") return ComponentKind::Activity;
  if (element == "service") return ComponentKind::Service;
  if (element == "receiver") return ComponentKind::Receiver;
  if (element == "provider") return ComponentKind::Provider;
  return std::nullopt;
}

struct ParseState {
  XML_Parser parser = nullptr;
  std::string_view text;
  ManifestModel model;
  ManifestLayout layout;
  std::vector<std::string> stack;
  std::optional<Error> error;
  bool in_component = false;
  bool in_filter = false;

  void fail(Error e) {
    if (!error) error = std::move(e);
    XML_StopParser(parser, XML_FALSE);
  }

  bool start_tag_self_closes() const {
    auto index = static_cast<std::size_t>(XML_GetCurrentByteIndex(parser));
    auto count = static_cast<std::size_t>(XML_GetCurrentByteCount(parser));
    if (count < 2 || index + count > text.size()) return false;
    return text.substr(index + count - 2, 2) == "/>";
  }

  void on_start(const XML_Char* name, const XML_Char** attrs) {
    if (error) return;
    std::string_view el(name);
    auto index = static_cast<std::size_t>(XML_GetCurrentByteIndex(parser));
    auto count = static_cast<std::size_t>(XML_GetCurrentByteCount(parser));
    auto depth = stack.size();

    if (depth == 0) {
      if (el != "manifest") {
        fail(Error(Errc::UnknownRootElement, "root element is <" + std::string(el) + ">"));
        return;
      }
      const char* pkg = find_attr(attrs, "package");
      if (pkg == nullptr || *pkg == '\0') {
        fail(Error(Errc::MissingPackageAttribute, "<manifest> has no package attribute"));
        return;
      }
      if (!is_dotted_identifier(pkg)) {
        fail(Error(Errc::MissingPackageAttribute,
                   "package '" + std::string(pkg) + "' is not a dotted identifier"));
        return;
      }
      model.package_name = pkg;
      layout.manifest_start_end = index + count;
      layout.manifest_self_closing = start_tag_self_closes();
      if (layout.manifest_self_closing) layout.manifest_close = index + count - 2;
    } else if (depth == 1 && stack[0] == "manifest") {
      if (el == "uses-permission") {
        if (const char* n = find_attr(attrs, "android:name"); n != nullptr && *n != '\0') {
          model.permissions.emplace_back(n);
        }
      } else if (el == "application" && !layout.has_application) {
        layout.has_application = true;
        layout.application_start_end = index + count;
        layout.application_self_closing = start_tag_self_closes();
        if (layout.application_self_closing) layout.application_close = index + count - 2;
      }
    } else if (depth == 2 && stack[1] == "application") {
      auto kind = component_kind(el);
      const char* n = find_attr(attrs, "android:name");
      if (kind && n != nullptr && *n != '\0') {
        Component c;
        c.kind = *kind;
        c.class_name = resolve_class_name(model.package_name, n);
        if (const char* e = find_attr(attrs, "android:exported")) {
          c.exported = std::string_view(e) == "true";
        }
        if (const char* a = find_attr(attrs, "android:authorities")) c.authorities = a;
        model.components.push_back(std::move(c));
        ElementSpan span;
        span.start_end = index + count;
        span.self_closing = start_tag_self_closes();
        if (span.self_closing) span.close = index + count - 2;
        layout.components.push_back(span);
        in_component = true;
      }
    } else if (depth == 3 && in_component && el == "intent-filter") {
      model.components.back().intent_filters.emplace_back();
      in_filter = true;
    } else if (depth == 4 && in_filter && (el == "action" || el == "category")) {
      if (const char* n = find_attr(attrs, "android:name"); n != nullptr && *n != '\0') {
        auto& filter = model.components.back().intent_filters.back();
        (el == "action" ? filter.actions : filter.categories).emplace_back(n);
      }
    }
    stack.emplace_back(el);
  }

  void on_end(const XML_Char*) {
    if (error || stack.empty()) return;
    auto depth = stack.size();
    auto index = static_cast<std::size_t>(XML_GetCurrentByteIndex(parser));
    if (depth == 1 && !layout.manifest_self_closing) {
      layout.manifest_close = index;
    } else if (depth == 2 && stack[1] == "application" && !layout.application_self_closing &&
               layout.application_close == 0) {
      layout.application_close = index;
    } else if (depth == 3) {
      if (in_component && !layout.components.back().self_closing) {
        layout.components.back().close = index;
      }
      in_component = false;
    } else if (depth == 4) {
      in_filter = false;
    }
    stack.pop_back();
  }
};

void XMLCALL start_handler(void* user, const XML_Char* name, const XML_Char** attrs) {
  static_cast<ParseState*>(user)->on_start(name, attrs);
}

void XMLCALL end_handler(void* user, const XML_Char* name) {
  static_cast<ParseState*>(user)->on_end(name);
}

ParseState run_parser(std::string_view xml_text) {
  std::unique_ptr<XML_ParserStruct, ParserDeleter> parser(XML_ParserCreate("UTF-8"));
  if (!parser) throw std::bad_alloc();
  ParseState state;
  state.parser = parser.get();
  state.text = xml_text;
  XML_SetUserData(parser.get(), &state);
  XML_SetElementHandler(parser.get(), start_handler, end_handler);

  auto status = XML_Parse(parser.get(), xml_text.data(), static_cast<int>(xml_text.size()),
                          XML_TRUE);
  if (state.error) throw *state.error;
  if (status != XML_STATUS_OK) {
    auto line = static_cast<std::size_t>(XML_GetCurrentLineNumber(parser.get()));
    auto col = static_cast<std::size_t>(XML_GetCurrentColumnNumber(parser.get())) + 1;
    throw ParseFailure(Errc::XmlSyntaxError, line, col,
                       XML_ErrorString(XML_GetErrorCode(parser.get())));
  }
  return state;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto ok_first = [](unsigned char c) { return std::isalpha(c) || c == '_' || c == '$'; };
  auto ok_rest = [](unsigned char c) { return std::isalnum(c) || c == '_' || c == '$'; };
  if (!ok_first(static_cast<unsigned char>(s.front()))) return false;
  for (char c : s.substr(1)) {
    if (!ok_rest(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

}  // namespace

std::string_view element_name(ComponentKind kind) noexcept {
  switch (kind) {
    case ComponentKind::Activity: return "activity";
    case ComponentKind::Service: return "service";
    case ComponentKind::Receiver: return "receiver";
    case ComponentKind::Provider: return "provider";
  }
  return "activity";
}

bool is_dotted_identifier(std::string_view name) noexcept {
  if (name.empty()) return false;
  std::size_t start = 0;
  for (;;) {
    auto dot = name.find('.', start);
    auto part = name.substr(start, dot == std::string_view::npos ? std::string_view::npos
                                                                 : dot - start);
    if (!is_identifier(part)) return false;
    if (dot == std::string_view::npos) return true;
    start = dot + 1;
  }
}

std::string resolve_class_name(std::string_view package_name, std::string_view name) {
  if (name.starts_with('.')) return std::string(package_name) + std::string(name);
  if (name.find('.') == std::string_view::npos) {
    return std::string(package_name) + "." + std::string(name);
  }
  return std::string(name);
}

ManifestModel parse_decoded_manifest(std::string_view xml_text) {
  return run_parser(xml_text).model;
}

ManifestLayout scan_manifest_layout(std::string_view xml_text) {
  return run_parser(xml_text).layout;
}

}  // namespace gangmam
