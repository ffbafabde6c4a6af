#include "gangmam/transcript.hpp"

#include <algorithm>
#include <fstream>
#include "json.hpp"

#include "gangmam/error.hpp"
#include "gangmam/hashing.hpp"

namespace gangmam {

namespace fs = std::filesystem;
using nlohmann::json;

void PathAliases::add(std::string name, const fs::path& root) {
  auto r = root.lexically_normal().string();
  while (r.size() > 1 && r.back() == '/') r.pop_back();
  roots_.emplace_back(std::move(name), std::move(r));
  std::stable_sort(roots_.begin(), roots_.end(),
                   [](const auto& a, const auto& b) { return a.second.size() > b.second.size(); });
}

std::string PathAliases::normalize(std::string_view arg) const {
  for (const auto& [name, root] : roots_) {
    if (arg.starts_with(root) && (arg.size() == root.size() || arg[root.size()] == '/')) {
      return "${" + name + "}" + std::string(arg.substr(root.size()));
    }
  }
  return std::string(arg);
}

std::string PathAliases::expand(std::string_view arg) const {
  if (!arg.starts_with("${")) return std::string(arg);
  auto close = arg.find('}');
  if (close == std::string_view::npos) return std::string(arg);
  auto name = arg.substr(2, close - 2);
  for (const auto& [n, root] : roots_) {
    if (n == name) return root + std::string(arg.substr(close + 1));
  }
  throw Error(Errc::BadParams, "no root registered for placeholder ${" + std::string(name) + "}");
}

std::string PathAliases::scrub(std::string_view text) const {
  std::string out(text);
  for (const auto& [name, root] : roots_) {
    if (root.size() < 2) continue;
    const std::string placeholder = "${" + name + "}";
    std::size_t pos = 0;
    while ((pos = out.find(root, pos)) != std::string::npos) {
      out.replace(pos, root.size(), placeholder);
      pos += placeholder.size();
    }
  }
  return out;
}

std::string invocation_key(const ToolInvocation& invocation, const PathAliases& aliases) {
  std::string material(tool_name(invocation.tool));
  for (const auto& a : invocation.argv) {
    material += '\x1f';
    material += aliases.normalize(a);
  }
  material += '\x1e';
  material += invocation.stdin_data;
  return sha256_hex(material);
}

std::string to_json_line(const TranscriptEntry& e) {
  json outputs = json::array();
  for (const auto& a : e.outputs) {
    json files = json::array();
    for (const auto& [rel, bytes] : a.files) {
      files.push_back({{"path", rel}, {"data_b64", base64_encode(bytes)}});
    }
    outputs.push_back({{"path", a.path}, {"kind", a.is_directory ? "dir" : "file"}, {"files", files}});
  }
  json j = {
      {"key", e.key},
      {"tool", e.tool},
      {"argv", e.argv},
      {"exit_code", e.result.exit_code},
      {"stdout_b64", base64_encode(e.result.stdout_data)},
      {"stderr_b64", base64_encode(e.result.stderr_data)},
      {"duration_ms", e.result.duration.count()},
      {"timed_out", e.result.timed_out},
      {"outputs", outputs},
  };
  return j.dump();
}

TranscriptEntry from_json_line(std::string_view line) {
  try {
    auto j = json::parse(line);
    TranscriptEntry e;
    e.key = j.at("key").get<std::string>();
    e.tool = j.value("tool", "");
    e.argv = j.value("argv", std::vector<std::string>{});
    e.result.exit_code = j.at("exit_code").get<int>();
    e.result.stdout_data = base64_decode(j.at("stdout_b64").get<std::string>());
    e.result.stderr_data = base64_decode(j.at("stderr_b64").get<std::string>());
    e.result.duration = std::chrono::milliseconds(j.value("duration_ms", std::int64_t{0}));
    e.result.timed_out = j.value("timed_out", false);
    for (const auto& o : j.value("outputs", json::array())) {
      RecordedArtifact a;
      a.path = o.at("path").get<std::string>();
      a.is_directory = o.at("kind").get<std::string>() == "dir";
      for (const auto& f : o.at("files")) {
        a.files.emplace_back(f.at("path").get<std::string>(),
                             base64_decode(f.at("data_b64").get<std::string>()));
      }
      e.outputs.push_back(std::move(a));
    }
    return e;
  } catch (const json::exception& ex) {
    throw Error(Errc::ParseError, std::string("transcript line: ") + ex.what());
  }
}

RecordedArtifact capture_artifact(const fs::path& path, const PathAliases& aliases) {
  RecordedArtifact a;
  a.path = aliases.normalize(path.string());
  std::error_code ec;
  if (fs::is_directory(path, ec)) {
    a.is_directory = true;
    std::vector<fs::path> files;
    for (auto it = fs::recursive_directory_iterator(path, ec); !ec && it != fs::end(it);
         it.increment(ec)) {
      if (it->is_regular_file()) files.push_back(it->path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      a.files.emplace_back(f.lexically_relative(path).generic_string(), read_file(f));
    }
  } else if (fs::is_regular_file(path, ec)) {
    a.files.emplace_back("", read_file(path));
  }
  return a;
}

void materialize_artifact(const RecordedArtifact& artifact, const PathAliases& aliases) {
  fs::path target = aliases.expand(artifact.path);
  if (artifact.is_directory) {
    // tools like `apktool d -f` replace their output directory wholesale
    fs::remove_all(target);
    fs::create_directories(target);
    for (const auto& [rel, bytes] : artifact.files) {
      auto p = (target / rel).lexically_normal();
      auto r = p.lexically_relative(target).string();
      if (r.empty() || r.starts_with("..")) {
        throw Error(Errc::IoError, "artifact path escapes its root: " + rel);
      }
      write_file(p, bytes);
    }
  } else {
    for (const auto& [rel, bytes] : artifact.files) write_file(target, bytes);
  }
}

Transcript Transcript::load(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Error(Errc::TranscriptMiss, "transcript " + path.string() + " does not exist");
  }
  Transcript t;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.append(from_json_line(line));
  }
  return t;
}

Transcript Transcript::open_for_append(const fs::path& path) {
  Transcript t;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream touch(path, std::ios::app);
  if (!touch) throw Error(Errc::IoError, "cannot open transcript " + path.string());
  t.sink_ = path;
  return t;
}

void Transcript::append(TranscriptEntry entry) {
  std::lock_guard lock(*mutex_);
  if (!sink_.empty()) {
    std::ofstream out(sink_, std::ios::app | std::ios::binary);
    out << to_json_line(entry) << '\n';
    if (!out) throw Error(Errc::IoError, "cannot append to transcript " + sink_.string());
  }
  by_key_[entry.key].push_back(entries_.size());
  entries_.push_back(std::move(entry));
}

std::optional<TranscriptEntry> Transcript::next(const std::string& key) {
  std::lock_guard lock(*mutex_);
  auto it = by_key_.find(key);
  if (it == by_key_.end()) return std::nullopt;
  auto& cursor = cursor_[key];
  if (cursor >= it->second.size()) return std::nullopt;
  return entries_[it->second[cursor++]];
}

std::size_t Transcript::size() const {
  std::lock_guard lock(*mutex_);
  return entries_.size();
}

}  // namespace gangmam
