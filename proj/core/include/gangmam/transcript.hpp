#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gangmam/process.hpp"

namespace gangmam {

/// Maps machine-specific roots to `${NAME}` placeholders so transcript keys and recorded
/// artifact paths are portable.
class PathAliases {
 public:
  void add(std::string name, const std::filesystem::path& root);

  /// Rewrites a leading registered root (longest match wins) to `${NAME}`.
  std::string normalize(std::string_view arg) const;
  /// Inverse of normalize. Throws BadParams on an unknown placeholder.
  std::string expand(std::string_view arg) const;
  /// Replaces every occurrence of a registered root anywhere in `text`.
  std::string scrub(std::string_view text) const;

 private:
  std::vector<std::pair<std::string, std::string>> roots_;  // (name, root), longest root first
};

/// Content address of an invocation: SHA-256 over tool, normalized argv and stdin.
std::string invocation_key(const ToolInvocation& invocation, const PathAliases& aliases);

/// A file or directory tree a tool produced.
struct RecordedArtifact {
  std::string path;  // normalized
  bool is_directory = false;
  std::vector<std::pair<std::string, std::string>> files;  // (relative path, bytes); "" for a file

  friend bool operator==(const RecordedArtifact&, const RecordedArtifact&) = default;
};

struct TranscriptEntry {
  std::string key;
  std::string tool;
  std::vector<std::string> argv;  // normalized; informational
  ToolResult result;
  std::vector<RecordedArtifact> outputs;

  friend bool operator==(const TranscriptEntry&, const TranscriptEntry&) = default;
};

std::string to_json_line(const TranscriptEntry& entry);
/// Throws ParseError.
TranscriptEntry from_json_line(std::string_view line);

RecordedArtifact capture_artifact(const std::filesystem::path& path, const PathAliases& aliases);
void materialize_artifact(const RecordedArtifact& artifact, const PathAliases& aliases);

/// JSON-lines store of tool results. Entries sharing a key are served in recorded order.
class Transcript {
 public:
  Transcript() = default;

  /// Throws TranscriptMiss if the file does not exist, ParseError on bad lines.
  static Transcript load(const std::filesystem::path& path);

  /// In-memory transcript that appends every recorded entry to `path`.
  static Transcript open_for_append(const std::filesystem::path& path);

  void append(TranscriptEntry entry);
  std::optional<TranscriptEntry> next(const std::string& key);

  std::size_t size() const;

 private:
  std::filesystem::path sink_;
  std::unique_ptr<std::mutex> mutex_ = std::make_unique<std::mutex>();
  std::vector<TranscriptEntry> entries_;
  std::map<std::string, std::vector<std::size_t>> by_key_;
  std::map<std::string, std::size_t> cursor_;
};

}  // namespace gangmam
