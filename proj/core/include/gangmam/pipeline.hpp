#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gangmam/config.hpp"
#include "gangmam/process.hpp"
#include "gangmam/validation.hpp"

namespace gangmam {

struct RunRequest {
  Config config;
  /// Set for No-GANG runs: V' comes from this CSV instead of the generator.
  std::optional<std::filesystem::path> nogang_csv;
  /// Null means real processes.
  std::shared_ptr<Launcher> launcher;
};

struct ApkOutcome {
  std::string apk_name;
  std::string sha256;
  std::vector<std::string> added_features;
  std::optional<IntegrityRow> row;
  std::string failed_stage;  // empty on success
  std::string error;

  bool ok() const { return row.has_value(); }
};

struct PipelineResult {
  std::vector<ApkOutcome> outcomes;  // input order

  std::vector<IntegrityRow> rows() const;
};

/// Output layout, relative to the output directory.
namespace layout {
inline constexpr const char* kWork = "work";
inline constexpr const char* kApks = "apks";
inline constexpr const char* kLogs = "logs";
inline constexpr const char* kFeatures = "features";
inline constexpr const char* kReport = "report";
inline constexpr const char* kRunManifest = "run_manifest.json";
}  // namespace layout

/// `*.apk` files directly under `dir`, sorted by file name.
std::vector<std::filesystem::path> discover_inputs(const std::filesystem::path& dir);

/// Decode, extract, perturb (or look up), modify, rebuild, sign and validate every input.
/// Per-APK failures land in the result. Throws for batch-level problems: NoInputs,
/// EmulatorNotFound, OutputDirUnwritable, BadConfig, TranscriptMiss, ShapeMismatch, IoError.
PipelineResult run_pipeline(const RunRequest& request, std::ostream* progress = nullptr);

/// Empties `output_dir` without following symlinks out of it. Refuses (OutputDirUnwritable)
/// when the directory is `/`, the home or working directory, or contains any of `keep`.
void clean_output(const std::filesystem::path& output_dir,
                  const std::vector<std::filesystem::path>& keep = {});

}  // namespace gangmam
