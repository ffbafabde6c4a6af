#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>

#include "gangmam/external_tools.hpp"
#include "gangmam/mam_engine.hpp"
#include "gangmam/validation.hpp"

namespace gangmam {

inline constexpr int kConfigVersion = 1;
inline constexpr const char* kConfigEnvVar = "GANGMAM_CONFIG";

/// Everything beyond the command-line flags. Relative paths in a config file are resolved
/// against the file's directory.
struct Config {
  int version = kConfigVersion;
  std::filesystem::path input_dir = "input";
  std::filesystem::path output_dir = "output";
  ExecutionMode::Kind mode = ExecutionMode::Kind::Live;
  std::filesystem::path transcript;
  std::string emulator;
  std::filesystem::path model_path;
  std::filesystem::path catalog_path;  // empty: `<model_path>.catalog.csv`
  std::uint64_t seed = 0;              // GANG noise
  std::uint64_t monkey_seed = 0;
  int event_count = 500;
  int pass_threshold = kDefaultPassThreshold;
  std::chrono::seconds timeout = kDefaultToolTimeout;
  unsigned workers = 1;
  std::string stub_package{kDefaultStubPackage};
  KeystoreConfig keystore;  // empty path: `<output_dir>/keystore/gangmam.keystore`
  ToolCommands tools;

  /// Throws BadConfig.
  void validate() const;

  ExecutionMode execution_mode() const;
  std::filesystem::path effective_catalog_path() const;
  std::filesystem::path effective_keystore_path() const;
};

/// Throws BadConfig (unknown key, wrong type), VersionUnsupported, ParseError.
Config config_from_json(std::string_view text, const std::filesystem::path& base_dir);
std::string config_to_json(const Config& config);

/// Throws IoError plus config_from_json's errors.
Config load_config(const std::filesystem::path& path);

}  // namespace gangmam
