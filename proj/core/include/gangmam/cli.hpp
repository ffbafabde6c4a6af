#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gangmam/config.hpp"
#include "gangmam/process.hpp"

namespace gangmam {

/// Long-form settings that override the config file.
struct Overrides {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> input;
  std::optional<std::filesystem::path> output;
  std::optional<std::filesystem::path> transcript;
  std::optional<std::filesystem::path> model;
  std::optional<std::string> mode;
  std::optional<unsigned> workers;
  std::optional<std::uint64_t> seed;
};

struct RunFull {
  std::optional<std::string> emulator;
};
struct RunNoGang {
  std::filesystem::path csv;
  std::optional<std::string> emulator;
};
struct Clean {};
struct Version {};
struct Help {};

/// Fits the black box and the GAN, then writes the model, `<model>.catalog.csv` and
/// `<model>.detector`.
struct Train {
  std::filesystem::path model_out;
  // synthetic corpus unless both CSVs are given
  std::optional<std::filesystem::path> malware_csv;
  std::optional<std::filesystem::path> benign_csv;
  std::optional<std::filesystem::path> catalog;  // feature names for the synthetic corpus
  std::size_t dims = 64;
  std::size_t samples = 500;  // per class
  std::uint64_t seed = 7;
  std::size_t epochs = 200;
  double learning_rate = 0.05;
  std::size_t detector_epochs = 300;
  double detector_learning_rate = 0.5;
};

using Action = std::variant<RunFull, RunNoGang, Clean, Version, Help, Train>;

struct Command {
  Action action;
  Overrides overrides;
};

/// `args` excludes the program name. Throws UnknownFlag, MissingValue, ConflictingFlags,
/// BadParams (malformed value).
Command parse_args(const std::vector<std::string>& args);

std::string help_text();

/// Config file (from --config or GANGMAM_CONFIG, else defaults) with overrides applied.
Config resolve_config(const Command& command);

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitEnvironment = 3;

/// Parses and executes. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            std::shared_ptr<Launcher> launcher = nullptr);

}  // namespace gangmam
