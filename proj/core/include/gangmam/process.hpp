#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace gangmam {

enum class Tool { Decoder, Builder, KeyGen, Signer, DeviceBridge };

std::string_view tool_name(Tool tool) noexcept;

inline constexpr std::chrono::seconds kDefaultToolTimeout{300};

struct ToolInvocation {
  Tool tool = Tool::Decoder;
  std::vector<std::string> argv;
  std::filesystem::path workdir;  // empty: inherit
  std::chrono::seconds timeout = kDefaultToolTimeout;
  std::string stdin_data;
  /// Files or directories the tool produces; captured when recording, recreated on replay.
  std::vector<std::filesystem::path> artifacts;

  /// Throws BadParams: argv empty or timeout not positive.
  void validate() const;
};

struct ToolResult {
  int exit_code = 0;
  std::string stdout_data;
  std::string stderr_data;
  std::chrono::milliseconds duration{0};
  bool timed_out = false;

  friend bool operator==(const ToolResult&, const ToolResult&) = default;
};

/// Starts external processes. Tests substitute spies and fakes.
class Launcher {
 public:
  virtual ~Launcher() = default;
  virtual ToolResult launch(const ToolInvocation& invocation) = 0;
};

/// fork/exec with captured stdout/stderr and a kill-on-timeout deadline.
/// A missing executable yields exit code 127 and a message on stderr.
class PosixLauncher : public Launcher {
 public:
  ToolResult launch(const ToolInvocation& invocation) override;
};

/// True if `program` resolves to an executable via PATH (or is a path to one).
bool executable_on_path(std::string_view program);

}  // namespace gangmam
