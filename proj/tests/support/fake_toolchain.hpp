#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "gangmam/process.hpp"

namespace gangmam::test {

/// Bytes of the placeholder APKs the fake builder and the fixture inputs use.
std::string fake_apk(const std::string& stem, const std::string& state);

/// Stands in for apktool, keytool, jarsigner and adb. Decoding copies
/// `<apps_dir>/<apk stem>/`; device logs come from `<logs_dir>/<stem>.{before,after}.log`,
/// picked by whether the installed APK is an original or a rebuilt one.
class FakeToolchain : public Launcher {
 public:
  struct Options {
    std::filesystem::path apps_dir;
    std::filesystem::path logs_dir;
    std::string avd = "Nexus_4a";
    std::string serial = "emulator-5554";
  };

  explicit FakeToolchain(Options options);

  ToolResult launch(const ToolInvocation& invocation) override;

  /// Knobs for failure paths.
  std::set<std::string> fail_build;    // decoded dir names whose build exits 1
  std::set<std::string> fail_install;  // APK stems whose install reports Failure
  bool fail_monkey = false;

  std::size_t count(Tool tool) const;
  std::vector<std::vector<std::string>> calls() const;

 private:
  ToolResult adb(const std::vector<std::string>& argv);

  Options options_;
  mutable std::mutex mutex_;
  std::vector<std::vector<std::string>> calls_;
  std::map<Tool, std::size_t> counts_;
  std::map<std::string, std::pair<std::string, std::string>> installed_;  // serial -> (stem, state)
};

/// Counts launches and refuses to run anything.
class SpyLauncher : public Launcher {
 public:
  ToolResult launch(const ToolInvocation&) override {
    ++launches;
    return {127, "", "spy launcher: no process may be started", {}, false};
  }
  std::atomic<std::size_t> launches{0};
};

}  // namespace gangmam::test
