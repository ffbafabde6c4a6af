#pragma once

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "gangmam/apk_io.hpp"
#include "gangmam/process.hpp"
#include "gangmam/transcript.hpp"
#include "gangmam/validation.hpp"

namespace gangmam {

struct ExecutionMode {
  enum class Kind { Live, Replay, Record };
  Kind kind = Kind::Live;
  std::filesystem::path transcript;

  static ExecutionMode live() { return {Kind::Live, {}}; }
  static ExecutionMode replay(std::filesystem::path p) { return {Kind::Replay, std::move(p)}; }
  static ExecutionMode record(std::filesystem::path p) { return {Kind::Record, std::move(p)}; }
};

std::string_view to_string(ExecutionMode::Kind kind) noexcept;
/// "live", "replay", "record". Throws BadParams.
ExecutionMode::Kind mode_kind_from_string(std::string_view s);

/// Executes invocations according to the mode. Never throws on a nonzero exit; a
/// timeout throws Timeout and a replay lookup miss throws TranscriptMiss.
class ToolRunner {
 public:
  /// Replay loads the transcript up front (TranscriptMiss if absent); Record truncates it.
  ToolRunner(ExecutionMode mode, PathAliases aliases,
             std::shared_ptr<Launcher> launcher = std::make_shared<PosixLauncher>());

  ToolResult run(const ToolInvocation& invocation);

  const ExecutionMode& mode() const { return mode_; }
  const PathAliases& aliases() const { return aliases_; }

 private:
  ExecutionMode mode_;
  PathAliases aliases_;
  std::shared_ptr<Launcher> launcher_;
  Transcript transcript_;
};

struct ToolCommands {
  std::string apktool = "apktool";
  std::string keytool = "keytool";
  std::string jarsigner = "jarsigner";
  std::string adb = "adb";
};

struct KeystoreConfig {
  std::filesystem::path path;
  std::string alias = "gangmam";
  std::string password = "gangmam";
  std::string dname = "CN=gangmam, OU=research, O=gangmam, C=US";
};

/// Decoder, builder and signer clients.
class ApkToolchain {
 public:
  ApkToolchain(ToolRunner& runner, ToolCommands commands,
               std::chrono::seconds timeout = kDefaultToolTimeout);

  /// `apktool d <apk> -o <dir> -f`, then parses the tree. The source hash is taken from
  /// the APK bytes. Throws ToolFailure, TranscriptMiss, Timeout, IoError.
  DecodedApk decode_apk(const std::filesystem::path& apk, const std::filesystem::path& out_dir);

  /// `apktool b`, then `jarsigner`. Generates an RSA-2048 key first if the keystore file
  /// does not exist. Throws ToolFailure, KeystoreError, Timeout.
  std::filesystem::path build_and_sign(const std::filesystem::path& decoded_dir,
                                       const std::filesystem::path& out_apk,
                                       const KeystoreConfig& keystore);

  /// Creates the key if missing. Serialized across threads.
  void ensure_keystore(const KeystoreConfig& keystore);

 private:
  ToolRunner& runner_;
  ToolCommands commands_;
  std::chrono::seconds timeout_;
  std::mutex keystore_mutex_;
};

struct SessionParams {
  std::string package;
  std::uint64_t monkey_seed = 0;
  int event_count = 500;
};

/// adb client. Invocations for one device never overlap.
class DeviceBridge {
 public:
  DeviceBridge(ToolRunner& runner, ToolCommands commands,
               std::chrono::seconds timeout = kDefaultToolTimeout);

  /// Serial of the device whose AVD name (or serial) equals `emulator`. Cached.
  /// Throws EmulatorNotFound.
  std::string resolve(const std::string& emulator);

  /// install, launch, monkey, log capture, uninstall, cleanup. Phases after a failure
  /// are skipped, cleanup always runs. Throws EmulatorNotFound before any phase,
  /// InstallFailed, ToolFailure, Timeout.
  ExecutionLog device_session(const std::filesystem::path& apk, const std::string& emulator,
                              const SessionParams& params);

 private:
  ToolResult adb(const std::string& serial, std::vector<std::string> args);
  std::mutex& device_mutex(const std::string& serial);

  ToolRunner& runner_;
  ToolCommands commands_;
  std::chrono::seconds timeout_;
  std::mutex mutex_;
  std::map<std::string, std::string> resolved_;
  std::map<std::string, std::unique_ptr<std::mutex>> device_mutexes_;
};

/// Hands out turns in ticket order so device sessions from a worker pool happen in a
/// fixed sequence. A ticket is consumed by release() or skip().
class DeviceQueue {
 public:
  void acquire(std::uint64_t ticket);
  void release(std::uint64_t ticket);
  void skip(std::uint64_t ticket);

  /// Owns a set of tickets; any not released by the time it dies are skipped.
  class Tickets {
   public:
    Tickets(DeviceQueue& queue, std::vector<std::uint64_t> tickets);
    Tickets(const Tickets&) = delete;
    Tickets& operator=(const Tickets&) = delete;
    ~Tickets();

    /// Runs `fn` holding the next unused ticket's turn.
    template <typename Fn>
    auto with_next(Fn&& fn) {
      auto t = take();
      queue_.acquire(t);
      struct Release {
        DeviceQueue& q;
        std::uint64_t t;
        ~Release() { q.release(t); }
      } guard{queue_, t};
      return fn();
    }

   private:
    std::uint64_t take();

    DeviceQueue& queue_;
    std::vector<std::uint64_t> pending_;
  };

 private:
  void finish_locked(std::uint64_t ticket);

  std::mutex mutex_;
  std::condition_variable cv_;
  std::uint64_t next_ = 0;
  std::set<std::uint64_t> finished_;
};

}  // namespace gangmam
