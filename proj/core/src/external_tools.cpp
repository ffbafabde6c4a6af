#include "gangmam/external_tools.hpp"

#include <algorithm>
#include <sstream>

#include "gangmam/error.hpp"
#include "gangmam/hashing.hpp"

namespace gangmam {

namespace fs = std::filesystem;

std::string_view to_string(ExecutionMode::Kind kind) noexcept {
  switch (kind) {
    case ExecutionMode::Kind::Live: return "live";
    case ExecutionMode::Kind::Replay: return "replay";
    case ExecutionMode::Kind::Record: return "record";
  }
  return "?";
}

ExecutionMode::Kind mode_kind_from_string(std::string_view s) {
  if (s == "live") return ExecutionMode::Kind::Live;
  if (s == "replay") return ExecutionMode::Kind::Replay;
  if (s == "record") return ExecutionMode::Kind::Record;
  throw Error(Errc::BadParams, "unknown mode '" + std::string(s) + "' (live, replay, record)");
}

ToolRunner::ToolRunner(ExecutionMode mode, PathAliases aliases, std::shared_ptr<Launcher> launcher)
    : mode_(std::move(mode)), aliases_(std::move(aliases)), launcher_(std::move(launcher)) {
  switch (mode_.kind) {
    case ExecutionMode::Kind::Replay:
      transcript_ = Transcript::load(mode_.transcript);
      break;
    case ExecutionMode::Kind::Record: {
      std::error_code ec;
      fs::remove(mode_.transcript, ec);
      transcript_ = Transcript::open_for_append(mode_.transcript);
      break;
    }
    case ExecutionMode::Kind::Live:
      break;
  }
}

ToolResult ToolRunner::run(const ToolInvocation& invocation) {
  invocation.validate();
  ToolResult result;
  if (mode_.kind == ExecutionMode::Kind::Replay) {
    auto key = invocation_key(invocation, aliases_);
    auto entry = transcript_.next(key);
    if (!entry) {
      std::string cmd;
      for (const auto& a : invocation.argv) cmd += (cmd.empty() ? "" : " ") + aliases_.normalize(a);
      throw Error(Errc::TranscriptMiss, "no recorded result for `" + cmd + "` (key " + key + ")");
    }
    for (const auto& artifact : entry->outputs) materialize_artifact(artifact, aliases_);
    result = std::move(entry->result);
  } else {
    result = launcher_->launch(invocation);
    if (mode_.kind == ExecutionMode::Kind::Record) {
      TranscriptEntry entry;
      entry.key = invocation_key(invocation, aliases_);
      entry.tool = std::string(tool_name(invocation.tool));
      for (const auto& a : invocation.argv) entry.argv.push_back(aliases_.normalize(a));
      entry.result = result;
      for (const auto& path : invocation.artifacts) {
        std::error_code ec;
        if (fs::exists(path, ec)) entry.outputs.push_back(capture_artifact(path, aliases_));
      }
      transcript_.append(std::move(entry));
    }
  }
  if (result.timed_out) {
    throw Error(Errc::Timeout, std::string(tool_name(invocation.tool)) + " timed out after " +
                                   std::to_string(invocation.timeout.count()) + " s");
  }
  return result;
}

namespace {

std::string excerpt(const std::string& s) {
  constexpr std::size_t kMax = 1024;
  return s.size() <= kMax ? s : s.substr(s.size() - kMax);
}

void check(const ToolResult& r, const ToolInvocation& inv) {
  if (r.exit_code == 0) return;
  std::string cmd;
  for (std::size_t i = 0; i < inv.argv.size() && i < 6; ++i) cmd += (i ? " " : "") + inv.argv[i];
  if (inv.argv.size() > 6) cmd += " ...";
  throw ToolFailure(r.exit_code, excerpt(r.stderr_data),
                    "`" + cmd + "` exited with " + std::to_string(r.exit_code));
}

}  // namespace

ApkToolchain::ApkToolchain(ToolRunner& runner, ToolCommands commands, std::chrono::seconds timeout)
    : runner_(runner), commands_(std::move(commands)), timeout_(timeout) {}

DecodedApk ApkToolchain::decode_apk(const fs::path& apk, const fs::path& out_dir) {
  std::error_code ec;
  if (!fs::is_regular_file(apk, ec)) throw Error(Errc::IoError, "no such APK: " + apk.string());
  Sha256Hex hash(sha256_file(apk));

  ToolInvocation inv;
  inv.tool = Tool::Decoder;
  inv.argv = {commands_.apktool, "d", apk.string(), "-o", out_dir.string(), "-f"};
  inv.timeout = timeout_;
  inv.artifacts = {out_dir};
  check(runner_.run(inv), inv);
  return load_decoded_apk(out_dir, hash);
}

void ApkToolchain::ensure_keystore(const KeystoreConfig& ks) {
  std::lock_guard lock(keystore_mutex_);
  std::error_code ec;
  if (fs::exists(ks.path, ec)) return;
  if (ks.path.empty()) throw Error(Errc::KeystoreError, "keystore path is not configured");
  if (ks.path.has_parent_path()) fs::create_directories(ks.path.parent_path(), ec);

  ToolInvocation inv;
  inv.tool = Tool::KeyGen;
  inv.argv = {commands_.keytool, "-genkeypair", "-keyalg", "RSA", "-keysize", "2048",
              "-validity", "10000", "-keystore", ks.path.string(), "-alias", ks.alias,
              "-storepass", ks.password, "-keypass", ks.password, "-dname", ks.dname,
              "-noprompt"};
  inv.timeout = timeout_;
  inv.artifacts = {ks.path};
  auto r = runner_.run(inv);
  if (r.exit_code != 0 || !fs::exists(ks.path, ec)) {
    throw Error(Errc::KeystoreError, "keytool exited with " + std::to_string(r.exit_code) + ": " +
                                         excerpt(r.stderr_data));
  }
}

fs::path ApkToolchain::build_and_sign(const fs::path& decoded_dir, const fs::path& out_apk,
                                      const KeystoreConfig& ks) {
  std::error_code ec;
  if (!fs::is_regular_file(decoded_dir / kManifestFile, ec)) {
    throw Error(Errc::IoError, "not a decoded APK directory: " + decoded_dir.string());
  }
  ensure_keystore(ks);
  if (out_apk.has_parent_path()) fs::create_directories(out_apk.parent_path(), ec);

  ToolInvocation build;
  build.tool = Tool::Builder;
  build.argv = {commands_.apktool, "b", decoded_dir.string(), "-o", out_apk.string()};
  build.timeout = timeout_;
  build.artifacts = {out_apk};
  check(runner_.run(build), build);

  ToolInvocation sign;
  sign.tool = Tool::Signer;
  sign.argv = {commands_.jarsigner, "-keystore", ks.path.string(), "-storepass", ks.password,
               out_apk.string(), ks.alias};
  sign.timeout = timeout_;
  sign.artifacts = {out_apk};
  check(runner_.run(sign), sign);

  if (!fs::is_regular_file(out_apk, ec)) {
    throw Error(Errc::IoError, "builder reported success but " + out_apk.string() + " is missing");
  }
  return out_apk;
}

DeviceBridge::DeviceBridge(ToolRunner& runner, ToolCommands commands, std::chrono::seconds timeout)
    : runner_(runner), commands_(std::move(commands)), timeout_(timeout) {}

ToolResult DeviceBridge::adb(const std::string& serial, std::vector<std::string> args) {
  ToolInvocation inv;
  inv.tool = Tool::DeviceBridge;
  inv.argv = {commands_.adb};
  if (!serial.empty()) {
    inv.argv.push_back("-s");
    inv.argv.push_back(serial);
  }
  inv.argv.insert(inv.argv.end(), args.begin(), args.end());
  inv.timeout = timeout_;
  return runner_.run(inv);
}

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::string DeviceBridge::resolve(const std::string& emulator) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = resolved_.find(emulator); it != resolved_.end()) return it->second;
  }
  if (emulator.empty()) throw Error(Errc::EmulatorNotFound, "no emulator name given");
  auto list = adb("", {"devices"});
  if (list.exit_code != 0) {
    throw Error(Errc::EmulatorNotFound, "`adb devices` failed: " + excerpt(list.stderr_data));
  }
  std::vector<std::string> serials;
  std::istringstream in(list.stdout_data);
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line.starts_with("List of devices") || line.starts_with("*")) continue;
    std::istringstream fields(line);
    std::string serial, state;
    fields >> serial >> state;
    if (state == "device") serials.push_back(serial);
  }
  std::string found;
  for (const auto& s : serials) {
    if (s == emulator) {
      found = s;
      break;
    }
  }
  if (found.empty()) {
    for (const auto& s : serials) {
      if (!s.starts_with("emulator-")) continue;
      auto r = adb(s, {"emu", "avd", "name"});
      if (r.exit_code != 0) continue;
      auto first = r.stdout_data.substr(0, r.stdout_data.find('\n'));
      if (trim(first) == emulator) {
        found = s;
        break;
      }
    }
  }
  if (found.empty()) {
    throw Error(Errc::EmulatorNotFound, "emulator '" + emulator + "' is not in the device list");
  }
  std::lock_guard lock(mutex_);
  resolved_[emulator] = found;
  return found;
}

std::mutex& DeviceBridge::device_mutex(const std::string& serial) {
  std::lock_guard lock(mutex_);
  auto& m = device_mutexes_[serial];
  if (!m) m = std::make_unique<std::mutex>();
  return *m;
}

ExecutionLog DeviceBridge::device_session(const fs::path& apk, const std::string& emulator,
                                          const SessionParams& params) {
  const auto serial = resolve(emulator);
  if (params.package.empty()) throw Error(Errc::BadParams, "session needs a package name");
  if (params.event_count <= 0) throw Error(Errc::BadParams, "monkey event count must be > 0");
  std::lock_guard device_lock(device_mutex(serial));

  ExecutionLog log{apk.filename().string(), {}};
  std::exception_ptr failure;
  bool installed = false;
  bool uninstalled = false;
  auto step = [&](std::vector<std::string> args) {
    ToolInvocation inv;
    inv.argv = {commands_.adb, "-s", serial};
    inv.argv.insert(inv.argv.end(), args.begin(), args.end());
    auto r = adb(serial, std::move(args));
    check(r, inv);
    return r;
  };
  try {
    step({"logcat", "-c"});
    auto inst = adb(serial, {"install", "-r", apk.string()});
    if (inst.exit_code != 0 || inst.stdout_data.find("Failure") != std::string::npos) {
      throw Error(Errc::InstallFailed, "install of " + apk.filename().string() + " failed: " +
                                           excerpt(trim(inst.stdout_data + "\n" + inst.stderr_data)));
    }
    installed = true;
    step({"shell", "monkey", "-p", params.package, "-c", "android.intent.category.LAUNCHER", "1"});
    step({"shell", "monkey", "-p", params.package, "-s", std::to_string(params.monkey_seed),
          std::to_string(params.event_count)});
    auto cap = step({"logcat", "-d"});
    log = log_from_text(apk.filename().string(), cap.stdout_data);
    step({"uninstall", params.package});
    uninstalled = true;
  } catch (...) {
    failure = std::current_exception();
  }

  // cleanup
  try {
    if (installed && !uninstalled) adb(serial, {"uninstall", params.package});
    step({"logcat", "-c"});
  } catch (...) {
    if (!failure) failure = std::current_exception();
  }
  if (failure) std::rethrow_exception(failure);
  return log;
}

void DeviceQueue::acquire(std::uint64_t ticket) {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return next_ == ticket; });
}

void DeviceQueue::release(std::uint64_t ticket) {
  {
    std::lock_guard lock(mutex_);
    finish_locked(ticket);
  }
  cv_.notify_all();
}

void DeviceQueue::skip(std::uint64_t ticket) { release(ticket); }

void DeviceQueue::finish_locked(std::uint64_t ticket) {
  finished_.insert(ticket);
  while (finished_.erase(next_) > 0) ++next_;
}

DeviceQueue::Tickets::Tickets(DeviceQueue& queue, std::vector<std::uint64_t> tickets)
    : queue_(queue), pending_(std::move(tickets)) {
  std::reverse(pending_.begin(), pending_.end());
}

DeviceQueue::Tickets::~Tickets() {
  for (auto t : pending_) queue_.skip(t);
}

std::uint64_t DeviceQueue::Tickets::take() {
  if (pending_.empty()) throw Error(Errc::BadParams, "no device tickets left");
  auto t = pending_.back();
  pending_.pop_back();
  return t;
}

}  // namespace gangmam
