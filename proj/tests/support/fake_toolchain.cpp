#include "fake_toolchain.hpp"

#include "gangmam/hashing.hpp"
#include "test_support.hpp"

namespace gangmam::test {

std::string fake_apk(const std::string& stem, const std::string& state) {
  return "FAKEAPK\nsource=" + stem + "\nstate=" + state + "\n";
}

FakeToolchain::FakeToolchain(Options options) : options_(std::move(options)) {}

std::size_t FakeToolchain::count(Tool tool) const {
  std::lock_guard lock(mutex_);
  auto it = counts_.find(tool);
  return it == counts_.end() ? 0 : it->second;
}

std::vector<std::vector<std::string>> FakeToolchain::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

namespace {

ToolResult ok(std::string out = {}) { return {0, std::move(out), "", {}, false}; }
ToolResult fail(int code, std::string err) { return {code, "", std::move(err), {}, false}; }

std::string field(const std::string& apk_bytes, const std::string& key) {
  auto p = apk_bytes.find(key + "=");
  if (p == std::string::npos) return {};
  p += key.size() + 1;
  return apk_bytes.substr(p, apk_bytes.find('\n', p) - p);
}

}  // namespace

ToolResult FakeToolchain::launch(const ToolInvocation& inv) {
  {
    std::lock_guard lock(mutex_);
    calls_.push_back(inv.argv);
    ++counts_[inv.tool];
  }
  const auto& a = inv.argv;
  switch (inv.tool) {
    case Tool::Decoder: {
      // apktool d <apk> -o <dir> -f
      fs::path apk = a.at(2), dir = a.at(4);
      auto src = options_.apps_dir / apk.stem();
      if (!fs::exists(apk) || !fs::is_directory(src)) {
        return fail(1, "Exception in thread \"main\" brut.androlib.AndrolibException: cannot decode " +
                           apk.filename().string() + "\n");
      }
      fs::remove_all(dir);
      copy_tree(src, dir);
      return ok("I: Using Apktool 2.5.0 on " + apk.filename().string() +
                "\nI: Loading resource table...\nI: Decoding AndroidManifest.xml with resources...\n"
                "I: Baksmaling classes.dex...\nI: Copying assets and libs...\n");
    }
    case Tool::Builder: {
      // apktool b <dir> -o <apk>
      fs::path dir = a.at(2), apk = a.at(4);
      auto stem = dir.filename().string();
      if (fail_build.count(stem)) {
        return fail(1, "brut.androlib.AndrolibException: brut.common.BrutException: could not exec aapt\n");
      }
      write_file(apk, fake_apk(stem, "built"));
      return ok("I: Using Apktool 2.5.0\nI: Checking whether sources has changed...\n"
                "I: Smaling smali folder into classes.dex...\nI: Building apk file...\n");
    }
    case Tool::KeyGen: {
      fs::path ks;
      for (std::size_t i = 0; i + 1 < a.size(); ++i) {
        if (a[i] == "-keystore") ks = a[i + 1];
      }
      write_file(ks, "FAKE-KEYSTORE\n");
      return ok();
    }
    case Tool::Signer: {
      // jarsigner -keystore ks -storepass pw apk alias
      fs::path apk = a.at(5);
      if (!fs::exists(apk)) return fail(1, "jarsigner: unable to open jar file\n");
      write_file(apk, read_file(apk) + "signed-by=" + a.at(6) + "\n");
      return ok("jar signed.\n");
    }
    case Tool::DeviceBridge:
      return adb(a);
  }
  return fail(127, "unknown tool\n");
}

ToolResult FakeToolchain::adb(const std::vector<std::string>& a) {
  if (a.size() == 2 && a[1] == "devices") {
    return ok("List of devices attached\n" + options_.serial + "\tdevice\n\n");
  }
  if (a.size() < 4 || a[1] != "-s") return fail(1, "adb: usage\n");
  const auto& serial = a[2];
  if (serial != options_.serial) return fail(1, "adb: device '" + serial + "' not found\n");
  std::vector<std::string> rest(a.begin() + 3, a.end());
  if (rest == std::vector<std::string>{"emu", "avd", "name"}) return ok(options_.avd + "\nOK\n");
  if (rest[0] == "install") {
    fs::path apk = rest.back();
    if (!fs::exists(apk)) return fail(1, "adb: failed to stat " + apk.string() + "\n");
    auto bytes = read_file(apk);
    auto stem = field(bytes, "source");
    if (fail_install.count(stem)) {
      return ok("Performing Streamed Install\nFailure [INSTALL_PARSE_FAILED_NO_CERTIFICATES]\n");
    }
    std::lock_guard lock(mutex_);
    installed_[serial] = {stem, field(bytes, "state")};
    return ok("Performing Streamed Install\nSuccess\n");
  }
  if (rest[0] == "shell" && rest.size() > 1 && rest[1] == "monkey") {
    if (fail_monkey) return fail(252, "** Monkey aborted due to error.\n");
    return ok("Events injected: " + rest.back() + "\n");
  }
  if (rest[0] == "logcat" && rest.size() == 2 && rest[1] == "-d") {
    std::pair<std::string, std::string> current;
    {
      std::lock_guard lock(mutex_);
      current = installed_[serial];
    }
    auto which = current.second == "original" ? "before" : "after";
    auto file = options_.logs_dir / (current.first + "." + which + ".log");
    return ok(fs::exists(file) ? read_file(file) : std::string());
  }
  if (rest[0] == "logcat" && rest.size() == 2 && rest[1] == "-c") return ok();
  if (rest[0] == "uninstall") return ok("Success\n");
  return fail(1, "adb: unknown command\n");
}

}  // namespace gangmam::test
