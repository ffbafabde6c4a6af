#include "gangmam/config.hpp"

#include <set>

#include "gangmam/error.hpp"
#include "gangmam/hashing.hpp"
#include "gangmam/mam_engine.hpp"
#include "json.hpp"

namespace gangmam {

namespace fs = std::filesystem;
using nlohmann::json;

void Config::validate() const {
  if (version != kConfigVersion) throw Error(Errc::BadConfig, "config version must be 1");
  if (event_count <= 0) throw Error(Errc::BadConfig, "event_count must be > 0");
  if (pass_threshold < 0) throw Error(Errc::BadConfig, "pass_threshold must be >= 0");
  if (timeout.count() <= 0) throw Error(Errc::BadConfig, "timeout_s must be > 0");
  if (workers == 0) throw Error(Errc::BadConfig, "workers must be >= 1");
  if (output_dir.empty()) throw Error(Errc::BadConfig, "output_dir is empty");
  if (mode != ExecutionMode::Kind::Live && transcript.empty()) {
    throw Error(Errc::BadConfig, "replay and record modes need a transcript path");
  }
  if (!is_dotted_identifier(stub_package)) {
    throw Error(Errc::BadConfig, "stub_package is not a dotted identifier: " + stub_package);
  }
}

ExecutionMode Config::execution_mode() const { return {mode, transcript}; }

fs::path Config::effective_catalog_path() const {
  if (!catalog_path.empty()) return catalog_path;
  if (model_path.empty()) return {};
  return fs::path(model_path.string() + ".catalog.csv");
}

fs::path Config::effective_keystore_path() const {
  if (!keystore.path.empty()) return keystore.path;
  return output_dir / "keystore" / "gangmam.keystore";
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : (base / path).lexically_normal();
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [k, v] : obj.items()) {
    if (!known.count(k)) throw Error(Errc::BadConfig, "unknown config key '" + where + k + "'");
  }
}

}  // namespace

Config config_from_json(std::string_view text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw Error(Errc::BadConfig, "config must be a JSON object");
  reject_unknown(j,
                 {"version", "input_dir", "output_dir", "mode", "transcript", "emulator",
                  "model_path", "catalog_path", "seed", "monkey_seed", "event_count",
                  "pass_threshold", "timeout_s", "workers", "stub_package", "keystore", "tools"},
                 "");
  Config c;
  try {
    c.version = j.value("version", 0);
    if (c.version != kConfigVersion) {
      throw Error(Errc::VersionUnsupported,
                  "config version " + std::to_string(c.version) + " is not supported (expected 1)");
    }
    if (j.contains("input_dir")) c.input_dir = resolve(base_dir, j["input_dir"].get<std::string>());
    if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j["output_dir"].get<std::string>());
    if (j.contains("mode")) c.mode = mode_kind_from_string(j["mode"].get<std::string>());
    c.transcript = resolve(base_dir, j.value("transcript", ""));
    c.emulator = j.value("emulator", "");
    c.model_path = resolve(base_dir, j.value("model_path", ""));
    c.catalog_path = resolve(base_dir, j.value("catalog_path", ""));
    c.seed = j.value("seed", std::uint64_t{0});
    c.monkey_seed = j.value("monkey_seed", std::uint64_t{0});
    c.event_count = j.value("event_count", 500);
    c.pass_threshold = j.value("pass_threshold", kDefaultPassThreshold);
    c.timeout = std::chrono::seconds(j.value("timeout_s", std::int64_t{300}));
    c.workers = j.value("workers", 1u);
    c.stub_package = j.value("stub_package", c.stub_package);
    if (j.contains("keystore")) {
      const auto& k = j["keystore"];
      reject_unknown(k, {"path", "alias", "password", "dname"}, "keystore.");
      c.keystore.path = resolve(base_dir, k.value("path", ""));
      c.keystore.alias = k.value("alias", c.keystore.alias);
      c.keystore.password = k.value("password", c.keystore.password);
      c.keystore.dname = k.value("dname", c.keystore.dname);
    }
    if (j.contains("tools")) {
      const auto& t = j["tools"];
      reject_unknown(t, {"apktool", "keytool", "jarsigner", "adb"}, "tools.");
      c.tools.apktool = t.value("apktool", c.tools.apktool);
      c.tools.keytool = t.value("keytool", c.tools.keytool);
      c.tools.jarsigner = t.value("jarsigner", c.tools.jarsigner);
      c.tools.adb = t.value("adb", c.tools.adb);
    }
  } catch (const json::exception& e) {
    throw Error(Errc::BadConfig, std::string("config: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::BadParams) throw Error(Errc::BadConfig, e.what());
    throw;
  }
  c.validate();
  return c;
}

std::string config_to_json(const Config& c) {
  json j = {
      {"version", c.version},
      {"input_dir", c.input_dir.string()},
      {"output_dir", c.output_dir.string()},
      {"mode", std::string(to_string(c.mode))},
      {"transcript", c.transcript.string()},
      {"emulator", c.emulator},
      {"model_path", c.model_path.string()},
      {"catalog_path", c.catalog_path.string()},
      {"seed", c.seed},
      {"monkey_seed", c.monkey_seed},
      {"event_count", c.event_count},
      {"pass_threshold", c.pass_threshold},
      {"timeout_s", c.timeout.count()},
      {"workers", c.workers},
      {"stub_package", c.stub_package},
      {"keystore",
       {{"path", c.keystore.path.string()},
        {"alias", c.keystore.alias},
        {"password", c.keystore.password},
        {"dname", c.keystore.dname}}},
      {"tools",
       {{"apktool", c.tools.apktool},
        {"keytool", c.tools.keytool},
        {"jarsigner", c.tools.jarsigner},
        {"adb", c.tools.adb}}},
  };
  return j.dump(2) + "\n";
}

Config load_config(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw Error(Errc::IoError, "no such config file: " + path.string());
  return config_from_json(read_file(path), path.parent_path());
}

}  // namespace gangmam
