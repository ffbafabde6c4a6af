#include "gangmam/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <set>
#include <thread>

#include "gangmam/error.hpp"
#include "gangmam/external_tools.hpp"
#include "gangmam/gang_engine.hpp"
#include "gangmam/hashing.hpp"
#include "gangmam/mam_engine.hpp"
#include "gangmam/rng.hpp"
#include "gangmam/version.hpp"
#include "json.hpp"

namespace gangmam {

namespace fs = std::filesystem;

std::vector<IntegrityRow> PipelineResult::rows() const {
  std::vector<IntegrityRow> out;
  for (const auto& o : outcomes) {
    if (o.row) out.push_back(*o.row);
  }
  return out;
}

std::vector<fs::path> discover_inputs(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(Errc::NoInputs, "input directory " + dir.string() + " does not exist");
  std::vector<fs::path> apks;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".apk") apks.push_back(e.path());
  }
  std::sort(apks.begin(), apks.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  if (apks.empty()) throw Error(Errc::NoInputs, "no .apk files in " + dir.string());
  return apks;
}

namespace {

fs::path absolute_normal(const fs::path& p) { return fs::absolute(p).lexically_normal(); }

bool is_within(const fs::path& inner, const fs::path& outer) {
  auto rel = inner.lexically_relative(outer);
  return !rel.empty() && *rel.begin() != "..";
}

void ensure_writable(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  const auto probe = dir / ".gangmam-probe";
  {
    std::ofstream out(probe);
    if (!out || !fs::is_directory(dir, ec)) {
      throw Error(Errc::OutputDirUnwritable, "cannot write to output directory " + dir.string());
    }
  }
  fs::remove(probe, ec);
}

template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
  };
  if (workers == 1) {
    body();
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
}

std::uint64_t hash_seed(const Sha256Hex& h) {
  return std::strtoull(h.str().substr(0, 16).c_str(), nullptr, 16);
}

struct StageError {
  std::string stage;
  std::string message;
};

FeatureCatalog load_catalog_file(const fs::path& path) {
  return csv_decode(read_file(path)).catalog;
}

}  // namespace

PipelineResult run_pipeline(const RunRequest& request, std::ostream* progress) {
  Config cfg = request.config;
  cfg.validate();
  cfg.input_dir = absolute_normal(cfg.input_dir);
  cfg.output_dir = absolute_normal(cfg.output_dir);
  cfg.keystore.path = absolute_normal(cfg.effective_keystore_path());
  const bool nogang = request.nogang_csv.has_value();

  if (cfg.emulator.empty()) {
    throw Error(Errc::EmulatorNotFound, "no emulator given (use -e or the config's emulator)");
  }
  const auto inputs = discover_inputs(cfg.input_dir);
  ensure_writable(cfg.output_dir);

  // what V' comes from
  std::optional<FeatureTable> table;
  std::optional<GanModel> model;
  std::optional<FeatureCatalog> catalog;
  if (nogang) {
    std::error_code ec;
    if (!fs::is_regular_file(*request.nogang_csv, ec)) {
      throw Error(Errc::IoError, "cannot read feature vector file " + request.nogang_csv->string());
    }
    table = csv_decode(read_file(*request.nogang_csv));
    catalog = table->catalog;
  } else {
    if (cfg.model_path.empty()) {
      throw Error(Errc::BadConfig, "no model_path configured; create one with `gangmam train`");
    }
    std::error_code ec;
    if (!fs::is_regular_file(cfg.model_path, ec)) {
      throw Error(Errc::IoError, "model file " + cfg.model_path.string() + " does not exist");
    }
    model = model_load(read_file(cfg.model_path));
    auto cat_path = cfg.effective_catalog_path();
    if (fs::is_regular_file(cat_path, ec)) catalog = load_catalog_file(cat_path);
  }

  PathAliases aliases;
  aliases.add("INPUT", cfg.input_dir);
  aliases.add("OUTPUT", cfg.output_dir);
  if (!is_within(cfg.keystore.path, cfg.output_dir)) aliases.add("KEYSTORE", cfg.keystore.path.parent_path());

  std::shared_ptr<Launcher> launcher = request.launcher;
  if (!launcher) launcher = std::make_shared<PosixLauncher>();
  ToolRunner runner(cfg.execution_mode(), aliases, launcher);
  ApkToolchain toolchain(runner, cfg.tools, cfg.timeout);
  DeviceBridge bridge(runner, cfg.tools, cfg.timeout);
  bridge.resolve(cfg.emulator);  // batch-level: fail before touching any APK

  const std::size_t n = inputs.size();
  std::vector<ApkOutcome> outcomes(n);
  std::vector<std::optional<DecodedApk>> decoded(n);
  std::vector<std::optional<StageError>> failures(n);
  std::vector<std::optional<FeatureVector>> originals(n), targets(n);

  auto fail = [&](std::size_t i, std::string stage, const std::exception& e) {
    failures[i] = StageError{std::move(stage), aliases.scrub(e.what())};
  };

  parallel_for(n, cfg.workers, [&](std::size_t i) {
    outcomes[i].apk_name = inputs[i].filename().string();
    const auto work = cfg.output_dir / layout::kWork / inputs[i].stem();
    try {
      decoded[i] = toolchain.decode_apk(inputs[i], work);
      outcomes[i].sha256 = decoded[i]->source_apk_hash.str();
    } catch (const std::exception& e) {
      fail(i, "decode", e);
    }
  });

  if (!catalog) {
    std::vector<DecodedApk> ok;
    for (const auto& d : decoded) {
      if (d) ok.push_back(*d);
    }
    if (ok.empty()) throw Error(Errc::EmptyCorpus, "no input APK could be decoded");
    catalog = catalog_from_corpus(ok).catalog;
  }
  if (model && catalog->size() != model->feature_dim) {
    throw Error(Errc::ShapeMismatch, "model expects " + std::to_string(model->feature_dim) +
                                         " features, catalog has " + std::to_string(catalog->size()));
  }

  DeviceQueue queue;
  const SessionParams base_session{"", cfg.monkey_seed, cfg.event_count};
  std::vector<std::pair<ExecutionLog, ExecutionLog>> logs(n);

  parallel_for(n, cfg.workers, [&](std::size_t i) {
    DeviceQueue::Tickets tickets(queue, {2 * i, 2 * i + 1});
    if (failures[i]) return;
    auto& out = outcomes[i];
    const auto& apk = *decoded[i];
    std::string stage = "extract";
    try {
      auto v = extract_features(apk, *catalog);
      originals[i] = v;

      stage = nogang ? "lookup" : "perturb";
      FeatureVector target = v;
      if (nogang) {
        const auto* row = table->find(apk.source_apk_hash);
        if (!row) throw Error(Errc::UnknownFeature, "no CSV entry for " + apk.source_apk_hash.str());
        target = *row;
      } else {
        Rng rng(mix_seed(cfg.seed ^ mix_seed(hash_seed(apk.source_apk_hash))));
        auto noise = draw_noise(1, model->config.noise_dim, rng).front();
        target = perturb(*model, v, noise);
      }
      targets[i] = target;

      stage = "plan";
      auto plan = build_plan(v, target, *catalog, cfg.stub_package);
      for (const auto& d : plan.additions) out.added_features.push_back(d.name);

      stage = "modify";
      apply_plan(apk, plan);

      stage = "build";
      const auto modified = cfg.output_dir / layout::kApks / inputs[i].filename();
      toolchain.build_and_sign(apk.root_path, modified, cfg.keystore);

      SessionParams session = base_session;
      session.package = apk.manifest.package_name;
      stage = "session-before";
      auto before = tickets.with_next(
          [&] { return bridge.device_session(inputs[i], cfg.emulator, session); });
      stage = "session-after";
      auto after = tickets.with_next(
          [&] { return bridge.device_session(modified, cfg.emulator, session); });
      before.apk_name = after.apk_name = out.apk_name;

      stage = "validate";
      const auto stem = inputs[i].stem().string();
      write_file(cfg.output_dir / layout::kLogs / (stem + ".before.log"), log_to_text(before));
      write_file(cfg.output_dir / layout::kLogs / (stem + ".after.log"), log_to_text(after));
      out.row = integrity_row({out.apk_name, before, after}, cfg.pass_threshold);
    } catch (const std::exception& e) {
      fail(i, stage, e);
    }
  });

  for (std::size_t i = 0; i < n; ++i) {
    if (failures[i]) {
      outcomes[i].failed_stage = failures[i]->stage;
      outcomes[i].error = failures[i]->message;
      outcomes[i].row.reset();
    }
  }

  // feature tables, one row per distinct hash in input order
  auto table_of = [&](const std::vector<std::optional<FeatureVector>>& vs) {
    std::vector<FeatureVector> rows;
    std::set<std::string> seen;
    for (const auto& v : vs) {
      if (v && seen.insert(v->apk_hash().str()).second) rows.push_back(*v);
    }
    return csv_encode(*catalog, rows);
  };
  write_file(cfg.output_dir / layout::kFeatures / "original.csv", table_of(originals));
  write_file(cfg.output_dir / layout::kFeatures / "evasive.csv", table_of(targets));

  PipelineResult result{std::move(outcomes)};
  const auto rows = result.rows();
  write_file(cfg.output_dir / layout::kReport / "integrity.txt", report_table(rows));
  write_file(cfg.output_dir / layout::kReport / "integrity.csv", report_csv(rows));
  std::string failed_csv = "name,stage,error\n";
  for (const auto& o : result.outcomes) {
    if (o.ok()) continue;
    std::string msg = o.error;
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::replace(msg.begin(), msg.end(), ',', ';');
    failed_csv += o.apk_name + ',' + o.failed_stage + ',' + msg + '\n';
  }
  write_file(cfg.output_dir / layout::kReport / "failures.csv", failed_csv);

  nlohmann::ordered_json manifest = {
      {"version", kVersion},
      {"variant", nogang ? "nogang" : "gang"},
      {"mode", std::string(to_string(cfg.mode))},
      {"emulator", cfg.emulator},
      {"seed", cfg.seed},
      {"monkey_seed", cfg.monkey_seed},
      {"event_count", cfg.event_count},
      {"pass_threshold", cfg.pass_threshold},
      {"catalog_size", catalog->size()},
  };
  auto apks = nlohmann::ordered_json::array();
  for (const auto& o : result.outcomes) {
    nlohmann::ordered_json a = {{"name", o.apk_name}, {"sha256", o.sha256}};
    a["status"] = o.ok() ? "ok" : "failed";
    a["added_features"] = o.added_features;
    if (o.ok()) {
      const auto stem = fs::path(o.apk_name).stem().string();
      a["modified_apk"] = std::string(layout::kApks) + "/" + o.apk_name;
      a["before_log"] = std::string(layout::kLogs) + "/" + stem + ".before.log";
      a["after_log"] = std::string(layout::kLogs) + "/" + stem + ".after.log";
      a["before"] = o.row->before_lines;
      a["after"] = o.row->after_lines;
      a["diff"] = o.row->diff_lines;
      a["verdict"] = std::string(to_string(o.row->verdict));
    } else {
      a["stage"] = o.failed_stage;
      a["error"] = o.error;
    }
    apks.push_back(std::move(a));
  }
  manifest["apks"] = std::move(apks);
  write_file(cfg.output_dir / layout::kRunManifest, manifest.dump(2) + "\n");

  if (progress) {
    *progress << report_table(rows);
    for (const auto& o : result.outcomes) {
      if (!o.ok()) *progress << o.apk_name << ": failed at " << o.failed_stage << ": " << o.error << '\n';
    }
    *progress << "processed " << n << " APK(s), " << rows.size() << " validated; report in "
              << (cfg.output_dir / layout::kReport).string() << '\n';
  }
  return result;
}

void clean_output(const fs::path& output_dir, const std::vector<fs::path>& keep) {
  if (output_dir.empty()) throw Error(Errc::OutputDirUnwritable, "output directory is not set");
  const auto out = fs::weakly_canonical(fs::absolute(output_dir));
  auto refuse = [&](const std::string& why) {
    throw Error(Errc::OutputDirUnwritable, "refusing to clean " + out.string() + ": " + why);
  };
  if (out == out.root_path()) refuse("it is a filesystem root");
  auto covers = [&](const fs::path& p) {
    auto c = fs::weakly_canonical(fs::absolute(p));
    return c == out || is_within(c, out);
  };
  if (const char* home = std::getenv("HOME"); home && *home && covers(home)) {
    refuse("it contains the home directory");
  }
  if (covers(fs::current_path())) refuse("it contains the working directory");
  for (const auto& k : keep) {
    if (!k.empty() && covers(k)) refuse("it contains " + k.string());
  }
  std::error_code ec;
  if (!fs::exists(out, ec)) return;
  if (!fs::is_directory(out, ec)) refuse("it is not a directory");
  std::vector<fs::path> entries;
  for (const auto& e : fs::directory_iterator(out)) entries.push_back(e.path());
  for (const auto& e : entries) {
    fs::remove_all(e, ec);  // does not follow a symlink entry
    if (ec) throw Error(Errc::OutputDirUnwritable, "cannot remove " + e.string() + ": " + ec.message());
  }
}

}  // namespace gangmam
