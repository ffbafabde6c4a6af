#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "e2e.hpp"
#include "fake_toolchain.hpp"
#include "gangmam/apk_io.hpp"
#include "gangmam/cli.hpp"
#include "gangmam/error.hpp"
#include "gangmam/hashing.hpp"
#include "gangmam/pipeline.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace gangmam;
namespace t = gangmam::test;
using t::code_of;
namespace fs = std::filesystem;

namespace {

using Snapshot = std::map<std::string, std::string>;

Snapshot snapshot(const fs::path& root) {
  Snapshot s;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) s[fs::relative(e.path(), root).string()] = read_file(e.path());
  }
  return s;
}

std::shared_ptr<t::FakeToolchain> fake() {
  return std::make_shared<t::FakeToolchain>(
      t::FakeToolchain::Options{t::fixtures() / "apps", t::fixtures() / "logs"});
}

// One model for the whole suite; training it is the slow part.
class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    models_ = new t::TempDir;
    t::write_example_model(model());
  }
  static void TearDownTestSuite() {
    delete models_;
    models_ = nullptr;
  }
  static fs::path model() { return *models_ / "gang.model"; }

  Config replay_config(const fs::path& out) const {
    return t::e2e_config(out, model(), ExecutionMode::Kind::Replay, t::e2e_transcript());
  }
  Config live_config(const fs::path& out) const {
    return t::e2e_config(out, model(), ExecutionMode::Kind::Live, {});
  }

  t::TempDir dir;

 private:
  static t::TempDir* models_;
};

t::TempDir* Pipeline::models_ = nullptr;

const t::PublishedRow* published(const std::string& apk_name) {
  static const auto rows = t::published_integrity_rows();
  for (const auto& r : rows) {
    if (r.stem + ".apk" == apk_name) return &r;
  }
  return nullptr;
}

DecodedApk decode_dir(const fs::path& root) {
  return load_decoded_apk(root, Sha256Hex(sha256_hex(std::string_view("unused"))));
}

bool has_feature(const FeatureVector& v, const FeatureCatalog& catalog, const std::string& name) {
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    if (catalog.at(i).name == name) return v.test(i);
  }
  return false;
}

}  // namespace

TEST(Discover, SortedApksOnly) {
  t::TempDir dir;
  for (const char* f : {"b.apk", "a.apk", "notes.txt", "c.APK"}) write_file(dir / f, "x");
  fs::create_directories(dir / "d.apk");
  auto found = discover_inputs(dir.path());
  ASSERT_EQ(found.size(), 2u);
  EXPECT_EQ(found[0].filename(), "a.apk");
  EXPECT_EQ(found[1].filename(), "b.apk");
  EXPECT_EQ(code_of([&] { discover_inputs(dir / "none"); }), Errc::NoInputs);
  t::TempDir empty;
  EXPECT_EQ(code_of([&] { discover_inputs(empty.path()); }), Errc::NoInputs);
}

TEST_F(Pipeline, ReplayProducesPublishedRowsWithoutLaunching) {
  auto spy = std::make_shared<t::SpyLauncher>();
  auto result = run_pipeline({replay_config(dir / "out"), {}, spy});
  EXPECT_EQ(spy->launches, 0u);
  ASSERT_EQ(result.outcomes.size(), 3u);
  for (const auto& o : result.outcomes) {
    ASSERT_TRUE(o.ok()) << o.apk_name << " " << o.failed_stage << ": " << o.error;
    const auto* want = published(o.apk_name);
    ASSERT_NE(want, nullptr) << o.apk_name;
    EXPECT_EQ(o.row->before_lines, want->before) << o.apk_name;
    EXPECT_EQ(o.row->after_lines, want->after) << o.apk_name;
    EXPECT_EQ(o.row->diff_lines, want->diff) << o.apk_name;
    EXPECT_EQ(o.row->verdict, Verdict::Pass);
    EXPECT_EQ(o.sha256, sha256_hex(read_file(t::e2e_input_dir() / o.apk_name)));
  }
  EXPECT_EQ(result.outcomes[0].apk_name, "com.cocoa.cocoa_178755715f29.apk");
  for (const char* f : {"report/integrity.txt", "report/integrity.csv", "report/failures.csv",
                        "run_manifest.json", "features/original.csv", "features/evasive.csv"}) {
    EXPECT_TRUE(fs::is_regular_file(dir / "out" / f)) << f;
  }
  EXPECT_EQ(read_file(dir / "out" / "report" / "failures.csv"), "name,stage,error\n");
  for (const auto& name : t::e2e_apk_names()) {
    EXPECT_TRUE(fs::is_regular_file(dir / "out" / "apks" / name)) << name;
  }
}

TEST_F(Pipeline, ReplayIsByteIdenticalAcrossRuns) {
  run_pipeline({replay_config(dir / "one"), {}, std::make_shared<t::SpyLauncher>()});
  run_pipeline({replay_config(dir / "two"), {}, std::make_shared<t::SpyLauncher>()});
  auto a = snapshot(dir / "one");
  auto b = snapshot(dir / "two");
  EXPECT_GT(a.size(), 10u);
  EXPECT_EQ(a, b);
}

TEST_F(Pipeline, ReplayMatchesLiveRun) {
  run_pipeline({live_config(dir / "live"), {}, fake()});
  run_pipeline({replay_config(dir / "replay"), {}, std::make_shared<t::SpyLauncher>()});
  auto live = snapshot(dir / "live");
  auto replay = snapshot(dir / "replay");
  // the manifest records which mode ran; nothing else may differ
  auto& m = live["run_manifest.json"];
  m.replace(m.find("\"mode\": \"live\""), 14, "\"mode\": \"replay\"");
  for (const auto& [k, v] : live) EXPECT_EQ(v, replay[k]) << k;
  EXPECT_EQ(live.size(), replay.size());
}

TEST_F(Pipeline, CheckedInTranscriptIsCurrent) {
  t::record_e2e_transcript(dir / "fresh.jsonl", dir / "scratch");
  EXPECT_EQ(read_file(dir / "fresh.jsonl"), read_file(t::e2e_transcript()))
      << "regenerate with gangmam_fixturegen";
}

TEST_F(Pipeline, ModifiedAppsCarryTheAddedFeatures) {
  auto result = run_pipeline({live_config(dir / "out"), {}, fake()});
  auto catalog = build_catalog(t::example_definitions());
  std::size_t added = 0;
  for (const auto& o : result.outcomes) {
    ASSERT_TRUE(o.ok());
    added += o.added_features.size();
    auto work = decode_dir(dir / "out" / "work" / fs::path(o.apk_name).stem());
    auto v = extract_features(work, catalog);
    for (const auto& name : o.added_features) {
      EXPECT_TRUE(has_feature(v, catalog, name)) << o.apk_name << " " << name;
    }
  }
  EXPECT_GT(added, 0u);  // the fixture model does perturb something
}

TEST_F(Pipeline, WorkersDoNotChangeOutputs) {
  auto serial = live_config(dir / "serial");
  auto parallel = live_config(dir / "parallel");
  parallel.workers = 3;
  run_pipeline({serial, {}, fake()});
  run_pipeline({parallel, {}, fake()});
  EXPECT_EQ(snapshot(dir / "serial"), snapshot(dir / "parallel"));
}

TEST_F(Pipeline, PerApkFailureDoesNotAbortBatch) {
  auto f = fake();
  f->fail_build.insert("com.thevotinggame.thevotinggame");
  auto result = run_pipeline({live_config(dir / "out"), {}, f});
  ASSERT_EQ(result.outcomes.size(), 3u);
  EXPECT_EQ(result.rows().size(), 2u);
  const auto& bad = result.outcomes[1];
  EXPECT_EQ(bad.apk_name, "com.thevotinggame.thevotinggame.apk");
  EXPECT_FALSE(bad.ok());
  EXPECT_EQ(bad.failed_stage, "build");
  auto failures = t::read_lines(dir / "out" / "report" / "failures.csv");
  ASSERT_EQ(failures.size(), 2u);
  EXPECT_EQ(failures[1].rfind("com.thevotinggame.thevotinggame.apk,build,", 0), 0u);
  EXPECT_EQ(failures[1].find(dir.path().string()), std::string::npos);  // paths scrubbed
  auto manifest = read_file(dir / "out" / "run_manifest.json");
  EXPECT_NE(manifest.find("\"status\": \"failed\""), std::string::npos);
}

TEST_F(Pipeline, NoGangUnknownHashesStillExitZero) {
  std::ostringstream out, err;
  auto cfg = live_config(dir / "out");
  write_file(dir / "c.json", config_to_json(cfg));
  int code = run_cli({"--config", (dir / "c.json").string(), "-n",
                      (t::fixtures() / "csv" / "two_column.csv").string()},
                     out, err, fake());
  EXPECT_EQ(code, kExitOk) << err.str();
  auto failures = t::read_lines(dir / "out" / "report" / "failures.csv");
  ASSERT_EQ(failures.size(), 4u);
  for (std::size_t i = 1; i < failures.size(); ++i) {
    EXPECT_NE(failures[i].find(",lookup,"), std::string::npos) << failures[i];
    EXPECT_NE(failures[i].find("no CSV entry"), std::string::npos) << failures[i];
  }
  EXPECT_NE(out.str().find("processed 3 APK(s), 0 validated"), std::string::npos);
}

TEST_F(Pipeline, NoGangUsesTheCsvTargets) {
  // every example feature set: additive over any app
  auto catalog = build_catalog(t::example_definitions());
  std::vector<FeatureVector> rows;
  for (const auto& name : t::e2e_apk_names()) {
    BitVector all(catalog.size());
    for (std::size_t i = 0; i < catalog.size(); ++i) all.set(i, true);
    rows.emplace_back(Sha256Hex(sha256_hex(read_file(t::e2e_input_dir() / name))), all);
  }
  write_file(dir / "v.csv", csv_encode(catalog, rows));
  auto result = run_pipeline({live_config(dir / "out"), dir / "v.csv", fake()});
  ASSERT_EQ(result.rows().size(), 3u);
  for (const auto& o : result.outcomes) {
    auto work = decode_dir(dir / "out" / "work" / fs::path(o.apk_name).stem());
    auto v = extract_features(work, catalog);
    for (std::size_t i = 0; i < catalog.size(); ++i) EXPECT_TRUE(v.test(i)) << o.apk_name << i;
  }
  EXPECT_EQ(read_file(dir / "out" / "features" / "evasive.csv"), csv_encode(catalog, rows));
}

TEST_F(Pipeline, NoGangMissingCsv) {
  EXPECT_EQ(code_of([&] { run_pipeline({live_config(dir / "out"), dir / "nope.csv", fake()}); }),
            Errc::IoError);
}

TEST_F(Pipeline, BatchLevelErrors) {
  auto cfg = live_config(dir / "out");
  cfg.emulator = "Pixel_9";
  EXPECT_EQ(code_of([&] { run_pipeline({cfg, {}, fake()}); }), Errc::EmulatorNotFound);

  cfg = live_config(dir / "out");
  cfg.input_dir = dir / "no_inputs";
  EXPECT_EQ(code_of([&] { run_pipeline({cfg, {}, fake()}); }), Errc::NoInputs);

  write_file(dir / "a_file", "x");
  cfg = live_config(dir / "a_file");
  EXPECT_EQ(code_of([&] { run_pipeline({cfg, {}, fake()}); }), Errc::OutputDirUnwritable);

  cfg = replay_config(dir / "out");
  cfg.transcript = dir / "absent.jsonl";
  EXPECT_EQ(code_of([&] { run_pipeline({cfg, {}, fake()}); }), Errc::TranscriptMiss);

  cfg = live_config(dir / "out");
  cfg.model_path = dir / "absent.model";
  EXPECT_EQ(code_of([&] { run_pipeline({cfg, {}, fake()}); }), Errc::IoError);

  // catalog next to the model has a different width
  fs::create_directories(dir / "m");
  fs::copy_file(model(), dir / "m" / "gang.model");
  write_file(dir / "m" / "gang.model.catalog.csv", read_file(t::fixtures() / "csv" / "two_column.csv"));
  cfg = live_config(dir / "out");
  cfg.model_path = dir / "m" / "gang.model";
  EXPECT_EQ(code_of([&] { run_pipeline({cfg, {}, fake()}); }), Errc::ShapeMismatch);
}

TEST_F(Pipeline, CliReplayRun) {
  auto cfg = replay_config(dir / "out");
  write_file(dir / "c.json", config_to_json(cfg));
  std::ostringstream out, err;
  auto spy = std::make_shared<t::SpyLauncher>();
  int code = run_cli({"--config", (dir / "c.json").string(), "-e", "Nexus_4a"}, out, err, spy);
  EXPECT_EQ(code, kExitOk) << err.str();
  EXPECT_EQ(spy->launches, 0u);
  EXPECT_EQ(out.str().rfind(read_file(dir / "out" / "report" / "integrity.txt"), 0), 0u);
}
