#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "gangmam/cli.hpp"
#include "gangmam/error.hpp"
#include "gangmam/hashing.hpp"
#include "gangmam/pipeline.hpp"
#include "gangmam/version.hpp"
#include "test_support.hpp"

using namespace gangmam;
namespace t = gangmam::test;
using t::code_of;
namespace fs = std::filesystem;

namespace {

struct Captured {
  int code;
  std::string out, err;
};

Captured cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override { unsetenv(kConfigEnvVar); }
};

}  // namespace

TEST_F(CliTest, EmulatorFlag) {
  auto cmd = parse_args({"-e", "Nexus_4a"});
  auto* r = std::get_if<RunFull>(&cmd.action);
  ASSERT_NE(r, nullptr);
  EXPECT_EQ(r->emulator, "Nexus_4a");
}

TEST_F(CliTest, NoGangFlag) {
  auto cmd = parse_args({"-n", "/home/user/feature_vector.csv"});
  auto* r = std::get_if<RunNoGang>(&cmd.action);
  ASSERT_NE(r, nullptr);
  EXPECT_EQ(r->csv, fs::path("/home/user/feature_vector.csv"));
  EXPECT_FALSE(r->emulator.has_value());

  auto both = parse_args({"-e", "Nexus_4a", "-n", "v.csv"});
  ASSERT_TRUE(std::holds_alternative<RunNoGang>(both.action));
  EXPECT_EQ(std::get<RunNoGang>(both.action).emulator, "Nexus_4a");
}

TEST_F(CliTest, CleanVersionHelp) {
  EXPECT_TRUE(std::holds_alternative<Clean>(parse_args({"-c"}).action));
  EXPECT_TRUE(std::holds_alternative<Version>(parse_args({"-v"}).action));
  EXPECT_TRUE(std::holds_alternative<Help>(parse_args({"-h"}).action));
  // short-circuit even next to nonsense
  EXPECT_TRUE(std::holds_alternative<Help>(parse_args({"-x", "-h"}).action));
  EXPECT_TRUE(std::holds_alternative<Version>(parse_args({"-c", "-n", "a", "-v"}).action));
}

TEST_F(CliTest, NoArgumentsIsFullRun) {
  auto cmd = parse_args({});
  auto* r = std::get_if<RunFull>(&cmd.action);
  ASSERT_NE(r, nullptr);
  EXPECT_FALSE(r->emulator.has_value());
}

TEST_F(CliTest, ParseErrors) {
  EXPECT_EQ(code_of([] { parse_args({"-x"}); }), Errc::UnknownFlag);
  EXPECT_EQ(code_of([] { parse_args({"stray"}); }), Errc::UnknownFlag);
  EXPECT_EQ(code_of([] { parse_args({"-n"}); }), Errc::MissingValue);
  EXPECT_EQ(code_of([] { parse_args({"-e"}); }), Errc::MissingValue);
  EXPECT_EQ(code_of([] { parse_args({"-c", "-n", "v.csv"}); }), Errc::ConflictingFlags);
  EXPECT_EQ(code_of([] { parse_args({"-c", "-e", "Nexus_4a"}); }), Errc::ConflictingFlags);
  EXPECT_EQ(code_of([] { parse_args({"--workers", "many"}); }), Errc::BadParams);
  EXPECT_EQ(code_of([] { parse_args({"train"}); }), Errc::MissingValue);
  EXPECT_EQ(code_of([] { parse_args({"-e", "x", "train", "--model", "m"}); }),
            Errc::ConflictingFlags);
  // after the subcommand, -e is simply not one of its flags
  EXPECT_EQ(code_of([] { parse_args({"train", "--model", "m", "-e", "x"}); }), Errc::UnknownFlag);
}

TEST_F(CliTest, LongOverrides) {
  auto cmd = parse_args({"-e", "emu", "--input", "/i", "--output", "/o", "--mode", "replay",
                         "--transcript", "/t", "--model", "/m", "--workers", "3", "--seed", "9"});
  const auto& ov = cmd.overrides;
  EXPECT_EQ(ov.input, fs::path("/i"));
  EXPECT_EQ(ov.output, fs::path("/o"));
  EXPECT_EQ(ov.mode, "replay");
  EXPECT_EQ(ov.workers, 3u);
  EXPECT_EQ(ov.seed, 9u);
  auto cfg = resolve_config(cmd);
  EXPECT_EQ(cfg.emulator, "emu");
  EXPECT_EQ(cfg.mode, ExecutionMode::Kind::Replay);
  EXPECT_EQ(cfg.transcript, fs::path("/t"));
  EXPECT_EQ(cfg.workers, 3u);
}

TEST_F(CliTest, TrainSubcommand) {
  auto cmd = parse_args({"train", "--model", "/m/g.model", "--epochs", "5", "--lr", "0.1"});
  auto* tr = std::get_if<Train>(&cmd.action);
  ASSERT_NE(tr, nullptr);
  EXPECT_EQ(tr->model_out, fs::path("/m/g.model"));
  EXPECT_EQ(tr->epochs, 5u);
  EXPECT_DOUBLE_EQ(tr->learning_rate, 0.1);
  EXPECT_EQ(tr->dims, 64u);
}

TEST_F(CliTest, ConfigFromEnvThenFlags) {
  t::TempDir dir;
  write_file(dir / "c.json", R"({"version": 1, "output_dir": "from_file", "emulator": "A", "seed": 5})");
  setenv(kConfigEnvVar, (dir / "c.json").c_str(), 1);
  auto cfg = resolve_config(parse_args({"-e", "B"}));
  EXPECT_EQ(cfg.output_dir, dir / "from_file");
  EXPECT_EQ(cfg.emulator, "B");
  EXPECT_EQ(cfg.seed, 5u);
  cfg = resolve_config(parse_args({"--seed", "8"}));
  EXPECT_EQ(cfg.emulator, "A");
  EXPECT_EQ(cfg.seed, 8u);
  unsetenv(kConfigEnvVar);
  EXPECT_EQ(code_of([] { resolve_config(parse_args({"--mode", "sideways"})); }), Errc::BadConfig);
}

TEST_F(CliTest, ExitCodes) {
  auto help = cli({"-h"});
  EXPECT_EQ(help.code, kExitOk);
  for (const char* flag : {"-e", "-c", "-n", "-v", "-h"}) {
    EXPECT_NE(help.out.find(std::string("  ") + flag), std::string::npos) << flag;
  }
  auto v = cli({"-v"});
  EXPECT_EQ(v.code, kExitOk);
  EXPECT_EQ(v.out, std::string("gangmam ") + kVersion + "\n");

  auto bad = cli({"-x"});
  EXPECT_EQ(bad.code, kExitUsage);
  EXPECT_TRUE(bad.out.empty());
  EXPECT_FALSE(bad.err.empty());
  EXPECT_EQ(cli({"-n"}).code, kExitUsage);
  EXPECT_EQ(cli({"-c", "-n", "f.csv"}).code, kExitUsage);

  // environment problems
  t::TempDir dir;
  fs::create_directories(dir / "in");
  EXPECT_EQ(cli({"-e", "Nexus_4a", "--input", (dir / "in").string(), "--output",
                 (dir / "out").string()})
                .code,
            kExitEnvironment);
  EXPECT_EQ(cli({"--config", (dir / "missing.json").string()}).code, kExitEnvironment);
}

TEST_F(CliTest, MissingEmulatorIsEnvironmentError) {
  t::TempDir dir;
  write_file(dir / "in" / "a.apk", "x");
  auto r = cli({"--input", (dir / "in").string(), "--output", (dir / "out").string()});
  EXPECT_EQ(r.code, kExitEnvironment);
  EXPECT_NE(r.err.find("emulator"), std::string::npos);
}

TEST_F(CliTest, BinaryExitCodes) {
  PosixLauncher launcher;
  auto run = [&](std::vector<std::string> args) {
    ToolInvocation inv;
    inv.argv = {GANGMAM_CLI_PATH};
    inv.argv.insert(inv.argv.end(), args.begin(), args.end());
    return launcher.launch(inv);
  };
  EXPECT_EQ(run({"-x"}).exit_code, 2);
  EXPECT_EQ(run({"-h"}).exit_code, 0);
  auto v = run({"-v"});
  EXPECT_EQ(v.exit_code, 0);
  EXPECT_EQ(v.stdout_data, std::string("gangmam ") + kVersion + "\n");
}

// -c

TEST_F(CliTest, CleanEmptiesOnlyOutputDir) {
  t::TempDir dir;
  const auto out = dir / "out";
  const auto outside = dir / "precious";
  write_file(out / "report" / "integrity.txt", "x");
  write_file(out / "apks" / "a.apk", "x");
  write_file(out / ".hidden", "x");
  write_file(outside / "keep.txt", "keep");
  write_file(dir / "sibling.txt", "keep");
  fs::create_directory_symlink(outside, out / "link_to_outside");
  fs::create_symlink(dir / "sibling.txt", out / "file_link");

  auto r = cli({"-c", "--output", out.string(), "--input", (dir / "in").string()});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::is_directory(out));
  EXPECT_TRUE(fs::is_empty(out));
  EXPECT_EQ(read_file(outside / "keep.txt"), "keep");
  EXPECT_EQ(read_file(dir / "sibling.txt"), "keep");
}

TEST_F(CliTest, CleanRefusals) {
  t::TempDir dir;
  write_file(dir / "out" / "in" / "a.apk", "x");
  // input lives inside the output dir
  auto r = cli({"-c", "--output", (dir / "out").string(), "--input", (dir / "out" / "in").string()});
  EXPECT_EQ(r.code, kExitEnvironment);
  EXPECT_TRUE(fs::exists(dir / "out" / "in" / "a.apk"));

  EXPECT_EQ(code_of([] { clean_output("/"); }), Errc::OutputDirUnwritable);
  EXPECT_EQ(code_of([] { clean_output(fs::current_path()); }), Errc::OutputDirUnwritable);
  EXPECT_EQ(code_of([] { clean_output(fs::current_path().parent_path()); }),
            Errc::OutputDirUnwritable);
  if (const char* home = std::getenv("HOME"); home && *home) {
    EXPECT_EQ(code_of([&] { clean_output(home); }), Errc::OutputDirUnwritable);
  }
  EXPECT_EQ(code_of([] { clean_output(""); }), Errc::OutputDirUnwritable);
  write_file(dir / "plain", "x");
  EXPECT_EQ(code_of([&] { clean_output(dir / "plain"); }), Errc::OutputDirUnwritable);
  EXPECT_EQ(read_file(dir / "plain"), "x");
}

TEST_F(CliTest, CleanMissingDirIsFine) {
  t::TempDir dir;
  EXPECT_NO_THROW(clean_output(dir / "never_created"));
  EXPECT_FALSE(fs::exists(dir / "never_created"));
}
