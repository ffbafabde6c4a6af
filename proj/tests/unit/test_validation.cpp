#include <gtest/gtest.h>

#include <cstdio>
#include <regex>

#include "gangmam/error.hpp"
#include "gangmam/hashing.hpp"
#include "gangmam/line_diff.hpp"
#include "gangmam/validation.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace gangmam;
namespace t = gangmam::test;
using t::code_of;
namespace fs = std::filesystem;

namespace {

using Lines = std::vector<std::string>;

ExecutionLog log_of(Lines lines) { return {"x.apk", std::move(lines)}; }

Lines random_lines(Rng& rng, std::size_t max_len, std::size_t alphabet) {
  Lines out(rng.below(max_len + 1));
  for (auto& l : out) l = std::string(1, static_cast<char>('a' + rng.below(alphabet)));
  return out;
}

// Rebuilds b from a and the hunks; any mismatch means the script is wrong.
Lines replay_hunks(const Lines& a, const Lines& b, const LineDiff& d) {
  Lines out;
  std::size_t ai = 0;
  for (const auto& h : d.hunks) {
    while (ai < h.a_start) out.push_back(a[ai++]);
    ai += h.deleted;
    for (std::size_t j = 0; j < h.inserted; ++j) out.push_back(b[h.b_start + j]);
  }
  while (ai < a.size()) out.push_back(a[ai++]);
  return out;
}

struct GnuDiff {
  std::size_t deleted = 0;
  std::size_t inserted = 0;
  std::size_t changed = 0;
};

bool have_gnu_diff() { return fs::exists("/usr/bin/diff"); }

// `diff` normal output: one header per hunk, e.g. 3c3 / 5,7d4 / 9a11,12.
GnuDiff gnu_diff(const t::TempDir& dir, const Lines& a, const Lines& b) {
  auto write = [](const fs::path& p, const Lines& lines) {
    std::string text;
    for (const auto& l : lines) text += l + "\n";
    write_file(p, text);
  };
  write(dir / "a.txt", a);
  write(dir / "b.txt", b);
  auto cmd = "/usr/bin/diff --minimal '" + (dir / "a.txt").string() + "' '" +
             (dir / "b.txt").string() + "'";
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
  GnuDiff out;
  static const std::regex header(R"(^(\d+)(?:,(\d+))?([acd])(\d+)(?:,(\d+))?$)");
  char buf[4096];
  while (fgets(buf, sizeof buf, pipe.get()) != nullptr) {
    std::string line(buf);
    if (!line.empty() && line.back() == '\n') line.pop_back();
    std::smatch m;
    if (!std::regex_match(line, m, header)) continue;
    auto span = [&](int lo, int hi) {
      auto l = std::stoul(m[lo].str());
      return m[hi].matched ? std::stoul(m[hi].str()) - l + 1 : 1ul;
    };
    char op = m[3].str()[0];
    std::size_t del = op == 'a' ? 0 : span(1, 2);
    std::size_t ins = op == 'd' ? 0 : span(4, 5);
    out.deleted += del;
    out.inserted += ins;
    out.changed += std::max(del, ins);
  }
  return out;
}

}  // namespace

TEST(LineDiff, Identical) {
  Lines a = {"x", "y", "z"};
  auto d = diff_lines(a, a);
  EXPECT_EQ(d.deleted + d.inserted, 0u);
  EXPECT_TRUE(d.hunks.empty());
}

TEST(LineDiff, OneChangedLine) {
  auto d = diff_lines({"a", "b", "c"}, {"a", "B", "c"});
  EXPECT_EQ(d.deleted, 1u);
  EXPECT_EQ(d.inserted, 1u);
  EXPECT_EQ(d.changed_lines, 1u);
  ASSERT_EQ(d.hunks.size(), 1u);
  EXPECT_EQ(d.hunks[0], (Hunk{1, 1, 1, 1}));
}

TEST(LineDiff, EmptySides) {
  auto d = diff_lines({}, {"a", "b"});
  EXPECT_EQ(d.inserted, 2u);
  EXPECT_EQ(d.changed_lines, 2u);
  d = diff_lines({"a"}, {});
  EXPECT_EQ(d.deleted, 1u);
  EXPECT_EQ(diff_lines({}, {}).hunks.size(), 0u);
}

TEST(LineDiff, MatchesLcsTable) {
  Rng rng(41);
  for (int round = 0; round < 500; ++round) {
    auto a = random_lines(rng, 30, 4);
    auto b = random_lines(rng, 30, 4);
    auto d = diff_lines(a, b);
    auto lcs = t::lcs_dp(a, b);
    ASSERT_EQ(d.deleted, a.size() - lcs) << round;
    ASSERT_EQ(d.inserted, b.size() - lcs) << round;
    ASSERT_EQ(replay_hunks(a, b, d), b) << round;
    std::size_t changed = 0;
    for (const auto& h : d.hunks) {
      ASSERT_TRUE(h.deleted + h.inserted > 0);
      changed += std::max(h.deleted, h.inserted);
    }
    ASSERT_EQ(d.changed_lines, changed);
  }
}

TEST(LineDiff, LongInputs) {
  Rng rng(8);
  auto a = random_lines(rng, 2000, 6);
  auto b = a;
  for (int k = 0; k < 40; ++k) b[rng.below(b.size())] = "changed";
  auto d = diff_lines(a, b);
  EXPECT_EQ(d.deleted, a.size() - t::lcs_dp(a, b));
  EXPECT_EQ(replay_hunks(a, b, d), b);
}

TEST(LineDiff, AgreesWithGnuDiffTotals) {
  if (!have_gnu_diff()) GTEST_SKIP() << "no /usr/bin/diff";
  t::TempDir dir;
  Rng rng(77);
  for (int round = 0; round < 60; ++round) {
    auto a = random_lines(rng, 25, 3);
    auto b = random_lines(rng, 25, 3);
    auto mine = diff_lines(a, b);
    auto ref = gnu_diff(dir, a, b);
    // both minimal, so totals agree even where hunk grouping may not
    EXPECT_EQ(mine.deleted + mine.inserted, ref.deleted + ref.inserted) << round;
  }
}

TEST(DiffCount, Examples) {
  EXPECT_EQ(diff_count(log_of({"a", "b"}), log_of({"a", "b"})), 0u);
  EXPECT_EQ(diff_count(log_of({"a", "b"}), log_of({"a", "c"})), 2u);
  EXPECT_EQ(changed_lines(log_of({"a", "b"}), log_of({"a", "c"})), 1u);
}

TEST(DiffCount, Properties) {
  Rng rng(5);
  for (int round = 0; round < 200; ++round) {
    auto a = log_of(random_lines(rng, 20, 3));
    auto b = log_of(random_lines(rng, 20, 3));
    EXPECT_EQ(diff_count(a, a), 0u);
    EXPECT_EQ(diff_count(a, b), diff_count(b, a));
    EXPECT_LE(diff_count(a, b), a.lines.size() + b.lines.size());
    EXPECT_LE(changed_lines(a, b), diff_count(a, b));
  }
}

TEST(Logs, TextRoundTrip) {
  auto log = log_from_text("x.apk", "one\r\ntwo\n\nthree\n");
  EXPECT_EQ(log.lines, (Lines{"one", "two", "", "three"}));
  EXPECT_EQ(log_to_text(log), "one\ntwo\n\nthree\n");
  EXPECT_TRUE(log_from_text("x.apk", "").lines.empty());
  EXPECT_EQ(log_from_text("x.apk", "last").lines, Lines{"last"});
}

TEST(Normalize, EmptyLog) { EXPECT_TRUE(normalize_log(log_of({})).lines.empty()); }

TEST(Normalize, TimestampsOnlyDifference) {
  auto a = log_of({"10-15 14:03:13.020   8711  8752 I Tag: started pid=8711",
                   "10-15 14:03:13.042   8711  8728 D View: window 0xe4c354c3 obj@252a12e"});
  auto b = log_of({"10-15 14:09:51.377   9120  9133 I Tag: started pid=9120",
                   "10-15 14:09:51.401   9120  9144 D View: window 0xaa01bb02 obj@9c3d7f1"});
  EXPECT_NE(a.lines, b.lines);
  EXPECT_EQ(normalize_log(a).lines, normalize_log(b).lines);
}

TEST(Normalize, KeepsPayloadDifferences) {
  auto a = log_of({"10-15 14:03:13.020   8711  8752 I Tag: event 3: tap (10,20)"});
  auto b = log_of({"10-15 14:03:13.020   8711  8752 I Tag: event 3: tap (11,20)"});
  EXPECT_NE(normalize_log(a).lines, normalize_log(b).lines);
}

TEST(Normalize, IdempotentAndLengthPreserving) {
  for (const auto& input : t::published_log_inputs()) {
    for (const auto* log : {&input.before, &input.after}) {
      auto once = normalize_log(*log);
      EXPECT_EQ(once.lines.size(), log->lines.size());
      EXPECT_EQ(normalize_log(once), once);
    }
  }
}

TEST(Verdict, Threshold) {
  EXPECT_EQ(verdict_for(0, 3), Verdict::Pass);
  EXPECT_EQ(verdict_for(3, 3), Verdict::Pass);
  EXPECT_EQ(verdict_for(4, 3), Verdict::Fail);
  EXPECT_EQ(verdict_for(0, 0), Verdict::Pass);
  EXPECT_EQ(verdict_for(1, 0), Verdict::Fail);
  EXPECT_EQ(to_string(Verdict::Pass), "Pass");
}

TEST(Report, EmptyAndNegative) {
  EXPECT_TRUE(integrity_report({}).empty());
  EXPECT_EQ(code_of([] { integrity_report({}, -1); }), Errc::BadParams);
}

TEST(Report, PublishedTable) {
  auto rows = integrity_report(t::published_log_inputs(), 3);
  auto expected = t::published_integrity_rows();
  ASSERT_EQ(rows.size(), expected.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    SCOPED_TRACE(expected[i].stem);
    EXPECT_EQ(rows[i].apk_name, expected[i].stem + ".apk");
    EXPECT_EQ(rows[i].before_lines, expected[i].before);
    EXPECT_EQ(rows[i].after_lines, expected[i].after);
    EXPECT_EQ(rows[i].diff_lines, expected[i].diff);
    EXPECT_EQ(rows[i].verdict, Verdict::Pass);
  }
}

TEST(Report, PublishedTableAgreesWithGnuDiff) {
  if (!have_gnu_diff()) GTEST_SKIP() << "no /usr/bin/diff";
  t::TempDir dir;
  for (const auto& input : t::published_log_inputs()) {
    auto a = normalize_log(input.before).lines;
    auto b = normalize_log(input.after).lines;
    auto ref = gnu_diff(dir, a, b);
    EXPECT_EQ(integrity_row(input).diff_lines, ref.changed) << input.apk_name;
    EXPECT_EQ(diff_count(normalize_log(input.before), normalize_log(input.after)),
              ref.deleted + ref.inserted)
        << input.apk_name;
  }
}

TEST(Report, RawLogsDifferMoreThanNormalized) {
  // the fixtures carry run-to-run timestamp noise that normalization absorbs
  auto input = t::published_log_inputs().front();
  EXPECT_GT(changed_lines(input.before, input.after), integrity_row(input).diff_lines);
}

TEST(Report, ThresholdFlipsVerdicts) {
  auto rows = integrity_report(t::published_log_inputs(), 1);
  std::size_t fails = 0;
  for (const auto& r : rows) fails += r.verdict == Verdict::Fail;
  EXPECT_EQ(fails, 4u);  // the 2s and the 3
}

TEST(Report, TableAndCsv) {
  std::vector<IntegrityRow> rows = {{"a.apk", 139, 139, 1, Verdict::Pass},
                                    {"longer.name.apk", 35, 34, 4, Verdict::Fail}};
  EXPECT_EQ(report_csv(rows),
            "name,before,after,diff,verdict\n"
            "a.apk,139,139,1,Pass\n"
            "longer.name.apk,35,34,4,Fail\n");
  // numbers right-aligned, text left-aligned, two-space gutters
  EXPECT_EQ(report_table(rows),
            "No.  APK name         Before  After  Diff  Verdict\n"
            "---  ---------------  ------  -----  ----  -------\n"
            "  1  a.apk               139    139     1  Pass\n"
            "  2  longer.name.apk      35     34     4  Fail\n");
}
