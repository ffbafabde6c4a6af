#include "gangmam/validation.hpp"

#include <algorithm>
#include <regex>

#include "gangmam/error.hpp"
#include "gangmam/line_diff.hpp"

namespace gangmam {

ExecutionLog log_from_text(std::string apk_name, std::string_view text) {
  ExecutionLog log{std::move(apk_name), {}};
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto end = nl == std::string_view::npos ? text.size() : nl;
    auto line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    log.lines.emplace_back(line);
    pos = end + 1;
  }
  return log;
}

std::string log_to_text(const ExecutionLog& log) {
  std::string out;
  for (const auto& l : log.lines) {
    out += l;
    out += '\n';
  }
  return out;
}

namespace {

struct Rule {
  std::regex pattern;
  const char* replacement;
};

const std::vector<Rule>& rules() {
  static const std::vector<Rule> r = [] {
    auto flags = std::regex::ECMAScript | std::regex::optimize;
    std::vector<Rule> v;
    // threadtime: "10-15 12:01:02.345  1234  1250 I Tag: ..."
    v.push_back({std::regex(R"(^(\d{4}-)?\d{2}-\d{2}\s+\d{2}:\d{2}:\d{2}(\.\d+)?)", flags), "<TS>"});
    v.push_back({std::regex(R"(^<TS>\s+\d+\s+\d+\s)", flags), "<TS> <PID> <TID> "});
    v.push_back({std::regex(R"(^<TS>\s+\d+\s)", flags), "<TS> <PID> "});
    // brief: "I/Tag( 1234): ..."
    v.push_back({std::regex(R"(^([VDIWEF]/[^(]*)\(\s*\d+\))", flags), "$1(<PID>)"});
    v.push_back({std::regex(R"(\b(pid|tid|uid)([=: ]+)\d+)", flags | std::regex::icase), "$1$2<N>"});
    v.push_back({std::regex(R"(0x[0-9A-Fa-f]+)", flags), "0x<ADDR>"});
    v.push_back({std::regex(R"(@[0-9a-f]{6,16}\b)", flags), "@<ADDR>"});
    return v;
  }();
  return r;
}

}  // namespace

std::string normalize_line(std::string_view line) {
  std::string s(line);
  for (const auto& rule : rules()) s = std::regex_replace(s, rule.pattern, rule.replacement);
  return s;
}

ExecutionLog normalize_log(const ExecutionLog& log) {
  ExecutionLog out{log.apk_name, {}};
  out.lines.reserve(log.lines.size());
  for (const auto& l : log.lines) out.lines.push_back(normalize_line(l));
  return out;
}

std::size_t diff_count(const ExecutionLog& a, const ExecutionLog& b) {
  auto d = diff_lines(a.lines, b.lines);
  return d.deleted + d.inserted;
}

std::size_t changed_lines(const ExecutionLog& a, const ExecutionLog& b) {
  return diff_lines(a.lines, b.lines).changed_lines;
}

std::string_view to_string(Verdict v) noexcept { return v == Verdict::Pass ? "Pass" : "Fail"; }

Verdict verdict_for(std::size_t diff, int pass_threshold) {
  return pass_threshold >= 0 && diff <= static_cast<std::size_t>(pass_threshold) ? Verdict::Pass
                                                                                 : Verdict::Fail;
}

IntegrityRow integrity_row(const IntegrityInput& input, int pass_threshold) {
  IntegrityRow row;
  row.apk_name = input.apk_name;
  row.before_lines = input.before.lines.size();
  row.after_lines = input.after.lines.size();
  row.diff_lines = changed_lines(normalize_log(input.before), normalize_log(input.after));
  row.verdict = verdict_for(row.diff_lines, pass_threshold);
  return row;
}

std::vector<IntegrityRow> integrity_report(const std::vector<IntegrityInput>& inputs,
                                           int pass_threshold) {
  if (pass_threshold < 0) throw Error(Errc::BadParams, "pass threshold must be >= 0");
  std::vector<IntegrityRow> rows;
  rows.reserve(inputs.size());
  for (const auto& in : inputs) rows.push_back(integrity_row(in, pass_threshold));
  return rows;
}

std::string report_table(const std::vector<IntegrityRow>& rows) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"No.", "APK name", "Before", "After", "Diff", "Verdict"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    cells.push_back({std::to_string(i + 1), r.apk_name, std::to_string(r.before_lines),
                     std::to_string(r.after_lines), std::to_string(r.diff_lines),
                     std::string(to_string(r.verdict))});
  }
  std::vector<std::size_t> width(cells[0].size(), 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  auto emit = [&](const std::vector<std::string>& row) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) line += "  ";
      const bool numeric = c != 1 && c != 5;
      std::string pad(width[c] - row[c].size(), ' ');
      line += numeric ? pad + row[c] : row[c] + pad;
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
  };
  emit(cells[0]);
  std::string rule;
  for (std::size_t c = 0; c < width.size(); ++c) {
    if (c) rule += "  ";
    rule += std::string(width[c], '-');
  }
  out += rule + '\n';
  for (std::size_t i = 1; i < cells.size(); ++i) emit(cells[i]);
  return out;
}

std::string report_csv(const std::vector<IntegrityRow>& rows) {
  std::string out = "name,before,after,diff,verdict\n";
  for (const auto& r : rows) {
    out += r.apk_name + ',' + std::to_string(r.before_lines) + ',' + std::to_string(r.after_lines) +
           ',' + std::to_string(r.diff_lines) + ',' + std::string(to_string(r.verdict)) + '\n';
  }
  return out;
}

}  // namespace gangmam
