#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace gangmam {

struct ExecutionLog {
  std::string apk_name;
  std::vector<std::string> lines;  // newline-free

  friend bool operator==(const ExecutionLog&, const ExecutionLog&) = default;
};

/// Splits on LF (a trailing CR is dropped, a final empty line is not a line).
ExecutionLog log_from_text(std::string apk_name, std::string_view text);
std::string log_to_text(const ExecutionLog& log);

/// Masks leading timestamps, PID/TID columns and hex addresses. Idempotent,
/// preserves the line count.
ExecutionLog normalize_log(const ExecutionLog& log);
std::string normalize_line(std::string_view line);

/// Deleted + inserted lines of a minimal line diff.
std::size_t diff_count(const ExecutionLog& a, const ExecutionLog& b);

/// Line positions a line diff reports as changed: per hunk max(deleted, inserted).
std::size_t changed_lines(const ExecutionLog& a, const ExecutionLog& b);

inline constexpr int kDefaultPassThreshold = 3;

enum class Verdict { Pass, Fail };
std::string_view to_string(Verdict v) noexcept;

struct IntegrityRow {
  std::string apk_name;
  std::size_t before_lines = 0;
  std::size_t after_lines = 0;
  std::size_t diff_lines = 0;
  Verdict verdict = Verdict::Pass;

  friend bool operator==(const IntegrityRow&, const IntegrityRow&) = default;
};

struct IntegrityInput {
  std::string apk_name;
  ExecutionLog before;
  ExecutionLog after;
};

Verdict verdict_for(std::size_t diff_lines, int pass_threshold);

IntegrityRow integrity_row(const IntegrityInput& input, int pass_threshold = kDefaultPassThreshold);

/// Throws BadParams for a negative threshold.
std::vector<IntegrityRow> integrity_report(const std::vector<IntegrityInput>& inputs,
                                           int pass_threshold = kDefaultPassThreshold);

std::string report_table(const std::vector<IntegrityRow>& rows);
std::string report_csv(const std::vector<IntegrityRow>& rows);

}  // namespace gangmam
