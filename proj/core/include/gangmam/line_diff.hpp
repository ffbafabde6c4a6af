#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace gangmam {

/// A maximal run of changes: `deleted` lines of `a` starting at a_start replaced by
/// `inserted` lines of `b` starting at b_start.
struct Hunk {
  std::size_t a_start = 0;
  std::size_t deleted = 0;
  std::size_t b_start = 0;
  std::size_t inserted = 0;

  friend bool operator==(const Hunk&, const Hunk&) = default;
};

struct LineDiff {
  std::size_t deleted = 0;
  std::size_t inserted = 0;
  /// Sum over hunks of max(deleted, inserted).
  std::size_t changed_lines = 0;
  std::vector<Hunk> hunks;
};

/// Shortest edit script (Myers, linear space) between two line sequences.
LineDiff diff_lines(const std::vector<std::string>& a, const std::vector<std::string>& b);

}  // namespace gangmam
