#include "gangmam/line_diff.hpp"

#include <algorithm>
#include <cstdint>
#include <string_view>
#include <unordered_map>

namespace gangmam {

namespace {

struct Snake {
  std::ptrdiff_t left_x, left_y;    // end of the left subproblem
  std::ptrdiff_t right_x, right_y;  // start of the right subproblem
};

class Myers {
 public:
  Myers(std::vector<std::uint32_t> a, std::vector<std::uint32_t> b)
      : a_(std::move(a)), b_(std::move(b)), deleted_(a_.size()), inserted_(b_.size()) {}

  void run() { compare(0, static_cast<std::ptrdiff_t>(a_.size()), 0, static_cast<std::ptrdiff_t>(b_.size())); }

  const std::vector<char>& deleted() const { return deleted_; }
  const std::vector<char>& inserted() const { return inserted_; }

 private:
  void compare(std::ptrdiff_t alo, std::ptrdiff_t ahi, std::ptrdiff_t blo, std::ptrdiff_t bhi) {
    while (alo < ahi && blo < bhi && a_[alo] == b_[blo]) ++alo, ++blo;
    while (alo < ahi && blo < bhi && a_[ahi - 1] == b_[bhi - 1]) --ahi, --bhi;
    if (alo == ahi) {
      for (auto j = blo; j < bhi; ++j) inserted_[j] = 1;
      return;
    }
    if (blo == bhi) {
      for (auto i = alo; i < ahi; ++i) deleted_[i] = 1;
      return;
    }
    auto s = middle_snake(alo, ahi, blo, bhi);
    compare(alo, alo + s.left_x, blo, blo + s.left_y);
    compare(alo + s.right_x, ahi, blo + s.right_y, bhi);
  }

  // Coordinates in the result are relative to (alo, blo).
  Snake middle_snake(std::ptrdiff_t alo, std::ptrdiff_t ahi, std::ptrdiff_t blo, std::ptrdiff_t bhi) {
    const std::ptrdiff_t n = ahi - alo, m = bhi - blo;
    const std::ptrdiff_t delta = n - m;
    const bool odd = (delta & 1) != 0;
    const std::ptrdiff_t dmax = (n + m + 1) / 2;
    const std::ptrdiff_t off = dmax + 1;
    std::vector<std::ptrdiff_t> vf(2 * off + 1, 0), vb(2 * off + 1, 0);
    auto A = [&](std::ptrdiff_t x) { return a_[alo + x]; };
    auto B = [&](std::ptrdiff_t y) { return b_[blo + y]; };

    for (std::ptrdiff_t d = 0; d <= dmax; ++d) {
      for (std::ptrdiff_t k = -d; k <= d; k += 2) {
        std::ptrdiff_t x = (k == -d || (k != d && vf[off + k - 1] < vf[off + k + 1]))
                               ? vf[off + k + 1]
                               : vf[off + k - 1] + 1;
        std::ptrdiff_t y = x - k;
        const std::ptrdiff_t x0 = x, y0 = y;
        while (x < n && y < m && A(x) == B(y)) ++x, ++y;
        vf[off + k] = x;
        const std::ptrdiff_t kr = delta - k;
        if (odd && kr >= -(d - 1) && kr <= d - 1 && x + vb[off + kr] >= n) {
          return {x0, y0, x, y};
        }
      }
      for (std::ptrdiff_t kr = -d; kr <= d; kr += 2) {
        std::ptrdiff_t x = (kr == -d || (kr != d && vb[off + kr - 1] < vb[off + kr + 1]))
                               ? vb[off + kr + 1]
                               : vb[off + kr - 1] + 1;
        std::ptrdiff_t y = x - kr;
        const std::ptrdiff_t x0 = x, y0 = y;
        while (x < n && y < m && A(n - 1 - x) == B(m - 1 - y)) ++x, ++y;
        vb[off + kr] = x;
        const std::ptrdiff_t k = delta - kr;
        if (!odd && k >= -d && k <= d && x + vf[off + k] >= n) {
          return {n - x, m - y, n - x0, m - y0};
        }
      }
    }
    // unreachable for non-empty inputs; fall back to replacing everything
    return {n, 0, n, m};
  }

  std::vector<std::uint32_t> a_, b_;
  std::vector<char> deleted_, inserted_;
};

}  // namespace

LineDiff diff_lines(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::unordered_map<std::string_view, std::uint32_t> ids;
  auto intern = [&](const std::vector<std::string>& lines) {
    std::vector<std::uint32_t> out;
    out.reserve(lines.size());
    for (const auto& l : lines) {
      auto [it, fresh] = ids.try_emplace(l, static_cast<std::uint32_t>(ids.size()));
      out.push_back(it->second);
    }
    return out;
  };
  auto ia = intern(a);
  auto ib = intern(b);
  Myers myers(std::move(ia), std::move(ib));
  myers.run();
  const auto& del = myers.deleted();
  const auto& ins = myers.inserted();

  LineDiff out;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    const bool di = i < a.size() && del[i];
    const bool ij = j < b.size() && ins[j];
    if (!di && !ij) {
      ++i, ++j;
      continue;
    }
    Hunk h{i, 0, j, 0};
    while ((i < a.size() && del[i]) || (j < b.size() && ins[j])) {
      if (i < a.size() && del[i]) ++i, ++h.deleted;
      if (j < b.size() && ins[j]) ++j, ++h.inserted;
    }
    out.deleted += h.deleted;
    out.inserted += h.inserted;
    out.changed_lines += std::max(h.deleted, h.inserted);
    out.hunks.push_back(h);
  }
  return out;
}

}  // namespace gangmam
