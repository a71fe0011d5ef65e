#pragma once
// Streaming pairwise (binary-counter) summation: single pass, O(log N) state.
// Combination order depends only on the push sequence, so identical inputs
// produce bit-identical totals; accuracy is O(log N) rounding growth.

#include <array>
#include <cstddef>
#include <cstdint>

namespace qht::detail {

class PairwiseSum {
 public:
  void push(double v) {
    std::uint64_t c = count_++;
    std::size_t level = 0;
    while (c & 1u) {
      v += slots_[level];
      ++level;
      c >>= 1;
    }
    slots_[level] = v;
  }

  // Partial sums combined smallest block first.
  double total() const {
    double s = 0.0;
    std::uint64_t c = count_;
    for (std::size_t level = 0; level < kLevels && c != 0; ++level, c >>= 1)
      if (c & 1u) s += slots_[level];
    return s;
  }

  std::uint64_t count() const { return count_; }

 private:
  static constexpr std::size_t kLevels = 64;
  std::array<double, kLevels> slots_{};
  std::uint64_t count_ = 0;
};

}  // namespace qht::detail
