#pragma once

#include <numeric>
#include <stdexcept>
#include <vector>

namespace sentattn {

// Maps a token sequence of length N onto n1 sentences with per-sentence
// token counts J_i. Sentence indices are 0-based in code; the dataset file
// format uses 1-based indices and converts at the I/O boundary.
class SentencePartition {
 public:
  SentencePartition() = default;
  explicit SentencePartition(std::vector<int> lengths) : lengths_(std::move(lengths)) {
    if (lengths_.empty()) throw std::invalid_argument("partition: no sentences");
    offsets_.reserve(lengths_.size() + 1);
    offsets_.push_back(0);
    for (int j : lengths_) {
      if (j < 1) throw std::invalid_argument("partition: sentence length < 1");
      offsets_.push_back(offsets_.back() + j);
    }
  }

  int sentences() const { return static_cast<int>(lengths_.size()); }  // N1
  int tokens() const { return offsets_.back(); }                       // N
  double mean_length() const {                                         // N2
    return static_cast<double>(tokens()) / sentences();
  }
  int length(int i) const { return lengths_[static_cast<std::size_t>(i)]; }  // J_i
  int offset(int i) const { return offsets_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& lengths() const { return lengths_; }

  // sentence index owning token position t
  int sentence_of(int t) const {
    int lo = 0, hi = sentences() - 1;
    while (lo < hi) {
      int mid = (lo + hi + 1) / 2;
      if (offsets_[static_cast<std::size_t>(mid)] <= t)
        lo = mid;
      else
        hi = mid - 1;
    }
    return lo;
  }

  bool operator==(const SentencePartition& o) const { return lengths_ == o.lengths_; }

 private:
  std::vector<int> lengths_;
  std::vector<int> offsets_;
};

}  // namespace sentattn
