#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rkz/rng.hpp"

namespace rkz {

// Weighted random selection without replacement: each draw picks a not-yet-
// drawn index with probability proportional to its weight, in O(log m) via a
// Fenwick tree over the weights. A pass over all m indices yields a
// permutation; further draws signal exhaustion. Deterministic per seed.
class WeightedSampler {
 public:
  WeightedSampler(std::span<const double> weights, std::uint64_t seed)
      : size_(weights.size()),
        live_weight_(weights.begin(), weights.end()),
        tree_(weights.size() + 1, 0.0),
        remaining_(weights.size()),
        rng_(CounterRng::keyed(seed, 0)) {
    if (size_ == 0) throw std::invalid_argument("WeightedSampler: no weights");
    for (std::size_t i = 0; i < size_; ++i) {
      if (!(weights[i] > 0.0))
        throw std::invalid_argument("WeightedSampler: weights must be positive");
      tree_add(i, weights[i]);
    }
  }

  std::size_t size() const { return size_; }
  std::size_t remaining() const { return remaining_; }

  // Root of the tree = sum of still-live weights (up to accumulated rounding).
  double total_weight() const { return tree_prefix(size_); }

  std::optional<std::size_t> next() {
    if (remaining_ == 0) return std::nullopt;
    std::size_t idx;
    if (remaining_ == 1) {
      // avoid hunting for the last nonzero prefix through rounding residue
      idx = 0;
      while (live_weight_[idx] == 0.0) ++idx;
    } else {
      idx = tree_search(rng_.next_unit() * total_weight());
      if (live_weight_[idx] == 0.0) {
        // rounding residue pushed the search onto a drained index
        std::size_t lo = idx;
        while (lo > 0 && live_weight_[lo] == 0.0) --lo;
        if (live_weight_[lo] != 0.0) {
          idx = lo;
        } else {
          while (idx + 1 < size_ && live_weight_[idx] == 0.0) ++idx;
        }
      }
    }
    tree_add(idx, -live_weight_[idx]);
    live_weight_[idx] = 0.0;
    --remaining_;
    return idx;
  }

 private:
  void tree_add(std::size_t i, double delta) {
    for (std::size_t j = i + 1; j <= size_; j += j & (0 - j)) tree_[j] += delta;
  }

  double tree_prefix(std::size_t count) const {
    double s = 0.0;
    for (std::size_t j = count; j > 0; j -= j & (0 - j)) s += tree_[j];
    return s;
  }

  // Smallest index whose inclusive prefix sum exceeds target.
  std::size_t tree_search(double target) const {
    std::size_t idx = 0;
    std::size_t bit = 1;
    while ((bit << 1) <= size_) bit <<= 1;
    for (; bit != 0; bit >>= 1) {
      const std::size_t next = idx + bit;
      if (next <= size_ && tree_[next] <= target) {
        idx = next;
        target -= tree_[next];
      }
    }
    return idx < size_ ? idx : size_ - 1;
  }

  std::size_t size_;
  std::vector<double> live_weight_;
  std::vector<double> tree_;
  std::size_t remaining_;
  CounterRng rng_;
};

// Deterministic pass 0, 1, ..., m-1; the in-order policy used when rows are
// i.i.d. draws already.
class InOrderSampler {
 public:
  explicit InOrderSampler(std::size_t m) : size_(m) {}

  std::size_t size() const { return size_; }
  std::size_t remaining() const { return size_ - next_; }

  std::optional<std::size_t> next() {
    if (next_ >= size_) return std::nullopt;
    return next_++;
  }

 private:
  std::size_t size_;
  std::size_t next_ = 0;
};

}  // namespace rkz
