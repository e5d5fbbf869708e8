// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

namespace hedge {

// Disjoint-set forest with path halving and union by size.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) noexcept {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // Returns the surviving root.
  std::size_t unite(std::size_t a, std::size_t b) noexcept {
    a = find(a);
    b = find(b);
    if (a == b) return a;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return a;
  }

  bool same(std::size_t a, std::size_t b) noexcept { return find(a) == find(b); }
  std::size_t size() const noexcept { return parent_.size(); }

  // Root id per element; feed to canonicalize_labels for a gapless labeling.
  std::vector<std::size_t> roots() {
    std::vector<std::size_t> r(parent_.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = find(i);
    return r;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

}  // namespace hedge
