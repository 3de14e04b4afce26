#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "hlab/errors.hpp"

namespace hlab {

using Label = int;

/// Hard cap on ground sizes for partition enumeration.  B_10 = 115975
/// partitions is the largest lattice the test suites ever walk.
inline constexpr int kDefaultMaxGroundSize = 10;

inline std::int64_t factorial(int n) {
  if (n < 0) throw ArgumentError("factorial: negative argument");
  std::int64_t r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

inline std::int64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  std::int64_t r = 1;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

/// Number of set partitions of a k-element set, via the Bell triangle.
inline std::int64_t bell_number(int k) {
  if (k < 0) throw ArgumentError("bell_number: negative argument");
  if (k == 0) return 1;
  std::vector<std::int64_t> row{1};
  for (int n = 1; n <= k; ++n) {
    std::vector<std::int64_t> next(n + 1);
    next[0] = row.back();
    for (int i = 1; i <= n; ++i) next[i] = next[i - 1] + row[i - 1];
    row.swap(next);
  }
  return row[0];
}

/// An ordered set of distinct particle labels, kept sorted ascending.
class IndexSet {
 public:
  IndexSet() = default;

  explicit IndexSet(std::vector<Label> labels) : labels_(std::move(labels)) {
    std::sort(labels_.begin(), labels_.end());
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i] < 0) throw InvariantError("IndexSet: negative label");
      if (i > 0 && labels_[i] == labels_[i - 1])
        throw InvariantError("IndexSet: duplicate label " + std::to_string(labels_[i]));
    }
  }

  /// The labels (start, start+1, ..., start+count-1).
  static IndexSet consecutive(int count, Label start = 1) {
    std::vector<Label> l(count);
    for (int i = 0; i < count; ++i) l[i] = start + i;
    return IndexSet(std::move(l));
  }

  int size() const { return static_cast<int>(labels_.size()); }
  bool empty() const { return labels_.empty(); }
  Label operator[](int i) const { return labels_[static_cast<std::size_t>(i)]; }
  const std::vector<Label>& labels() const { return labels_; }

  bool contains(Label l) const {
    return std::binary_search(labels_.begin(), labels_.end(), l);
  }

  IndexSet set_minus(const IndexSet& other) const {
    std::vector<Label> out;
    for (Label l : labels_)
      if (!other.contains(l)) out.push_back(l);
    return IndexSet(std::move(out));
  }

  friend bool operator==(const IndexSet& a, const IndexSet& b) {
    return a.labels_ == b.labels_;
  }

 private:
  std::vector<Label> labels_;
};

/// One element of a cluster tuple: a single particle, or a whole set of
/// particles frozen into one atomic cluster.
struct ClusterElement {
  IndexSet labels;
  bool is_cluster = false;

  static ClusterElement atom(Label l) { return {IndexSet({l}), false}; }

  static ClusterElement cluster(IndexSet s) {
    if (s.empty()) throw InvariantError("ClusterElement: empty cluster payload");
    return {std::move(s), true};
  }

  int particle_count() const { return labels.size(); }
};

/// A list of cluster elements with pairwise-distinct underlying labels.
/// This is the ground object partitions are taken over.
class ClusterTuple {
 public:
  ClusterTuple() = default;

  explicit ClusterTuple(std::vector<ClusterElement> elements)
      : elements_(std::move(elements)) {
    std::vector<Label> all;
    for (const auto& e : elements_)
      for (Label l : e.labels.labels()) all.push_back(l);
    flattened_ = IndexSet(std::move(all));  // throws on duplicates
  }

  /// (start, start+1, ..., start+count-1) as bare atoms.
  static ClusterTuple atoms(int count, Label start = 1) {
    std::vector<ClusterElement> e;
    e.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) e.push_back(ClusterElement::atom(start + i));
    return ClusterTuple(std::move(e));
  }

  /// ({1,...,s}, s+1, ..., s+n): one cluster followed by n atoms.
  static ClusterTuple cluster_plus_atoms(int cluster_size, int atom_count) {
    std::vector<ClusterElement> e;
    e.push_back(ClusterElement::cluster(IndexSet::consecutive(cluster_size)));
    for (int i = 0; i < atom_count; ++i)
      e.push_back(ClusterElement::atom(cluster_size + 1 + i));
    return ClusterTuple(std::move(e));
  }

  int size() const { return static_cast<int>(elements_.size()); }
  const ClusterElement& element(int i) const { return elements_[static_cast<std::size_t>(i)]; }
  const std::vector<ClusterElement>& elements() const { return elements_; }

  /// Flattens clusters back into their particle labels (the mapping theta).
  const IndexSet& declusterize() const { return flattened_; }

  int particle_count() const { return flattened_.size(); }

  /// Sub-tuple formed by the listed element positions.
  ClusterTuple subset(const std::vector<int>& element_positions) const {
    std::vector<ClusterElement> e;
    for (int p : element_positions) e.push_back(element(p));
    return ClusterTuple(std::move(e));
  }

 private:
  std::vector<ClusterElement> elements_;
  IndexSet flattened_;
};

/// A partition of the elements of a ground tuple.  Blocks store element
/// positions; positions ascend within a block and blocks are ordered by
/// their smallest position, which makes enumeration order canonical.
struct Partition {
  std::vector<std::vector<int>> blocks;

  int block_count() const { return static_cast<int>(blocks.size()); }
};

/// The signed coefficient (-1)^{|P|-1} (|P|-1)! attached to a partition in
/// every cumulant expansion.
inline std::int64_t mobius_coefficient_for_block_count(int block_count) {
  if (block_count < 0) throw ArgumentError("mobius coefficient: negative block count");
  if (block_count == 0) return 1;  // empty partition of the empty set
  std::int64_t f = factorial(block_count - 1);
  return (block_count % 2 == 1) ? f : -f;
}

inline std::int64_t mobius_coefficient(const Partition& p) {
  return mobius_coefficient_for_block_count(p.block_count());
}

/// All partitions of {0,...,k-1} in restricted-growth-string order.
inline std::vector<Partition> enumerate_partitions(int k, int limit = kDefaultMaxGroundSize) {
  if (k < 0) throw ArgumentError("enumerate_partitions: negative ground size");
  if (k > limit)
    throw ResourceLimitError("enumerate_partitions: ground size " + std::to_string(k) +
                             " exceeds limit " + std::to_string(limit));
  std::vector<Partition> out;
  if (k == 0) {
    out.push_back(Partition{});  // the empty partition
    return out;
  }
  std::vector<int> rgs(static_cast<std::size_t>(k), 0);
  // Odometer over restricted growth strings: rgs[i] <= 1 + max(rgs[0..i-1]).
  while (true) {
    Partition p;
    int nblocks = 1 + *std::max_element(rgs.begin(), rgs.end());
    p.blocks.assign(static_cast<std::size_t>(nblocks), {});
    for (int i = 0; i < k; ++i) p.blocks[static_cast<std::size_t>(rgs[i])].push_back(i);
    out.push_back(std::move(p));

    int i = k - 1;
    for (; i > 0; --i) {
      int prefix_max = 0;
      for (int j = 0; j < i; ++j) prefix_max = std::max(prefix_max, rgs[j]);
      if (rgs[i] <= prefix_max) break;
    }
    if (i == 0) break;
    ++rgs[i];
    for (int j = i + 1; j < k; ++j) rgs[j] = 0;
  }
  return out;
}

inline std::vector<Partition> enumerate_partitions(const ClusterTuple& ground,
                                                   int limit = kDefaultMaxGroundSize) {
  return enumerate_partitions(ground.size(), limit);
}

/// Sum over all partitions of a k-set of (-1)^{|P|} |P|!, by explicit
/// enumeration.  Equals (-1)^k.
inline std::int64_t alternating_partition_sum(int k, int limit = kDefaultMaxGroundSize) {
  std::int64_t sum = 0;
  for (const Partition& p : enumerate_partitions(k, limit)) {
    std::int64_t f = factorial(p.block_count());
    sum += (p.block_count() % 2 == 0) ? f : -f;
  }
  return sum;
}

/// Flatten a cluster tuple into the sorted set of its particle labels.
inline IndexSet declusterize(const ClusterTuple& t) { return t.declusterize(); }

/// Axis (0-based position within the declusterized label set) of each
/// particle of element `pos`, in label order.
inline std::vector<int> element_axes(const ClusterTuple& ground, int pos) {
  const IndexSet& all = ground.declusterize();
  std::vector<int> axes;
  for (Label l : ground.element(pos).labels.labels()) {
    int a = static_cast<int>(std::lower_bound(all.labels().begin(), all.labels().end(), l) -
                             all.labels().begin());
    axes.push_back(a);
  }
  return axes;
}

/// Sorted axes covered by a block of element positions.
inline std::vector<int> block_axes(const ClusterTuple& ground, const std::vector<int>& block) {
  std::vector<int> axes;
  for (int pos : block) {
    auto a = element_axes(ground, pos);
    axes.insert(axes.end(), a.begin(), a.end());
  }
  std::sort(axes.begin(), axes.end());
  return axes;
}

}  // namespace hlab
