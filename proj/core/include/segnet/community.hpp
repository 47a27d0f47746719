#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "segnet/graph.hpp"

namespace segnet {

// Hard assignment of every node to a community, with the within/between
// edge bookkeeping used by the segregation measures. Labels are contiguous
// from 1 in order of first appearance.
class Partition {
 public:
  Partition() = default;
  // Relabels `labels` (any integers, one per node) contiguously and computes
  // sizes and within/between edge and degree counts on `g`.
  Partition(const UndirectedGraph& g, std::span<const int> labels);

  std::span<const int> assignment() const { return assignment_; }
  int community(NodeIndex v) const { return assignment_[static_cast<std::size_t>(v)]; }
  std::size_t n_communities() const { return sizes_.size(); }
  std::span<const std::size_t> sizes() const { return sizes_; }
  std::size_t node_count() const { return assignment_.size(); }

  std::size_t m_within() const { return m_within_; }
  std::size_t m_between() const { return m_between_; }
  std::span<const std::size_t> within_degrees() const { return within_degrees_; }
  std::span<const std::size_t> between_degrees() const { return between_degrees_; }

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<int> assignment_;
  std::vector<std::size_t> sizes_;
  std::size_t m_within_ = 0;
  std::size_t m_between_ = 0;
  std::vector<std::size_t> within_degrees_;
  std::vector<std::size_t> between_degrees_;
};

// Newman modularity of a node labeling,
//   Q = 1/(2m) sum_ij [A_ij - k_i k_j / (2m)] delta(c_i, c_j),
// over all ordered pairs including i = j. Evaluated through per-community
// degree sums. Throws std::invalid_argument when the graph has no edges or
// the labeling has the wrong length.
double modularity(const UndirectedGraph& g, std::span<const int> labels);
double modularity_of_partition(const UndirectedGraph& g, const Partition& p);

struct LouvainOptions {
  std::uint64_t seed = 1;
  // A level stops when a full sweep improves modularity by no more than this.
  double min_gain = 1e-10;
  int max_sweeps_per_level = 1000;
};

struct LouvainResult {
  Partition partition;
  double modularity = 0.0;                 // of `partition` on the input graph
  std::vector<double> level_modularities;  // after each aggregation level
};

// Multi-level Louvain modularity maximization (resolution 1). Node visit
// order in each sweep is shuffled from the seed. Throws
// std::invalid_argument for a graph without edges.
LouvainResult louvain(const UndirectedGraph& g, const LouvainOptions& opts = {});

struct NmiResult {
  double value = 0.0;  // I / max(H_a, H_b)
  double mutual_information = 0.0;
  double entropy_a = 0.0;
  double entropy_b = 0.0;
  std::size_t n_used = 0;
  // Both labelings constant on the used nodes; value is reported as 0.
  bool degenerate = false;
};

// Normalized mutual information between two labelings of the same nodes,
// using natural logarithms. Nodes unlabeled in either input are skipped.
// Throws std::invalid_argument when no node is labeled in both.
NmiResult nmi(std::span<const std::optional<int>> labels_a, std::span<const std::optional<int>> labels_b);
NmiResult nmi(std::span<const int> labels_a, std::span<const int> labels_b);

}  // namespace segnet
