#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace segnet {

using NodeIndex = std::int32_t;
using Edge = std::pair<NodeIndex, NodeIndex>;

// Immutable simple undirected graph stored in compressed sparse row form.
// Neighbor lists are sorted ascending and symmetric; there are no self-loops
// and no parallel edges.
class UndirectedGraph {
 public:
  UndirectedGraph() = default;

  // Builds a simple graph over nodes [0, node_count). Reversed and repeated
  // pairs collapse to a single edge and self-loops are dropped. Throws
  // std::out_of_range if a pair references a node outside the range.
  static UndirectedGraph from_edges(std::size_t node_count, std::span<const Edge> edges);

  std::size_t node_count() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t edge_count() const { return neighbors_.size() / 2; }
  bool empty() const { return node_count() == 0; }

  std::size_t degree(NodeIndex v) const {
    return offsets_[static_cast<std::size_t>(v) + 1] - offsets_[static_cast<std::size_t>(v)];
  }
  std::span<const NodeIndex> neighbors(NodeIndex v) const {
    const auto begin = offsets_[static_cast<std::size_t>(v)];
    return {neighbors_.data() + begin, degree(v)};
  }
  bool has_edge(NodeIndex u, NodeIndex v) const;

  // Each edge once, as (u, v) with u < v, in lexicographic order.
  std::vector<Edge> edges() const;
  std::vector<std::size_t> degrees() const;

  friend bool operator==(const UndirectedGraph&, const UndirectedGraph&) = default;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<NodeIndex> neighbors_;
};

// A graph built from opaque string ids, with the id <-> index mapping.
struct LabeledGraph {
  UndirectedGraph graph;
  std::vector<std::string> node_ids;  // index -> id
  std::unordered_map<std::string, NodeIndex> index_of;
};

// Builds a simple graph from id pairs. When `node_ids` is non-empty it fixes
// the node set and order, and an edge naming an unknown id throws
// std::invalid_argument carrying that id. Otherwise nodes are numbered in
// order of first appearance.
LabeledGraph build_graph(std::span<const std::pair<std::string, std::string>> edge_list,
                         std::span<const std::string> node_ids = {});

// An induced subgraph together with both directions of the index mapping.
// old_to_new holds -1 for nodes that were not kept.
struct Subgraph {
  UndirectedGraph graph;
  std::vector<NodeIndex> new_to_old;
  std::vector<NodeIndex> old_to_new;
};

Subgraph induced_subgraph(const UndirectedGraph& g, const std::vector<bool>& keep);

// Component id per node; ids are numbered by the smallest node index they contain.
std::vector<NodeIndex> connected_components(const UndirectedGraph& g, std::size_t* count = nullptr);

// Largest connected component. Ties go to the component holding the smallest
// original index. Throws std::invalid_argument on an empty graph.
Subgraph largest_connected_component(const UndirectedGraph& g);

// Mean over all nodes of the local clustering coefficient; nodes of degree < 2
// contribute 0.
double mean_local_clustering(const UndirectedGraph& g);

struct NetworkStats {
  std::size_t n_nodes = 0;
  std::size_t n_edges = 0;
  double density = 0.0;
  double mean_degree = 0.0;
  double mean_clustering = 0.0;
  std::size_t n_components = 0;
  double lcc_node_fraction = 0.0;
  double lcc_edge_fraction = 0.0;
  // Same quantities on the component itself.
  std::size_t lcc_nodes = 0;
  std::size_t lcc_edges = 0;
  double lcc_density = 0.0;
  double lcc_mean_degree = 0.0;
  double lcc_mean_clustering = 0.0;
};

NetworkStats network_stats(const UndirectedGraph& g, const UndirectedGraph& lcc);

}  // namespace segnet
