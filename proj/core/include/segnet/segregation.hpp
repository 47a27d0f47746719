#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segnet/community.hpp"
#include "segnet/graph.hpp"

namespace segnet {

// Per-node categorical label; std::nullopt marks a missing attribute.
using Labels = std::vector<std::optional<int>>;

// Modularity of an attribute labeling. Computed on the subgraph induced by
// labeled nodes, with degrees and edge count recomputed there. Throws
// std::invalid_argument if that subgraph has no edges.
double attribute_modularity(const UndirectedGraph& g, std::span<const std::optional<int>> labels);

struct NormalizedModularity {
  double q = 0.0;
  double q_max = 0.0;
  double q_norm = 0.0;  // q / q_max
  // q_max == 0: a single (community, category) cell holds every endpoint, so
  // q is also 0; q_norm is reported as 0.
  bool degenerate = false;
};

// Within-community attribute modularity
//   Q^w = 1/(2m^w) sum_ij [A_ij - k^w_i k^w_j / (2m^w)] d(x_i,x_j) d(h_i,h_j)
// and its normalization by Q^w_max = 1/(2m^w) (2m^w - sum_ij k^w_i k^w_j/(2m^w) d d).
// Labeled nodes only, as for attribute_modularity; the partition is restricted
// to them. Throws std::invalid_argument when no within-community edge remains.
NormalizedModularity within_community_modularity(const UndirectedGraph& g,
                                                 std::span<const std::optional<int>> labels,
                                                 const Partition& p);

// Between-community counterpart with k^b, m^b and (1 - d(h_i,h_j)). Throws
// std::invalid_argument when no between-community edge remains.
NormalizedModularity between_community_modularity(const UndirectedGraph& g,
                                                  std::span<const std::optional<int>> labels,
                                                  const Partition& p);

struct SegregationReport {
  std::string attribute;
  double q_attr = 0.0;
  NormalizedModularity within;
  NormalizedModularity between;
  std::size_t n_used = 0;
  std::size_t m_within = 0;  // on the labeled subgraph
  std::size_t m_between = 0;
};

SegregationReport segregation_report(const UndirectedGraph& g, std::span<const std::optional<int>> labels,
                                     const Partition& p, std::string attribute);

struct CommunityNode {
  int community = 0;  // label in the partition
  std::size_t size = 0;
  std::size_t observed = 0;  // members with the attribute present
  std::vector<double> composition;  // fraction per category among observed members
  double missing_fraction = 0.0;
};

struct CommunityEdge {
  int a = 0;  // community labels, a < b
  int b = 0;
  std::size_t ties = 0;
  std::size_t possible = 0;  // |C_a| * |C_b|
};

struct CommunityNetwork {
  std::vector<CommunityNode> nodes;
  std::vector<CommunityEdge> edges;
  double node_min_fraction = 0.05;
  double edge_min_fraction = 0.05;
  std::size_t n_categories = 0;
  double retained_node_fraction = 0.0;  // nodes in retained communities / n
  double retained_tie_fraction = 0.0;   // ties on retained edges / m
};

// Community-level network: communities holding at least node_min of all
// nodes, joined when their cross ties reach edge_min of |C_a||C_b| (and at
// least one tie exists). `n_categories` sizes the composition vectors.
// Throws std::invalid_argument if a threshold is outside [0, 1) or no
// community passes the node threshold.
CommunityNetwork build_community_network(const UndirectedGraph& g, const Partition& p,
                                         std::span<const std::optional<int>> labels, std::size_t n_categories,
                                         double node_min = 0.05, double edge_min = 0.05);

// Graphviz export; each node is annotated with its size and composition.
std::string to_dot(const CommunityNetwork& net, std::span<const std::string> category_names = {});
// JSON document with `nodes` (size, composition) and `edges` (ties, possible).
std::string to_json(const CommunityNetwork& net, std::span<const std::string> category_names = {});

}  // namespace segnet
