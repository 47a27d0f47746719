#include "segnet/graph.hpp"

#include <algorithm>
#include <stdexcept>

namespace segnet {

UndirectedGraph UndirectedGraph::from_edges(std::size_t node_count, std::span<const Edge> edges) {
  std::vector<Edge> canon;
  canon.reserve(edges.size());
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= node_count ||
        static_cast<std::size_t>(v) >= node_count) {
      throw std::out_of_range("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                              ") references a node outside [0, " + std::to_string(node_count) + ")");
    }
    if (u == v) continue;
    canon.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(canon.begin(), canon.end());
  canon.erase(std::unique(canon.begin(), canon.end()), canon.end());

  UndirectedGraph g;
  g.offsets_.assign(node_count + 1, 0);
  for (auto [u, v] : canon) {
    ++g.offsets_[static_cast<std::size_t>(u) + 1];
    ++g.offsets_[static_cast<std::size_t>(v) + 1];
  }
  for (std::size_t i = 0; i < node_count; ++i) g.offsets_[i + 1] += g.offsets_[i];

  g.neighbors_.resize(2 * canon.size());
  std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  for (auto [u, v] : canon) {
    g.neighbors_[cursor[static_cast<std::size_t>(u)]++] = v;
    g.neighbors_[cursor[static_cast<std::size_t>(v)]++] = u;
  }
  for (std::size_t i = 0; i < node_count; ++i) {
    std::sort(g.neighbors_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i]),
              g.neighbors_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i + 1]));
  }
  return g;
}

bool UndirectedGraph::has_edge(NodeIndex u, NodeIndex v) const {
  if (degree(u) > degree(v)) std::swap(u, v);
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<Edge> UndirectedGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count());
  for (std::size_t u = 0; u < node_count(); ++u) {
    for (NodeIndex v : neighbors(static_cast<NodeIndex>(u))) {
      if (static_cast<NodeIndex>(u) < v) out.emplace_back(static_cast<NodeIndex>(u), v);
    }
  }
  return out;
}

std::vector<std::size_t> UndirectedGraph::degrees() const {
  std::vector<std::size_t> out(node_count());
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = degree(static_cast<NodeIndex>(v));
  return out;
}

LabeledGraph build_graph(std::span<const std::pair<std::string, std::string>> edge_list,
                         std::span<const std::string> node_ids) {
  LabeledGraph out;
  const bool fixed = !node_ids.empty();
  for (const auto& id : node_ids) {
    auto [it, inserted] = out.index_of.emplace(id, static_cast<NodeIndex>(out.node_ids.size()));
    if (!inserted) throw std::invalid_argument("duplicate node id: " + id);
    out.node_ids.push_back(id);
  }

  auto lookup = [&](const std::string& id) -> NodeIndex {
    if (auto it = out.index_of.find(id); it != out.index_of.end()) return it->second;
    if (fixed) throw std::invalid_argument("edge references unknown node id: " + id);
    auto idx = static_cast<NodeIndex>(out.node_ids.size());
    out.index_of.emplace(id, idx);
    out.node_ids.push_back(id);
    return idx;
  };

  std::vector<Edge> edges;
  edges.reserve(edge_list.size());
  for (const auto& [a, b] : edge_list) {
    NodeIndex u = lookup(a);
    NodeIndex v = lookup(b);
    edges.emplace_back(u, v);
  }
  out.graph = UndirectedGraph::from_edges(out.node_ids.size(), edges);
  return out;
}

Subgraph induced_subgraph(const UndirectedGraph& g, const std::vector<bool>& keep) {
  if (keep.size() != g.node_count()) {
    throw std::invalid_argument("induced_subgraph: mask size does not match node count");
  }
  Subgraph out;
  out.old_to_new.assign(g.node_count(), -1);
  for (std::size_t v = 0; v < keep.size(); ++v) {
    if (keep[v]) {
      out.old_to_new[v] = static_cast<NodeIndex>(out.new_to_old.size());
      out.new_to_old.push_back(static_cast<NodeIndex>(v));
    }
  }
  std::vector<Edge> edges;
  for (auto [u, v] : g.edges()) {
    auto nu = out.old_to_new[static_cast<std::size_t>(u)];
    auto nv = out.old_to_new[static_cast<std::size_t>(v)];
    if (nu >= 0 && nv >= 0) edges.emplace_back(nu, nv);
  }
  out.graph = UndirectedGraph::from_edges(out.new_to_old.size(), edges);
  return out;
}

std::vector<NodeIndex> connected_components(const UndirectedGraph& g, std::size_t* count) {
  std::vector<NodeIndex> comp(g.node_count(), -1);
  std::vector<NodeIndex> stack;
  NodeIndex next = 0;
  for (std::size_t s = 0; s < g.node_count(); ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = next;
    stack.push_back(static_cast<NodeIndex>(s));
    while (!stack.empty()) {
      NodeIndex u = stack.back();
      stack.pop_back();
      for (NodeIndex v : g.neighbors(u)) {
        if (comp[static_cast<std::size_t>(v)] < 0) {
          comp[static_cast<std::size_t>(v)] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  if (count) *count = static_cast<std::size_t>(next);
  return comp;
}

Subgraph largest_connected_component(const UndirectedGraph& g) {
  if (g.empty()) throw std::invalid_argument("largest_connected_component: empty graph");
  std::size_t n_comp = 0;
  auto comp = connected_components(g, &n_comp);
  std::vector<std::size_t> sizes(n_comp, 0);
  for (auto c : comp) ++sizes[static_cast<std::size_t>(c)];
  // Components are numbered by smallest member, so the first maximum wins ties.
  auto best = static_cast<NodeIndex>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  std::vector<bool> keep(g.node_count());
  for (std::size_t v = 0; v < comp.size(); ++v) keep[v] = comp[v] == best;
  return induced_subgraph(g, keep);
}

double mean_local_clustering(const UndirectedGraph& g) {
  const std::size_t n = g.node_count();
  if (n == 0) return 0.0;
  std::vector<char> mark(n, 0);
  double total = 0.0;
  for (std::size_t u = 0; u < n; ++u) {
    auto nb = g.neighbors(static_cast<NodeIndex>(u));
    const std::size_t k = nb.size();
    if (k < 2) continue;
    for (NodeIndex v : nb) mark[static_cast<std::size_t>(v)] = 1;
    std::size_t links = 0;
    for (NodeIndex v : nb) {
      for (NodeIndex w : g.neighbors(v)) {
        if (w > v && mark[static_cast<std::size_t>(w)]) ++links;
      }
    }
    for (NodeIndex v : nb) mark[static_cast<std::size_t>(v)] = 0;
    total += static_cast<double>(links) / (0.5 * static_cast<double>(k) * static_cast<double>(k - 1));
  }
  return total / static_cast<double>(n);
}

namespace {

double density_of(std::size_t n, std::size_t m) {
  if (n < 2) return 0.0;
  return 2.0 * static_cast<double>(m) / (static_cast<double>(n) * static_cast<double>(n - 1));
}

double mean_degree_of(std::size_t n, std::size_t m) {
  return n == 0 ? 0.0 : 2.0 * static_cast<double>(m) / static_cast<double>(n);
}

}  // namespace

NetworkStats network_stats(const UndirectedGraph& g, const UndirectedGraph& lcc) {
  NetworkStats s;
  s.n_nodes = g.node_count();
  s.n_edges = g.edge_count();
  s.density = density_of(s.n_nodes, s.n_edges);
  s.mean_degree = mean_degree_of(s.n_nodes, s.n_edges);
  s.mean_clustering = mean_local_clustering(g);
  connected_components(g, &s.n_components);

  s.lcc_nodes = lcc.node_count();
  s.lcc_edges = lcc.edge_count();
  s.lcc_density = density_of(s.lcc_nodes, s.lcc_edges);
  s.lcc_mean_degree = mean_degree_of(s.lcc_nodes, s.lcc_edges);
  s.lcc_mean_clustering = mean_local_clustering(lcc);
  s.lcc_node_fraction =
      s.n_nodes == 0 ? 0.0 : static_cast<double>(s.lcc_nodes) / static_cast<double>(s.n_nodes);
  s.lcc_edge_fraction =
      s.n_edges == 0 ? 1.0 : static_cast<double>(s.lcc_edges) / static_cast<double>(s.n_edges);
  return s;
}

}  // namespace segnet
