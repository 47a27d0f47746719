#include "segnet/segregation.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "segnet/csv.hpp"

namespace segnet {

namespace {

// Labeled subgraph with community labels carried over.
struct Restricted {
  UndirectedGraph graph;
  std::vector<int> attr;
  std::vector<int> comm;
};

Restricted restrict_to_labeled(const UndirectedGraph& g, std::span<const std::optional<int>> labels,
                               std::span<const int> communities) {
  if (labels.size() != g.node_count()) throw std::invalid_argument("labels do not cover every node");
  if (!communities.empty() && communities.size() != g.node_count()) {
    throw std::invalid_argument("partition does not cover every node");
  }
  std::vector<bool> keep(g.node_count());
  for (std::size_t v = 0; v < keep.size(); ++v) keep[v] = labels[v].has_value();
  auto sub = induced_subgraph(g, keep);
  Restricted r;
  r.graph = std::move(sub.graph);
  for (auto old : sub.new_to_old) {
    r.attr.push_back(*labels[static_cast<std::size_t>(old)]);
    if (!communities.empty()) r.comm.push_back(communities[static_cast<std::size_t>(old)]);
  }
  return r;
}

using Cell = std::pair<int, int>;  // (community, category)

NormalizedModularity normalize(double edge_term, double null_term, double two_m) {
  NormalizedModularity out;
  out.q = (edge_term - null_term / two_m) / two_m;
  out.q_max = (two_m - null_term / two_m) / two_m;
  if (out.q_max == 0.0) {
    out.degenerate = true;
    out.q_norm = 0.0;
  } else {
    out.q_norm = out.q / out.q_max;
  }
  return out;
}

// Within/between degrees, edge counts and same-category edge terms on a
// restricted graph.
struct SplitCounts {
  std::vector<std::int64_t> kw, kb;
  std::int64_t m_within = 0, m_between = 0;
  std::int64_t same_within = 0, same_between = 0;  // edges joining equal categories
};

SplitCounts split(const Restricted& r) {
  SplitCounts s;
  s.kw.assign(r.graph.node_count(), 0);
  s.kb.assign(r.graph.node_count(), 0);
  for (auto [u, v] : r.graph.edges()) {
    const auto su = static_cast<std::size_t>(u);
    const auto sv = static_cast<std::size_t>(v);
    const bool same_attr = r.attr[su] == r.attr[sv];
    if (r.comm[su] == r.comm[sv]) {
      ++s.m_within;
      ++s.kw[su];
      ++s.kw[sv];
      if (same_attr) ++s.same_within;
    } else {
      ++s.m_between;
      ++s.kb[su];
      ++s.kb[sv];
      if (same_attr) ++s.same_between;
    }
  }
  return s;
}

NormalizedModularity within_from(const Restricted& r, const SplitCounts& s) {
  if (s.m_within == 0) throw std::invalid_argument("no within-community edges among labeled nodes");
  std::map<Cell, std::int64_t> cell_sum;
  for (std::size_t i = 0; i < r.attr.size(); ++i) cell_sum[{r.comm[i], r.attr[i]}] += s.kw[i];
  std::int64_t null_term = 0;
  for (const auto& [c, x] : cell_sum) null_term += x * x;
  return normalize(2.0 * static_cast<double>(s.same_within), static_cast<double>(null_term),
                   2.0 * static_cast<double>(s.m_within));
}

NormalizedModularity between_from(const Restricted& r, const SplitCounts& s) {
  if (s.m_between == 0) throw std::invalid_argument("no between-community edges among labeled nodes");
  std::map<Cell, std::int64_t> cell_sum;
  std::map<int, std::int64_t> cat_sum;
  for (std::size_t i = 0; i < r.attr.size(); ++i) {
    cell_sum[{r.comm[i], r.attr[i]}] += s.kb[i];
    cat_sum[r.attr[i]] += s.kb[i];
  }
  // sum_ij k_i k_j d(x) (1 - d(h)) = sum_a S_a^2 - sum_(c,a) S_ca^2
  std::int64_t null_term = 0;
  for (const auto& [a, x] : cat_sum) null_term += x * x;
  for (const auto& [c, x] : cell_sum) null_term -= x * x;
  return normalize(2.0 * static_cast<double>(s.same_between), static_cast<double>(null_term),
                   2.0 * static_cast<double>(s.m_between));
}

}  // namespace

double attribute_modularity(const UndirectedGraph& g, std::span<const std::optional<int>> labels) {
  auto r = restrict_to_labeled(g, labels, {});
  if (r.graph.edge_count() == 0) throw std::invalid_argument("no edges among labeled nodes");
  std::int64_t same = 0;
  for (auto [u, v] : r.graph.edges()) {
    if (r.attr[static_cast<std::size_t>(u)] == r.attr[static_cast<std::size_t>(v)]) ++same;
  }
  std::map<int, std::int64_t> cat_sum;
  for (std::size_t i = 0; i < r.attr.size(); ++i) {
    cat_sum[r.attr[i]] += static_cast<std::int64_t>(r.graph.degree(static_cast<NodeIndex>(i)));
  }
  std::int64_t null_term = 0;
  for (const auto& [a, x] : cat_sum) null_term += x * x;
  const double two_m = 2.0 * static_cast<double>(r.graph.edge_count());
  return (2.0 * static_cast<double>(same) - static_cast<double>(null_term) / two_m) / two_m;
}

NormalizedModularity within_community_modularity(const UndirectedGraph& g,
                                                 std::span<const std::optional<int>> labels,
                                                 const Partition& p) {
  auto r = restrict_to_labeled(g, labels, p.assignment());
  return within_from(r, split(r));
}

NormalizedModularity between_community_modularity(const UndirectedGraph& g,
                                                  std::span<const std::optional<int>> labels,
                                                  const Partition& p) {
  auto r = restrict_to_labeled(g, labels, p.assignment());
  return between_from(r, split(r));
}

SegregationReport segregation_report(const UndirectedGraph& g, std::span<const std::optional<int>> labels,
                                     const Partition& p, std::string attribute) {
  SegregationReport rep;
  rep.attribute = std::move(attribute);
  auto r = restrict_to_labeled(g, labels, p.assignment());
  auto s = split(r);
  rep.n_used = r.graph.node_count();
  rep.m_within = static_cast<std::size_t>(s.m_within);
  rep.m_between = static_cast<std::size_t>(s.m_between);
  rep.q_attr = attribute_modularity(g, labels);
  rep.within = within_from(r, s);
  rep.between = between_from(r, s);
  return rep;
}

CommunityNetwork build_community_network(const UndirectedGraph& g, const Partition& p,
                                         std::span<const std::optional<int>> labels, std::size_t n_categories,
                                         double node_min, double edge_min) {
  if (node_min < 0.0 || node_min >= 1.0 || edge_min < 0.0 || edge_min >= 1.0) {
    throw std::invalid_argument("community network thresholds must lie in [0, 1)");
  }
  if (p.node_count() != g.node_count() || labels.size() != g.node_count()) {
    throw std::invalid_argument("partition or labels do not cover every node");
  }
  CommunityNetwork net;
  net.node_min_fraction = node_min;
  net.edge_min_fraction = edge_min;
  net.n_categories = n_categories;

  const double n = static_cast<double>(g.node_count());
  const auto sizes = p.sizes();
  std::vector<int> slot(sizes.size(), -1);
  std::size_t retained_nodes = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    if (static_cast<double>(sizes[c]) >= node_min * n) {
      slot[c] = static_cast<int>(net.nodes.size());
      CommunityNode node;
      node.community = static_cast<int>(c) + 1;
      node.size = sizes[c];
      node.composition.assign(n_categories, 0.0);
      net.nodes.push_back(std::move(node));
      retained_nodes += sizes[c];
    }
  }
  if (net.nodes.empty()) throw std::invalid_argument("no community passes the node threshold");

  for (std::size_t v = 0; v < g.node_count(); ++v) {
    const int s = slot[static_cast<std::size_t>(p.community(static_cast<NodeIndex>(v)) - 1)];
    if (s < 0 || !labels[v]) continue;
    const int code = *labels[v];
    if (code < 0 || static_cast<std::size_t>(code) >= n_categories) {
      throw std::invalid_argument("label " + std::to_string(code) + " outside the declared categories");
    }
    auto& node = net.nodes[static_cast<std::size_t>(s)];
    ++node.observed;
    node.composition[static_cast<std::size_t>(code)] += 1.0;
  }
  for (auto& node : net.nodes) {
    if (node.observed > 0) {
      for (auto& f : node.composition) f /= static_cast<double>(node.observed);
    }
    node.missing_fraction = 1.0 - static_cast<double>(node.observed) / static_cast<double>(node.size);
  }

  std::map<std::pair<int, int>, std::size_t> cross;
  for (auto [u, v] : g.edges()) {
    int a = p.community(u);
    int b = p.community(v);
    if (a == b) continue;
    if (slot[static_cast<std::size_t>(a - 1)] < 0 || slot[static_cast<std::size_t>(b - 1)] < 0) continue;
    if (a > b) std::swap(a, b);
    ++cross[{a, b}];
  }
  std::size_t retained_ties = 0;
  for (const auto& [key, ties] : cross) {
    const std::size_t possible = sizes[static_cast<std::size_t>(key.first - 1)] *
                                 sizes[static_cast<std::size_t>(key.second - 1)];
    if (static_cast<double>(ties) >= edge_min * static_cast<double>(possible)) {
      net.edges.push_back({key.first, key.second, ties, possible});
      retained_ties += ties;
    }
  }
  net.retained_node_fraction = n > 0 ? static_cast<double>(retained_nodes) / n : 0.0;
  net.retained_tie_fraction =
      g.edge_count() > 0 ? static_cast<double>(retained_ties) / static_cast<double>(g.edge_count()) : 0.0;
  return net;
}

namespace {

std::string category_label(std::span<const std::string> names, std::size_t k) {
  return k < names.size() ? names[k] : std::to_string(k);
}

}  // namespace

std::string to_dot(const CommunityNetwork& net, std::span<const std::string> category_names) {
  std::ostringstream out;
  out << "graph communities {\n";
  out << "  node [shape=circle];\n";
  for (const auto& node : net.nodes) {
    out << "  c" << node.community << " [label=\"C" << node.community << "\\nn=" << node.size << "\"";
    out << ", size=" << node.size;
    out << ", composition=\"";
    for (std::size_t k = 0; k < node.composition.size(); ++k) {
      if (k) out << ';';
      out << category_label(category_names, k) << ':' << format_double(node.composition[k]);
    }
    out << "\", missing=" << format_double(node.missing_fraction) << "];\n";
  }
  for (const auto& e : net.edges) {
    out << "  c" << e.a << " -- c" << e.b << " [weight=" << e.ties << ", label=\"" << e.ties << "/"
        << e.possible << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

std::string to_json(const CommunityNetwork& net, std::span<const std::string> category_names) {
  nlohmann::ordered_json doc;
  doc["node_min_fraction"] = net.node_min_fraction;
  doc["edge_min_fraction"] = net.edge_min_fraction;
  doc["retained_node_fraction"] = net.retained_node_fraction;
  doc["retained_tie_fraction"] = net.retained_tie_fraction;
  auto& nodes = doc["nodes"] = nlohmann::ordered_json::array();
  for (const auto& node : net.nodes) {
    nlohmann::ordered_json comp = nlohmann::ordered_json::object();
    for (std::size_t k = 0; k < node.composition.size(); ++k) {
      comp[category_label(category_names, k)] = node.composition[k];
    }
    nodes.push_back({{"community", node.community},
                     {"size", node.size},
                     {"observed", node.observed},
                     {"missing_fraction", node.missing_fraction},
                     {"composition", comp}});
  }
  auto& edges = doc["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : net.edges) {
    edges.push_back({{"a", e.a}, {"b", e.b}, {"ties", e.ties}, {"possible", e.possible}});
  }
  return doc.dump(2);
}

}  // namespace segnet
