#include "segnet/community.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "segnet/random.hpp"

namespace segnet {

Partition::Partition(const UndirectedGraph& g, std::span<const int> labels) {
  if (labels.size() != g.node_count()) {
    throw std::invalid_argument("partition labels do not cover every node");
  }
  std::unordered_map<int, int> relabel;
  assignment_.reserve(labels.size());
  for (int l : labels) {
    auto [it, inserted] = relabel.emplace(l, static_cast<int>(relabel.size()) + 1);
    if (inserted) sizes_.push_back(0);
    assignment_.push_back(it->second);
    ++sizes_[static_cast<std::size_t>(it->second - 1)];
  }
  within_degrees_.assign(g.node_count(), 0);
  between_degrees_.assign(g.node_count(), 0);
  for (auto [u, v] : g.edges()) {
    const auto su = static_cast<std::size_t>(u);
    const auto sv = static_cast<std::size_t>(v);
    if (assignment_[su] == assignment_[sv]) {
      ++m_within_;
      ++within_degrees_[su];
      ++within_degrees_[sv];
    } else {
      ++m_between_;
      ++between_degrees_[su];
      ++between_degrees_[sv];
    }
  }
}

double modularity(const UndirectedGraph& g, std::span<const int> labels) {
  if (labels.size() != g.node_count()) throw std::invalid_argument("labels do not cover every node");
  if (g.edge_count() == 0) throw std::invalid_argument("modularity undefined on a graph without edges");
  const double two_m = 2.0 * static_cast<double>(g.edge_count());
  std::unordered_map<int, double> degree_sum;
  double internal = 0.0;  // sum over ordered pairs of A_ij delta
  for (std::size_t u = 0; u < g.node_count(); ++u) {
    degree_sum[labels[u]] += static_cast<double>(g.degree(static_cast<NodeIndex>(u)));
    for (NodeIndex v : g.neighbors(static_cast<NodeIndex>(u))) {
      if (labels[static_cast<std::size_t>(v)] == labels[u]) internal += 1.0;
    }
  }
  double null_term = 0.0;
  for (const auto& [c, s] : degree_sum) null_term += s * s;
  return (internal - null_term / two_m) / two_m;
}

double modularity_of_partition(const UndirectedGraph& g, const Partition& p) {
  return modularity(g, p.assignment());
}

namespace {

// Weighted graph for aggregated levels. `self` holds the ordered-pair weight
// inside a super node (twice its internal edge count).
struct LevelGraph {
  std::vector<std::vector<std::pair<int, double>>> adj;
  std::vector<double> self;
  std::vector<double> strength;
  double two_m = 0.0;

  std::size_t size() const { return adj.size(); }
};

LevelGraph level_from(const UndirectedGraph& g) {
  LevelGraph lg;
  const std::size_t n = g.node_count();
  lg.adj.resize(n);
  lg.self.assign(n, 0.0);
  lg.strength.assign(n, 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    for (NodeIndex v : g.neighbors(static_cast<NodeIndex>(u))) lg.adj[u].emplace_back(v, 1.0);
    lg.strength[u] = static_cast<double>(g.degree(static_cast<NodeIndex>(u)));
    lg.two_m += lg.strength[u];
  }
  return lg;
}

double level_modularity(const LevelGraph& lg, const std::vector<int>& comm, std::size_t n_comm) {
  std::vector<double> in(n_comm, 0.0), tot(n_comm, 0.0);
  for (std::size_t u = 0; u < lg.size(); ++u) {
    const auto c = static_cast<std::size_t>(comm[u]);
    tot[c] += lg.strength[u];
    in[c] += lg.self[u];
    for (auto [v, w] : lg.adj[u]) {
      if (comm[static_cast<std::size_t>(v)] == comm[u]) in[c] += w;
    }
  }
  double q = 0.0;
  for (std::size_t c = 0; c < n_comm; ++c) {
    q += in[c] / lg.two_m - (tot[c] / lg.two_m) * (tot[c] / lg.two_m);
  }
  return q;
}

// One level of local moving. Returns true if any node changed community.
bool local_moving(const LevelGraph& lg, std::vector<int>& comm, Rng& rng, const LouvainOptions& opts) {
  const std::size_t n = lg.size();
  std::vector<double> tot(n, 0.0);
  for (std::size_t u = 0; u < n; ++u) tot[static_cast<std::size_t>(comm[u])] += lg.strength[u];

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> link(n, 0.0);
  std::vector<int> touched;
  bool any_move = false;

  for (int sweep = 0; sweep < opts.max_sweeps_per_level; ++sweep) {
    rng.shuffle(std::span<std::size_t>(order));
    double improvement = 0.0;
    std::size_t moves = 0;
    for (std::size_t u : order) {
      const int own = comm[u];
      const double ku = lg.strength[u];
      touched.clear();
      for (auto [v, w] : lg.adj[u]) {
        const int c = comm[static_cast<std::size_t>(v)];
        if (link[static_cast<std::size_t>(c)] == 0.0) touched.push_back(c);
        link[static_cast<std::size_t>(c)] += w;
      }
      tot[static_cast<std::size_t>(own)] -= ku;
      auto gain = [&](int c) { return link[static_cast<std::size_t>(c)] - tot[static_cast<std::size_t>(c)] * ku / lg.two_m; };
      const double own_gain = gain(own);
      int best = own;
      double best_gain = own_gain;
      for (int c : touched) {
        const double gc = gain(c);
        if (gc > best_gain) {
          best_gain = gc;
          best = c;
        }
      }
      tot[static_cast<std::size_t>(best)] += ku;
      if (best != own) {
        comm[u] = best;
        improvement += 2.0 * (best_gain - own_gain) / lg.two_m;
        ++moves;
      }
      for (int c : touched) link[static_cast<std::size_t>(c)] = 0.0;
      link[static_cast<std::size_t>(own)] = 0.0;
    }
    if (moves > 0) any_move = true;
    if (moves == 0 || improvement <= opts.min_gain) break;
  }
  return any_move;
}

std::size_t compact(std::vector<int>& comm) {
  std::vector<int> remap(comm.size(), -1);
  int next = 0;
  for (auto& c : comm) {
    auto& r = remap[static_cast<std::size_t>(c)];
    if (r < 0) r = next++;
    c = r;
  }
  return static_cast<std::size_t>(next);
}

LevelGraph aggregate(const LevelGraph& lg, const std::vector<int>& comm, std::size_t n_comm) {
  LevelGraph out;
  out.adj.resize(n_comm);
  out.self.assign(n_comm, 0.0);
  out.strength.assign(n_comm, 0.0);
  out.two_m = lg.two_m;
  std::vector<std::map<int, double>> acc(n_comm);
  for (std::size_t u = 0; u < lg.size(); ++u) {
    const auto cu = static_cast<std::size_t>(comm[u]);
    out.self[cu] += lg.self[u];
    out.strength[cu] += lg.strength[u];
    for (auto [v, w] : lg.adj[u]) {
      const int cv = comm[static_cast<std::size_t>(v)];
      if (static_cast<std::size_t>(cv) == cu) {
        out.self[cu] += w;
      } else {
        acc[cu][cv] += w;
      }
    }
  }
  for (std::size_t c = 0; c < n_comm; ++c) out.adj[c].assign(acc[c].begin(), acc[c].end());
  return out;
}

}  // namespace

LouvainResult louvain(const UndirectedGraph& g, const LouvainOptions& opts) {
  if (g.empty()) throw std::invalid_argument("louvain: empty graph");
  if (g.edge_count() == 0) throw std::invalid_argument("louvain: graph has no edges");

  LevelGraph lg = level_from(g);
  std::vector<int> membership(g.node_count());
  std::iota(membership.begin(), membership.end(), 0);

  LouvainResult result;
  for (std::uint64_t level = 0;; ++level) {
    std::vector<int> comm(lg.size());
    std::iota(comm.begin(), comm.end(), 0);
    Rng rng(derive_seed(opts.seed, level));
    const bool moved = local_moving(lg, comm, rng, opts);
    const std::size_t n_comm = compact(comm);
    if (!moved || n_comm == lg.size()) break;
    for (auto& m : membership) m = comm[static_cast<std::size_t>(m)];
    result.level_modularities.push_back(level_modularity(lg, comm, n_comm));
    lg = aggregate(lg, comm, n_comm);
  }

  result.partition = Partition(g, membership);
  result.modularity = modularity_of_partition(g, result.partition);
  return result;
}

NmiResult nmi(std::span<const std::optional<int>> labels_a, std::span<const std::optional<int>> labels_b) {
  if (labels_a.size() != labels_b.size()) throw std::invalid_argument("nmi: labelings differ in length");
  std::map<int, double> ca, cb;
  std::map<std::pair<int, int>, double> joint;
  std::size_t n = 0;
  for (std::size_t i = 0; i < labels_a.size(); ++i) {
    if (!labels_a[i] || !labels_b[i]) continue;
    ca[*labels_a[i]] += 1.0;
    cb[*labels_b[i]] += 1.0;
    joint[{*labels_a[i], *labels_b[i]}] += 1.0;
    ++n;
  }
  if (n == 0) throw std::invalid_argument("nmi: no node is labeled in both labelings");

  const auto total = static_cast<double>(n);
  auto entropy = [&](const std::map<int, double>& counts) {
    double h = 0.0;
    for (const auto& [k, c] : counts) {
      const double p = c / total;
      h -= p * std::log(p);
    }
    return h;
  };
  NmiResult r;
  r.n_used = n;
  r.entropy_a = entropy(ca);
  r.entropy_b = entropy(cb);
  double mi = 0.0;
  for (const auto& [key, c] : joint) {
    const double pab = c / total;
    mi += pab * std::log(c * total / (ca[key.first] * cb[key.second]));
  }
  // Rounding can leave tiny negatives or overshoot of the bound.
  mi = std::clamp(mi, 0.0, std::min(r.entropy_a, r.entropy_b));
  r.mutual_information = mi;
  const double denom = std::max(r.entropy_a, r.entropy_b);
  if (denom <= 0.0) {
    r.degenerate = true;
    r.value = 0.0;
  } else {
    r.value = std::clamp(mi / denom, 0.0, 1.0);
  }
  return r;
}

NmiResult nmi(std::span<const int> labels_a, std::span<const int> labels_b) {
  std::vector<std::optional<int>> a(labels_a.begin(), labels_a.end());
  std::vector<std::optional<int>> b(labels_b.begin(), labels_b.end());
  return nmi(std::span<const std::optional<int>>(a), std::span<const std::optional<int>>(b));
}

}  // namespace segnet
