#include <gtest/gtest.h>

#include <random>

#include "json.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"
#include "segnet/segregation.hpp"

using namespace segnet;
using fixtures::labeled;

namespace {

TEST(AttributeModularity, UniformIsZero) {
  auto g = fixtures::bridged_triangles();
  EXPECT_EQ(attribute_modularity(g, labeled({2, 2, 2, 2, 2, 2})), 0.0);
}

TEST(AttributeModularity, BridgedTriangles) {
  auto g = fixtures::bridged_triangles();
  EXPECT_NEAR(attribute_modularity(g, labeled(fixtures::kTriangleSides)), 5.0 / 14.0, 1e-15);
}

TEST(AttributeModularity, BipartiteSplitOfK33) {
  std::vector<Edge> e;
  for (NodeIndex i = 0; i < 3; ++i) {
    for (NodeIndex j = 3; j < 6; ++j) e.emplace_back(i, j);
  }
  auto g = UndirectedGraph::from_edges(6, e);
  const auto labels = labeled({0, 0, 0, 1, 1, 1});
  EXPECT_NEAR(attribute_modularity(g, labels), -0.5, 1e-15);
  EXPECT_NEAR(*oracle::attribute_modularity(g, labels), -0.5, 1e-15);
}

TEST(AttributeModularity, MissingNodesLeaveTheGraph) {
  auto g = fixtures::bridged_triangles();
  Labels l = labeled(fixtures::kTriangleSides);
  l[0] = std::nullopt;
  EXPECT_NEAR(attribute_modularity(g, l), *oracle::attribute_modularity(g, l), 1e-15);
  Labels isolated(6);
  isolated[0] = 1;
  isolated[5] = 1;
  EXPECT_THROW(attribute_modularity(g, isolated), std::invalid_argument);
}

TEST(WithinModularity, PerfectAssortativity) {
  auto g = fixtures::bridged_triangles();
  Partition p(g, fixtures::kTriangleSides);
  auto w = within_community_modularity(g, labeled(fixtures::kTriangleSides), p);
  EXPECT_NEAR(w.q, 0.5, 1e-15);
  EXPECT_NEAR(w.q_norm, 1.0, 1e-12);
}

TEST(WithinModularity, UniformAttributeOnBridgedTriangles) {
  auto g = fixtures::bridged_triangles();
  Partition p(g, fixtures::kTriangleSides);
  auto w = within_community_modularity(g, labeled({0, 0, 0, 0, 0, 0}), p);
  // Null restricted to within pairs: 1 - 2 * (6/12)^2.
  EXPECT_NEAR(w.q, 0.5, 1e-15);
  EXPECT_NEAR(w.q_norm, 1.0, 1e-12);
  auto o = oracle::split_modularity(g, labeled({0, 0, 0, 0, 0, 0}), fixtures::kTriangleSides, false);
  EXPECT_NEAR(w.q, o->q, 1e-15);
}

TEST(WithinModularity, NoWithinEdgesRejected) {
  auto g = fixtures::complete(3);
  Partition p(g, std::vector<int>{0, 1, 2});
  EXPECT_THROW(within_community_modularity(g, labeled({0, 0, 0}), p), std::invalid_argument);
}

TEST(BetweenModularity, AttributeEqualsCommunity) {
  auto g = fixtures::bridged_triangles();
  Partition p(g, fixtures::kTriangleSides);
  auto b = between_community_modularity(g, labeled(fixtures::kTriangleSides), p);
  EXPECT_EQ(b.q, 0.0);
}

TEST(BetweenModularity, CliqueRingWithMatchingBridges) {
  // Four K4s; cliques 0 and 2 carry attribute A, 1 and 3 attribute B. Bridges
  // join 0-2 and 1-3 only.
  std::vector<Edge> e;
  for (NodeIndex c = 0; c < 4; ++c) fixtures::complete(4, 4 * c, &e);
  e.emplace_back(0, 8);
  e.emplace_back(1, 9);
  e.emplace_back(4, 12);
  e.emplace_back(5, 13);
  auto g = UndirectedGraph::from_edges(16, e);
  std::vector<int> cliques(16), attr(16);
  for (int v = 0; v < 16; ++v) {
    cliques[static_cast<std::size_t>(v)] = v / 4;
    attr[static_cast<std::size_t>(v)] = (v / 4) % 2;
  }
  Partition p(g, cliques);
  auto b = between_community_modularity(g, labeled(attr), p);
  auto o = oracle::split_modularity(g, labeled(attr), cliques, true);
  EXPECT_GT(b.q, 0.0);
  EXPECT_NEAR(b.q, o->q, 1e-15);
  EXPECT_NEAR(b.q_max, o->q_max, 1e-15);
}

TEST(BetweenModularity, SingleCommunityRejected) {
  auto g = fixtures::bridged_triangles();
  Partition p(g, std::vector<int>(6, 1));
  EXPECT_THROW(between_community_modularity(g, labeled(fixtures::kTriangleSides), p), std::invalid_argument);
}

TEST(Decomposition, MatchesOracleAndSplitsEdgeTerm) {
  std::mt19937_64 rng(10);
  for (int rep = 0; rep < 60; ++rep) {
    const std::size_t n = 8 + static_cast<std::size_t>(rep) % 50;
    auto g = fixtures::random_graph(n, 0.2, rng);
    std::uniform_int_distribution<int> comm(0, 3), cat(0, 2);
    std::bernoulli_distribution miss(0.2);
    std::vector<int> comms(n);
    Labels labels(n);
    for (std::size_t v = 0; v < n; ++v) {
      comms[v] = comm(rng);
      if (!miss(rng)) labels[v] = cat(rng);
    }
    Partition p(g, comms);
    auto ow = oracle::split_modularity(g, labels, comms, false);
    auto ob = oracle::split_modularity(g, labels, comms, true);
    if (ow) {
      auto w = within_community_modularity(g, labels, p);
      EXPECT_NEAR(w.q, ow->q, 1e-12);
      EXPECT_NEAR(w.q_max, ow->q_max, 1e-12);
      EXPECT_LE(w.q_norm, 1.0 + 1e-12);
      if (w.q != 0.0) {
        EXPECT_EQ(w.q_norm > 0, w.q > 0);
      }
    } else {
      EXPECT_THROW(within_community_modularity(g, labels, p), std::invalid_argument);
    }
    if (ob) {
      auto b = between_community_modularity(g, labels, p);
      EXPECT_NEAR(b.q, ob->q, 1e-12);
      EXPECT_NEAR(b.q_max, ob->q_max, 1e-12);
      EXPECT_LE(b.q_norm, 1.0 + 1e-12);
    }
    // Same-attribute edges split exactly into within and between ones.
    std::size_t same = 0, same_w = 0, same_b = 0;
    for (auto [u, v] : g.edges()) {
      const auto& lu = labels[static_cast<std::size_t>(u)];
      const auto& lv = labels[static_cast<std::size_t>(v)];
      if (!lu || !lv || *lu != *lv) continue;
      ++same;
      (comms[static_cast<std::size_t>(u)] == comms[static_cast<std::size_t>(v)] ? same_w : same_b) += 1;
    }
    EXPECT_EQ(same, same_w + same_b);
  }
}

TEST(SegregationReport, CollectsAllMeasures) {
  auto g = fixtures::bridged_triangles();
  Partition p(g, fixtures::kTriangleSides);
  auto r = segregation_report(g, labeled(fixtures::kTriangleSides), p, "caste");
  EXPECT_EQ(r.attribute, "caste");
  EXPECT_NEAR(r.q_attr, 5.0 / 14.0, 1e-15);
  EXPECT_NEAR(r.within.q_norm, 1.0, 1e-12);
  EXPECT_EQ(r.between.q, 0.0);
  EXPECT_EQ(r.n_used, 6u);
  EXPECT_EQ(r.m_within, 6u);
  EXPECT_EQ(r.m_between, 1u);
}

TEST(CommunityNetwork, FullyConnectedPairKeepsEdge) {
  // K6 split into two communities of three: every cross pair is tied.
  auto g = fixtures::complete(6);
  Partition p(g, std::vector<int>{0, 0, 0, 1, 1, 1});
  for (double edge_min : {0.0, 0.5, 0.99}) {
    auto net = build_community_network(g, p, labeled({0, 0, 1, 1, 1, 1}), 2, 0.05, edge_min);
    ASSERT_EQ(net.edges.size(), 1u);
    EXPECT_EQ(net.edges[0].ties, 9u);
    EXPECT_EQ(net.edges[0].possible, 9u);
  }
}

TEST(CommunityNetwork, SmallCommunityDropped) {
  // 33 nodes: a community of one node is 3% of the graph.
  std::vector<Edge> e;
  fixtures::complete(16, 0, &e);
  fixtures::complete(16, 16, &e);
  e.emplace_back(0, 16);
  e.emplace_back(32, 0);
  auto g = UndirectedGraph::from_edges(33, e);
  std::vector<int> comms(33);
  for (int v = 0; v < 33; ++v) comms[static_cast<std::size_t>(v)] = v < 16 ? 0 : (v < 32 ? 1 : 2);
  Partition p(g, comms);
  Labels labels(33, 0);
  auto net = build_community_network(g, p, labels, 1, 0.05, 0.0);
  EXPECT_EQ(net.nodes.size(), 2u);
  EXPECT_NEAR(net.retained_node_fraction, 32.0 / 33.0, 1e-15);
  EXPECT_NEAR(net.retained_tie_fraction, 1.0 / static_cast<double>(g.edge_count()), 1e-15);
}

TEST(CommunityNetwork, CompositionExcludesMissing) {
  auto g = fixtures::bridged_triangles();
  Partition p(g, fixtures::kTriangleSides);
  Labels labels{0, 1, std::nullopt, 1, 1, 1};
  auto net = build_community_network(g, p, labels, 3);
  ASSERT_EQ(net.nodes.size(), 2u);
  EXPECT_EQ(net.nodes[0].observed, 2u);
  EXPECT_DOUBLE_EQ(net.nodes[0].composition[0], 0.5);
  EXPECT_DOUBLE_EQ(net.nodes[0].composition[1], 0.5);
  EXPECT_DOUBLE_EQ(net.nodes[0].missing_fraction, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(net.nodes[1].composition[1], 1.0);
}

TEST(CommunityNetwork, MonotoneInThresholds) {
  std::mt19937_64 rng(12);
  auto g = fixtures::random_graph(120, 0.05, rng);
  std::vector<int> comms(120);
  std::uniform_int_distribution<int> pick(0, 11);
  for (auto& c : comms) c = pick(rng);
  Partition p(g, comms);
  Labels labels(120, 0);
  std::size_t prev_nodes = SIZE_MAX, prev_edges = SIZE_MAX;
  for (double t : {0.0, 0.02, 0.05, 0.08, 0.1}) {
    auto net = build_community_network(g, p, labels, 1, t, 0.0);
    EXPECT_LE(net.nodes.size(), prev_nodes);
    prev_nodes = net.nodes.size();
  }
  for (double t : {0.0, 0.02, 0.05, 0.1, 0.2, 0.5}) {
    auto net = build_community_network(g, p, labels, 1, 0.0, t);
    EXPECT_LE(net.edges.size(), prev_edges);
    prev_edges = net.edges.size();
    for (const auto& e : net.edges) {
      EXPECT_GE(static_cast<double>(e.ties), t * static_cast<double>(e.possible));
    }
  }
}

TEST(CommunityNetwork, ThresholdErrors) {
  auto g = fixtures::bridged_triangles();
  Partition p(g, fixtures::kTriangleSides);
  auto l = labeled(fixtures::kTriangleSides);
  EXPECT_THROW(build_community_network(g, p, l, 2, 1.0, 0.05), std::invalid_argument);
  EXPECT_THROW(build_community_network(g, p, l, 2, 0.05, -0.1), std::invalid_argument);
  EXPECT_THROW(build_community_network(g, p, l, 2, 0.9, 0.05), std::invalid_argument);
}

TEST(CommunityNetwork, Exports) {
  auto g = fixtures::bridged_triangles();
  Partition p(g, fixtures::kTriangleSides);
  auto net = build_community_network(g, p, labeled(fixtures::kTriangleSides), 2, 0.05, 0.0);
  std::vector<std::string> names{"A", "B"};
  auto dot = to_dot(net, names);
  EXPECT_NE(dot.find("graph"), std::string::npos);
  EXPECT_NE(dot.find("c1 -- c2"), std::string::npos);
  EXPECT_NE(dot.find("A:1"), std::string::npos);
  auto doc = nlohmann::json::parse(to_json(net, names));
  EXPECT_EQ(doc["nodes"].size(), 2u);
  EXPECT_EQ(doc["edges"].size(), 1u);
  EXPECT_EQ(doc["edges"][0]["ties"], 1);
  EXPECT_EQ(doc["edges"][0]["possible"], 9);
}

}  // namespace
