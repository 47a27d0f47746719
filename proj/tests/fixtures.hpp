// Small graphs and helpers shared by the unit and acceptance tests.
#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "segnet/graph.hpp"
#include "segnet/ingest.hpp"

namespace fixtures {

using segnet::Edge;
using segnet::NodeIndex;
using segnet::UndirectedGraph;

inline UndirectedGraph complete(std::size_t n, NodeIndex offset = 0, std::vector<Edge>* sink = nullptr) {
  std::vector<Edge> edges;
  for (NodeIndex i = 0; i < static_cast<NodeIndex>(n); ++i) {
    for (NodeIndex j = i + 1; j < static_cast<NodeIndex>(n); ++j) edges.emplace_back(i + offset, j + offset);
  }
  if (sink) sink->insert(sink->end(), edges.begin(), edges.end());
  return UndirectedGraph::from_edges(n + static_cast<std::size_t>(offset), edges);
}

// Triangles {0,1,2} and {3,4,5} joined by the edge 2-3.
inline UndirectedGraph bridged_triangles() {
  std::vector<Edge> e{{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}, {2, 3}};
  return UndirectedGraph::from_edges(6, e);
}
inline const std::vector<int> kTriangleSides = {0, 0, 0, 1, 1, 1};

// Two K5s on {0..4} and {5..9} joined by 4-5.
inline UndirectedGraph bridged_k5s() {
  std::vector<Edge> e;
  complete(5, 0, &e);
  complete(5, 5, &e);
  e.emplace_back(4, 5);
  return UndirectedGraph::from_edges(10, e);
}

inline UndirectedGraph random_graph(std::size_t n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  std::vector<Edge> e;
  for (NodeIndex i = 0; i < static_cast<NodeIndex>(n); ++i) {
    for (NodeIndex j = i + 1; j < static_cast<NodeIndex>(n); ++j) {
      if (coin(rng)) e.emplace_back(i, j);
    }
  }
  return UndirectedGraph::from_edges(n, e);
}

inline std::vector<std::optional<int>> labeled(const std::vector<int>& xs) {
  return {xs.begin(), xs.end()};
}

// Males {0,1,2} on the path 0-1-2, females {3,4,5} on the path 3-4-5.
// Only MM and FF ties; 12 of the 20 sex assignments keep both mean degrees.
inline UndirectedGraph six_node_sex_graph() {
  std::vector<Edge> e{{0, 1}, {1, 2}, {3, 4}, {4, 5}};
  return UndirectedGraph::from_edges(6, e);
}
inline const std::vector<bool> kSixNodeMale = {true, true, true, false, false, false};

inline segnet::AttributeTable sex_table(const std::vector<bool>& male) {
  segnet::AttributeTable t(male.size());
  for (std::size_t v = 0; v < male.size(); ++v) t.set_sex(v, male[v] ? segnet::Sex::Male : segnet::Sex::Female);
  return t;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("segnet_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace fixtures
