#include "segnet/synth.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "segnet/random.hpp"

namespace segnet {

namespace {

std::size_t draw_category(Rng& rng, const std::vector<double>& weights, double total) {
  double u = rng.uniform01() * total;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (u < weights[k]) return k;
    u -= weights[k];
  }
  return weights.size() - 1;
}

void check_weights(const std::vector<double>& w, Attribute a) {
  if (w.empty()) throw std::invalid_argument("category weights for " + std::string(attribute_name(a)) + " are empty");
  double total = 0.0;
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("category weights must be finite and >= 0");
    total += x;
  }
  if (total <= 0.0) throw std::invalid_argument("category weights sum to zero");
  if (is_categorical(a) && w.size() > category_names(a).size()) {
    throw std::invalid_argument(std::string(attribute_name(a)) + " has only " +
                                std::to_string(category_names(a).size()) + " categories");
  }
}

void fill_uniform(AttributeTable& table, Attribute a, std::size_t v, Rng& rng) {
  int code = 0;
  switch (a) {
    case Attribute::Age: code = 18 + static_cast<int>(rng.uniform_index(63)); break;
    case Attribute::Education: code = static_cast<int>(rng.uniform_index(16)); break;
    default: code = static_cast<int>(rng.uniform_index(category_names(a).size())); break;
  }
  table.set_value(a, v, code);
}

// Fraction of nodes in the giant component of a Poisson graph with mean
// degree c: the positive root of S = 1 - exp(-c S).
double giant_fraction(double c) {
  if (c <= 1.0) return 0.0;
  double s = 1.0;
  for (int it = 0; it < 200; ++it) s = 1.0 - std::exp(-c * s);
  return s;
}

std::vector<int> block_categories(const AttributedSbmConfig& cfg, const BlockCategories& bc) {
  if (!bc.category_of_block.empty()) return bc.category_of_block;
  const auto k = is_categorical(cfg.attribute) ? category_names(cfg.attribute).size() : cfg.block_sizes.size();
  std::vector<int> out;
  for (std::size_t b = 0; b < cfg.block_sizes.size(); ++b) out.push_back(static_cast<int>(b % k));
  return out;
}

std::vector<std::string> index_ids(std::size_t n) {
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = "n" + std::to_string(i);
  return ids;
}

}  // namespace

void AttributedSbmConfig::validate() const {
  if (block_sizes.empty()) throw std::invalid_argument("block_sizes is empty");
  for (auto s : block_sizes) {
    if (s < 1) throw std::invalid_argument("block sizes must be >= 1");
  }
  if (!(0.0 <= p_out && p_out <= p_in && p_in <= 1.0)) {
    throw std::invalid_argument("probabilities must satisfy 0 <= p_out <= p_in <= 1");
  }
  if (const auto* bc = std::get_if<BlockCategories>(&attribute_rule)) {
    if (!bc->category_of_block.empty() && bc->category_of_block.size() != block_sizes.size()) {
      throw std::invalid_argument("block_categories needs one entry per block");
    }
    for (int c : bc->category_of_block) {
      if (c < 0 || (is_categorical(attribute) && static_cast<std::size_t>(c) >= category_names(attribute).size())) {
        throw std::invalid_argument("block category " + std::to_string(c) + " is not valid for " +
                                    std::string(attribute_name(attribute)));
      }
    }
  } else {
    check_weights(std::get<CategoryDistribution>(attribute_rule).weights, attribute);
  }
}

SyntheticVillage generate_attribute_sbm(const AttributedSbmConfig& cfg) {
  cfg.validate();
  const std::size_t n = std::accumulate(cfg.block_sizes.begin(), cfg.block_sizes.end(), std::size_t{0});
  SyntheticVillage out;
  out.planted.reserve(n);
  for (std::size_t b = 0; b < cfg.block_sizes.size(); ++b) {
    out.planted.insert(out.planted.end(), cfg.block_sizes[b], static_cast<int>(b));
  }

  Rng edge_rng(derive_seed(cfg.seed, 0));
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = out.planted[i] == out.planted[j] ? cfg.p_in : cfg.p_out;
      if (edge_rng.bernoulli(p)) edges.emplace_back(static_cast<NodeIndex>(i), static_cast<NodeIndex>(j));
    }
  }

  auto& ds = out.dataset;
  ds.village_id = cfg.village_id;
  ds.node_ids = index_ids(n);
  ds.graph = UndirectedGraph::from_edges(n, edges);
  ds.relation_layers["sbm"] = ds.graph.edge_count();
  ds.attributes = AttributeTable(n);

  Rng attr_rng(derive_seed(cfg.seed, 1));
  std::vector<int> of_block;
  if (const auto* bc = std::get_if<BlockCategories>(&cfg.attribute_rule)) of_block = block_categories(cfg, *bc);
  for (std::size_t v = 0; v < n; ++v) {
    if (!of_block.empty()) {
      ds.attributes.set_value(cfg.attribute, v, of_block[static_cast<std::size_t>(out.planted[v])]);
    } else {
      const auto& w = std::get<CategoryDistribution>(cfg.attribute_rule).weights;
      const double total = std::accumulate(w.begin(), w.end(), 0.0);
      ds.attributes.set_value(cfg.attribute, v, static_cast<int>(draw_category(attr_rng, w, total)));
    }
  }
  if (cfg.fill_other_attributes) {
    Rng fill_rng(derive_seed(cfg.seed, 2));
    for (std::size_t v = 0; v < n; ++v) {
      for (auto a : kAllAttributes) {
        if (a != cfg.attribute) fill_uniform(ds.attributes, a, v, fill_rng);
      }
    }
  }

  double mean_degree = 0.0;
  for (auto s : cfg.block_sizes) {
    const double within = static_cast<double>(s - 1) * cfg.p_in;
    const double across = static_cast<double>(n - s) * cfg.p_out;
    mean_degree += static_cast<double>(s) * (within + across);
  }
  mean_degree /= static_cast<double>(n);
  const double coverage = giant_fraction(mean_degree);
  if (coverage < 0.5) {
    std::ostringstream msg;
    msg << "expected largest component covers only " << coverage * 100.0 << "% of nodes (mean degree "
        << mean_degree << ")";
    out.warnings.push_back(msg.str());
  }
  return out;
}

VillageDataset generate_dyad_sample(const DyadSampleConfig& cfg) {
  if (cfg.n_nodes < 2) throw std::invalid_argument("n_nodes must be >= 2");
  for (const auto& t : cfg.terms) check_weights(t.weights, t.attribute);

  VillageDataset ds;
  ds.village_id = cfg.village_id;
  ds.node_ids = index_ids(cfg.n_nodes);
  ds.attributes = AttributeTable(cfg.n_nodes);

  Rng attr_rng(derive_seed(cfg.seed, 0));
  std::vector<std::vector<int>> cat(cfg.terms.size(), std::vector<int>(cfg.n_nodes));
  for (std::size_t t = 0; t < cfg.terms.size(); ++t) {
    const auto& w = cfg.terms[t].weights;
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (std::size_t v = 0; v < cfg.n_nodes; ++v) {
      cat[t][v] = static_cast<int>(draw_category(attr_rng, w, total));
      ds.attributes.set_value(cfg.terms[t].attribute, v, cat[t][v]);
    }
  }

  Rng tie_rng(derive_seed(cfg.seed, 1));
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < cfg.n_nodes; ++i) {
    for (std::size_t j = i + 1; j < cfg.n_nodes; ++j) {
      double eta = cfg.beta0;
      for (std::size_t t = 0; t < cfg.terms.size(); ++t) {
        if (cat[t][i] == cat[t][j]) eta += cfg.terms[t].beta;
      }
      const double p = 1.0 / (1.0 + std::exp(-eta));
      if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument("tie probability " + std::to_string(p) + " is not inside (0, 1)");
      }
      if (tie_rng.bernoulli(p)) edges.emplace_back(static_cast<NodeIndex>(i), static_cast<NodeIndex>(j));
    }
  }
  ds.graph = UndirectedGraph::from_edges(cfg.n_nodes, edges);
  ds.relation_layers["dyads"] = ds.graph.edge_count();
  return ds;
}

SynthRequest parse_synth_config_text(const std::string& json_text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("synth config is not valid JSON: ") + e.what());
  }
  SynthRequest req;
  try {
    req.output = doc.value("output", std::string("."));
    const auto type = doc.at("type").get<std::string>();
    if (type == "sbm") {
      AttributedSbmConfig cfg;
      cfg.village_id = doc.value("village_id", std::string("synthetic"));
      cfg.seed = doc.value("seed", std::uint64_t{1});
      cfg.block_sizes = doc.at("block_sizes").get<std::vector<std::size_t>>();
      cfg.p_in = doc.at("p_in").get<double>();
      cfg.p_out = doc.at("p_out").get<double>();
      cfg.attribute = parse_attribute(doc.value("attribute", std::string("caste")));
      cfg.fill_other_attributes = doc.value("fill_other_attributes", true);
      if (doc.contains("category_weights")) {
        cfg.attribute_rule = CategoryDistribution{doc["category_weights"].get<std::vector<double>>()};
      } else if (doc.contains("block_categories")) {
        cfg.attribute_rule = BlockCategories{doc["block_categories"].get<std::vector<int>>()};
      }
      cfg.validate();
      req.config = cfg;
    } else if (type == "dyads") {
      DyadSampleConfig cfg;
      cfg.village_id = doc.value("village_id", std::string("dyads"));
      cfg.seed = doc.value("seed", std::uint64_t{1});
      cfg.n_nodes = doc.at("n_nodes").get<std::size_t>();
      cfg.beta0 = doc.at("beta0").get<double>();
      for (const auto& t : doc.at("terms")) {
        cfg.terms.push_back({parse_attribute(t.at("attribute").get<std::string>()), t.at("beta").get<double>(),
                             t.at("weights").get<std::vector<double>>()});
      }
      req.config = cfg;
    } else {
      throw std::invalid_argument("unknown synth type '" + type + "' (expected 'sbm' or 'dyads')");
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("synth config: ") + e.what());
  }
  return req;
}

SynthRequest parse_synth_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::invalid_argument("cannot open synth config " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_synth_config_text(buf.str());
}

std::pair<std::filesystem::path, std::vector<std::string>> run_synth(const SynthRequest& request) {
  VillageDataset ds;
  std::vector<std::string> warnings;
  std::vector<int> planted;
  if (const auto* sbm = std::get_if<AttributedSbmConfig>(&request.config)) {
    auto sv = generate_attribute_sbm(*sbm);
    ds = std::move(sv.dataset);
    warnings = std::move(sv.warnings);
    planted = std::move(sv.planted);
  } else {
    ds = generate_dyad_sample(std::get<DyadSampleConfig>(request.config));
  }
  auto dir = request.output / ds.village_id;
  write_village_dir(ds, dir);
  if (!planted.empty()) {
    std::ofstream out(dir / "planted.csv");
    if (!out) throw std::runtime_error("cannot write " + (dir / "planted.csv").string());
    out << "node_id,block\n";
    for (std::size_t v = 0; v < planted.size(); ++v) out << ds.node_ids[v] << "," << planted[v] << "\n";
  }
  return {dir, warnings};
}

}  // namespace segnet
