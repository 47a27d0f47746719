#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "segnet/ingest.hpp"

namespace segnet {

// Attribute assignment for synthetic villages: either a fixed category per
// block, or one categorical distribution shared by all nodes. An empty
// block list cycles through the attribute's categories block by block.
struct BlockCategories {
  std::vector<int> category_of_block;
};
struct CategoryDistribution {
  std::vector<double> weights;
};
using AttributeRule = std::variant<BlockCategories, CategoryDistribution>;

struct AttributedSbmConfig {
  std::vector<std::size_t> block_sizes;
  double p_in = 0.0;
  double p_out = 0.0;
  Attribute attribute = Attribute::Caste;
  AttributeRule attribute_rule = BlockCategories{};
  // Draw the remaining attributes independently and uniformly so the full
  // analysis pipeline has something to fit.
  bool fill_other_attributes = true;
  std::uint64_t seed = 1;
  std::string village_id = "synthetic";

  // Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
};

struct SyntheticVillage {
  VillageDataset dataset;
  std::vector<int> planted;  // block index per node
  std::vector<std::string> warnings;
};

// Stochastic block model with independent edges at p_in inside blocks and
// p_out across. Warns (does not throw) when the expected giant component
// covers less than half of the nodes.
SyntheticVillage generate_attribute_sbm(const AttributedSbmConfig& cfg);

// One predictor of the generative dyad model: nodes draw a category from
// `weights`, and dyads contribute `beta` when their categories match.
struct DyadTermLaw {
  Attribute attribute = Attribute::Caste;
  double beta = 0.0;
  std::vector<double> weights;
};

struct DyadSampleConfig {
  double beta0 = 0.0;
  std::vector<DyadTermLaw> terms;
  std::size_t n_nodes = 0;
  std::uint64_t seed = 1;
  std::string village_id = "dyads";
};

// Every dyad ties independently with probability
// 1 / (1 + exp(-(beta0 + sum_d beta_d x_d))). Numeric attributes receive the
// category index as their raw value. Throws std::invalid_argument when a
// tie probability rounds to 0 or 1, or a term's weights are invalid.
VillageDataset generate_dyad_sample(const DyadSampleConfig& cfg);

// Synthetic run description, read from JSON:
//   {"type": "sbm", "output": "dir", "village_id": "...", "seed": 1,
//    "block_sizes": [...], "p_in": 0.3, "p_out": 0.01, "attribute": "caste",
//    "block_categories": [...] | "category_weights": [...],
//    "fill_other_attributes": true}
//   {"type": "dyads", "output": "dir", "village_id": "...", "seed": 1,
//    "n_nodes": 142, "beta0": -1.386,
//    "terms": [{"attribute": "caste", "beta": 2.773, "weights": [...]}]}
struct SynthRequest {
  std::variant<AttributedSbmConfig, DyadSampleConfig> config;
  std::filesystem::path output;
};

SynthRequest parse_synth_config(const std::filesystem::path& file);
SynthRequest parse_synth_config_text(const std::string& json_text);

// Generates the village and writes it in canonical ingest layout under
// output/<village_id>. Returns the directory written and any warnings.
std::pair<std::filesystem::path, std::vector<std::string>> run_synth(const SynthRequest& request);

}  // namespace segnet
