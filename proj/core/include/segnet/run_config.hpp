#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "segnet/dyadic.hpp"
#include "segnet/ingest.hpp"

namespace segnet {

enum class MissingPolicy : std::uint8_t {
  Exclude,  // attribute-dependent measures use the labeled subgraph only
  Category  // missing values form their own category
};

// Batch run settings. Text format, one `key = value` per line, '#' comments:
//
//   corpus = villages/                 # directory of village directories
//   output = results/
//   features.<attr> = match | difference | binned_difference | off
//                                      # difference uses raw years
//   bins.<attr> = 0, 18, 31, 41, 51, 65  # lower bin edges (age, education)
//   dyadic.per_attribute = false       # also fit one model per attribute
//   permutation.tolerances = 0.05, 0.20
//   permutation.replicates = 1000
//   permutation.seed = 20170417
//   louvain.seeds = 1                  # first is primary; more report spread
//   community_network.node_min = 0.05
//   community_network.edge_min = 0.05
//   community_network.attribute = caste
//   nmi.attributes = sex, age, ...     # default: all seven
//   segregation.attributes = caste, ...
//   segregation.missing = exclude | category
//   segregation.qb_cutoff = 0.2
//   workers = 4                        # overridden by SEGNET_WORKERS
//
// Relative paths resolve against the directory holding the config file.
struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path output;
  FeatureSpec features = FeatureSpec::defaults();
  std::vector<int> age_bins = kDefaultAgeBins;
  std::vector<int> education_bins = kDefaultEducationBins;
  bool per_attribute_models = false;
  std::vector<double> tolerances = {0.05, 0.20};
  std::size_t replicates = 1000;
  std::uint64_t permutation_seed = 20170417;
  std::vector<std::uint64_t> louvain_seeds = {1};
  double node_min = 0.05;
  double edge_min = 0.05;
  Attribute network_attribute = Attribute::Caste;
  std::vector<Attribute> nmi_attributes{kAllAttributes.begin(), kAllAttributes.end()};
  std::vector<Attribute> segregation_attributes{kAllAttributes.begin(), kAllAttributes.end()};
  MissingPolicy missing = MissingPolicy::Exclude;
  double qb_cutoff = 0.2;
  std::size_t workers = 1;

  // Bin edges used for an attribute's labels (empty for categorical ones).
  const std::vector<int>& bins_for(Attribute a) const;

  // Normalized `key = value` listing of every setting that affects results
  // (paths and worker count excluded), in a fixed order.
  std::string canonical_text() const;
  // 16 hex digits of FNV-1a over canonical_text().
  std::string hash() const;

  // Throws std::invalid_argument on an empty tolerance list, zero replicates,
  // or thresholds outside [0, 1).
  void validate() const;
};

// Throws std::invalid_argument naming the line for unknown keys or bad values.
RunConfig parse_run_config_text(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig parse_run_config(const std::filesystem::path& file);

// Applies SEGNET_WORKERS when set to a positive integer.
void apply_environment(RunConfig& cfg);

}  // namespace segnet
