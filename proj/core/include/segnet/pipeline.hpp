#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "segnet/community.hpp"
#include "segnet/dyadic.hpp"
#include "segnet/graph.hpp"
#include "segnet/ingest.hpp"
#include "segnet/run_config.hpp"
#include "segnet/segregation.hpp"

namespace segnet {

inline constexpr int kSchemaVersion = 1;

// Category labels for one attribute: enum ordinal for categorical
// attributes, bin index when `bins` is non-empty, raw value otherwise.
// Under MissingPolicy::Category missing nodes get the code `n_categories`.
Labels attribute_labels(const AttributeTable& table, Attribute a, const std::vector<int>& bins,
                        MissingPolicy missing = MissingPolicy::Exclude);
std::size_t label_category_count(Attribute a, const std::vector<int>& bins);
std::vector<std::string> label_category_names(Attribute a, const std::vector<int>& bins);

struct CommunityNetworkSummary {
  std::size_t n_nodes = 0;
  std::size_t n_edges = 0;
  double retained_node_fraction = 0.0;
  double retained_tie_fraction = 0.0;
};

// Everything computed for one village. Optional members are absent when that
// analysis could not run; the reason is in `warnings`.
struct VillageBundle {
  std::string village_id;
  std::string config_hash;
  NetworkStats stats;
  std::size_t n_attribute_nodes = 0;  // LCC nodes with every feature attribute
  std::map<std::string, std::size_t> categories;  // label categories per attribute
  std::optional<LogisticFit> joint_fit;
  std::map<std::string, LogisticFit> single_fits;
  std::vector<SexPermutationResult> permutations;  // one per tolerance
  std::optional<TTestResult> sex_missingness;
  std::size_t n_communities = 0;
  double modularity = 0.0;
  std::vector<double> seed_modularities;  // one per Louvain seed
  std::map<std::string, NmiResult> nmi;
  std::map<std::string, double> nmi_seed_sd;  // spread across Louvain seeds
  std::map<std::string, SegregationReport> segregation;
  std::optional<CommunityNetworkSummary> community_network;
  std::vector<std::string> warnings;
};

std::string bundle_to_json(const VillageBundle& bundle);
VillageBundle bundle_from_json(const std::string& text);

// Runs every analysis for one loaded village. Analyses that cannot run on
// this village add a warning instead of failing; loading or LCC problems
// throw.
struct VillageArtifacts {
  VillageBundle bundle;
  Partition partition;
  std::vector<std::string> lcc_node_ids;
  std::optional<CommunityNetwork> network;
};
VillageArtifacts analyze_village(const VillageDataset& dataset, const RunConfig& cfg);

struct MetricSummary {
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
};
MetricSummary summarize_values(std::vector<double> values);
double mean_of(const std::vector<double>& values);
double sd_of(const std::vector<double>& values);  // sample standard deviation

struct NetworkStatsRow {
  std::string metric;
  std::optional<MetricSummary> network;
  MetricSummary lcc;
};

struct DyadicSummaryRow {
  std::string attribute;
  std::size_t n_categories = 0;
  std::size_t n_villages = 0;  // villages with a usable fit
  double pct_significant = 0.0;
  std::optional<MetricSummary> odds_ratio;
  double nmi_mean = 0.0;
  double nmi_sd = 0.0;
  std::size_t nmi_villages = 0;
};

struct SexMixingRow {
  double tolerance = 0.0;
  TieType tie_type = TieType::MaleMale;
  std::size_t n_villages = 0;
  double pct_assortative = 0.0;
  double pct_dissortative = 0.0;
};

struct SegregationSummaryRow {
  std::string attribute;
  std::size_t n_villages = 0;
  double q_within_norm_mean = 0.0;
  double q_within_norm_sd = 0.0;
  double pct_q_within_norm_above_0_3 = 0.0;
  double q_between_norm_mean = 0.0;
  double q_between_norm_sd = 0.0;
  double pct_q_between_positive = 0.0;
  double pct_q_between_above_cutoff = 0.0;
};

struct CorpusSummary {
  std::size_t n_villages = 0;
  std::string config_hash;
  std::vector<NetworkStatsRow> network_stats;
  std::vector<DyadicSummaryRow> dyadic;
  std::vector<SexMixingRow> sex_mixing;
  std::vector<SegregationSummaryRow> segregation;
  double mean_retained_node_fraction = 0.0;
  double mean_retained_tie_fraction = 0.0;
  double qb_cutoff = 0.2;
};

// Cross-village reduction of per-village bundles. Significance uses
// p < 0.05 with an odds ratio above 1.
CorpusSummary summarize_corpus(const std::vector<VillageBundle>& bundles, double qb_cutoff = 0.2);
void write_summary(const CorpusSummary& summary, const std::filesystem::path& dir);

// Reads <dir>/villages/*.json, recomputes and writes the summary tables.
// Returns the summary; throws std::invalid_argument if no bundle is found.
CorpusSummary summarize_directory(const std::filesystem::path& dir, double qb_cutoff = 0.2);

struct PipelineOutcome {
  int exit_code = 0;
  std::size_t n_villages = 0;
  std::vector<std::pair<std::string, std::string>> failures;  // village, message
  std::string message;
};

// Village directories under `corpus`: subdirectories holding edges/ or
// matrices/, sorted by name.
std::vector<std::filesystem::path> discover_villages(const std::filesystem::path& corpus);

// Loads and analyzes every village with a bounded worker pool, writes
// per-village artifacts, the corpus CSVs and summary tables, and an errors
// manifest. Exit code is nonzero when no village was found or any failed.
PipelineOutcome run_pipeline(const RunConfig& cfg);

}  // namespace segnet
