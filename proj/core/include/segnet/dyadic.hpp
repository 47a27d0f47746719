#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segnet/graph.hpp"
#include "segnet/ingest.hpp"

namespace segnet {

enum class FeatureEncoding : std::uint8_t {
  Match,         // 1 if the (possibly binned) values are equal, else 0
  AbsDifference  // |v_i - v_j| on the (possibly binned) values
};

// One predictor of the dyad model. `bin_edges`, when non-empty, holds
// ascending lower bounds; a value maps to the index of the last edge not
// exceeding it, and values below the first edge fall into bin 0.
struct FeatureTerm {
  Attribute attribute = Attribute::Sex;
  FeatureEncoding encoding = FeatureEncoding::Match;
  std::vector<int> bin_edges;

  int encode(int raw) const;
  std::string name() const { return std::string(attribute_name(attribute)); }
};

struct FeatureSpec {
  std::vector<FeatureTerm> terms;

  // All seven attributes as match indicators; age and education are binned
  // into 6 and 5 bands respectively.
  static FeatureSpec defaults();
  static FeatureSpec single(const FeatureTerm& term) { return FeatureSpec{{term}}; }
  std::vector<Attribute> attributes() const;
};

inline const std::vector<int> kDefaultAgeBins = {0, 18, 31, 41, 51, 65};
inline const std::vector<int> kDefaultEducationBins = {0, 1, 10, 14, 16};

struct DyadRow {
  NodeIndex i = 0;  // original graph indices, i < j
  NodeIndex j = 0;
  bool tie = false;
  std::vector<double> features;
};

// All unordered pairs of complete-case nodes of a graph, with their feature
// vectors. Rows are produced on demand in blocks, so memory stays bounded by
// the block size rather than the O(n^2) pair count.
class DyadDesign {
 public:
  DyadDesign(const UndirectedGraph& graph, std::vector<NodeIndex> nodes,
             std::vector<std::vector<int>> encoded, FeatureSpec spec);

  const FeatureSpec& spec() const { return spec_; }
  std::size_t feature_count() const { return spec_.terms.size(); }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t row_count() const { return nodes_.size() * (nodes_.size() - 1) / 2; }
  std::size_t tie_count() const { return ties_; }
  std::span<const NodeIndex> nodes() const { return nodes_; }

  // Calls `sink` with consecutive blocks of at most `block_size` rows, in
  // (i, j) lexicographic order.
  void for_each_block(std::size_t block_size,
                      const std::function<void(std::span<const DyadRow>)>& sink) const;
  // Materializes every row; intended for small designs and tests.
  std::vector<DyadRow> rows() const;

  double feature(std::size_t a, std::size_t b, std::size_t term) const;
  bool tie(std::size_t a, std::size_t b) const;

 private:
  const UndirectedGraph* graph_;
  std::vector<NodeIndex> nodes_;
  std::vector<std::vector<int>> encoded_;  // [term][local node]
  FeatureSpec spec_;
  std::size_t ties_ = 0;
};

// Throws std::invalid_argument when fewer than two nodes have every
// attribute the spec uses.
DyadDesign build_dyad_design(const UndirectedGraph& lcc, const AttributeTable& table, const FeatureSpec& spec);

struct FitOptions {
  double tolerance = 1e-8;  // on max |delta beta|
  int max_iterations = 100;
  // |beta| beyond this, or fitted probabilities collapsing to 0/1, is
  // reported as separation.
  double divergence_bound = 30.0;
  std::size_t block_size = 1 << 16;
};

struct ConfidenceInterval {
  double low = 0.0;
  double high = 0.0;
};

struct LogisticFit {
  std::vector<std::string> names;  // one per feature term
  double beta0 = 0.0;
  double beta0_se = 0.0;
  std::vector<double> beta;
  std::vector<double> std_errors;
  std::vector<double> z_values;
  std::vector<double> p_values;  // two-sided Wald
  std::vector<double> odds_ratios;
  std::vector<ConfidenceInterval> ci95;  // on the odds-ratio scale
  bool converged = false;
  int iterations = 0;
  std::string diagnostic;  // empty when converged cleanly
  std::size_t n_dyads = 0;
  std::size_t n_ties = 0;
  double log_likelihood = 0.0;
};

// Maximum likelihood logistic regression of tie status on the dyad
// features, by iteratively reweighted least squares. Throws
// std::invalid_argument when all rows share a tie status or a feature column
// is constant (naming the attribute). Separation is not an exception: the fit
// comes back with converged = false and a diagnostic.
LogisticFit fit_logistic(const DyadDesign& design, const FitOptions& opts = {});

enum class TieType : std::uint8_t { MaleMale, MaleFemale, FemaleFemale };
std::string_view tie_type_name(TieType t);

enum class Verdict : std::uint8_t { None, Assortative, Dissortative };
std::string_view verdict_name(Verdict v);

struct PermutationReplicate {
  std::uint64_t attempt = 0;
  double mean_degree_male = 0.0;
  double mean_degree_female = 0.0;
  std::array<std::size_t, 3> counts{};
};

struct PermutationOptions {
  double tolerance = 0.05;  // relative deviation allowed in group mean degree
  std::size_t target_replicates = 1000;
  std::uint64_t seed = 1;
  std::uint64_t min_attempts_before_giving_up = 1'000'000;
  double min_acceptance_rate = 1e-3;
  // Invoked for every accepted replicate, in attempt order.
  std::function<void(const PermutationReplicate&)> observer;
};

struct SexPermutationResult {
  std::array<std::size_t, 3> observed{};  // indexed by TieType
  std::array<double, 3> expected_mean{};
  std::array<double, 3> ratio{};  // observed / expected; NaN when expected is 0
  std::array<double, 3> p_values{};
  std::array<Verdict, 3> verdicts{};
  std::size_t n_replicates = 0;
  std::uint64_t n_attempts = 0;
  double tolerance = 0.0;
  std::size_t n_male = 0;
  std::size_t n_female = 0;
  double mean_degree_male = 0.0;  // empirical
  double mean_degree_female = 0.0;
  ConfidenceInterval male_bounds;  // accepted range of permuted means
  ConfidenceInterval female_bounds;
};

// Mean-degree-constrained permutation null model for sex mixing. Sex labels
// are shuffled among sex-observed nodes; a shuffle counts only when the
// permuted mean degree of each sex stays within `tolerance` (relative) of the
// empirical value. Attempt k draws from a stream seeded by (seed, k), so the
// accepted set does not depend on execution order. Throws
// std::invalid_argument for a single-sex network and std::runtime_error when
// the acceptance rate is below `min_acceptance_rate` after the attempt budget.
SexPermutationResult sex_permutation_test(const UndirectedGraph& lcc, const AttributeTable& table,
                                          const PermutationOptions& opts);

// Two-sided Monte Carlo p-value with add-one correction:
// min(1, 2 * min((1 + #{T* >= T}) / (R + 1), (1 + #{T* <= T}) / (R + 1))).
double monte_carlo_two_sided_p(std::size_t count_ge, std::size_t count_le, std::size_t replicates);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;
  std::size_t n_observed = 0;
  std::size_t n_missing = 0;
  double mean_observed = 0.0;
  double mean_missing = 0.0;
};

// Welch two-sample t-test on raw samples. Throws std::invalid_argument if a
// sample has fewer than two values.
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b);

// Compares degrees of nodes with `attr` observed against nodes with it missing.
TTestResult degree_missingness_ttest(const UndirectedGraph& lcc, const AttributeTable& table, Attribute attr);

}  // namespace segnet
