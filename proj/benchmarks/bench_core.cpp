#include <benchmark/benchmark.h>

#include "segnet/community.hpp"
#include "segnet/dyadic.hpp"
#include "segnet/segregation.hpp"
#include "segnet/synth.hpp"

using namespace segnet;

namespace {

// Roughly village sized: a few hundred nodes, mean degree near 8.
SyntheticVillage village(std::size_t blocks) {
  AttributedSbmConfig cfg;
  cfg.block_sizes.assign(blocks, 100);
  cfg.p_in = 0.07;
  cfg.p_out = 0.004;
  cfg.seed = 7;
  return generate_attribute_sbm(cfg);
}

void BM_Louvain(benchmark::State& state) {
  auto sv = village(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(louvain(sv.dataset.graph, {}));
  state.SetComplexityN(static_cast<std::int64_t>(sv.dataset.graph.node_count()));
}
BENCHMARK(BM_Louvain)->Arg(4)->Arg(9)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_AttributeModularity(benchmark::State& state) {
  auto sv = village(9);
  const auto& g = sv.dataset.graph;
  Labels labels(g.node_count());
  for (std::size_t v = 0; v < labels.size(); ++v) labels[v] = sv.dataset.attributes.value(Attribute::Caste, v);
  Partition p(g, sv.planted);
  for (auto _ : state) {
    benchmark::DoNotOptimize(attribute_modularity(g, labels));
    benchmark::DoNotOptimize(within_community_modularity(g, labels, p));
    benchmark::DoNotOptimize(between_community_modularity(g, labels, p));
  }
}
BENCHMARK(BM_AttributeModularity)->Unit(benchmark::kMicrosecond);

void BM_LogisticFit(benchmark::State& state) {
  DyadSampleConfig cfg;
  cfg.beta0 = -4.0;
  cfg.terms = {{Attribute::Caste, 1.6, {1, 1, 1, 1}}, {Attribute::Sex, 0.4, {1, 1}}};
  cfg.n_nodes = static_cast<std::size_t>(state.range(0));
  auto ds = generate_dyad_sample(cfg);
  FeatureSpec spec;
  spec.terms = {{Attribute::Caste, FeatureEncoding::Match, {}}, {Attribute::Sex, FeatureEncoding::Match, {}}};
  for (auto _ : state) {
    auto design = build_dyad_design(ds.graph, ds.attributes, spec);
    benchmark::DoNotOptimize(fit_logistic(design));
  }
}
BENCHMARK(BM_LogisticFit)->Arg(300)->Arg(900)->Unit(benchmark::kMillisecond);

void BM_SexPermutation(benchmark::State& state) {
  auto sv = village(9);
  auto& table = sv.dataset.attributes;
  for (std::size_t v = 0; v < table.size(); ++v) table.set_value(Attribute::Sex, v, static_cast<int>(v % 2));
  PermutationOptions opts;
  opts.tolerance = 0.05;
  opts.target_replicates = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sex_permutation_test(sv.dataset.graph, table, opts));
}
BENCHMARK(BM_SexPermutation)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
