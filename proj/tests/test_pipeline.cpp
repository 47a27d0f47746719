#include <gtest/gtest.h>

#include <cmath>

#include "json.hpp"

#include "fixtures.hpp"
#include "segnet/csv.hpp"
#include "segnet/pipeline.hpp"
#include "segnet/synth.hpp"

using namespace segnet;
using fixtures::TempDir;

namespace {

void make_village(const std::filesystem::path& corpus, const std::string& id, std::uint64_t seed) {
  AttributedSbmConfig cfg;
  cfg.block_sizes = {25, 25, 20};
  cfg.p_in = 0.3;
  cfg.p_out = 0.02;
  cfg.seed = seed;
  cfg.village_id = id;
  write_village_dir(generate_attribute_sbm(cfg).dataset, corpus / id);
}

RunConfig small_config(const TempDir& d) {
  RunConfig cfg;
  cfg.corpus = d / "corpus";
  cfg.output = d / "out";
  cfg.replicates = 100;
  return cfg;
}

TEST(RunConfig, ParsesEveryKey) {
  auto cfg = parse_run_config_text(R"(
# comment
corpus = data
output = results
features.age = difference
features.savings = off
bins.education = 0, 5, 12
dyadic.per_attribute = true
permutation.tolerances = 0.05
permutation.replicates = 250
permutation.seed = 9
louvain.seeds = 1, 2, 3
community_network.node_min = 0.1
community_network.edge_min = 0.02
community_network.attribute = religion
nmi.attributes = caste, sex
segregation.attributes = caste
segregation.missing = category
segregation.qb_cutoff = 0.3
workers = 3
)",
                                   "/base");
  EXPECT_EQ(cfg.corpus, "/base/data");
  EXPECT_EQ(cfg.output, "/base/results");
  ASSERT_EQ(cfg.features.terms.size(), 6u);
  EXPECT_EQ(cfg.features.terms[1].encoding, FeatureEncoding::AbsDifference);
  EXPECT_TRUE(cfg.features.terms[1].bin_edges.empty());
  EXPECT_EQ(cfg.features.terms[4].bin_edges, (std::vector<int>{0, 5, 12}));
  EXPECT_TRUE(cfg.per_attribute_models);
  EXPECT_EQ(cfg.tolerances, (std::vector<double>{0.05}));
  EXPECT_EQ(cfg.replicates, 250u);
  EXPECT_EQ(cfg.permutation_seed, 9u);
  EXPECT_EQ(cfg.louvain_seeds, (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_EQ(cfg.node_min, 0.1);
  EXPECT_EQ(cfg.edge_min, 0.02);
  EXPECT_EQ(cfg.network_attribute, Attribute::Religion);
  EXPECT_EQ(cfg.nmi_attributes, (std::vector<Attribute>{Attribute::Caste, Attribute::Sex}));
  EXPECT_EQ(cfg.missing, MissingPolicy::Category);
  EXPECT_EQ(cfg.qb_cutoff, 0.3);
  EXPECT_EQ(cfg.workers, 3u);
}

TEST(RunConfig, DefaultsMatchDocumentedValues) {
  RunConfig cfg;
  EXPECT_EQ(cfg.tolerances, (std::vector<double>{0.05, 0.20}));
  EXPECT_EQ(cfg.replicates, 1000u);
  EXPECT_EQ(cfg.node_min, 0.05);
  EXPECT_EQ(cfg.edge_min, 0.05);
  EXPECT_EQ(cfg.features.terms.size(), 7u);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(RunConfig, Errors) {
  EXPECT_THROW(parse_run_config_text("permutation.tolerances = \n"), std::invalid_argument);
  EXPECT_THROW(parse_run_config_text("permutation.replicates = 0\n"), std::invalid_argument);
  EXPECT_THROW(parse_run_config_text("colour = red\n"), std::invalid_argument);
  EXPECT_THROW(parse_run_config_text("just text\n"), std::invalid_argument);
  EXPECT_THROW(parse_run_config_text("bins.caste = 1,2\n"), std::invalid_argument);
  EXPECT_THROW(parse_run_config_text("bins.age = 5,3\n"), std::invalid_argument);
  try {
    parse_run_config_text("corpus = x\n\nworkers = many\n");
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(RunConfig, HashTracksResultAffectingSettingsOnly) {
  RunConfig a, b;
  b.corpus = "elsewhere";
  b.workers = 8;
  EXPECT_EQ(a.hash(), b.hash());
  b.replicates = 999;
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
}

TEST(RunConfig, EnvironmentOverridesWorkers) {
  RunConfig cfg;
  ::setenv("SEGNET_WORKERS", "6", 1);
  apply_environment(cfg);
  EXPECT_EQ(cfg.workers, 6u);
  ::setenv("SEGNET_WORKERS", "zero", 1);
  apply_environment(cfg);
  EXPECT_EQ(cfg.workers, 6u);
  ::unsetenv("SEGNET_WORKERS");
}

TEST(Labels, BinsAndMissingCategory) {
  AttributeTable t(3);
  t.set_age(0, 25);
  t.set_age(1, 70);
  auto l = attribute_labels(t, Attribute::Age, kDefaultAgeBins);
  EXPECT_EQ(l, (Labels{1, 5, std::nullopt}));
  auto c = attribute_labels(t, Attribute::Age, kDefaultAgeBins, MissingPolicy::Category);
  EXPECT_EQ(c[2], 6);
  EXPECT_EQ(label_category_names(Attribute::Age, kDefaultAgeBins).front(), "0-17");
  EXPECT_EQ(label_category_names(Attribute::Age, kDefaultAgeBins).back(), "65+");
  EXPECT_EQ(label_category_count(Attribute::Caste, {}), 4u);
}

TEST(Summary, SingleVillageHasEqualMinMedianMax) {
  VillageBundle b;
  b.village_id = "v";
  b.stats.n_nodes = 10;
  b.stats.lcc_nodes = 9;
  b.stats.mean_degree = 2.5;
  auto s = summarize_corpus({b});
  for (const auto& row : s.network_stats) {
    if (row.network) {
      EXPECT_EQ(row.network->min, row.network->median);
      EXPECT_EQ(row.network->median, row.network->max);
    }
    EXPECT_EQ(row.lcc.min, row.lcc.max);
  }
  EXPECT_EQ(s.network_stats[0].network->median, 10.0);
}

TEST(Summary, MedianOfEvenCountAveragesMiddle) {
  auto m = summarize_values({4, 1, 3, 2});
  EXPECT_EQ(m.min, 1.0);
  EXPECT_EQ(m.median, 2.5);
  EXPECT_EQ(m.max, 4.0);
  EXPECT_THROW(summarize_values({}), std::invalid_argument);
}

TEST(Summary, SignificanceAndSexVerdictPercentages) {
  std::vector<VillageBundle> bundles(4);
  for (std::size_t i = 0; i < 4; ++i) {
    auto& b = bundles[i];
    b.village_id = "v" + std::to_string(i);
    LogisticFit f;
    f.names = {"caste"};
    f.converged = true;
    f.beta = {1.0};
    f.odds_ratios = {i == 3 ? 0.5 : 3.0};
    f.p_values = {i == 2 ? 0.2 : 0.01};
    f.std_errors = {0.1};
    f.z_values = {1.0};
    f.ci95 = {{1, 2}};
    b.joint_fit = f;
    SexPermutationResult p;
    p.tolerance = 0.05;
    p.verdicts = {Verdict::Assortative, i < 3 ? Verdict::Dissortative : Verdict::None, Verdict::None};
    b.permutations = {p};
  }
  auto s = summarize_corpus(bundles);
  ASSERT_EQ(s.dyadic.size(), 1u);
  EXPECT_EQ(s.dyadic[0].attribute, "caste");
  EXPECT_DOUBLE_EQ(s.dyadic[0].pct_significant, 50.0);  // p < 0.05 with OR > 1
  ASSERT_EQ(s.sex_mixing.size(), 3u);
  EXPECT_DOUBLE_EQ(s.sex_mixing[0].pct_assortative, 100.0);
  EXPECT_DOUBLE_EQ(s.sex_mixing[1].pct_dissortative, 75.0);
}

TEST(Bundle, JsonRoundTrip) {
  TempDir d("bundle");
  make_village(d / "corpus", "v1", 3);
  auto cfg = small_config(d);
  cfg.louvain_seeds = {1, 2};
  cfg.per_attribute_models = true;
  auto art = analyze_village(load_village_dir(d / "corpus" / "v1"), cfg);
  const auto text = bundle_to_json(art.bundle);
  auto back = bundle_from_json(text);
  EXPECT_EQ(bundle_to_json(back), text);
  EXPECT_EQ(back.single_fits.size(), 7u);
  EXPECT_EQ(back.seed_modularities.size(), 2u);
  EXPECT_EQ(back.permutations.size(), 2u);
  EXPECT_TRUE(back.nmi_seed_sd.contains("caste"));
  EXPECT_THROW(bundle_from_json("{}"), std::invalid_argument);
}

TEST(AnalyzeVillage, SoftFailuresBecomeWarnings) {
  // No attributes at all: structure still analyzed, attribute measures warn.
  VillageDataset ds;
  ds.village_id = "bare";
  ds.graph = fixtures::bridged_k5s();
  ds.attributes = AttributeTable(10);
  for (int i = 0; i < 10; ++i) ds.node_ids.push_back("n" + std::to_string(i));
  RunConfig cfg;
  cfg.replicates = 10;
  auto art = analyze_village(ds, cfg);
  EXPECT_EQ(art.bundle.n_communities, 2u);
  EXPECT_FALSE(art.bundle.joint_fit);
  EXPECT_TRUE(art.bundle.permutations.empty());
  EXPECT_FALSE(art.bundle.warnings.empty());
  EXPECT_EQ(art.lcc_node_ids.size(), 10u);
}

TEST(Pipeline, EmptyCorpusFails) {
  TempDir d("empty");
  std::filesystem::create_directories(d / "corpus");
  auto outcome = run_pipeline(small_config(d));
  EXPECT_NE(outcome.exit_code, 0);
  EXPECT_NE(outcome.message.find("no villages found"), std::string::npos);
}

TEST(Pipeline, SingleVillageProducesAllArtifacts) {
  TempDir d("single");
  make_village(d / "corpus", "alpha", 5);
  auto cfg = small_config(d);
  auto outcome = run_pipeline(cfg);
  ASSERT_EQ(outcome.exit_code, 0) << outcome.message;
  const auto out = d / "out";
  for (const char* f : {"villages/alpha.json", "partitions/alpha.csv", "community_networks/alpha.dot",
                        "community_networks/alpha.json", "errors.json", "config.txt", "network_stats.csv",
                        "dyadic_fits.csv", "sex_permutation.csv", "nmi.csv", "segregation.csv",
                        "network_stats_summary.csv", "dyadic_summary.csv", "sex_permutation_summary.csv",
                        "segregation_summary.csv", "community_network_summary.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(out / f)) << f;
  }
  const auto hash = cfg.hash();
  auto bundle = nlohmann::json::parse(fixtures::read_file(out / "villages/alpha.json"));
  EXPECT_EQ(bundle["schema_version"], kSchemaVersion);
  EXPECT_EQ(bundle["config_hash"], hash);
  for (const char* key : {"stats", "joint_fit", "sex_permutation", "nmi", "segregation", "community_network"}) {
    EXPECT_FALSE(bundle[key].is_null()) << key;
  }
  auto cn = nlohmann::json::parse(fixtures::read_file(out / "community_networks/alpha.json"));
  EXPECT_EQ(cn["config_hash"], hash);
  for (const char* f : {"network_stats_summary.csv", "partitions/alpha.csv", "segregation.csv"}) {
    auto text = fixtures::read_file(out / f);
    EXPECT_EQ(text.rfind("# segnet schema=1 config=" + hash, 0), 0u) << f;
  }
  auto partition = read_csv(out / "partitions/alpha.csv");
  EXPECT_EQ(partition.header, (std::vector<std::string>{"node_id", "community"}));
  EXPECT_EQ(partition.rows.size(), bundle["stats"]["lcc_nodes"].get<std::size_t>());
}

TEST(Pipeline, ByteReproducibleAcrossRunsAndWorkers) {
  TempDir d("repro");
  for (int i = 0; i < 3; ++i) make_village(d / "corpus", "v" + std::to_string(i), 10 + i);
  auto cfg = small_config(d);
  cfg.workers = 1;
  ASSERT_EQ(run_pipeline(cfg).exit_code, 0);
  std::map<std::string, std::string> first;
  for (const auto& e : std::filesystem::recursive_directory_iterator(d / "out")) {
    if (e.is_regular_file()) first[std::filesystem::relative(e.path(), d / "out").string()] = fixtures::read_file(e.path());
  }
  std::filesystem::remove_all(d / "out");
  cfg.workers = 3;
  ASSERT_EQ(run_pipeline(cfg).exit_code, 0);
  std::size_t compared = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(d / "out")) {
    if (!e.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(e.path(), d / "out").string();
    ASSERT_TRUE(first.contains(rel)) << rel;
    EXPECT_EQ(first[rel], fixtures::read_file(e.path())) << rel;
    ++compared;
  }
  EXPECT_EQ(compared, first.size());
}

TEST(Pipeline, FailingVillageRecordedOthersProcessed) {
  TempDir d("partial");
  make_village(d / "corpus", "good", 1);
  fixtures::write_file(d / "corpus" / "bad" / "edges" / "e.csv", "source,target\na\n");
  auto outcome = run_pipeline(small_config(d));
  EXPECT_EQ(outcome.exit_code, 1);
  ASSERT_EQ(outcome.failures.size(), 1u);
  EXPECT_EQ(outcome.failures[0].first, "bad");
  EXPECT_TRUE(std::filesystem::exists(d / "out" / "villages" / "good.json"));
  auto errors = nlohmann::json::parse(fixtures::read_file(d / "out" / "errors.json"));
  EXPECT_EQ(errors["failures"].size(), 1u);
  EXPECT_EQ(errors["failures"][0]["village"], "bad");
}

TEST(Pipeline, SummaryIsRecomputableFromBundles) {
  TempDir d("resummarize");
  make_village(d / "corpus", "a", 1);
  make_village(d / "corpus", "b", 2);
  ASSERT_EQ(run_pipeline(small_config(d)).exit_code, 0);
  const auto table = fixtures::read_file(d / "out" / "dyadic_summary.csv");
  const auto seg = fixtures::read_file(d / "out" / "segregation_summary.csv");
  std::filesystem::remove(d / "out" / "dyadic_summary.csv");
  auto s = summarize_directory(d / "out");
  EXPECT_EQ(s.n_villages, 2u);
  EXPECT_EQ(fixtures::read_file(d / "out" / "dyadic_summary.csv"), table);
  EXPECT_EQ(fixtures::read_file(d / "out" / "segregation_summary.csv"), seg);
  EXPECT_THROW(summarize_directory(d / "corpus"), std::invalid_argument);
}

}  // namespace
