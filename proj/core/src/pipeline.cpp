#include "segnet/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "segnet/csv.hpp"

namespace segnet {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Labels

Labels attribute_labels(const AttributeTable& table, Attribute a, const std::vector<int>& bins,
                        MissingPolicy missing) {
  Labels out(table.size());
  const auto missing_code = static_cast<int>(label_category_count(a, bins));
  FeatureTerm binner{a, FeatureEncoding::Match, bins};
  for (std::size_t v = 0; v < table.size(); ++v) {
    if (auto x = table.value(a, v)) {
      out[v] = binner.encode(*x);
    } else if (missing == MissingPolicy::Category) {
      out[v] = missing_code;
    }
  }
  return out;
}

std::size_t label_category_count(Attribute a, const std::vector<int>& bins) {
  if (is_categorical(a)) return category_names(a).size();
  if (!bins.empty()) return bins.size();
  return a == Attribute::Age ? 130 : 40;  // raw years
}

std::vector<std::string> label_category_names(Attribute a, const std::vector<int>& bins) {
  std::vector<std::string> out;
  if (is_categorical(a)) {
    for (auto n : category_names(a)) out.emplace_back(n);
    return out;
  }
  if (bins.empty()) {
    for (std::size_t k = 0; k < label_category_count(a, bins); ++k) out.push_back(std::to_string(k));
    return out;
  }
  for (std::size_t k = 0; k < bins.size(); ++k) {
    if (k + 1 < bins.size()) {
      out.push_back(std::to_string(bins[k]) + "-" + std::to_string(bins[k + 1] - 1));
    } else {
      out.push_back(std::to_string(bins[k]) + "+");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bundle serialization

namespace {

json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

double get_num(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

json stats_json(const NetworkStats& s) {
  return {{"n_nodes", s.n_nodes},
          {"n_edges", s.n_edges},
          {"density", num(s.density)},
          {"mean_degree", num(s.mean_degree)},
          {"mean_clustering", num(s.mean_clustering)},
          {"n_components", s.n_components},
          {"lcc_nodes", s.lcc_nodes},
          {"lcc_edges", s.lcc_edges},
          {"lcc_density", num(s.lcc_density)},
          {"lcc_mean_degree", num(s.lcc_mean_degree)},
          {"lcc_mean_clustering", num(s.lcc_mean_clustering)},
          {"lcc_node_fraction", num(s.lcc_node_fraction)},
          {"lcc_edge_fraction", num(s.lcc_edge_fraction)}};
}

NetworkStats stats_from(const json& j) {
  NetworkStats s;
  s.n_nodes = j.at("n_nodes").get<std::size_t>();
  s.n_edges = j.at("n_edges").get<std::size_t>();
  s.density = get_num(j.at("density"));
  s.mean_degree = get_num(j.at("mean_degree"));
  s.mean_clustering = get_num(j.at("mean_clustering"));
  s.n_components = j.at("n_components").get<std::size_t>();
  s.lcc_nodes = j.at("lcc_nodes").get<std::size_t>();
  s.lcc_edges = j.at("lcc_edges").get<std::size_t>();
  s.lcc_density = get_num(j.at("lcc_density"));
  s.lcc_mean_degree = get_num(j.at("lcc_mean_degree"));
  s.lcc_mean_clustering = get_num(j.at("lcc_mean_clustering"));
  s.lcc_node_fraction = get_num(j.at("lcc_node_fraction"));
  s.lcc_edge_fraction = get_num(j.at("lcc_edge_fraction"));
  return s;
}

json fit_json(const LogisticFit& f) {
  json coefs = json::array();
  for (std::size_t k = 0; k < f.names.size(); ++k) {
    coefs.push_back({{"attribute", f.names[k]},
                     {"beta", num(f.beta[k])},
                     {"std_error", num(f.std_errors[k])},
                     {"z", num(f.z_values[k])},
                     {"p_value", num(f.p_values[k])},
                     {"odds_ratio", num(f.odds_ratios[k])},
                     {"ci95_low", num(f.ci95[k].low)},
                     {"ci95_high", num(f.ci95[k].high)}});
  }
  return {{"beta0", num(f.beta0)},
          {"beta0_se", num(f.beta0_se)},
          {"coefficients", coefs},
          {"converged", f.converged},
          {"iterations", f.iterations},
          {"diagnostic", f.diagnostic},
          {"n_dyads", f.n_dyads},
          {"n_ties", f.n_ties},
          {"log_likelihood", num(f.log_likelihood)}};
}

LogisticFit fit_from(const json& j) {
  LogisticFit f;
  f.beta0 = get_num(j.at("beta0"));
  f.beta0_se = get_num(j.at("beta0_se"));
  for (const auto& c : j.at("coefficients")) {
    f.names.push_back(c.at("attribute").get<std::string>());
    f.beta.push_back(get_num(c.at("beta")));
    f.std_errors.push_back(get_num(c.at("std_error")));
    f.z_values.push_back(get_num(c.at("z")));
    f.p_values.push_back(get_num(c.at("p_value")));
    f.odds_ratios.push_back(get_num(c.at("odds_ratio")));
    f.ci95.push_back({get_num(c.at("ci95_low")), get_num(c.at("ci95_high"))});
  }
  f.converged = j.at("converged").get<bool>();
  f.iterations = j.at("iterations").get<int>();
  f.diagnostic = j.at("diagnostic").get<std::string>();
  f.n_dyads = j.at("n_dyads").get<std::size_t>();
  f.n_ties = j.at("n_ties").get<std::size_t>();
  f.log_likelihood = get_num(j.at("log_likelihood"));
  return f;
}

constexpr std::array<TieType, 3> kTieTypes = {TieType::MaleMale, TieType::MaleFemale, TieType::FemaleFemale};

Verdict verdict_from(const std::string& s) {
  if (s == "assortative") return Verdict::Assortative;
  if (s == "dissortative") return Verdict::Dissortative;
  return Verdict::None;
}

json permutation_json(const SexPermutationResult& r) {
  json types = json::object();
  for (auto t : kTieTypes) {
    const auto k = static_cast<std::size_t>(t);
    types[std::string(tie_type_name(t))] = {{"observed", r.observed[k]},
                                            {"expected", num(r.expected_mean[k])},
                                            {"ratio", num(r.ratio[k])},
                                            {"p_value", num(r.p_values[k])},
                                            {"verdict", std::string(verdict_name(r.verdicts[k]))}};
  }
  return {{"tolerance", r.tolerance},
          {"n_replicates", r.n_replicates},
          {"n_attempts", r.n_attempts},
          {"n_male", r.n_male},
          {"n_female", r.n_female},
          {"mean_degree_male", num(r.mean_degree_male)},
          {"mean_degree_female", num(r.mean_degree_female)},
          {"male_bounds", {num(r.male_bounds.low), num(r.male_bounds.high)}},
          {"female_bounds", {num(r.female_bounds.low), num(r.female_bounds.high)}},
          {"tie_types", types}};
}

SexPermutationResult permutation_from(const json& j) {
  SexPermutationResult r;
  r.tolerance = j.at("tolerance").get<double>();
  r.n_replicates = j.at("n_replicates").get<std::size_t>();
  r.n_attempts = j.at("n_attempts").get<std::uint64_t>();
  r.n_male = j.at("n_male").get<std::size_t>();
  r.n_female = j.at("n_female").get<std::size_t>();
  r.mean_degree_male = get_num(j.at("mean_degree_male"));
  r.mean_degree_female = get_num(j.at("mean_degree_female"));
  r.male_bounds = {get_num(j.at("male_bounds")[0]), get_num(j.at("male_bounds")[1])};
  r.female_bounds = {get_num(j.at("female_bounds")[0]), get_num(j.at("female_bounds")[1])};
  for (auto t : kTieTypes) {
    const auto k = static_cast<std::size_t>(t);
    const auto& e = j.at("tie_types").at(std::string(tie_type_name(t)));
    r.observed[k] = e.at("observed").get<std::size_t>();
    r.expected_mean[k] = get_num(e.at("expected"));
    r.ratio[k] = get_num(e.at("ratio"));
    r.p_values[k] = get_num(e.at("p_value"));
    r.verdicts[k] = verdict_from(e.at("verdict").get<std::string>());
  }
  return r;
}

json ttest_json(const TTestResult& t) {
  return {{"t", num(t.t)},
          {"df", num(t.df)},
          {"p_value", num(t.p_value)},
          {"n_observed", t.n_observed},
          {"n_missing", t.n_missing},
          {"mean_degree_observed", num(t.mean_observed)},
          {"mean_degree_missing", num(t.mean_missing)}};
}

TTestResult ttest_from(const json& j) {
  TTestResult t;
  t.t = get_num(j.at("t"));
  t.df = get_num(j.at("df"));
  t.p_value = get_num(j.at("p_value"));
  t.n_observed = j.at("n_observed").get<std::size_t>();
  t.n_missing = j.at("n_missing").get<std::size_t>();
  t.mean_observed = get_num(j.at("mean_degree_observed"));
  t.mean_missing = get_num(j.at("mean_degree_missing"));
  return t;
}

json nmi_json(const NmiResult& r) {
  return {{"value", num(r.value)},
          {"mutual_information", num(r.mutual_information)},
          {"entropy_attribute", num(r.entropy_a)},
          {"entropy_community", num(r.entropy_b)},
          {"n_used", r.n_used},
          {"degenerate", r.degenerate}};
}

NmiResult nmi_from(const json& j) {
  NmiResult r;
  r.value = get_num(j.at("value"));
  r.mutual_information = get_num(j.at("mutual_information"));
  r.entropy_a = get_num(j.at("entropy_attribute"));
  r.entropy_b = get_num(j.at("entropy_community"));
  r.n_used = j.at("n_used").get<std::size_t>();
  r.degenerate = j.at("degenerate").get<bool>();
  return r;
}

json normalized_json(const NormalizedModularity& q) {
  return {{"q", num(q.q)}, {"q_max", num(q.q_max)}, {"q_norm", num(q.q_norm)}, {"degenerate", q.degenerate}};
}

NormalizedModularity normalized_from(const json& j) {
  return {get_num(j.at("q")), get_num(j.at("q_max")), get_num(j.at("q_norm")), j.at("degenerate").get<bool>()};
}

json segregation_json(const SegregationReport& r) {
  return {{"q", num(r.q_attr)},
          {"within", normalized_json(r.within)},
          {"between", normalized_json(r.between)},
          {"n_used", r.n_used},
          {"m_within", r.m_within},
          {"m_between", r.m_between}};
}

SegregationReport segregation_from(const std::string& name, const json& j) {
  SegregationReport r;
  r.attribute = name;
  r.q_attr = get_num(j.at("q"));
  r.within = normalized_from(j.at("within"));
  r.between = normalized_from(j.at("between"));
  r.n_used = j.at("n_used").get<std::size_t>();
  r.m_within = j.at("m_within").get<std::size_t>();
  r.m_between = j.at("m_between").get<std::size_t>();
  return r;
}

}  // namespace

std::string bundle_to_json(const VillageBundle& b) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["config_hash"] = b.config_hash;
  doc["village_id"] = b.village_id;
  doc["stats"] = stats_json(b.stats);
  doc["n_attribute_nodes"] = b.n_attribute_nodes;
  doc["categories"] = b.categories;
  doc["joint_fit"] = b.joint_fit ? fit_json(*b.joint_fit) : json(nullptr);
  json singles = json::object();
  for (const auto& [k, f] : b.single_fits) singles[k] = fit_json(f);
  doc["single_fits"] = singles;
  json perms = json::array();
  for (const auto& p : b.permutations) perms.push_back(permutation_json(p));
  doc["sex_permutation"] = perms;
  doc["sex_missingness_ttest"] = b.sex_missingness ? ttest_json(*b.sex_missingness) : json(nullptr);
  doc["n_communities"] = b.n_communities;
  doc["modularity"] = num(b.modularity);
  json seed_q = json::array();
  for (double q : b.seed_modularities) seed_q.push_back(num(q));
  doc["seed_modularities"] = seed_q;
  json nmis = json::object();
  for (const auto& [k, r] : b.nmi) nmis[k] = nmi_json(r);
  doc["nmi"] = nmis;
  json nmi_sd = json::object();
  for (const auto& [k, v] : b.nmi_seed_sd) nmi_sd[k] = num(v);
  doc["nmi_seed_sd"] = nmi_sd;
  json seg = json::object();
  for (const auto& [k, r] : b.segregation) seg[k] = segregation_json(r);
  doc["segregation"] = seg;
  if (b.community_network) {
    doc["community_network"] = {{"n_nodes", b.community_network->n_nodes},
                                {"n_edges", b.community_network->n_edges},
                                {"retained_node_fraction", num(b.community_network->retained_node_fraction)},
                                {"retained_tie_fraction", num(b.community_network->retained_tie_fraction)}};
  } else {
    doc["community_network"] = nullptr;
  }
  doc["warnings"] = b.warnings;
  return doc.dump(2) + "\n";
}

VillageBundle bundle_from_json(const std::string& text) {
  VillageBundle b;
  try {
    auto doc = json::parse(text);
    if (doc.at("schema_version").get<int>() != kSchemaVersion) {
      throw std::invalid_argument("unsupported bundle schema version " +
                                  std::to_string(doc.at("schema_version").get<int>()));
    }
    b.config_hash = doc.at("config_hash").get<std::string>();
    b.village_id = doc.at("village_id").get<std::string>();
    b.stats = stats_from(doc.at("stats"));
    b.n_attribute_nodes = doc.at("n_attribute_nodes").get<std::size_t>();
    b.categories = doc.at("categories").get<std::map<std::string, std::size_t>>();
    if (!doc.at("joint_fit").is_null()) b.joint_fit = fit_from(doc["joint_fit"]);
    for (const auto& [k, v] : doc.at("single_fits").items()) b.single_fits[k] = fit_from(v);
    for (const auto& p : doc.at("sex_permutation")) b.permutations.push_back(permutation_from(p));
    if (!doc.at("sex_missingness_ttest").is_null()) b.sex_missingness = ttest_from(doc["sex_missingness_ttest"]);
    b.n_communities = doc.at("n_communities").get<std::size_t>();
    b.modularity = get_num(doc.at("modularity"));
    for (const auto& q : doc.at("seed_modularities")) b.seed_modularities.push_back(get_num(q));
    for (const auto& [k, v] : doc.at("nmi").items()) b.nmi[k] = nmi_from(v);
    for (const auto& [k, v] : doc.at("nmi_seed_sd").items()) b.nmi_seed_sd[k] = get_num(v);
    for (const auto& [k, v] : doc.at("segregation").items()) b.segregation[k] = segregation_from(k, v);
    if (!doc.at("community_network").is_null()) {
      const auto& cn = doc["community_network"];
      b.community_network = CommunityNetworkSummary{cn.at("n_nodes").get<std::size_t>(),
                                                    cn.at("n_edges").get<std::size_t>(),
                                                    get_num(cn.at("retained_node_fraction")),
                                                    get_num(cn.at("retained_tie_fraction"))};
    }
    b.warnings = doc.at("warnings").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed village bundle: ") + e.what());
  }
  return b;
}

// ---------------------------------------------------------------------------
// Per-village analysis

VillageArtifacts analyze_village(const VillageDataset& dataset, const RunConfig& cfg) {
  VillageArtifacts out;
  auto& b = out.bundle;
  b.village_id = dataset.village_id;
  b.config_hash = cfg.hash();

  auto lcc = largest_connected_component(dataset.graph);
  const auto& g = lcc.graph;
  b.stats = network_stats(dataset.graph, g);
  const auto attrs = dataset.attributes.select(lcc.new_to_old);
  for (auto old : lcc.new_to_old) out.lcc_node_ids.push_back(dataset.node_ids[static_cast<std::size_t>(old)]);

  auto warn = [&](const std::string& what, const std::exception& e) {
    b.warnings.push_back(what + ": " + e.what());
  };

  {
    auto mask = complete_case_mask(attrs, cfg.features.attributes());
    b.n_attribute_nodes = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
  }

  // Dyad-level logistic models.
  try {
    auto design = build_dyad_design(g, attrs, cfg.features);
    b.joint_fit = fit_logistic(design);
    if (!b.joint_fit->converged) b.warnings.push_back("joint dyad model: " + b.joint_fit->diagnostic);
  } catch (const std::exception& e) {
    warn("joint dyad model", e);
  }
  if (cfg.per_attribute_models) {
    for (const auto& term : cfg.features.terms) {
      try {
        auto design = build_dyad_design(g, attrs, FeatureSpec::single(term));
        auto fit = fit_logistic(design);
        if (!fit.converged) b.warnings.push_back("dyad model " + term.name() + ": " + fit.diagnostic);
        b.single_fits[term.name()] = std::move(fit);
      } catch (const std::exception& e) {
        warn("dyad model " + term.name(), e);
      }
    }
  }

  // Sex mixing null model.
  for (double tol : cfg.tolerances) {
    try {
      PermutationOptions opts;
      opts.tolerance = tol;
      opts.target_replicates = cfg.replicates;
      opts.seed = cfg.permutation_seed;
      b.permutations.push_back(sex_permutation_test(g, attrs, opts));
    } catch (const std::exception& e) {
      warn("sex permutation test (tolerance " + format_double(tol) + ")", e);
    }
  }
  try {
    b.sex_missingness = degree_missingness_ttest(g, attrs, Attribute::Sex);
  } catch (const std::exception& e) {
    warn("sex missingness t-test", e);
  }

  // Communities.
  std::vector<Partition> partitions;
  for (auto seed : cfg.louvain_seeds) {
    LouvainOptions lo;
    lo.seed = seed;
    auto res = louvain(g, lo);
    b.seed_modularities.push_back(res.modularity);
    partitions.push_back(std::move(res.partition));
  }
  out.partition = partitions.front();
  b.n_communities = out.partition.n_communities();
  b.modularity = b.seed_modularities.front();

  auto community_labels = [](const Partition& p) {
    Labels l;
    for (int c : p.assignment()) l.emplace_back(c);
    return l;
  };

  std::set<Attribute> labeled(cfg.nmi_attributes.begin(), cfg.nmi_attributes.end());
  labeled.insert(cfg.segregation_attributes.begin(), cfg.segregation_attributes.end());
  for (auto a : labeled) b.categories[std::string(attribute_name(a))] = label_category_count(a, cfg.bins_for(a));

  for (auto a : cfg.nmi_attributes) {
    const std::string name(attribute_name(a));
    auto labels = attribute_labels(attrs, a, cfg.bins_for(a), MissingPolicy::Exclude);
    try {
      std::vector<double> per_seed;
      for (std::size_t s = 0; s < partitions.size(); ++s) {
        auto r = nmi(labels, community_labels(partitions[s]));
        if (s == 0) b.nmi[name] = r;
        per_seed.push_back(r.value);
      }
      if (per_seed.size() > 1) b.nmi_seed_sd[name] = sd_of(per_seed);
    } catch (const std::exception& e) {
      warn("nmi " + name, e);
    }
  }

  for (auto a : cfg.segregation_attributes) {
    const std::string name(attribute_name(a));
    auto labels = attribute_labels(attrs, a, cfg.bins_for(a), cfg.missing);
    try {
      b.segregation[name] = segregation_report(g, labels, out.partition, name);
    } catch (const std::exception& e) {
      warn("segregation " + name, e);
    }
  }

  try {
    const auto a = cfg.network_attribute;
    auto labels = attribute_labels(attrs, a, cfg.bins_for(a), MissingPolicy::Exclude);
    out.network = build_community_network(g, out.partition, labels, label_category_count(a, cfg.bins_for(a)),
                                          cfg.node_min, cfg.edge_min);
    b.community_network = CommunityNetworkSummary{out.network->nodes.size(), out.network->edges.size(),
                                                  out.network->retained_node_fraction,
                                                  out.network->retained_tie_fraction};
  } catch (const std::exception& e) {
    warn("community network", e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corpus summary

MetricSummary summarize_values(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("summarize_values: no values");
  std::sort(values.begin(), values.end());
  MetricSummary s;
  s.min = values.front();
  s.max = values.back();
  const std::size_t n = values.size();
  s.median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  return s;
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sd_of(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  const double m = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

namespace {

double pct(std::size_t k, std::size_t n) { return n ? 100.0 * static_cast<double>(k) / static_cast<double>(n) : 0.0; }

}  // namespace

CorpusSummary summarize_corpus(const std::vector<VillageBundle>& bundles, double qb_cutoff) {
  CorpusSummary s;
  s.n_villages = bundles.size();
  s.qb_cutoff = qb_cutoff;
  if (bundles.empty()) return s;
  s.config_hash = bundles.front().config_hash;
  for (const auto& b : bundles) {
    if (b.config_hash != s.config_hash) s.config_hash = "mixed";
  }

  auto collect = [&](auto field) {
    std::vector<double> v;
    for (const auto& b : bundles) v.push_back(field(b.stats));
    return summarize_values(v);
  };
  auto d = [](std::size_t x) { return static_cast<double>(x); };
  s.network_stats.push_back({"N", collect([&](const NetworkStats& x) { return d(x.n_nodes); }),
                      collect([&](const NetworkStats& x) { return d(x.lcc_nodes); })});
  s.network_stats.push_back({"M", collect([&](const NetworkStats& x) { return d(x.n_edges); }),
                      collect([&](const NetworkStats& x) { return d(x.lcc_edges); })});
  s.network_stats.push_back({"density", collect([](const NetworkStats& x) { return x.density; }),
                      collect([](const NetworkStats& x) { return x.lcc_density; })});
  s.network_stats.push_back({"mean_degree", collect([](const NetworkStats& x) { return x.mean_degree; }),
                      collect([](const NetworkStats& x) { return x.lcc_mean_degree; })});
  s.network_stats.push_back({"mean_clustering", collect([](const NetworkStats& x) { return x.mean_clustering; }),
                      collect([](const NetworkStats& x) { return x.lcc_mean_clustering; })});
  s.network_stats.push_back({"components", collect([&](const NetworkStats& x) { return d(x.n_components); }),
                      MetricSummary{1.0, 1.0, 1.0}});
  s.network_stats.push_back({"node_fraction", std::nullopt, collect([](const NetworkStats& x) { return x.lcc_node_fraction; })});
  s.network_stats.push_back({"edge_fraction", std::nullopt, collect([](const NetworkStats& x) { return x.lcc_edge_fraction; })});

  // Attribute order: the fixed attribute order, restricted to what appears.
  for (auto a : kAllAttributes) {
    const std::string name(attribute_name(a));
    DyadicSummaryRow row;
    row.attribute = name;
    std::vector<double> ors, nmis;
    std::size_t significant = 0;
    bool seen = false;
    for (const auto& b : bundles) {
      if (auto it = b.categories.find(name); it != b.categories.end()) row.n_categories = it->second;
      if (b.joint_fit && b.joint_fit->converged) {
        const auto& f = *b.joint_fit;
        auto pos = std::find(f.names.begin(), f.names.end(), name);
        if (pos != f.names.end()) {
          const auto k = static_cast<std::size_t>(pos - f.names.begin());
          ors.push_back(f.odds_ratios[k]);
          if (f.p_values[k] < 0.05 && f.odds_ratios[k] > 1.0) ++significant;
          seen = true;
        }
      }
      if (auto it = b.nmi.find(name); it != b.nmi.end()) {
        nmis.push_back(it->second.value);
        seen = true;
      }
    }
    if (!seen) continue;
    row.n_villages = ors.size();
    row.pct_significant = pct(significant, ors.size());
    if (!ors.empty()) row.odds_ratio = summarize_values(ors);
    row.nmi_villages = nmis.size();
    row.nmi_mean = nmis.empty() ? 0.0 : mean_of(nmis);
    row.nmi_sd = sd_of(nmis);
    s.dyadic.push_back(std::move(row));
  }

  std::set<double> tolerances;
  for (const auto& b : bundles) {
    for (const auto& p : b.permutations) tolerances.insert(p.tolerance);
  }
  for (double tol : tolerances) {
    for (auto t : kTieTypes) {
      SexMixingRow row;
      row.tolerance = tol;
      row.tie_type = t;
      std::size_t assort = 0, dissort = 0;
      for (const auto& b : bundles) {
        for (const auto& p : b.permutations) {
          if (p.tolerance != tol) continue;
          ++row.n_villages;
          const auto v = p.verdicts[static_cast<std::size_t>(t)];
          if (v == Verdict::Assortative) ++assort;
          if (v == Verdict::Dissortative) ++dissort;
        }
      }
      row.pct_assortative = pct(assort, row.n_villages);
      row.pct_dissortative = pct(dissort, row.n_villages);
      s.sex_mixing.push_back(row);
    }
  }

  for (auto a : kAllAttributes) {
    const std::string name(attribute_name(a));
    std::vector<double> qw, qb;
    std::size_t qw_above = 0, qb_pos = 0, qb_above = 0;
    for (const auto& b : bundles) {
      auto it = b.segregation.find(name);
      if (it == b.segregation.end()) continue;
      qw.push_back(it->second.within.q_norm);
      qb.push_back(it->second.between.q_norm);
      if (it->second.within.q_norm > 0.3) ++qw_above;
      if (it->second.between.q_norm > 0.0) ++qb_pos;
      if (it->second.between.q_norm > qb_cutoff) ++qb_above;
    }
    if (qw.empty()) continue;
    SegregationSummaryRow row;
    row.attribute = name;
    row.n_villages = qw.size();
    row.q_within_norm_mean = mean_of(qw);
    row.q_within_norm_sd = sd_of(qw);
    row.pct_q_within_norm_above_0_3 = pct(qw_above, qw.size());
    row.q_between_norm_mean = mean_of(qb);
    row.q_between_norm_sd = sd_of(qb);
    row.pct_q_between_positive = pct(qb_pos, qb.size());
    row.pct_q_between_above_cutoff = pct(qb_above, qb.size());
    s.segregation.push_back(row);
  }

  std::vector<double> node_frac, tie_frac;
  for (const auto& b : bundles) {
    if (!b.community_network) continue;
    node_frac.push_back(b.community_network->retained_node_fraction);
    tie_frac.push_back(b.community_network->retained_tie_fraction);
  }
  s.mean_retained_node_fraction = node_frac.empty() ? 0.0 : mean_of(node_frac);
  s.mean_retained_tie_fraction = tie_frac.empty() ? 0.0 : mean_of(tie_frac);
  return s;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& file, const std::string& config_hash) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "# segnet schema=" << kSchemaVersion << " config=" << config_hash << "\n";
  return out;
}

std::string fmt(double v) { return format_double(v); }
std::string fmt(std::size_t v) { return std::to_string(v); }

void write_village_tables(const std::vector<VillageBundle>& bundles, const std::filesystem::path& dir,
                          const std::string& config_hash) {
  {
    auto out = open_csv(dir / "network_stats.csv", config_hash);
    write_csv_row(out, {"village", "N", "M", "density", "mean_degree", "mean_clustering", "components", "n", "m",
                        "lcc_density", "lcc_mean_degree", "lcc_mean_clustering", "node_fraction", "edge_fraction"});
    for (const auto& b : bundles) {
      const auto& s = b.stats;
      write_csv_row(out, {b.village_id, fmt(s.n_nodes), fmt(s.n_edges), fmt(s.density), fmt(s.mean_degree),
                          fmt(s.mean_clustering), fmt(s.n_components), fmt(s.lcc_nodes), fmt(s.lcc_edges),
                          fmt(s.lcc_density), fmt(s.lcc_mean_degree), fmt(s.lcc_mean_clustering),
                          fmt(s.lcc_node_fraction), fmt(s.lcc_edge_fraction)});
    }
  }
  {
    auto out = open_csv(dir / "dyadic_fits.csv", config_hash);
    write_csv_row(out, {"village", "model", "attribute", "odds_ratio", "ci95_low", "ci95_high", "p_value",
                        "converged"});
    auto rows = [&](const std::string& village, const std::string& model, const LogisticFit& f) {
      for (std::size_t k = 0; k < f.names.size(); ++k) {
        write_csv_row(out, {village, model, f.names[k], fmt(f.odds_ratios[k]), fmt(f.ci95[k].low),
                            fmt(f.ci95[k].high), fmt(f.p_values[k]), f.converged ? "true" : "false"});
      }
    };
    for (const auto& b : bundles) {
      if (b.joint_fit) rows(b.village_id, "joint", *b.joint_fit);
      for (const auto& [name, f] : b.single_fits) rows(b.village_id, "single", f);
    }
  }
  {
    auto out = open_csv(dir / "sex_permutation.csv", config_hash);
    write_csv_row(out, {"village", "tie_type", "observed", "expected", "ratio", "p_value", "verdict", "tolerance"});
    for (const auto& b : bundles) {
      for (const auto& p : b.permutations) {
        for (auto t : kTieTypes) {
          const auto k = static_cast<std::size_t>(t);
          write_csv_row(out, {b.village_id, std::string(tie_type_name(t)), fmt(p.observed[k]),
                              fmt(p.expected_mean[k]), fmt(p.ratio[k]), fmt(p.p_values[k]),
                              std::string(verdict_name(p.verdicts[k])), fmt(p.tolerance)});
        }
      }
    }
  }
  {
    std::vector<std::string> names;
    for (auto a : kAllAttributes) {
      std::string n(attribute_name(a));
      for (const auto& b : bundles) {
        if (b.nmi.contains(n)) {
          names.push_back(n);
          break;
        }
      }
    }
    auto out = open_csv(dir / "nmi.csv", config_hash);
    std::vector<std::string> header{"village"};
    header.insert(header.end(), names.begin(), names.end());
    write_csv_row(out, header);
    for (const auto& b : bundles) {
      std::vector<std::string> row{b.village_id};
      for (const auto& n : names) {
        auto it = b.nmi.find(n);
        row.push_back(it == b.nmi.end() ? "" : fmt(it->second.value));
      }
      write_csv_row(out, row);
    }
  }
  {
    auto out = open_csv(dir / "segregation.csv", config_hash);
    write_csv_row(out, {"village", "attribute", "Q", "Q_w", "Q_b", "Q_w_norm", "Q_b_norm", "n_used"});
    for (const auto& b : bundles) {
      for (const auto& [name, r] : b.segregation) {
        write_csv_row(out, {b.village_id, name, fmt(r.q_attr), fmt(r.within.q), fmt(r.between.q),
                            fmt(r.within.q_norm), fmt(r.between.q_norm), fmt(r.n_used)});
      }
    }
  }
}

}  // namespace

void write_summary(const CorpusSummary& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_csv(dir / "network_stats_summary.csv", s.config_hash);
    write_csv_row(out, {"metric", "network_min", "network_median", "network_max", "lcc_min", "lcc_median", "lcc_max"});
    for (const auto& r : s.network_stats) {
      std::vector<std::string> row{r.metric};
      if (r.network) {
        row.insert(row.end(), {fmt(r.network->min), fmt(r.network->median), fmt(r.network->max)});
      } else {
        row.insert(row.end(), {"", "", ""});
      }
      row.insert(row.end(), {fmt(r.lcc.min), fmt(r.lcc.median), fmt(r.lcc.max)});
      write_csv_row(out, row);
    }
  }
  {
    auto out = open_csv(dir / "dyadic_summary.csv", s.config_hash);
    write_csv_row(out, {"attribute", "categories", "villages", "pct_significant", "or_min", "or_median", "or_max",
                        "nmi_mean", "nmi_sd"});
    for (const auto& r : s.dyadic) {
      std::vector<std::string> row{r.attribute, fmt(r.n_categories), fmt(r.n_villages), fmt(r.pct_significant)};
      if (r.odds_ratio) {
        row.insert(row.end(), {fmt(r.odds_ratio->min), fmt(r.odds_ratio->median), fmt(r.odds_ratio->max)});
      } else {
        row.insert(row.end(), {"", "", ""});
      }
      row.insert(row.end(), {fmt(r.nmi_mean), fmt(r.nmi_sd)});
      write_csv_row(out, row);
    }
  }
  {
    auto out = open_csv(dir / "sex_permutation_summary.csv", s.config_hash);
    write_csv_row(out, {"tolerance", "tie_type", "villages", "pct_assortative", "pct_dissortative"});
    for (const auto& r : s.sex_mixing) {
      write_csv_row(out, {fmt(r.tolerance), std::string(tie_type_name(r.tie_type)), fmt(r.n_villages),
                          fmt(r.pct_assortative), fmt(r.pct_dissortative)});
    }
  }
  {
    auto out = open_csv(dir / "segregation_summary.csv", s.config_hash);
    write_csv_row(out, {"attribute", "villages", "q_w_norm_mean", "q_w_norm_sd", "pct_q_w_norm_gt_0.3",
                        "q_b_norm_mean", "q_b_norm_sd", "pct_q_b_norm_positive",
                        "pct_q_b_norm_gt_" + fmt(s.qb_cutoff)});
    for (const auto& r : s.segregation) {
      write_csv_row(out, {r.attribute, fmt(r.n_villages), fmt(r.q_within_norm_mean), fmt(r.q_within_norm_sd),
                          fmt(r.pct_q_within_norm_above_0_3), fmt(r.q_between_norm_mean), fmt(r.q_between_norm_sd),
                          fmt(r.pct_q_between_positive), fmt(r.pct_q_between_above_cutoff)});
    }
  }
  {
    auto out = open_csv(dir / "community_network_summary.csv", s.config_hash);
    write_csv_row(out, {"villages", "mean_retained_node_fraction", "mean_retained_tie_fraction"});
    write_csv_row(out, {fmt(s.n_villages), fmt(s.mean_retained_node_fraction), fmt(s.mean_retained_tie_fraction)});
  }
}

CorpusSummary summarize_directory(const std::filesystem::path& dir, double qb_cutoff) {
  const auto villages_dir = dir / "villages";
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(villages_dir)) {
    for (const auto& e : std::filesystem::directory_iterator(villages_dir)) {
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
  }
  if (files.empty()) throw std::invalid_argument("no village bundles found under " + villages_dir.string());
  std::sort(files.begin(), files.end());
  std::vector<VillageBundle> bundles;
  for (const auto& f : files) {
    std::ifstream in(f);
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      bundles.push_back(bundle_from_json(buf.str()));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(f.string() + ": " + e.what());
    }
  }
  auto summary = summarize_corpus(bundles, qb_cutoff);
  write_village_tables(bundles, dir, summary.config_hash);
  write_summary(summary, dir);
  return summary;
}

// ---------------------------------------------------------------------------
// Batch run

std::vector<std::filesystem::path> discover_villages(const std::filesystem::path& corpus) {
  std::vector<std::filesystem::path> out;
  if (!std::filesystem::is_directory(corpus)) return out;
  for (const auto& e : std::filesystem::directory_iterator(corpus)) {
    if (!e.is_directory()) continue;
    if (std::filesystem::is_directory(e.path() / "edges") || std::filesystem::is_directory(e.path() / "matrices")) {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << text;
}

void write_village_artifacts(const VillageArtifacts& art, const RunConfig& cfg, const std::filesystem::path& out_dir) {
  const auto& id = art.bundle.village_id;
  write_text(out_dir / "villages" / (id + ".json"), bundle_to_json(art.bundle));
  {
    auto out = open_csv(out_dir / "partitions" / (id + ".csv"), art.bundle.config_hash);
    write_csv_row(out, {"node_id", "community"});
    for (std::size_t v = 0; v < art.lcc_node_ids.size(); ++v) {
      write_csv_row(out, {art.lcc_node_ids[v], std::to_string(art.partition.assignment()[v])});
    }
  }
  if (art.network) {
    const auto a = cfg.network_attribute;
    auto names = label_category_names(a, cfg.bins_for(a));
    write_text(out_dir / "community_networks" / (id + ".dot"),
               "// segnet schema=" + std::to_string(kSchemaVersion) + " config=" + art.bundle.config_hash + "\n" +
                   to_dot(*art.network, names));
    auto doc = json::parse(to_json(*art.network, names));
    json wrapped;
    wrapped["schema_version"] = kSchemaVersion;
    wrapped["config_hash"] = art.bundle.config_hash;
    wrapped["village_id"] = id;
    wrapped["attribute"] = std::string(attribute_name(a));
    for (auto& [k, v] : doc.items()) wrapped[k] = v;
    write_text(out_dir / "community_networks" / (id + ".json"), wrapped.dump(2) + "\n");
  }
}

}  // namespace

PipelineOutcome run_pipeline(const RunConfig& cfg) {
  PipelineOutcome outcome;
  cfg.validate();
  auto villages = discover_villages(cfg.corpus);
  outcome.n_villages = villages.size();
  if (villages.empty()) {
    outcome.exit_code = 2;
    outcome.message = "no villages found in " + cfg.corpus.string();
    return outcome;
  }
  const auto& out_dir = cfg.output;
  for (const char* sub : {"villages", "partitions", "community_networks"}) {
    std::filesystem::create_directories(out_dir / sub);
  }
  write_text(out_dir / "config.txt", cfg.canonical_text());

  std::vector<std::optional<VillageBundle>> bundles(villages.size());
  std::vector<std::string> errors(villages.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < villages.size(); i = next++) {
      try {
        auto ds = load_village_dir(villages[i]);
        auto art = analyze_village(ds, cfg);
        write_village_artifacts(art, cfg, out_dir);
        bundles[i] = std::move(art.bundle);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        if (errors[i].empty()) errors[i] = "unknown error";
      }
    }
  };
  const std::size_t n_workers = std::max<std::size_t>(1, std::min(cfg.workers, villages.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<VillageBundle> ok;
  json failures = json::array();
  for (std::size_t i = 0; i < villages.size(); ++i) {
    if (bundles[i]) {
      ok.push_back(std::move(*bundles[i]));
    } else {
      const auto id = villages[i].filename().string();
      outcome.failures.emplace_back(id, errors[i]);
      failures.push_back({{"village", id}, {"error", errors[i]}});
    }
  }
  json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["config_hash"] = cfg.hash();
  manifest["villages"] = villages.size();
  manifest["failures"] = failures;
  write_text(out_dir / "errors.json", manifest.dump(2) + "\n");

  if (!ok.empty()) {
    auto summary = summarize_corpus(ok, cfg.qb_cutoff);
    write_village_tables(ok, out_dir, summary.config_hash);
    write_summary(summary, out_dir);
  }
  if (!outcome.failures.empty()) {
    outcome.exit_code = 1;
    outcome.message = std::to_string(outcome.failures.size()) + " of " + std::to_string(villages.size()) +
                      " villages failed; see " + (out_dir / "errors.json").string();
  } else {
    outcome.message = "processed " + std::to_string(villages.size()) + " villages";
  }
  return outcome;
}

}  // namespace segnet
