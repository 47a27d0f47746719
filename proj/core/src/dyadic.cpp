#include "segnet/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "segnet/random.hpp"

namespace segnet {

int FeatureTerm::encode(int raw) const {
  if (bin_edges.empty()) return raw;
  auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), raw);
  if (it == bin_edges.begin()) return 0;
  return static_cast<int>(it - bin_edges.begin()) - 1;
}

FeatureSpec FeatureSpec::defaults() {
  FeatureSpec spec;
  for (auto a : kAllAttributes) {
    FeatureTerm term{a, FeatureEncoding::Match, {}};
    if (a == Attribute::Age) term.bin_edges = kDefaultAgeBins;
    if (a == Attribute::Education) term.bin_edges = kDefaultEducationBins;
    spec.terms.push_back(std::move(term));
  }
  return spec;
}

std::vector<Attribute> FeatureSpec::attributes() const {
  std::vector<Attribute> out;
  for (const auto& t : terms) out.push_back(t.attribute);
  return out;
}

// ---------------------------------------------------------------------------
// Design

DyadDesign::DyadDesign(const UndirectedGraph& graph, std::vector<NodeIndex> nodes,
                       std::vector<std::vector<int>> encoded, FeatureSpec spec)
    : graph_(&graph), nodes_(std::move(nodes)), encoded_(std::move(encoded)), spec_(std::move(spec)) {
  if (nodes_.size() < 2) throw std::invalid_argument("dyad design needs at least 2 complete-case nodes");
  std::vector<NodeIndex> local(graph.node_count(), -1);
  for (std::size_t a = 0; a < nodes_.size(); ++a) local[static_cast<std::size_t>(nodes_[a])] = static_cast<NodeIndex>(a);
  for (auto [u, v] : graph.edges()) {
    if (local[static_cast<std::size_t>(u)] >= 0 && local[static_cast<std::size_t>(v)] >= 0) ++ties_;
  }
}

double DyadDesign::feature(std::size_t a, std::size_t b, std::size_t term) const {
  const auto& col = encoded_[term];
  const int x = col[a];
  const int y = col[b];
  if (spec_.terms[term].encoding == FeatureEncoding::Match) return x == y ? 1.0 : 0.0;
  return std::abs(static_cast<double>(x) - static_cast<double>(y));
}

bool DyadDesign::tie(std::size_t a, std::size_t b) const { return graph_->has_edge(nodes_[a], nodes_[b]); }

void DyadDesign::for_each_block(std::size_t block_size,
                                const std::function<void(std::span<const DyadRow>)>& sink) const {
  if (block_size == 0) block_size = 1;
  const std::size_t n = nodes_.size();
  const std::size_t d = feature_count();
  std::vector<DyadRow> block(std::min(block_size, row_count()));
  for (auto& r : block) r.features.resize(d);
  std::vector<char> adjacent(graph_->node_count(), 0);
  std::size_t fill = 0;
  for (std::size_t a = 0; a + 1 < n; ++a) {
    auto nb = graph_->neighbors(nodes_[a]);
    for (NodeIndex w : nb) adjacent[static_cast<std::size_t>(w)] = 1;
    for (std::size_t b = a + 1; b < n; ++b) {
      auto& row = block[fill];
      row.i = nodes_[a];
      row.j = nodes_[b];
      row.tie = adjacent[static_cast<std::size_t>(nodes_[b])] != 0;
      for (std::size_t t = 0; t < d; ++t) row.features[t] = feature(a, b, t);
      if (++fill == block.size()) {
        sink(std::span<const DyadRow>(block.data(), fill));
        fill = 0;
      }
    }
    for (NodeIndex w : nb) adjacent[static_cast<std::size_t>(w)] = 0;
  }
  if (fill) sink(std::span<const DyadRow>(block.data(), fill));
}

std::vector<DyadRow> DyadDesign::rows() const {
  std::vector<DyadRow> out;
  out.reserve(row_count());
  for_each_block(4096, [&](std::span<const DyadRow> blk) { out.insert(out.end(), blk.begin(), blk.end()); });
  return out;
}

DyadDesign build_dyad_design(const UndirectedGraph& lcc, const AttributeTable& table, const FeatureSpec& spec) {
  if (spec.terms.empty()) throw std::invalid_argument("feature spec has no terms");
  if (table.size() != lcc.node_count()) {
    throw std::invalid_argument("attribute table size does not match graph");
  }
  auto attrs = spec.attributes();
  auto mask = complete_case_mask(table, attrs);
  std::vector<NodeIndex> nodes;
  for (std::size_t v = 0; v < mask.size(); ++v) {
    if (mask[v]) nodes.push_back(static_cast<NodeIndex>(v));
  }
  if (nodes.size() < 2) {
    throw std::invalid_argument("fewer than 2 complete-case nodes (" + std::to_string(nodes.size()) + ")");
  }
  std::vector<std::vector<int>> encoded(spec.terms.size());
  for (std::size_t t = 0; t < spec.terms.size(); ++t) {
    encoded[t].reserve(nodes.size());
    for (auto v : nodes) {
      encoded[t].push_back(spec.terms[t].encode(*table.value(spec.terms[t].attribute, static_cast<std::size_t>(v))));
    }
  }
  return DyadDesign(lcc, std::move(nodes), std::move(encoded), spec);
}

// ---------------------------------------------------------------------------
// Logistic regression

namespace {

struct PatternCounts {
  double total = 0.0;
  double ties = 0.0;
};

double log1pexp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

LogisticFit fit_logistic(const DyadDesign& design, const FitOptions& opts) {
  const std::size_t d = design.feature_count();

  // Binary logistic likelihood depends on the data only through the tie
  // count per distinct covariate vector, so rows are aggregated first.
  std::map<std::vector<double>, PatternCounts> patterns;
  std::size_t n_rows = 0;
  std::size_t n_ties = 0;
  design.for_each_block(opts.block_size, [&](std::span<const DyadRow> blk) {
    for (const auto& r : blk) {
      auto& pc = patterns[r.features];
      pc.total += 1.0;
      if (r.tie) {
        pc.ties += 1.0;
        ++n_ties;
      }
    }
    n_rows += blk.size();
  });

  if (n_ties == 0 || n_ties == n_rows) {
    throw std::invalid_argument("design needs both tied and untied dyads (ties=" + std::to_string(n_ties) +
                                ", dyads=" + std::to_string(n_rows) + ")");
  }

  const std::size_t p = d + 1;
  const auto np = static_cast<Eigen::Index>(patterns.size());
  Eigen::MatrixXd X(np, static_cast<Eigen::Index>(p));
  Eigen::VectorXd total(np), ties(np);
  {
    Eigen::Index r = 0;
    for (const auto& [x, pc] : patterns) {
      X(r, 0) = 1.0;
      for (std::size_t t = 0; t < d; ++t) X(r, static_cast<Eigen::Index>(t + 1)) = x[t];
      total(r) = pc.total;
      ties(r) = pc.ties;
      ++r;
    }
  }
  for (std::size_t t = 0; t < d; ++t) {
    auto col = X.col(static_cast<Eigen::Index>(t + 1));
    if (col.maxCoeff() == col.minCoeff()) {
      throw std::invalid_argument("feature column '" + design.spec().terms[t].name() + "' is constant");
    }
  }

  auto log_lik = [&](const Eigen::VectorXd& b) {
    Eigen::VectorXd eta = X * b;
    double ll = 0.0;
    for (Eigen::Index r = 0; r < np; ++r) ll += ties(r) * eta(r) - total(r) * log1pexp(eta(r));
    return ll;
  };

  LogisticFit fit;
  fit.n_dyads = n_rows;
  fit.n_ties = n_ties;
  for (const auto& t : design.spec().terms) fit.names.push_back(t.name());

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  const double base_rate = static_cast<double>(n_ties) / static_cast<double>(n_rows);
  beta(0) = std::log(base_rate / (1.0 - base_rate));
  double ll = log_lik(beta);
  Eigen::MatrixXd info(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));

  auto information = [&](const Eigen::VectorXd& b) {
    Eigen::VectorXd eta = X * b;
    Eigen::VectorXd w(np), resid(np);
    for (Eigen::Index r = 0; r < np; ++r) {
      const double mu = sigmoid(eta(r));
      w(r) = total(r) * mu * (1.0 - mu);
      resid(r) = ties(r) - total(r) * mu;
    }
    info = X.transpose() * w.asDiagonal() * X;
    return Eigen::VectorXd(X.transpose() * resid);
  };

  bool converged = false;
  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    Eigen::VectorXd score = information(beta);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.rcond() < 1e-14) {
      fit.diagnostic = "information matrix is singular; likely complete or quasi-complete separation";
      break;
    }
    Eigen::VectorXd step = ldlt.solve(score);
    // Step halving keeps the likelihood monotone.
    double scale = 1.0;
    Eigen::VectorXd next = beta + step;
    double next_ll = log_lik(next);
    for (int h = 0; h < 30 && next_ll < ll - 1e-12 * std::abs(ll); ++h) {
      scale *= 0.5;
      next = beta + scale * step;
      next_ll = log_lik(next);
    }
    const double max_delta = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    ll = next_ll;
    if (beta.cwiseAbs().maxCoeff() > opts.divergence_bound) {
      fit.diagnostic = "coefficients diverging (|beta| > " + std::to_string(opts.divergence_bound) +
                       "); likely complete or quasi-complete separation";
      ++iter;
      break;
    }
    if (max_delta < opts.tolerance) {
      converged = true;
      ++iter;
      break;
    }
  }
  if (!converged && fit.diagnostic.empty()) {
    fit.diagnostic = "iteration limit reached without convergence";
  }

  fit.converged = converged;
  fit.iterations = iter;
  fit.log_likelihood = ll;
  information(beta);
  Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p),
                                                                      static_cast<Eigen::Index>(p)));
  auto se = [&](std::size_t k) {
    const double v = cov(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    return v > 0 && std::isfinite(v) ? std::sqrt(v) : std::numeric_limits<double>::infinity();
  };
  fit.beta0 = beta(0);
  fit.beta0_se = se(0);
  for (std::size_t t = 0; t < d; ++t) {
    const double b = beta(static_cast<Eigen::Index>(t + 1));
    const double s = se(t + 1);
    const double z = b / s;
    fit.beta.push_back(b);
    fit.std_errors.push_back(s);
    fit.z_values.push_back(z);
    fit.p_values.push_back(std::erfc(std::abs(z) / std::sqrt(2.0)));
    fit.odds_ratios.push_back(std::exp(b));
    fit.ci95.push_back({std::exp(b - 1.96 * s), std::exp(b + 1.96 * s)});
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Sex permutation null model

std::string_view tie_type_name(TieType t) {
  switch (t) {
    case TieType::MaleMale: return "MM";
    case TieType::MaleFemale: return "MF";
    case TieType::FemaleFemale: return "FF";
  }
  return "?";
}

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::None: return "none";
    case Verdict::Assortative: return "assortative";
    case Verdict::Dissortative: return "dissortative";
  }
  return "?";
}

double monte_carlo_two_sided_p(std::size_t count_ge, std::size_t count_le, std::size_t replicates) {
  const double denom = static_cast<double>(replicates) + 1.0;
  const double upper = (1.0 + static_cast<double>(count_ge)) / denom;
  const double lower = (1.0 + static_cast<double>(count_le)) / denom;
  return std::min(1.0, 2.0 * std::min(upper, lower));
}

namespace {

bool within_tolerance(double permuted_sum, double empirical_sum, double tol) {
  return std::abs(permuted_sum - empirical_sum) <= tol * empirical_sum + 1e-9;
}

std::array<std::size_t, 3> count_ties(std::span<const Edge> edges, std::span<const std::uint8_t> female) {
  std::array<std::size_t, 3> c{};
  for (auto [u, v] : edges) {
    c[static_cast<std::size_t>(female[static_cast<std::size_t>(u)] + female[static_cast<std::size_t>(v)])]++;
  }
  return c;
}

}  // namespace

SexPermutationResult sex_permutation_test(const UndirectedGraph& lcc, const AttributeTable& table,
                                          const PermutationOptions& opts) {
  if (!(opts.tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (opts.target_replicates == 0) throw std::invalid_argument("target_replicates must be positive");
  if (table.size() != lcc.node_count()) throw std::invalid_argument("attribute table size does not match graph");

  std::vector<NodeIndex> local(lcc.node_count(), -1);
  std::vector<std::uint8_t> female;
  std::vector<double> degree;
  for (std::size_t v = 0; v < lcc.node_count(); ++v) {
    if (auto s = table.sex(v)) {
      local[v] = static_cast<NodeIndex>(female.size());
      female.push_back(*s == Sex::Female ? 1 : 0);
      degree.push_back(static_cast<double>(lcc.degree(static_cast<NodeIndex>(v))));
    }
  }
  std::vector<Edge> edges;
  for (auto [u, v] : lcc.edges()) {
    auto a = local[static_cast<std::size_t>(u)];
    auto b = local[static_cast<std::size_t>(v)];
    if (a >= 0 && b >= 0) edges.emplace_back(a, b);
  }

  SexPermutationResult res;
  res.tolerance = opts.tolerance;
  double male_sum = 0.0, female_sum = 0.0;
  for (std::size_t k = 0; k < female.size(); ++k) {
    if (female[k]) {
      ++res.n_female;
      female_sum += degree[k];
    } else {
      ++res.n_male;
      male_sum += degree[k];
    }
  }
  if (res.n_male == 0 || res.n_female == 0) {
    throw std::invalid_argument("sex permutation test needs at least one male and one female");
  }
  res.mean_degree_male = male_sum / static_cast<double>(res.n_male);
  res.mean_degree_female = female_sum / static_cast<double>(res.n_female);
  res.male_bounds = {res.mean_degree_male * (1 - opts.tolerance), res.mean_degree_male * (1 + opts.tolerance)};
  res.female_bounds = {res.mean_degree_female * (1 - opts.tolerance),
                       res.mean_degree_female * (1 + opts.tolerance)};
  res.observed = count_ties(edges, female);

  std::array<double, 3> sums{};
  std::array<std::size_t, 3> ge{}, le{};
  std::vector<std::uint8_t> perm(female.size());
  std::uint64_t attempt = 0;
  std::size_t accepted = 0;
  while (accepted < opts.target_replicates) {
    if (attempt >= opts.min_attempts_before_giving_up &&
        static_cast<double>(accepted) < opts.min_acceptance_rate * static_cast<double>(attempt)) {
      throw std::runtime_error("permutation acceptance rate " +
                               std::to_string(static_cast<double>(accepted) / static_cast<double>(attempt)) +
                               " after " + std::to_string(attempt) +
                               " attempts; consider a larger degree tolerance than " +
                               std::to_string(opts.tolerance));
    }
    Rng rng(derive_seed(opts.seed, attempt));
    std::copy(female.begin(), female.end(), perm.begin());
    rng.shuffle(std::span<std::uint8_t>(perm));
    double pm = 0.0;
    for (std::size_t k = 0; k < perm.size(); ++k) {
      if (!perm[k]) pm += degree[k];
    }
    const double pf = male_sum + female_sum - pm;
    ++attempt;
    if (!within_tolerance(pm, male_sum, opts.tolerance) || !within_tolerance(pf, female_sum, opts.tolerance)) {
      continue;
    }
    auto c = count_ties(edges, perm);
    for (std::size_t t = 0; t < 3; ++t) {
      sums[t] += static_cast<double>(c[t]);
      if (c[t] >= res.observed[t]) ++ge[t];
      if (c[t] <= res.observed[t]) ++le[t];
    }
    ++accepted;
    if (opts.observer) {
      opts.observer({attempt - 1, pm / static_cast<double>(res.n_male), pf / static_cast<double>(res.n_female), c});
    }
  }

  res.n_replicates = accepted;
  res.n_attempts = attempt;
  for (std::size_t t = 0; t < 3; ++t) {
    const double expected = sums[t] / static_cast<double>(accepted);
    res.expected_mean[t] = expected;
    res.ratio[t] = expected > 0 ? static_cast<double>(res.observed[t]) / expected
                                : std::numeric_limits<double>::quiet_NaN();
    res.p_values[t] = monte_carlo_two_sided_p(ge[t], le[t], accepted);
    res.verdicts[t] = Verdict::None;
    if (res.p_values[t] < 0.05) {
      const auto obs = static_cast<double>(res.observed[t]);
      if (obs > expected) res.verdicts[t] = Verdict::Assortative;
      if (obs < expected) res.verdicts[t] = Verdict::Dissortative;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Welch t-test

TTestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw std::invalid_argument("t-test needs at least 2 values per group (got " + std::to_string(a.size()) +
                                " and " + std::to_string(b.size()) + ")");
  }
  auto moments = [](std::span<const double> x) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::pair{mean, ss / static_cast<double>(x.size() - 1)};
  };
  auto [ma, va] = moments(a);
  auto [mb, vb] = moments(b);
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());

  TTestResult r;
  r.n_observed = a.size();
  r.n_missing = b.size();
  r.mean_observed = ma;
  r.mean_missing = mb;
  const double sa = va / na;
  const double sb = vb / nb;
  const double se2 = sa + sb;
  if (se2 == 0.0) {
    r.df = na + nb - 2.0;
    if (ma == mb) {
      r.t = 0.0;
      r.p_value = 1.0;
    } else {
      r.t = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      r.p_value = 0.0;
    }
    return r;
  }
  r.t = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  boost::math::students_t dist(r.df);
  r.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))));
  return r;
}

TTestResult degree_missingness_ttest(const UndirectedGraph& lcc, const AttributeTable& table, Attribute attr) {
  if (table.size() != lcc.node_count()) throw std::invalid_argument("attribute table size does not match graph");
  std::vector<double> observed, missing;
  for (std::size_t v = 0; v < lcc.node_count(); ++v) {
    const auto k = static_cast<double>(lcc.degree(static_cast<NodeIndex>(v)));
    (table.present(attr, v) ? observed : missing).push_back(k);
  }
  return welch_t_test(observed, missing);
}

}  // namespace segnet
