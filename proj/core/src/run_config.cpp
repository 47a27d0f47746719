#include "segnet/run_config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "segnet/csv.hpp"

namespace segnet {

namespace {

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  if (s.empty() || s.front() == '-') throw std::invalid_argument("not a non-negative integer: '" + s + "'");
  std::size_t pos = 0;
  auto v = std::stoull(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("not a non-negative integer: '" + s + "'");
  return v;
}

int parse_int(const std::string& s) {
  std::size_t pos = 0;
  int v = std::stoi(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("not an integer: '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s) {
  auto l = to_lower(s);
  if (l == "true" || l == "yes" || l == "1" || l == "on") return true;
  if (l == "false" || l == "no" || l == "0" || l == "off") return false;
  throw std::invalid_argument("not a boolean: '" + s + "'");
}

std::vector<Attribute> parse_attribute_list(const std::string& s) {
  std::vector<Attribute> out;
  for (const auto& item : split_list(s)) out.push_back(parse_attribute(item));
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F fmt) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += fmt(xs[i]);
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

// Per-attribute encoding as written in the config; feature terms are rebuilt
// from it once all keys are read so `bins.*` can appear in any order.
struct FeatureChoice {
  bool enabled = true;
  FeatureEncoding encoding = FeatureEncoding::Match;
  bool binned = true;
};

}  // namespace

const std::vector<int>& RunConfig::bins_for(Attribute a) const {
  static const std::vector<int> none;
  if (a == Attribute::Age) return age_bins;
  if (a == Attribute::Education) return education_bins;
  return none;
}

std::string RunConfig::canonical_text() const {
  auto num = [](double d) { return format_double(d); };
  auto u64 = [](std::uint64_t v) { return std::to_string(v); };
  auto i32 = [](int v) { return std::to_string(v); };
  auto attr = [](Attribute a) { return std::string(attribute_name(a)); };
  std::ostringstream out;
  out << "schema = 1\n";
  for (const auto& t : features.terms) {
    out << "features." << t.name() << " = "
        << (t.encoding == FeatureEncoding::Match ? "match" : "difference");
    if (!t.bin_edges.empty()) out << " bins " << join(t.bin_edges, i32);
    out << "\n";
  }
  out << "bins.age = " << join(age_bins, i32) << "\n";
  out << "bins.education = " << join(education_bins, i32) << "\n";
  out << "dyadic.per_attribute = " << (per_attribute_models ? "true" : "false") << "\n";
  out << "permutation.tolerances = " << join(tolerances, num) << "\n";
  out << "permutation.replicates = " << replicates << "\n";
  out << "permutation.seed = " << permutation_seed << "\n";
  out << "louvain.seeds = " << join(louvain_seeds, u64) << "\n";
  out << "community_network.node_min = " << num(node_min) << "\n";
  out << "community_network.edge_min = " << num(edge_min) << "\n";
  out << "community_network.attribute = " << attribute_name(network_attribute) << "\n";
  out << "nmi.attributes = " << join(nmi_attributes, attr) << "\n";
  out << "segregation.attributes = " << join(segregation_attributes, attr) << "\n";
  out << "segregation.missing = " << (missing == MissingPolicy::Exclude ? "exclude" : "category") << "\n";
  out << "segregation.qb_cutoff = " << num(qb_cutoff) << "\n";
  return out.str();
}

std::string RunConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_text()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void RunConfig::validate() const {
  if (tolerances.empty()) throw std::invalid_argument("permutation.tolerances must not be empty");
  for (double t : tolerances) {
    if (!(t > 0.0)) throw std::invalid_argument("permutation tolerances must be positive");
  }
  if (replicates < 1) throw std::invalid_argument("permutation.replicates must be >= 1");
  if (louvain_seeds.empty()) throw std::invalid_argument("louvain.seeds must not be empty");
  if (node_min < 0.0 || node_min >= 1.0 || edge_min < 0.0 || edge_min >= 1.0) {
    throw std::invalid_argument("community network thresholds must lie in [0, 1)");
  }
  if (features.terms.empty()) throw std::invalid_argument("at least one feature must be enabled");
}

RunConfig parse_run_config_text(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  std::map<Attribute, FeatureChoice> choices;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto stripped = trim(line);
    if (stripped.empty()) continue;
    auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const auto key = to_lower(trim(stripped.substr(0, eq)));
    const auto value = trim(stripped.substr(eq + 1));
    try {
      if (key == "corpus") {
        cfg.corpus = resolve(base_dir, value);
      } else if (key == "output") {
        cfg.output = resolve(base_dir, value);
      } else if (key.starts_with("features.")) {
        auto a = parse_attribute(key.substr(9));
        auto v = to_lower(value);
        if (v == "match") {
          choices[a] = {true, FeatureEncoding::Match, true};
        } else if (v == "difference") {
          choices[a] = {true, FeatureEncoding::AbsDifference, false};
        } else if (v == "binned_difference") {
          choices[a] = {true, FeatureEncoding::AbsDifference, true};
        } else if (v == "off") {
          choices[a] = {false, FeatureEncoding::Match, true};
        } else {
          throw std::invalid_argument("expected match, difference, binned_difference or off");
        }
      } else if (key.starts_with("bins.")) {
        auto a = parse_attribute(key.substr(5));
        if (is_categorical(a)) throw std::invalid_argument("bins apply to age and education only");
        std::vector<int> edges;
        for (const auto& s : split_list(value)) edges.push_back(parse_int(s));
        for (std::size_t i = 1; i < edges.size(); ++i) {
          if (edges[i] <= edges[i - 1]) throw std::invalid_argument("bin edges must be strictly increasing");
        }
        (a == Attribute::Age ? cfg.age_bins : cfg.education_bins) = edges;
      } else if (key == "dyadic.per_attribute") {
        cfg.per_attribute_models = parse_bool(value);
      } else if (key == "permutation.tolerances") {
        cfg.tolerances.clear();
        for (const auto& s : split_list(value)) cfg.tolerances.push_back(parse_double(s));
      } else if (key == "permutation.replicates") {
        cfg.replicates = parse_u64(value);
      } else if (key == "permutation.seed") {
        cfg.permutation_seed = parse_u64(value);
      } else if (key == "louvain.seeds") {
        cfg.louvain_seeds.clear();
        for (const auto& s : split_list(value)) cfg.louvain_seeds.push_back(parse_u64(s));
      } else if (key == "community_network.node_min") {
        cfg.node_min = parse_double(value);
      } else if (key == "community_network.edge_min") {
        cfg.edge_min = parse_double(value);
      } else if (key == "community_network.attribute") {
        cfg.network_attribute = parse_attribute(value);
      } else if (key == "nmi.attributes") {
        cfg.nmi_attributes = parse_attribute_list(value);
      } else if (key == "segregation.attributes") {
        cfg.segregation_attributes = parse_attribute_list(value);
      } else if (key == "segregation.missing") {
        auto v = to_lower(value);
        if (v == "exclude") {
          cfg.missing = MissingPolicy::Exclude;
        } else if (v == "category") {
          cfg.missing = MissingPolicy::Category;
        } else {
          throw std::invalid_argument("expected exclude or category");
        }
      } else if (key == "segregation.qb_cutoff") {
        cfg.qb_cutoff = parse_double(value);
      } else if (key == "workers") {
        cfg.workers = parse_u64(value);
        if (cfg.workers == 0) throw std::invalid_argument("workers must be >= 1");
      } else {
        throw std::invalid_argument("unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::out_of_range&) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": value out of range");
    }
  }

  cfg.features.terms.clear();
  for (auto a : kAllAttributes) {
    FeatureChoice c = choices.contains(a) ? choices[a] : FeatureChoice{};
    if (!c.enabled) continue;
    cfg.features.terms.push_back({a, c.encoding, c.binned ? cfg.bins_for(a) : std::vector<int>{}});
  }
  cfg.validate();
  return cfg;
}

RunConfig parse_run_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::invalid_argument("cannot open config " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config_text(buf.str(), file.parent_path());
}

void apply_environment(RunConfig& cfg) {
  if (const char* env = std::getenv("SEGNET_WORKERS")) {
    try {
      auto n = parse_u64(trim(env));
      if (n > 0) cfg.workers = n;
    } catch (const std::exception&) {
      // Ignore malformed values; the config setting stands.
    }
  }
}

}  // namespace segnet
