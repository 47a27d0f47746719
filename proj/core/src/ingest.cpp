#include "segnet/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "segnet/csv.hpp"

namespace segnet {

namespace {

constexpr std::array<std::string_view, 2> kSexNames = {"male", "female"};
constexpr std::array<std::string_view, 3> kReligionNames = {"Hinduism", "Islam", "Christianity"};
constexpr std::array<std::string_view, 4> kCasteNames = {"Scheduled Caste", "Scheduled Tribe", "OBC",
                                                         "General"};
constexpr std::array<std::string_view, 2> kBinaryNames = {"0", "1"};

int category_count(Attribute a) { return static_cast<int>(category_names(a).size()); }

std::optional<int> match_alias(Attribute a, const std::string& lower) {
  struct Alias {
    std::string_view text;
    int code;
  };
  static constexpr Alias sex[] = {{"m", 0}, {"f", 1}};
  static constexpr Alias religion[] = {{"hindu", 0}, {"muslim", 1}, {"christian", 2}};
  static constexpr Alias caste[] = {{"sc", 0},
                                    {"st", 1},
                                    {"scheduled_caste", 0},
                                    {"scheduled_tribe", 1},
                                    {"other backward class", 2}};
  static constexpr Alias binary[] = {{"no", 0}, {"yes", 1}, {"false", 0}, {"true", 1}};
  std::span<const Alias> table;
  switch (a) {
    case Attribute::Sex: table = sex; break;
    case Attribute::Religion: table = religion; break;
    case Attribute::Caste: table = caste; break;
    case Attribute::Workflag:
    case Attribute::Savings: table = binary; break;
    default: return std::nullopt;
  }
  for (const auto& al : table) {
    if (al.text == lower) return al.code;
  }
  return std::nullopt;
}

std::vector<std::pair<std::string, std::string>> read_edge_file(const std::filesystem::path& file) {
  auto table = read_csv(file, true);
  if (table.header.size() != 2 || to_lower(table.header[0]) != "source" ||
      to_lower(table.header[1]) != "target") {
    throw ParseError(file, 1, "expected header 'source,target'");
  }
  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.reserve(table.rows.size());
  for (auto& row : table.rows) {
    if (row.fields[0].empty() || row.fields[1].empty()) {
      throw ParseError(file, row.line, "empty node id");
    }
    pairs.emplace_back(std::move(row.fields[0]), std::move(row.fields[1]));
  }
  return pairs;
}

std::vector<std::string> read_id_column(const std::filesystem::path& file) {
  auto table = read_csv(file, true);
  auto it = std::find(table.header.begin(), table.header.end(), "node_id");
  if (it == table.header.end()) throw ParseError(file, 1, "missing 'node_id' column");
  auto col = static_cast<std::size_t>(it - table.header.begin());
  std::vector<std::string> ids;
  std::unordered_set<std::string> seen;
  for (auto& row : table.rows) {
    auto& id = row.fields[col];
    if (id.empty()) throw ParseError(file, row.line, "empty node id");
    if (!seen.insert(id).second) throw ParseError(file, row.line, "duplicate node id '" + id + "'");
    ids.push_back(std::move(id));
  }
  return ids;
}

struct Layer {
  std::string name;
  std::filesystem::path source;
  std::vector<std::pair<std::string, std::string>> pairs;
};

struct AttributeRows {
  std::filesystem::path file;
  std::vector<std::string> ids;
  std::vector<std::array<std::optional<int>, 7>> values;
};

AttributeRows read_attribute_file(const std::filesystem::path& file) {
  auto table = read_csv(file, true);
  std::optional<std::size_t> id_col;
  std::array<std::optional<std::size_t>, 7> cols{};
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    auto name = to_lower(table.header[c]);
    if (name == "node_id") {
      id_col = c;
      continue;
    }
    for (std::size_t k = 0; k < kAllAttributes.size(); ++k) {
      if (name == attribute_name(kAllAttributes[k])) cols[k] = c;
    }
  }
  if (!id_col) throw ParseError(file, 1, "missing 'node_id' column");

  AttributeRows out;
  out.file = file;
  std::unordered_set<std::string> seen;
  for (const auto& row : table.rows) {
    const auto& id = row.fields[*id_col];
    if (id.empty()) throw ParseError(file, row.line, "empty node id");
    if (!seen.insert(id).second) throw ParseError(file, row.line, "duplicate node id '" + id + "'");
    std::array<std::optional<int>, 7> vals{};
    for (std::size_t k = 0; k < kAllAttributes.size(); ++k) {
      if (!cols[k]) continue;
      try {
        vals[k] = parse_attribute_value(kAllAttributes[k], row.fields[*cols[k]]);
      } catch (const std::invalid_argument& e) {
        throw ParseError(file, row.line, e.what());
      }
    }
    out.ids.push_back(id);
    out.values.push_back(vals);
  }
  return out;
}

VillageDataset assemble(std::string village_id, std::vector<Layer> layers,
                        std::optional<std::vector<std::string>> universe,
                        const std::optional<AttributeRows>& attrs, bool include_attribute_only) {
  // Layer order must not influence node numbering.
  std::sort(layers.begin(), layers.end(),
            [](const Layer& a, const Layer& b) { return a.name < b.name; });

  VillageDataset ds;
  ds.village_id = std::move(village_id);
  std::unordered_map<std::string, NodeIndex> index_of;
  auto add_node = [&](const std::string& id) {
    auto [it, inserted] = index_of.emplace(id, static_cast<NodeIndex>(ds.node_ids.size()));
    if (inserted) ds.node_ids.push_back(id);
    return it->second;
  };
  const bool fixed = universe.has_value();
  if (universe) {
    for (const auto& id : *universe) add_node(id);
  }

  std::vector<Edge> all_edges;
  for (const auto& layer : layers) {
    std::set<Edge> distinct;
    for (std::size_t r = 0; r < layer.pairs.size(); ++r) {
      const auto& [a, b] = layer.pairs[r];
      for (const auto* id : {&a, &b}) {
        if (fixed && !index_of.contains(*id)) {
          throw std::invalid_argument(layer.source.string() + ": edge references unknown node id: " +
                                      *id);
        }
      }
      NodeIndex u = add_node(a);
      NodeIndex v = add_node(b);
      if (u == v) continue;
      distinct.emplace(std::min(u, v), std::max(u, v));
    }
    ds.relation_layers[layer.name] += distinct.size();
    all_edges.insert(all_edges.end(), distinct.begin(), distinct.end());
  }

  if (attrs && include_attribute_only) {
    for (const auto& id : attrs->ids) add_node(id);
  }

  ds.graph = UndirectedGraph::from_edges(ds.node_ids.size(), all_edges);
  ds.attributes = AttributeTable(ds.node_ids.size());
  if (attrs) {
    for (std::size_t r = 0; r < attrs->ids.size(); ++r) {
      auto it = index_of.find(attrs->ids[r]);
      if (it == index_of.end()) {
        ds.unmatched_attribute_ids.push_back(attrs->ids[r]);
        continue;
      }
      for (std::size_t k = 0; k < kAllAttributes.size(); ++k) {
        ds.attributes.set_value(kAllAttributes[k], static_cast<std::size_t>(it->second),
                                attrs->values[r][k]);
      }
    }
  }
  return ds;
}

std::vector<std::filesystem::path> csv_files_in(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  if (!std::filesystem::is_directory(dir)) return out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::string_view attribute_name(Attribute a) {
  switch (a) {
    case Attribute::Sex: return "sex";
    case Attribute::Age: return "age";
    case Attribute::Religion: return "religion";
    case Attribute::Caste: return "caste";
    case Attribute::Education: return "education";
    case Attribute::Workflag: return "workflag";
    case Attribute::Savings: return "savings";
  }
  return "?";
}

Attribute parse_attribute(std::string_view name) {
  auto lower = to_lower(trim(name));
  for (auto a : kAllAttributes) {
    if (attribute_name(a) == lower) return a;
  }
  throw std::invalid_argument("unknown attribute: '" + std::string(name) + "'");
}

bool is_categorical(Attribute a) { return a != Attribute::Age && a != Attribute::Education; }

std::span<const std::string_view> category_names(Attribute a) {
  switch (a) {
    case Attribute::Sex: return kSexNames;
    case Attribute::Religion: return kReligionNames;
    case Attribute::Caste: return kCasteNames;
    case Attribute::Workflag:
    case Attribute::Savings: return kBinaryNames;
    default: return {};
  }
}

AttributeTable::AttributeTable(std::size_t node_count)
    : sex_(node_count),
      age_(node_count),
      religion_(node_count),
      caste_(node_count),
      education_(node_count),
      workflag_(node_count),
      savings_(node_count) {}

void AttributeTable::set_age(std::size_t v, std::optional<int> x) {
  if (x && *x < 0) throw std::invalid_argument("age must be non-negative");
  age_[v] = x;
}

void AttributeTable::set_education(std::size_t v, std::optional<int> x) {
  if (x && *x < 0) throw std::invalid_argument("education must be non-negative");
  education_[v] = x;
}

std::optional<int> AttributeTable::value(Attribute a, std::size_t v) const {
  auto ord = [](const auto& opt) -> std::optional<int> {
    if (!opt) return std::nullopt;
    return static_cast<int>(*opt);
  };
  switch (a) {
    case Attribute::Sex: return ord(sex_[v]);
    case Attribute::Age: return age_[v];
    case Attribute::Religion: return ord(religion_[v]);
    case Attribute::Caste: return ord(caste_[v]);
    case Attribute::Education: return education_[v];
    case Attribute::Workflag: return ord(workflag_[v]);
    case Attribute::Savings: return ord(savings_[v]);
  }
  return std::nullopt;
}

void AttributeTable::set_value(Attribute a, std::size_t v, std::optional<int> code) {
  if (code && is_categorical(a) && (*code < 0 || *code >= category_count(a))) {
    throw std::invalid_argument("category code " + std::to_string(*code) + " out of range for " +
                                std::string(attribute_name(a)));
  }
  switch (a) {
    case Attribute::Sex:
      sex_[v] = code ? std::optional(static_cast<Sex>(*code)) : std::nullopt;
      break;
    case Attribute::Age: set_age(v, code); break;
    case Attribute::Religion:
      religion_[v] = code ? std::optional(static_cast<Religion>(*code)) : std::nullopt;
      break;
    case Attribute::Caste:
      caste_[v] = code ? std::optional(static_cast<Caste>(*code)) : std::nullopt;
      break;
    case Attribute::Education: set_education(v, code); break;
    case Attribute::Workflag: workflag_[v] = code ? std::optional(*code != 0) : std::nullopt; break;
    case Attribute::Savings: savings_[v] = code ? std::optional(*code != 0) : std::nullopt; break;
  }
}

AttributeTable AttributeTable::select(std::span<const NodeIndex> nodes) const {
  AttributeTable out(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    auto v = static_cast<std::size_t>(nodes[i]);
    out.sex_[i] = sex_[v];
    out.age_[i] = age_[v];
    out.religion_[i] = religion_[v];
    out.caste_[i] = caste_[v];
    out.education_[i] = education_[v];
    out.workflag_[i] = workflag_[v];
    out.savings_[i] = savings_[v];
  }
  return out;
}

std::string format_attribute_value(Attribute a, std::optional<int> code) {
  if (!code) return {};
  if (!is_categorical(a)) return std::to_string(*code);
  return std::string(category_names(a)[static_cast<std::size_t>(*code)]);
}

std::optional<int> parse_attribute_value(Attribute a, std::string_view text) {
  auto cell = trim(text);
  if (cell.empty()) return std::nullopt;
  if (!is_categorical(a)) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
      throw std::invalid_argument("invalid " + std::string(attribute_name(a)) + " value '" + cell + "'");
    }
    if (value < 0) {
      throw std::invalid_argument(std::string(attribute_name(a)) + " must be non-negative, got " + cell);
    }
    return value;
  }
  auto lower = to_lower(cell);
  auto names = category_names(a);
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (to_lower(names[k]) == lower) return static_cast<int>(k);
  }
  if (auto alias = match_alias(a, lower)) return alias;
  throw std::invalid_argument("invalid " + std::string(attribute_name(a)) + " value '" + cell + "'");
}

VillageDataset load_village(std::string village_id, std::span<const std::filesystem::path> edge_files,
                            const std::filesystem::path& attribute_file, const IngestConfig& config) {
  std::vector<Layer> layers;
  for (const auto& f : edge_files) {
    layers.push_back({f.stem().string(), f, read_edge_file(f)});
  }
  std::optional<std::vector<std::string>> universe;
  if (config.node_file) universe = read_id_column(*config.node_file);
  std::optional<AttributeRows> attrs;
  if (!attribute_file.empty()) attrs = read_attribute_file(attribute_file);
  return assemble(std::move(village_id), std::move(layers), std::move(universe), attrs,
                  config.include_attribute_only_nodes);
}

namespace {

std::vector<Edge> read_matrix_edges(const std::filesystem::path& matrix_file, std::size_t& n) {
  auto table = read_csv(matrix_file, false);
  n = table.rows.size();
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    if (row.fields.size() != n) {
      throw ParseError(matrix_file, row.line,
                       "matrix is not square: row has " + std::to_string(row.fields.size()) +
                           " entries, expected " + std::to_string(n));
    }
    for (std::size_t j = 0; j < n; ++j) {
      const auto& cell = row.fields[j];
      if (cell != "0" && cell != "1") {
        throw ParseError(matrix_file, row.line, "entry '" + cell + "' is not 0 or 1");
      }
      if (cell == "1" && i != j) {
        edges.emplace_back(static_cast<NodeIndex>(std::min(i, j)), static_cast<NodeIndex>(std::max(i, j)));
      }
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

}  // namespace

std::vector<Edge> adapt_adjacency_matrix(const std::filesystem::path& matrix_file) {
  std::size_t n = 0;
  return read_matrix_edges(matrix_file, n);
}

VillageDataset load_village_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw std::invalid_argument("not a village directory: " + dir.string());
  }
  std::vector<Layer> layers;
  std::optional<std::vector<std::string>> universe;
  if (std::filesystem::exists(dir / "nodes.csv")) universe = read_id_column(dir / "nodes.csv");

  for (const auto& f : csv_files_in(dir / "edges")) {
    layers.push_back({f.stem().string(), f, read_edge_file(f)});
  }

  auto matrices = csv_files_in(dir / "matrices");
  if (!matrices.empty()) {
    std::vector<std::string> keys;
    if (std::filesystem::exists(dir / "keys.csv")) keys = read_id_column(dir / "keys.csv");
    std::size_t width = 0;
    for (const auto& f : matrices) {
      Layer layer{f.stem().string(), f, {}};
      std::size_t dims = 0;
      auto table_edges = read_matrix_edges(f, dims);
      if (width == 0) width = dims;
      if (dims != width) throw ParseError(f, 1, "matrix size differs from other layers");
      if (!keys.empty() && keys.size() != dims) {
        throw ParseError(f, 1, "matrix size " + std::to_string(dims) + " does not match keys.csv (" +
                                   std::to_string(keys.size()) + " ids)");
      }
      for (auto [u, v] : table_edges) {
        auto name = [&](NodeIndex x) {
          return keys.empty() ? std::to_string(x) : keys[static_cast<std::size_t>(x)];
        };
        layer.pairs.emplace_back(name(u), name(v));
      }
      layers.push_back(std::move(layer));
    }
    if (!universe) {
      if (keys.empty()) {
        keys.reserve(width);
        for (std::size_t i = 0; i < width; ++i) keys.push_back(std::to_string(i));
      }
      universe = std::move(keys);
    }
  }

  if (layers.empty()) throw std::invalid_argument("no edge layers found in " + dir.string());

  std::optional<AttributeRows> attrs;
  if (std::filesystem::exists(dir / "attributes.csv")) attrs = read_attribute_file(dir / "attributes.csv");
  return assemble(dir.filename().string(), std::move(layers), std::move(universe), attrs, false);
}

void write_attribute_csv(const VillageDataset& dataset, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  std::vector<std::string> header{"node_id"};
  for (auto a : kAllAttributes) header.emplace_back(attribute_name(a));
  write_csv_row(out, header);
  for (std::size_t v = 0; v < dataset.node_ids.size(); ++v) {
    std::vector<std::string> row{dataset.node_ids[v]};
    for (auto a : kAllAttributes) row.push_back(format_attribute_value(a, dataset.attributes.value(a, v)));
    write_csv_row(out, row);
  }
}

void write_edge_csv(const VillageDataset& dataset, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  write_csv_row(out, {"source", "target"});
  for (auto [u, v] : dataset.graph.edges()) {
    write_csv_row(out, {dataset.node_ids[static_cast<std::size_t>(u)],
                        dataset.node_ids[static_cast<std::size_t>(v)]});
  }
}

void write_village_dir(const VillageDataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "edges");
  {
    std::ofstream out(dir / "nodes.csv");
    if (!out) throw std::runtime_error("cannot write " + (dir / "nodes.csv").string());
    write_csv_row(out, {"node_id"});
    for (const auto& id : dataset.node_ids) write_csv_row(out, {id});
  }
  write_attribute_csv(dataset, dir / "attributes.csv");
  write_edge_csv(dataset, dir / "edges" / "all.csv");
}

std::vector<bool> complete_case_mask(const AttributeTable& table, std::span<const Attribute> attrs) {
  if (attrs.empty()) throw std::invalid_argument("complete_case_mask: no attributes requested");
  std::vector<bool> mask(table.size(), true);
  for (std::size_t v = 0; v < table.size(); ++v) {
    for (auto a : attrs) {
      if (!table.present(a, v)) {
        mask[v] = false;
        break;
      }
    }
  }
  return mask;
}

std::vector<bool> complete_case_mask(const AttributeTable& table, std::span<const std::string> attr_names) {
  std::vector<Attribute> attrs;
  for (const auto& n : attr_names) attrs.push_back(parse_attribute(n));
  return complete_case_mask(table, attrs);
}

}  // namespace segnet
