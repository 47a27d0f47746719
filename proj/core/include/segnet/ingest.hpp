#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segnet/graph.hpp"

namespace segnet {

enum class Attribute : std::uint8_t { Sex, Age, Religion, Caste, Education, Workflag, Savings };

inline constexpr std::array<Attribute, 7> kAllAttributes = {
    Attribute::Sex,       Attribute::Age,      Attribute::Religion, Attribute::Caste,
    Attribute::Education, Attribute::Workflag, Attribute::Savings};

enum class Sex : std::uint8_t { Male, Female };
enum class Religion : std::uint8_t { Hinduism, Islam, Christianity };
enum class Caste : std::uint8_t { ScheduledCaste, ScheduledTribe, Obc, General };

std::string_view attribute_name(Attribute a);
// Throws std::invalid_argument for an unknown name.
Attribute parse_attribute(std::string_view name);

// True for attributes whose values are unordered categories.
bool is_categorical(Attribute a);
// Declared category names for categorical attributes (empty for age/education).
std::span<const std::string_view> category_names(Attribute a);

// Per-node covariates. Every field may be missing. Numeric attributes are
// stored in raw years; categorical ones as enum values.
class AttributeTable {
 public:
  AttributeTable() = default;
  explicit AttributeTable(std::size_t node_count);

  std::size_t size() const { return sex_.size(); }

  std::optional<Sex> sex(std::size_t v) const { return sex_[v]; }
  std::optional<int> age(std::size_t v) const { return age_[v]; }
  std::optional<Religion> religion(std::size_t v) const { return religion_[v]; }
  std::optional<Caste> caste(std::size_t v) const { return caste_[v]; }
  std::optional<int> education(std::size_t v) const { return education_[v]; }
  std::optional<bool> workflag(std::size_t v) const { return workflag_[v]; }
  std::optional<bool> savings(std::size_t v) const { return savings_[v]; }

  void set_sex(std::size_t v, std::optional<Sex> x) { sex_[v] = x; }
  // Age and education must be non-negative; throws std::invalid_argument.
  void set_age(std::size_t v, std::optional<int> x);
  void set_religion(std::size_t v, std::optional<Religion> x) { religion_[v] = x; }
  void set_caste(std::size_t v, std::optional<Caste> x) { caste_[v] = x; }
  void set_education(std::size_t v, std::optional<int> x);
  void set_workflag(std::size_t v, std::optional<bool> x) { workflag_[v] = x; }
  void set_savings(std::size_t v, std::optional<bool> x) { savings_[v] = x; }

  // Uniform integer view: the enum ordinal for categorical attributes, 0/1
  // for binary ones and the raw value for age/education.
  std::optional<int> value(Attribute a, std::size_t v) const;
  // Sets through the uniform view, validating category ranges.
  void set_value(Attribute a, std::size_t v, std::optional<int> code);

  bool present(Attribute a, std::size_t v) const { return value(a, v).has_value(); }

  // Table restricted (and reordered) to the given node indices.
  AttributeTable select(std::span<const NodeIndex> nodes) const;

  friend bool operator==(const AttributeTable&, const AttributeTable&) = default;

 private:
  std::vector<std::optional<Sex>> sex_;
  std::vector<std::optional<int>> age_;
  std::vector<std::optional<Religion>> religion_;
  std::vector<std::optional<Caste>> caste_;
  std::vector<std::optional<int>> education_;
  std::vector<std::optional<bool>> workflag_;
  std::vector<std::optional<bool>> savings_;
};

// Cell text for the canonical attribute CSV; empty for missing.
std::string format_attribute_value(Attribute a, std::optional<int> code);
// Parses a canonical cell; empty means missing. Category names are matched
// case-insensitively. Throws std::invalid_argument on anything else.
std::optional<int> parse_attribute_value(Attribute a, std::string_view text);

struct VillageDataset {
  std::string village_id;
  UndirectedGraph graph;
  std::vector<std::string> node_ids;  // index -> id
  AttributeTable attributes;          // indexed like graph nodes
  std::map<std::string, std::size_t> relation_layers;  // layer name -> distinct edges in layer
  std::vector<std::string> unmatched_attribute_ids;    // attribute rows with no graph node
};

struct IngestConfig {
  // Optional file listing the node universe (CSV with a `node_id` column).
  // Nodes listed here but absent from every layer become isolated nodes.
  std::optional<std::filesystem::path> node_file;
  // Keep attribute rows whose id appears in no layer as isolated nodes instead
  // of reporting them as unmatched.
  bool include_attribute_only_nodes = false;
};

// Loads one village from canonical files: one `source,target` CSV per
// relation layer (layer name = file stem) and one attribute CSV. Throws
// ParseError with file and line for malformed rows or duplicate ids.
VillageDataset load_village(std::string village_id,
                            std::span<const std::filesystem::path> edge_files,
                            const std::filesystem::path& attribute_file,
                            const IngestConfig& config = {});

// Reads a dense comma-separated 0/1 adjacency matrix and returns the upper
// triangle edges, OR-symmetrized. Throws ParseError for non-square input or
// entries other than 0 and 1.
std::vector<Edge> adapt_adjacency_matrix(const std::filesystem::path& matrix_file);

// Loads a village directory. Recognized layouts:
//   edges/*.csv         canonical layer files
//   matrices/*.csv      adjacency matrices (node ids from keys.csv if present,
//                       else the 0-based row index)
//   attributes.csv      canonical attribute table (optional)
//   nodes.csv           optional node universe
// The village id is the directory name.
VillageDataset load_village_dir(const std::filesystem::path& dir);

// Writes nodes.csv, attributes.csv and edges/all.csv so that
// load_village_dir reproduces the graph, ids and attributes.
void write_village_dir(const VillageDataset& dataset, const std::filesystem::path& dir);

void write_attribute_csv(const VillageDataset& dataset, const std::filesystem::path& file);
void write_edge_csv(const VillageDataset& dataset, const std::filesystem::path& file);

// True exactly where every attribute in `attrs` is present. Throws
// std::invalid_argument if `attrs` is empty.
std::vector<bool> complete_case_mask(const AttributeTable& table, std::span<const Attribute> attrs);
// Name-based overload; unknown names throw std::invalid_argument.
std::vector<bool> complete_case_mask(const AttributeTable& table,
                                     std::span<const std::string> attr_names);

}  // namespace segnet
