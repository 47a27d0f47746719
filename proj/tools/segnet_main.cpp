// segnet: batch segregation analysis of attributed village networks.
//
//   segnet run --config run.cfg
//   segnet summarize results/
//   segnet synth --config synth.json
//   segnet adapt --matrix adj.csv --keys keys.csv --out edges.csv

#include <algorithm>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "segnet/csv.hpp"
#include "segnet/ingest.hpp"
#include "segnet/pipeline.hpp"
#include "segnet/run_config.hpp"
#include "segnet/synth.hpp"

namespace {

int cmd_run(const std::string& config_path, std::size_t workers) {
  auto cfg = segnet::parse_run_config(config_path);
  segnet::apply_environment(cfg);
  if (workers > 0) cfg.workers = workers;
  if (cfg.corpus.empty()) throw std::invalid_argument("config sets no corpus");
  if (cfg.output.empty()) throw std::invalid_argument("config sets no output");
  auto outcome = segnet::run_pipeline(cfg);
  for (const auto& [village, msg] : outcome.failures) std::cerr << "village " << village << ": " << msg << "\n";
  (outcome.exit_code == 0 ? std::cout : std::cerr) << outcome.message << "\n";
  return outcome.exit_code;
}

int cmd_summarize(const std::string& dir, double qb_cutoff) {
  auto s = segnet::summarize_directory(dir, qb_cutoff);
  std::cout << "summarized " << s.n_villages << " villages into " << dir << "\n";
  return 0;
}

int cmd_synth(const std::string& config_path, const std::string& output) {
  auto req = segnet::parse_synth_config(config_path);
  if (!output.empty()) {
    req.output = output;
  } else if (req.output.is_relative()) {
    req.output = std::filesystem::path(config_path).parent_path() / req.output;
  }
  auto [dir, warnings] = segnet::run_synth(req);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  std::cout << dir.string() << "\n";
  return 0;
}

int cmd_adapt(const std::string& matrix, const std::string& keys, const std::string& out_file) {
  auto edges = segnet::adapt_adjacency_matrix(matrix);
  std::vector<std::string> ids;
  if (!keys.empty()) {
    auto table = segnet::read_csv(keys);
    auto col = std::find(table.header.begin(), table.header.end(), "node_id");
    if (col == table.header.end()) throw std::invalid_argument(keys + ": missing 'node_id' column");
    for (const auto& row : table.rows) ids.push_back(row.fields[static_cast<std::size_t>(col - table.header.begin())]);
  }
  std::ofstream out(out_file);
  if (!out) throw std::runtime_error("cannot write " + out_file);
  segnet::write_csv_row(out, {"source", "target"});
  for (auto [u, v] : edges) {
    auto name = [&](segnet::NodeIndex x) {
      const auto i = static_cast<std::size_t>(x);
      if (ids.empty()) return std::to_string(i);
      if (i >= ids.size()) throw std::invalid_argument("keys file has fewer rows than the matrix");
      return ids[i];
    };
    segnet::write_csv_row(out, {name(u), name(v)});
  }
  std::cout << "wrote " << edges.size() << " edges to " << out_file << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Segregation analysis of attributed village networks"};
  app.require_subcommand(1);

  std::string run_config;
  std::size_t workers = 0;
  auto* run = app.add_subcommand("run", "Analyze every village in a corpus");
  run->add_option("--config", run_config, "Run configuration (key = value text)")->required()->check(CLI::ExistingFile);
  run->add_option("--workers", workers, "Worker threads (overrides config and SEGNET_WORKERS)");

  std::string summary_dir;
  double qb_cutoff = 0.2;
  auto* summarize = app.add_subcommand("summarize", "Rebuild summary tables from village bundles");
  summarize->add_option("dir", summary_dir, "Output directory of a previous run")->required()->check(CLI::ExistingDirectory);
  summarize->add_option("--qb-cutoff", qb_cutoff, "Threshold reported for normalized between-community modularity");

  std::string synth_config, synth_output;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic village");
  synth->add_option("--config", synth_config, "Generator configuration (JSON)")->required()->check(CLI::ExistingFile);
  synth->add_option("--output", synth_output, "Directory to write into (overrides the config)");

  std::string matrix, keys, edges_out;
  auto* adapt = app.add_subcommand("adapt", "Convert a 0/1 adjacency matrix to an edge list");
  adapt->add_option("--matrix", matrix, "Adjacency matrix file")->required()->check(CLI::ExistingFile);
  adapt->add_option("--keys", keys, "CSV with a node_id column, in matrix order")->check(CLI::ExistingFile);
  adapt->add_option("--out", edges_out, "Edge list CSV to write")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_config, workers);
    if (*summarize) return cmd_summarize(summary_dir, qb_cutoff);
    if (*synth) return cmd_synth(synth_config, synth_output);
    if (*adapt) return cmd_adapt(matrix, keys, edges_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
