#pragma once

// Experiment orchestration: flat key=value configs, dataset preparation,
// partitioning, method dispatch over seeds, and the on-disk artifacts
// (per-seed metrics CSV, timings, manifest, mean/std summary).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedgm/federation.hpp"
#include "fedgm/graph.hpp"

namespace fedgm {

struct ExperimentConfig {
  /// `sbm:default`, `sbm:default@<generator seed>`, or a graph file path.
  std::string dataset = "sbm:default";
  int clients = 10;
  std::uint64_t partition_seed = 0;
  /// fedgm | fedgm-stage1 | fedavg | local-only
  std::string method = "fedgm";
  double ratio = 0.25;
  int stage1_epochs = 1000;
  int rounds = 100;
  int steps_per_round = 10;
  double lr_gnn = 1e-2;
  double lr_feat = 1e-2;
  double lr_x = 1e-2;
  double lr_phi = 1e-3;
  double weight_decay = 5e-4;
  int hidden = 256;
  int mlp_hidden = 128;
  int final_epochs = 300;
  int local_epochs = 3;
  int probe_every = 10;
  int probe_epochs = 100;
  double delta = 0.5;
  /// condensed | real
  std::string class_weights = "condensed";
  /// cosine | l2
  std::string distance = "cosine";
  /// adam | sgd, for every GCN training run
  std::string optimizer = "adam";
  /// sgd | adam, for the condensation updates
  std::string condense_optimizer = "sgd";
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::string output = "runs/out";
};

/// Every accepted key, in manifest order.
const std::vector<std::string>& config_keys();

/// Sets one key from its textual value; unknown keys and malformed values
/// throw ConfigError.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Parses `key = value` lines; `#` starts a comment. Duplicate keys are an
/// error. Line numbers are reported through ConfigError messages.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Range checks (rates > 0, K >= 1, r in (0, 1], known enums, ...).
void validate(const ExperimentConfig& cfg);

/// Resolved key/value pairs, values formatted so they parse back identically.
std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& cfg);

/// Protocol knobs for one seed.
FedConfig to_fed_config(const ExperimentConfig& cfg, std::uint64_t seed, int workers);

/// Loads or synthesizes the dataset named by cfg.dataset.
Graph prepare_dataset(const ExperimentConfig& cfg);

/// Louvain split into k node-disjoint subgraphs, each re-split 60/20/20 per
/// class with a seed derived from partition_seed.
std::vector<ClientState> make_clients(const Graph& g, int k, std::uint64_t partition_seed);

RunResult run_method(const std::string& method, std::span<const ClientState> clients, const FedConfig& cfg,
                     const RowSink& sink = {});

/// CSV header and row encoding shared by writers and readers.
std::string metrics_header();
std::string format_metrics_row(const MetricsRow& r);

struct SeedOutcome {
  std::uint64_t seed = 0;
  double final_acc = 0.0;
  RunResult result;
};

struct Summary {
  std::string method;
  std::string dataset;
  std::vector<std::uint64_t> seeds;
  std::vector<double> finals;
  double mean = 0.0;
  /// Sample standard deviation (0 for a single seed).
  double std = 0.0;
};

Summary summarize(const std::string& method, const std::string& dataset, const std::vector<SeedOutcome>& outcomes);

/// Worker count from FEDGM_WORKERS (default 1).
int workers_from_env();

struct RunOptions {
  bool force = false;
  int workers = 1;
  std::ostream* log = nullptr;
};

/// Executes every seed and writes all artifacts under cfg.output. Refuses an
/// existing output directory unless `force`. Message accounting is checked
/// against the protocol after each seed.
std::vector<SeedOutcome> run_experiment(const ExperimentConfig& cfg, const RunOptions& opt);

/// Throws Error if the log does not hold exactly the expected uploads.
void check_accounting(const std::string& method, const MessageLog& log, int clients, int rounds);

struct CompareRow {
  std::string dir;
  Summary summary;
  double gap_to_best = 0.0;  // mean - best mean over all rows (<= 0)
  bool best = false;
};

Summary read_summary(const std::filesystem::path& dir);
/// Rows sorted by descending mean; ties keep argument order.
std::vector<CompareRow> compare_runs(const std::vector<std::filesystem::path>& dirs);
void write_compare_text(std::ostream& out, const std::vector<CompareRow>& rows);
void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows);

struct ConvertStats {
  int nodes = 0;
  int features = 0;
  int classes = 0;
  int edges = 0;
  int dropped_edges = 0;  // citations naming unknown papers
  std::vector<std::string> class_names;
};

/// Reads a citation dataset in its plain `<name>.content` / `<name>.cites`
/// form (paper id, binary features, class label / cited citing) and writes the
/// graph text format with a seeded stratified 60/20/20 split.
ConvertStats convert_citation(const std::filesystem::path& raw_dir, const std::string& name,
                              const std::filesystem::path& out_path, std::uint64_t split_seed = 0);

}  // namespace fedgm
