#pragma once

// In-process simulation of the two federated protocols:
//  * condensation-based: one-shot upload of condensed subgraphs, server-side
//    block-diagonal integration, then rounds of class-wise gradient matching
//    that refine the integrated features, then global training;
//  * parameter averaging (FedAvg) as the baseline.
// Messages are explicit records so their count and size can be audited.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedgm/condensation.hpp"
#include "fedgm/graph.hpp"
#include "fedgm/models.hpp"

namespace fedgm {

struct FedConfig {
  CondenseConfig condense;
  int rounds = 100;
  int steps_per_round = 10;
  double lr_feat = 1e-2;
  /// Final global training (and FedAvg/local optimizer settings).
  TrainOptions train;
  int local_epochs = 3;
  double delta = 0.5;
  int probe_every = 10;
  int probe_epochs = 100;
  /// Weight class gradients by real per-class sample counts instead of the
  /// condensed counts.
  bool weight_by_real_counts = false;
  std::uint64_t seed = 1;
  int workers = 1;
};

struct ClientState {
  int id = 0;
  Graph graph;
  ad::SparseOperator adjacency;

  static ClientState make(int id, Graph g);
};

enum class Direction { kUp, kDown };

struct Message {
  int round = 0;
  std::string kind;  // condensed_graph, theta, class_gradients, model, params
  Direction direction = Direction::kUp;
  int client = 0;
  std::size_t bytes = 0;
};

class MessageLog {
 public:
  void record(Message m) { messages_.push_back(std::move(m)); }
  const std::vector<Message>& messages() const { return messages_; }
  std::size_t count(const std::string& kind, Direction d) const;
  std::size_t bytes(int round, Direction d) const;

 private:
  std::vector<Message> messages_;
};

/// One CSV row; unset optionals are written as empty cells.
struct MetricsRow {
  int round = 0;
  std::string phase;
  std::optional<double> match_loss;
  std::optional<double> overall_acc;
  std::optional<int> client_id;
  std::optional<double> client_acc;
  std::size_t msg_up_bytes = 0;
  std::size_t msg_down_bytes = 0;
};

struct ServerState {
  Tensor features;            // X'_glo, one block of rows per client
  std::vector<int> labels;    // Y'_glo
  Tensor adjacency;           // thresholded block-diagonal A'_glo
  Tensor normalized;          // D^-1/2 (A'_glo + I) D^-1/2
  std::vector<std::pair<int, int>> blocks;  // [begin, end) rows per client
  std::vector<int> block_client;
  /// condensed_counts[k][c] = condensed nodes of class c from block k.
  std::vector<std::vector<int>> condensed_counts;
  int num_classes = 0;
  int round = 0;

  int num_nodes() const { return static_cast<int>(labels.size()); }
};

/// Stacks features/labels in order and builds the block-diagonal adjacency
/// from each client's thresholded A'.
ServerState integrate(std::span<const CondensedGraph> condensed, double delta);

struct ClassGradient {
  int cls = 0;
  int count = 0;  // class-c training nodes on the client
  ParamSet grad;
};

struct ClassGradientReport {
  int client = 0;
  int round = 0;
  std::vector<ClassGradient> classes;

  std::size_t payload_bytes() const;
};

ClassGradientReport client_classwise_gradients(const GCNParams& theta, const Graph& g, int client = 0, int round = 0);

/// Per class: sum_k w_kc * grad_kc with w_kc = n_kc / sum_k n_kc, where n_kc
/// comes from `counts[k][c]` (indexed by report position).
std::map<int, ParamSet> aggregate_class_gradients(std::span<const ClassGradientReport> reports,
                                                  const std::vector<std::vector<int>>& counts);

/// Gradient of the loss over class-c condensed nodes (forward over the whole
/// integrated graph), differentiable w.r.t. `x`.
std::optional<GradientSet> condensed_class_gradient(const GCNParams& theta, const ServerState& server,
                                                    const ad::Var& x, int c);

struct RoundStats {
  double match_loss = 0.0;
  std::size_t up_bytes = 0;
  std::size_t down_bytes = 0;
};

/// One round of federated class-wise matching; only server.features changes.
RoundStats stage2_round(ServerState& server, std::span<const ClientState> clients, int t, const FedConfig& cfg,
                        MessageLog& log);

struct FederationEval {
  std::vector<double> client_acc;
  std::vector<int> test_counts;
  /// Test-count weighted mean over clients that have test nodes.
  double overall = 0.0;
  std::vector<int> empty_clients;
};

FederationEval evaluate_federation(const GCNParams& params, std::span<const ClientState> clients);

struct RunResult {
  GCNParams params;
  FederationEval final_eval;
  std::vector<MetricsRow> rows;
  MessageLog log;
  /// Stage-1 per-client loss histories (condensation methods only).
  std::vector<std::vector<double>> stage1_losses;
};

/// Receives each metrics row as soon as it is produced.
using RowSink = std::function<void(const MetricsRow&)>;

/// Stage 1 for every client (parallel over cfg.workers); logs the uploads.
std::vector<CondenseResult> run_stage1(std::span<const ClientState> clients, const FedConfig& cfg, MessageLog& log);

/// Global model trained on the thresholded integrated graph.
GCNParams train_on_server(const ServerState& server, const FedConfig& cfg, int epochs, std::uint64_t seed);

/// Failures are rethrown as PhaseError tagged stage1, integrate, stage2 or
/// final.
RunResult run_fedgm(std::span<const ClientState> clients, const FedConfig& cfg, const RowSink& sink = {});
/// Same run, starting from Stage 1 results computed earlier with the same cfg.
RunResult run_fedgm(std::span<const ClientState> clients, std::span<const CondenseResult> stage1, const FedConfig& cfg,
                    const RowSink& sink = {});
RunResult run_fedavg(std::span<const ClientState> clients, const FedConfig& cfg, const RowSink& sink = {});
/// Every client trains alone on its own subgraph; no communication.
RunResult run_local_only(std::span<const ClientState> clients, const FedConfig& cfg, const RowSink& sink = {});

/// Server-side weighted parameter average, weights proportional to `sizes`.
ParamSet fedavg_aggregate(std::span<const ParamSet> params, std::span<const int> sizes);

/// Runs fn(0..n-1) on up to `workers` threads.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace fedgm
