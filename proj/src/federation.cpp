#include "fedgm/federation.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

namespace fedgm {

using ad::Var;

namespace {

constexpr std::size_t kScalarBytes = sizeof(double);

std::size_t param_bytes(const ParamSet& p) { return static_cast<std::size_t>(p.scalar_count()) * kScalarBytes; }

}  // namespace

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

ClientState ClientState::make(int id, Graph g) {
  ClientState c;
  c.id = id;
  c.adjacency = ad::SparseOperator(normalized_adjacency(g));
  c.graph = std::move(g);
  return c;
}

std::size_t MessageLog::count(const std::string& kind, Direction d) const {
  return static_cast<std::size_t>(std::count_if(messages_.begin(), messages_.end(), [&](const Message& m) {
    return m.kind == kind && m.direction == d;
  }));
}

std::size_t MessageLog::bytes(int round, Direction d) const {
  std::size_t total = 0;
  for (const auto& m : messages_) {
    if (m.round == round && m.direction == d) total += m.bytes;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Integration

ServerState integrate(std::span<const CondensedGraph> condensed, double delta) {
  if (condensed.empty()) throw Error("integrate: no condensed graphs");
  const Index d = condensed[0].features.cols();
  const int classes = condensed[0].num_classes;
  for (const auto& s : condensed) {
    if (s.features.cols() != d || s.num_classes != classes) {
      throw DimensionError("integrate: client " + std::to_string(s.origin_client) + " has d=" +
                           std::to_string(s.features.cols()) + ", C=" + std::to_string(s.num_classes) +
                           " but client " + std::to_string(condensed[0].origin_client) + " has d=" +
                           std::to_string(d) + ", C=" + std::to_string(classes));
    }
  }
  ServerState server;
  server.num_classes = classes;
  int total = 0;
  for (const auto& s : condensed) total += s.num_nodes();
  server.features.resize(total, d);
  server.adjacency = Tensor::Zero(total, total);
  int offset = 0;
  for (const auto& s : condensed) {
    const int n = s.num_nodes();
    server.features.middleRows(offset, n) = s.features;
    server.adjacency.block(offset, offset, n, n) = threshold_adjacency(s.adjacency(), delta);
    server.labels.insert(server.labels.end(), s.labels.begin(), s.labels.end());
    server.blocks.emplace_back(offset, offset + n);
    server.block_client.push_back(s.origin_client);
    server.condensed_counts.push_back(s.class_histogram());
    offset += n;
  }
  server.normalized = normalize_dense_adjacency(server.adjacency);
  return server;
}

// ---------------------------------------------------------------------------
// Class-wise gradients

std::size_t ClassGradientReport::payload_bytes() const {
  std::size_t b = 0;
  for (const auto& c : classes) b += param_bytes(c.grad) + 2 * kScalarBytes;  // class id + count
  return b;
}

ClassGradientReport client_classwise_gradients(const GCNParams& theta, const Graph& g, int client, int round) {
  ClassGradientReport report;
  report.client = client;
  report.round = round;
  std::vector<int> counts(static_cast<std::size_t>(g.num_classes), 0);
  for (int v = 0; v < g.num_nodes; ++v) {
    if (g.split[static_cast<std::size_t>(v)] == Split::kTrain) ++counts[static_cast<std::size_t>(g.labels[static_cast<std::size_t>(v)])];
  }
  for (int c = 0; c < g.num_classes; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) continue;
    const Graph sub = class_neighborhood_subgraph(g, c);
    const auto grad = param_gradient(theta, ad::SparseOperator(normalized_adjacency(sub)), Var::constant(sub.features),
                                     sub.labels, sub.train_mask());
    report.classes.push_back({c, counts[static_cast<std::size_t>(c)], grad.values()});
  }
  return report;
}

std::map<int, ParamSet> aggregate_class_gradients(std::span<const ClassGradientReport> reports,
                                                  const std::vector<std::vector<int>>& counts) {
  if (counts.size() != reports.size()) throw DimensionError("aggregate_class_gradients: one count row per report");
  std::map<int, std::vector<std::pair<std::size_t, const ParamSet*>>> by_class;
  for (std::size_t k = 0; k < reports.size(); ++k) {
    for (const auto& cg : reports[k].classes) by_class[cg.cls].emplace_back(k, &cg.grad);
  }
  std::map<int, ParamSet> out;
  for (const auto& [c, entries] : by_class) {
    double total = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (static_cast<std::size_t>(c) < counts[k].size()) total += counts[k][static_cast<std::size_t>(c)];
    }
    if (total <= 0.0) {
      throw Error("aggregate_class_gradients: class " + std::to_string(c) +
                  " was reported but has zero aggregation weight");
    }
    std::vector<ParamSet> sets;
    std::vector<double> weights;
    for (const auto& [k, grad] : entries) {
      const int n = static_cast<std::size_t>(c) < counts[k].size() ? counts[k][static_cast<std::size_t>(c)] : 0;
      sets.push_back(*grad);
      weights.push_back(n / total);
    }
    out.emplace(c, weighted_sum(sets, weights));
  }
  return out;
}

std::optional<GradientSet> condensed_class_gradient(const GCNParams& theta, const ServerState& server, const Var& x,
                                                    int c) {
  Mask mask(server.labels.size());
  bool any = false;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = server.labels[i] == c;
    any = any || mask[i];
  }
  if (!any) return std::nullopt;
  return param_gradient(theta, Adjacency{Var::constant(server.normalized)}, x, server.labels, mask,
                        /*create_graph=*/x.requires_grad());
}

RoundStats stage2_round(ServerState& server, std::span<const ClientState> clients, int t, const FedConfig& cfg,
                        MessageLog& log) {
  const int d = static_cast<int>(server.features.cols());
  const GCNParams theta = GCNParams::sample(d, cfg.train.hidden, server.num_classes,
                                            derive_seed(cfg.seed, {stream::kStage2Theta, static_cast<std::uint64_t>(t)}));
  RoundStats stats;
  for (const auto& c : clients) {
    log.record({t, "theta", Direction::kDown, c.id, param_bytes(theta.to_set())});
    stats.down_bytes += param_bytes(theta.to_set());
  }

  std::vector<ClassGradientReport> reports(clients.size());
  parallel_for(static_cast<int>(clients.size()), cfg.workers, [&](int k) {
    reports[static_cast<std::size_t>(k)] = client_classwise_gradients(theta, clients[static_cast<std::size_t>(k)].graph,
                                                                      clients[static_cast<std::size_t>(k)].id, t);
  });
  for (const auto& r : reports) {
    log.record({t, "class_gradients", Direction::kUp, r.client, r.payload_bytes()});
    stats.up_bytes += r.payload_bytes();
  }

  // Aggregation weights per report: condensed counts of the client's block,
  // or the real counts it reported.
  std::vector<std::vector<int>> counts(reports.size(), std::vector<int>(static_cast<std::size_t>(server.num_classes), 0));
  for (std::size_t k = 0; k < reports.size(); ++k) {
    if (cfg.weight_by_real_counts) {
      for (const auto& cg : reports[k].classes) counts[k][static_cast<std::size_t>(cg.cls)] = cg.count;
      continue;
    }
    const auto block = std::find(server.block_client.begin(), server.block_client.end(), reports[k].client);
    if (block == server.block_client.end()) {
      throw Error("stage2_round: client " + std::to_string(reports[k].client) + " has no condensed block");
    }
    counts[k] = server.condensed_counts[static_cast<std::size_t>(block - server.block_client.begin())];
  }
  const auto targets = aggregate_class_gradients(reports, counts);

  std::vector<std::pair<int, GradientSet>> matched;
  for (const auto& [c, g] : targets) matched.emplace_back(c, GradientSet::constants(g));

  auto round_loss = [&](const Var& x) {
    Var total = Var::constant(Tensor::Zero(1, 1));
    int used = 0;
    for (const auto& [c, real] : matched) {
      auto cond = condensed_class_gradient(theta, server, x, c);
      if (!cond) continue;
      total = total + gradient_distance(*cond, real, cfg.condense.distance);
      ++used;
    }
    if (used == 0) throw Error("stage2_round: no class is present on both the clients and the condensed graph");
    return total;
  };

  if (cfg.steps_per_round <= 0) {
    ad::NoGradGuard no_grad;
    stats.match_loss = round_loss(Var::constant(server.features)).item();
  }
  for (int step = 0; step < cfg.steps_per_round; ++step) {
    const Var x = Var::parameter(server.features);
    const Var loss = round_loss(x);
    if (step == 0) stats.match_loss = loss.item();
    const Tensor g = ad::grad(loss, {x})[0].value();
    server.features -= cfg.lr_feat * g;
    if (!server.features.allFinite()) throw NumericError("stage2_round: non-finite condensed features", t);
  }
  server.round = t;
  return stats;
}

// ---------------------------------------------------------------------------
// Evaluation and runs

FederationEval evaluate_federation(const GCNParams& params, std::span<const ClientState> clients) {
  FederationEval ev;
  double hits = 0.0;
  int total = 0;
  for (const auto& c : clients) {
    const Mask test = c.graph.test_mask();
    const int n = c.graph.count(Split::kTest);
    ev.test_counts.push_back(n);
    if (n == 0) {
      ev.client_acc.push_back(0.0);
      ev.empty_clients.push_back(c.id);
      continue;
    }
    const double acc = evaluate_accuracy(params, c.adjacency, c.graph.features, c.graph.labels, test);
    ev.client_acc.push_back(acc);
    hits += acc * n;
    total += n;
  }
  ev.overall = total ? hits / total : 0.0;
  return ev;
}

namespace {

struct Recorder {
  RunResult& out;
  const RowSink& sink;

  void add(const MetricsRow& r) {
    out.rows.push_back(r);
    if (sink) sink(r);
  }
};

template <class F>
auto in_phase(const char* phase, F&& f) {
  try {
    return f();
  } catch (const PhaseError&) {
    throw;
  } catch (const std::exception& e) {
    throw PhaseError(phase, e.what());
  }
}

void emit_eval_rows(Recorder& rows, int round, const std::string& phase, const FederationEval& ev,
                    std::span<const ClientState> clients) {
  for (std::size_t k = 0; k < clients.size(); ++k) {
    MetricsRow r;
    r.round = round;
    r.phase = phase;
    r.client_id = clients[k].id;
    if (ev.test_counts[k] > 0) r.client_acc = ev.client_acc[k];
    rows.add(r);
  }
}

std::size_t condensed_payload_bytes(const CondensedGraph& s) {
  const auto n = static_cast<std::size_t>(s.num_nodes());
  // features + labels + upper triangle of A' (diagonal included)
  return (n * static_cast<std::size_t>(s.features.cols()) + n + n * (n + 1) / 2) * kScalarBytes;
}

}  // namespace

namespace {

std::vector<CondenseResult> condense_all(std::span<const ClientState> clients, const FedConfig& cfg) {
  std::vector<CondenseResult> results(clients.size());
  parallel_for(static_cast<int>(clients.size()), cfg.workers, [&](int k) {
    const auto& c = clients[static_cast<std::size_t>(k)];
    results[static_cast<std::size_t>(k)] =
        condense_local(c.graph, cfg.condense, derive_seed(cfg.seed, {stream::kCondenseInit, static_cast<std::uint64_t>(c.id)}), c.id);
  });
  return results;
}

void log_uploads(std::span<const ClientState> clients, std::span<const CondenseResult> results, MessageLog& log) {
  for (std::size_t k = 0; k < clients.size(); ++k) {
    log.record({0, "condensed_graph", Direction::kUp, clients[k].id, condensed_payload_bytes(results[k].graph)});
  }
}

}  // namespace

std::vector<CondenseResult> run_stage1(std::span<const ClientState> clients, const FedConfig& cfg, MessageLog& log) {
  auto results = condense_all(clients, cfg);
  log_uploads(clients, results, log);
  return results;
}

GCNParams train_on_server(const ServerState& server, const FedConfig& cfg, int epochs, std::uint64_t seed) {
  TrainOptions opt = cfg.train;
  opt.epochs = epochs;
  const Mask all(server.labels.size(), true);
  return train_gcn(Adjacency{Var::constant(server.normalized)}, server.features, server.labels, all,
                   server.num_classes, opt, seed)
      .params;
}

RunResult run_fedgm(std::span<const ClientState> clients, const FedConfig& cfg, const RowSink& sink) {
  const auto stage1 = in_phase("stage1", [&] { return condense_all(clients, cfg); });
  return run_fedgm(clients, stage1, cfg, sink);
}

RunResult run_fedgm(std::span<const ClientState> clients, std::span<const CondenseResult> stage1, const FedConfig& cfg,
                    const RowSink& sink) {
  if (stage1.size() != clients.size()) throw PhaseError("stage1", "one condensed graph per client is required");
  RunResult out;
  Recorder rec{out, sink};
  log_uploads(clients, stage1, out.log);
  std::vector<CondensedGraph> condensed;
  for (std::size_t k = 0; k < stage1.size(); ++k) {
    condensed.push_back(stage1[k].graph);
    out.stage1_losses.push_back(stage1[k].loss_history);
    const auto& h = stage1[k].loss_history;
    MetricsRow r;
    r.round = 0;
    r.phase = "stage1";
    r.client_id = clients[k].id;
    if (!h.empty()) {
      const std::size_t w = std::min<std::size_t>(h.size(), static_cast<std::size_t>(checkpoint_window(cfg.condense.epochs)));
      r.match_loss = std::accumulate(h.end() - static_cast<std::ptrdiff_t>(w), h.end(), 0.0) / static_cast<double>(w);
    }
    r.msg_up_bytes = condensed_payload_bytes(stage1[k].graph);
    rec.add(r);
  }
  ServerState server = in_phase("integrate", [&] { return integrate(condensed, cfg.delta); });

  for (int t = 1; t <= cfg.rounds; ++t) {
    MetricsRow r = in_phase("stage2", [&] {
      const RoundStats st = stage2_round(server, clients, t, cfg, out.log);
      MetricsRow row;
      row.round = t;
      row.phase = "stage2";
      row.match_loss = st.match_loss;
      row.msg_up_bytes = st.up_bytes;
      row.msg_down_bytes = st.down_bytes;
      if (cfg.probe_every > 0 && t % cfg.probe_every == 0) {
        const GCNParams probe = train_on_server(server, cfg, cfg.probe_epochs,
                                                derive_seed(cfg.seed, {stream::kProbe, static_cast<std::uint64_t>(t)}));
        row.overall_acc = evaluate_federation(probe, clients).overall;
      }
      return row;
    });
    rec.add(r);
  }

  out.params = in_phase("final", [&] {
    return train_on_server(server, cfg, cfg.train.epochs, derive_seed(cfg.seed, {stream::kFinalModel}));
  });
  std::size_t down = 0;
  for (const auto& c : clients) {
    out.log.record({cfg.rounds + 1, "model", Direction::kDown, c.id, param_bytes(out.params.to_set())});
    down += param_bytes(out.params.to_set());
  }
  out.final_eval = evaluate_federation(out.params, clients);
  MetricsRow fin;
  fin.round = cfg.rounds;
  fin.phase = "final";
  fin.overall_acc = out.final_eval.overall;
  fin.msg_down_bytes = down;
  rec.add(fin);
  emit_eval_rows(rec, cfg.rounds, "final", out.final_eval, clients);
  return out;
}

ParamSet fedavg_aggregate(std::span<const ParamSet> params, std::span<const int> sizes) {
  if (params.size() != sizes.size() || params.empty()) throw DimensionError("fedavg_aggregate: one size per client");
  const double total = std::accumulate(sizes.begin(), sizes.end(), 0.0);
  if (total <= 0.0) throw Error("fedavg_aggregate: total sample count is zero");
  std::vector<double> w;
  for (int s : sizes) w.push_back(s / total);
  return weighted_sum(params, w);
}

RunResult run_fedavg(std::span<const ClientState> clients, const FedConfig& cfg, const RowSink& sink) {
  RunResult out;
  Recorder rec{out, sink};
  const int d = clients.front().graph.num_features();
  const int classes = clients.front().graph.num_classes;
  GCNParams global = GCNParams::sample(d, cfg.train.hidden, classes, derive_seed(cfg.seed, {stream::kFedAvg}));
  std::vector<int> sizes;
  for (const auto& c : clients) sizes.push_back(c.graph.count(Split::kTrain));

  TrainOptions local = cfg.train;
  local.epochs = cfg.local_epochs;
  for (int t = 1; t <= cfg.rounds; ++t) {
    std::vector<ParamSet> updates(clients.size());
    in_phase("local_update", [&] {
      parallel_for(static_cast<int>(clients.size()), cfg.workers, [&](int k) {
        const auto& c = clients[static_cast<std::size_t>(k)];
        if (sizes[static_cast<std::size_t>(k)] == 0) {
          updates[static_cast<std::size_t>(k)] = global.to_set();
          return;
        }
        updates[static_cast<std::size_t>(k)] =
            fit_gcn(global, c.adjacency, c.graph.features, c.graph.labels, c.graph.train_mask(), local).params.to_set();
      });
    });
    const std::size_t bytes = param_bytes(global.to_set());
    for (const auto& c : clients) {
      out.log.record({t, "params", Direction::kDown, c.id, bytes});
      out.log.record({t, "params", Direction::kUp, c.id, bytes});
    }
    global = in_phase("aggregate", [&] { return GCNParams::from_set(fedavg_aggregate(updates, sizes)); });

    const FederationEval ev = evaluate_federation(global, clients);
    MetricsRow r;
    r.round = t;
    r.phase = "fedavg";
    r.overall_acc = ev.overall;
    r.msg_up_bytes = bytes * clients.size();
    r.msg_down_bytes = bytes * clients.size();
    rec.add(r);
    emit_eval_rows(rec, t, "fedavg", ev, clients);
    out.final_eval = ev;
  }
  if (cfg.rounds <= 0) out.final_eval = evaluate_federation(global, clients);
  out.params = global;
  return out;
}

RunResult run_local_only(std::span<const ClientState> clients, const FedConfig& cfg, const RowSink& sink) {
  RunResult out;
  Recorder rec{out, sink};
  FederationEval ev;
  double hits = 0.0;
  int total = 0;
  for (const auto& c : clients) {
    const int n_test = c.graph.count(Split::kTest);
    ev.test_counts.push_back(n_test);
    if (c.graph.count(Split::kTrain) == 0 || n_test == 0) {
      ev.client_acc.push_back(0.0);
      if (n_test == 0) ev.empty_clients.push_back(c.id);
      continue;
    }
    const auto trained = in_phase("local", [&] {
      return train_gcn(c.adjacency, c.graph.features, c.graph.labels, c.graph.train_mask(), c.graph.num_classes,
                       cfg.train, derive_seed(cfg.seed, {stream::kLocal, static_cast<std::uint64_t>(c.id)}));
    });
    const double acc = evaluate_accuracy(trained.params, c.adjacency, c.graph.features, c.graph.labels, c.graph.test_mask());
    ev.client_acc.push_back(acc);
    hits += acc * n_test;
    total += n_test;
  }
  ev.overall = total ? hits / total : 0.0;
  out.final_eval = ev;
  MetricsRow fin;
  fin.round = 0;
  fin.phase = "local";
  fin.overall_acc = ev.overall;
  rec.add(fin);
  emit_eval_rows(rec, 0, "local", ev, clients);
  return out;
}

}  // namespace fedgm
