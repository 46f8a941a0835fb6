#include "fedgm/condensation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace fedgm {

using ad::Var;

Tensor CondensedGraph::adjacency() const { return mlp_adjacency(phi, features); }

std::vector<int> CondensedGraph::class_histogram() const {
  std::vector<int> h(static_cast<std::size_t>(num_classes), 0);
  for (int y : labels) ++h[static_cast<std::size_t>(y)];
  return h;
}

std::vector<int> apportion_condensed_counts(const std::vector<int>& hist, double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw Error("condensation ratio must lie in (0, 1]");
  const int n = std::accumulate(hist.begin(), hist.end(), 0);
  if (n == 0) throw Error("condensation needs at least one training node");
  const int present = static_cast<int>(std::count_if(hist.begin(), hist.end(), [](int c) { return c > 0; }));
  const int target = std::max(static_cast<int>(std::lround(ratio * n)), present);

  std::vector<double> quota(hist.size());
  std::vector<int> alloc(hist.size(), 0);
  for (std::size_t c = 0; c < hist.size(); ++c) {
    if (hist[c] == 0) continue;
    quota[c] = static_cast<double>(target) * hist[c] / n;
    alloc[c] = std::max(1, static_cast<int>(std::floor(quota[c])));
  }
  int total = std::accumulate(alloc.begin(), alloc.end(), 0);

  std::vector<std::size_t> order(hist.size());
  std::iota(order.begin(), order.end(), 0);
  // Largest remainder first; stable sort keeps lower class ids ahead on ties.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return quota[a] - alloc[a] > quota[b] - alloc[b];
  });
  for (std::size_t k = 0; total < target; k = (k + 1) % order.size()) {
    if (hist[order[k]] == 0) continue;
    ++alloc[order[k]];
    ++total;
  }
  // The one-per-class minimum can overshoot; take back from the most
  // over-allocated classes that keep at least one node.
  while (total > target) {
    std::size_t pick = hist.size();
    for (std::size_t c = 0; c < hist.size(); ++c) {
      if (alloc[c] <= 1) continue;
      if (pick == hist.size() || alloc[c] - quota[c] > alloc[pick] - quota[pick]) pick = c;
    }
    if (pick == hist.size()) break;
    --alloc[pick];
    --total;
  }
  return alloc;
}

CondensedGraph init_condensed(const Graph& g, double ratio, int mlp_hidden, std::uint64_t seed, int client) {
  std::vector<std::vector<int>> train_by_class(static_cast<std::size_t>(g.num_classes));
  std::vector<int> hist(static_cast<std::size_t>(g.num_classes), 0);
  for (int v = 0; v < g.num_nodes; ++v) {
    if (g.split[static_cast<std::size_t>(v)] != Split::kTrain) continue;
    const int y = g.labels[static_cast<std::size_t>(v)];
    train_by_class[static_cast<std::size_t>(y)].push_back(v);
    ++hist[static_cast<std::size_t>(y)];
  }
  if (std::accumulate(hist.begin(), hist.end(), 0) == 0) {
    throw Error("init_condensed: client " + std::to_string(client) + " has no training nodes");
  }
  const auto counts = apportion_condensed_counts(hist, ratio);

  CondensedGraph s;
  s.num_classes = g.num_classes;
  s.origin_client = client;
  s.ratio = ratio;
  for (std::size_t c = 0; c < counts.size(); ++c) s.labels.insert(s.labels.end(), static_cast<std::size_t>(counts[c]), static_cast<int>(c));

  Rng rng(derive_seed(seed, {stream::kCondenseInit, 0}));
  s.features.resize(static_cast<Index>(s.labels.size()), g.features.cols());
  for (std::size_t i = 0; i < s.labels.size(); ++i) {
    const auto& pool = train_by_class[static_cast<std::size_t>(s.labels[i])];
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    s.features.row(static_cast<Index>(i)) = g.features.row(pool[pick(rng)]);
  }
  s.phi = MLPAdjParams::sample(g.num_features(), mlp_hidden, derive_seed(seed, {stream::kCondenseInit, 1}));
  return s;
}

GradientSet condensed_param_gradient(const GCNParams& theta, const Var& x, const MLPAdjVars& phi,
                                     const std::vector<int>& labels) {
  const Var a_hat = normalize_dense_adjacency(mlp_adjacency(phi, x));
  const Mask all(labels.size(), true);
  return param_gradient(theta, Adjacency{a_hat}, x, labels, all, /*create_graph=*/true);
}

Var one_step_match_loss(const GCNParams& theta, const GradientSet& real, const Var& x, const MLPAdjVars& phi,
                        const std::vector<int>& labels, DistanceKind kind) {
  return gradient_distance(condensed_param_gradient(theta, x, phi, labels), real, kind);
}

Var one_step_match_loss(const GCNParams& theta, const Graph& real, const CondensedGraph& s, bool track_features,
                        bool track_phi, DistanceKind kind) {
  const auto real_grad = GradientSet::constants(
      param_gradient(theta, ad::SparseOperator(normalized_adjacency(real)), Var::constant(real.features), real.labels,
                     real.train_mask())
          .values());
  const Var x = track_features ? Var::parameter(s.features) : Var::constant(s.features);
  const MLPAdjVars phi = track_phi ? MLPAdjVars::leaves(s.phi) : MLPAdjVars::constants(s.phi);
  return one_step_match_loss(theta, real_grad, x, phi, s.labels, kind);
}

int checkpoint_window(int epochs) { return std::max(1, std::min(50, epochs / 20)); }

namespace {

struct AdamState {
  std::vector<Tensor> m, v;
  int step = 0;
};

void apply_update(std::vector<Tensor*> params, const std::vector<Var>& grads, double lr, OptimizerKind kind,
                  AdamState& st) {
  if (kind == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < params.size(); ++i) *params[i] -= lr * grads[i].value();
    return;
  }
  if (st.m.empty()) {
    for (Tensor* p : params) {
      st.m.push_back(Tensor::Zero(p->rows(), p->cols()));
      st.v.push_back(Tensor::Zero(p->rows(), p->cols()));
    }
  }
  ++st.step;
  const double c1 = 1.0 - std::pow(0.9, st.step);
  const double c2 = 1.0 - std::pow(0.999, st.step);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& g = grads[i].value();
    st.m[i] = 0.9 * st.m[i] + 0.1 * g;
    st.v[i] = 0.999 * st.v[i] + 0.001 * g.cwiseProduct(g);
    *params[i] -= (lr * (st.m[i] / c1).array() / ((st.v[i] / c2).array().sqrt() + 1e-8)).matrix();
  }
}

}  // namespace

CondenseResult condense_local(const Graph& g, const CondenseConfig& cfg, std::uint64_t seed, int client) {
  CondenseResult result;
  result.graph = init_condensed(g, cfg.ratio, cfg.mlp_hidden, seed, client);
  if (cfg.epochs <= 0) return result;

  CondensedGraph& s = result.graph;
  const ad::SparseOperator real_adj(normalized_adjacency(g));
  const Var real_x = Var::constant(g.features);
  const Mask train = g.train_mask();

  const int window = checkpoint_window(cfg.epochs);
  const int tail_start = cfg.epochs - std::max(1, cfg.epochs / 10) + 1;
  double best_avg = std::numeric_limits<double>::infinity();
  double running = 0.0;
  CondensedGraph best = s;
  AdamState x_state, phi_state;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const GCNParams theta = GCNParams::sample(g.num_features(), cfg.gcn_hidden, g.num_classes,
                                              derive_seed(seed, {stream::kCondenseTheta, static_cast<std::uint64_t>(epoch)}));
    const bool update_features = epoch % 2 == 1;
    double loss_value = 0.0;
    std::vector<Var> grads;
    try {
      const auto real = GradientSet::constants(param_gradient(theta, real_adj, real_x, g.labels, train).values());
      const Var x = update_features ? Var::parameter(s.features) : Var::constant(s.features);
      const MLPAdjVars phi = update_features ? MLPAdjVars::constants(s.phi) : MLPAdjVars::leaves(s.phi);
      const Var loss = one_step_match_loss(theta, real, x, phi, s.labels, cfg.distance);
      loss_value = loss.item();
      if (update_features) {
        grads = ad::grad(loss, {x});
      } else {
        const auto leaves = phi.list();
        grads = ad::grad(loss, leaves);
      }
    } catch (const NumericError& e) {
      throw NumericError(std::string("condense_local: ") + e.what(), epoch);
    }
    result.loss_history.push_back(loss_value);

    running += loss_value;
    if (epoch > window) running -= result.loss_history[static_cast<std::size_t>(epoch - window - 1)];
    if (epoch >= tail_start) {
      const double avg = running / std::min(epoch, window);
      if (avg < best_avg) {
        best_avg = avg;
        best = s;
        result.selected_epoch = epoch;
      }
    }

    if (update_features) {
      apply_update({&s.features}, grads, cfg.lr_features, cfg.optimizer, x_state);
    } else {
      apply_update({&s.phi.w1, &s.phi.b1, &s.phi.w2, &s.phi.b2, &s.phi.w3, &s.phi.b3}, grads, cfg.lr_phi,
                   cfg.optimizer, phi_state);
    }
    if (!s.features.allFinite()) throw NumericError("condense_local: non-finite condensed features", epoch);
  }
  result.graph = std::move(best);
  return result;
}

void write_condensed(std::ostream& out, const CondensedGraph& s, double delta) {
  Graph g;
  g.num_nodes = s.num_nodes();
  g.num_classes = s.num_classes;
  g.features = s.features;
  g.labels = s.labels;
  g.split.assign(s.labels.size(), Split::kTrain);
  const Tensor a = threshold_adjacency(s.adjacency(), delta);
  std::vector<std::tuple<int, int, double>> weighted;
  for (int i = 0; i < g.num_nodes; ++i) {
    for (int j = i; j < g.num_nodes; ++j) {
      if (a(i, j) != 0.0) weighted.emplace_back(i, j, a(i, j));
    }
  }
  write_condensed_graph(out, g, CondensedHeader{s.origin_client, s.ratio}, weighted);
}

}  // namespace fedgm
