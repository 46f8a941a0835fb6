#include "fedgm/models.hpp"

#include <cmath>
#include <numeric>

namespace fedgm {

using ad::Var;

bool ParamSet::same_layout(const ParamSet& other) const {
  if (names != other.names || tensors.size() != other.tensors.size()) return false;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i].rows() != other.tensors[i].rows() || tensors[i].cols() != other.tensors[i].cols()) return false;
  }
  return true;
}

Index ParamSet::scalar_count() const {
  Index n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

double ParamSet::squared_norm() const {
  double s = 0.0;
  for (const auto& t : tensors) s += t.squaredNorm();
  return s;
}

bool GradientSet::same_layout(const GradientSet& other) const {
  if (names != other.names || tensors.size() != other.tensors.size()) return false;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i].rows() != other.tensors[i].rows() || tensors[i].cols() != other.tensors[i].cols()) return false;
  }
  return true;
}

ParamSet GradientSet::values() const {
  ParamSet p;
  p.names = names;
  for (const auto& t : tensors) p.tensors.push_back(t.value());
  return p;
}

GradientSet GradientSet::constants(const ParamSet& p) {
  GradientSet g;
  g.names = p.names;
  for (const auto& t : p.tensors) g.tensors.push_back(Var::constant(t));
  return g;
}

ParamSet weighted_sum(std::span<const ParamSet> sets, std::span<const double> weights) {
  if (sets.empty() || sets.size() != weights.size()) throw DimensionError("weighted_sum: need one weight per set");
  ParamSet out = sets[0];
  for (auto& t : out.tensors) t.setZero();
  for (std::size_t k = 0; k < sets.size(); ++k) {
    if (!sets[k].same_layout(out)) throw DimensionError("weighted_sum: parameter layouts differ");
    for (std::size_t i = 0; i < out.tensors.size(); ++i) out.tensors[i] += weights[k] * sets[k].tensors[i];
  }
  return out;
}

Tensor glorot_uniform(Index fan_in, Index fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(fan_in, fan_out);
  for (Index i = 0; i < t.size(); ++i) t.data()[i] = dist(rng);
  return t;
}

ParamSet GCNParams::to_set() const { return {{"W1", "W2"}, {w1, w2}}; }

GCNParams GCNParams::from_set(const ParamSet& p) {
  if (p.size() != 2) throw DimensionError("GCNParams: expected 2 tensors, got " + std::to_string(p.size()));
  return {p.tensors[0], p.tensors[1]};
}

GCNParams GCNParams::sample(int in_dim, int hidden, int classes, std::uint64_t seed) {
  Rng rng(seed);
  GCNParams p;
  p.w1 = glorot_uniform(in_dim, hidden, rng);
  p.w2 = glorot_uniform(hidden, classes, rng);
  return p;
}

ParamSet MLPAdjParams::to_set() const {
  return {{"phi.W1", "phi.b1", "phi.W2", "phi.b2", "phi.W3", "phi.b3"}, {w1, b1, w2, b2, w3, b3}};
}

MLPAdjParams MLPAdjParams::from_set(const ParamSet& p) {
  if (p.size() != 6) throw DimensionError("MLPAdjParams: expected 6 tensors, got " + std::to_string(p.size()));
  const auto& t = p.tensors;
  return {t[0], t[1], t[2], t[3], t[4], t[5]};
}

MLPAdjParams MLPAdjParams::sample(int feature_dim, int hidden, std::uint64_t seed) {
  Rng rng(seed);
  MLPAdjParams p;
  p.w1 = glorot_uniform(2 * feature_dim, hidden, rng);
  p.b1 = Tensor::Zero(1, hidden);
  p.w2 = glorot_uniform(hidden, hidden, rng);
  p.b2 = Tensor::Zero(1, hidden);
  p.w3 = glorot_uniform(hidden, 1, rng);
  p.b3 = Tensor::Zero(1, 1);
  return p;
}

GCNVars GCNVars::leaves(const GCNParams& p) { return {Var::parameter(p.w1), Var::parameter(p.w2)}; }
GCNVars GCNVars::constants(const GCNParams& p) { return {Var::constant(p.w1), Var::constant(p.w2)}; }

MLPAdjVars MLPAdjVars::leaves(const MLPAdjParams& p) {
  return {Var::parameter(p.w1), Var::parameter(p.b1), Var::parameter(p.w2),
          Var::parameter(p.b2), Var::parameter(p.w3), Var::parameter(p.b3)};
}

MLPAdjVars MLPAdjVars::constants(const MLPAdjParams& p) {
  return {Var::constant(p.w1), Var::constant(p.b1), Var::constant(p.w2),
          Var::constant(p.b2), Var::constant(p.w3), Var::constant(p.b3)};
}

MLPAdjParams MLPAdjVars::values() const {
  return {w1.value(), b1.value(), w2.value(), b2.value(), w3.value(), b3.value()};
}

Index adjacency_size(const Adjacency& a) {
  return std::visit([](const auto& m) { return m.rows(); }, a);
}

Var propagate(const Adjacency& a, const Var& h) {
  if (const auto* dense = std::get_if<Var>(&a)) return ad::matmul(*dense, h);
  return ad::spmm(std::get<ad::SparseOperator>(a), h);
}

Var gcn_forward(const GCNVars& p, const Adjacency& a, const Var& x) {
  if (x.cols() != p.w1.rows()) {
    throw DimensionError("gcn_forward: features " + shape_string(x.rows(), x.cols()) + " vs W1 " +
                         shape_string(p.w1.rows(), p.w1.cols()));
  }
  if (adjacency_size(a) != x.rows()) {
    throw DimensionError("gcn_forward: adjacency size " + std::to_string(adjacency_size(a)) + " vs " +
                         std::to_string(x.rows()) + " feature rows");
  }
  const Var h1 = ad::relu(ad::matmul(propagate(a, x), p.w1));
  return propagate(a, ad::matmul(h1, p.w2));
}

Tensor gcn_logits(const GCNParams& p, const Adjacency& a, const Tensor& x) {
  ad::NoGradGuard no_grad;
  return gcn_forward(GCNVars::constants(p), a, Var::constant(x)).value();
}

Var mlp_adjacency(const MLPAdjVars& phi, const Var& x) {
  const Index n = x.rows();
  const Index d = x.cols();
  if (phi.w1.rows() != 2 * d) {
    throw DimensionError("mlp_adjacency: W1 " + shape_string(phi.w1.rows(), phi.w1.cols()) + " needs 2*d rows, d=" +
                         std::to_string(d));
  }
  std::vector<Index> first(static_cast<std::size_t>(d)), second(static_cast<std::size_t>(d));
  std::iota(first.begin(), first.end(), Index{0});
  std::iota(second.begin(), second.end(), d);
  // [x_i; x_j] W1 = x_i W1[:d] + x_j W1[d:]
  const Var left = ad::matmul(x, ad::gather_rows(phi.w1, first));
  const Var right = ad::matmul(x, ad::gather_rows(phi.w1, second));

  const Index pairs = n * n;
  std::vector<Index> row_i(static_cast<std::size_t>(pairs)), row_j(static_cast<std::size_t>(pairs)),
      swapped(static_cast<std::size_t>(pairs));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const auto p = static_cast<std::size_t>(i * n + j);
      row_i[p] = i;
      row_j[p] = j;
      swapped[p] = j * n + i;
    }
  }
  Var h = ad::gather_rows(left, std::move(row_i)) + ad::gather_rows(right, std::move(row_j));
  h = ad::relu(h + ad::broadcast_rows(phi.b1, pairs));
  h = ad::relu(ad::matmul(h, phi.w2) + ad::broadcast_rows(phi.b2, pairs));
  const Var score = ad::matmul(h, phi.w3) + ad::broadcast_rows(phi.b3, pairs);
  const Var sym = ad::scale(score + ad::gather_rows(score, std::move(swapped)), 0.5);
  return ad::reshape(ad::sigmoid(sym), n, n);
}

Tensor mlp_adjacency(const MLPAdjParams& phi, const Tensor& x) {
  ad::NoGradGuard no_grad;
  return mlp_adjacency(MLPAdjVars::constants(phi), Var::constant(x)).value();
}

Var normalize_dense_adjacency(const Var& a) {
  const Index n = a.rows();
  if (a.cols() != n) throw DimensionError("normalize_dense_adjacency: adjacency must be square");
  const Var with_loops = a + Var::constant(Tensor::Identity(n, n));
  const Var inv_sqrt = ad::power(ad::sum_cols(with_loops), -0.5);
  return ad::mul(ad::mul(with_loops, ad::broadcast_cols(inv_sqrt, n)), ad::broadcast_rows(ad::transpose(inv_sqrt), n));
}

Tensor normalize_dense_adjacency(const Tensor& a) {
  ad::NoGradGuard no_grad;
  return normalize_dense_adjacency(Var::constant(a)).value();
}

Tensor threshold_adjacency(const Tensor& a, double delta) {
  return a.unaryExpr([delta](double v) { return v < delta ? 0.0 : v; });
}

Tensor densify_for_training(const Tensor& a, double delta) {
  if (delta < 0.0 || delta > 1.0) throw Error("densify_for_training: delta must lie in [0, 1]");
  return normalize_dense_adjacency(threshold_adjacency(a, delta));
}

GradientSet param_gradient(const GCNParams& p, const Adjacency& a, const Var& x, std::span<const int> labels,
                           const Mask& mask, bool create_graph) {
  // The gradient is itself a value here, so it needs a tape even when the
  // caller disabled recording; it only stays differentiable if they did not.
  create_graph = create_graph && ad::grad_enabled();
  ad::EnableGradGuard tape;
  const GCNVars theta = GCNVars::leaves(p);
  const Var loss = ad::masked_cross_entropy(gcn_forward(theta, a, x), labels, mask);
  const auto wrt = theta.list();
  GradientSet g;
  g.names = {"W1", "W2"};
  g.tensors = ad::grad(loss, wrt, create_graph);
  return g;
}

Var gradient_distance(const GradientSet& a, const GradientSet& b, DistanceKind kind) {
  if (!a.same_layout(b)) throw DimensionError("gradient_distance: gradient layouts differ");
  Var total = Var::constant(Tensor::Zero(1, 1));
  for (std::size_t t = 0; t < a.size(); ++t) {
    const Var& ga = a.tensors[t];
    const Var& gb = b.tensors[t];
    if (kind == DistanceKind::kSquaredL2) {
      const Var diff = ga - gb;
      total = total + ad::sum(diff * diff);
      continue;
    }
    const Index rows = ga.rows();
    const Index cols = ga.cols();
    const Tensor na2 = ga.value().colwise().squaredNorm();
    const Tensor nb2 = gb.value().colwise().squaredNorm();
    Tensor cosine_cols = Tensor::Zero(1, cols);
    for (Index j = 0; j < cols; ++j) cosine_cols(0, j) = (na2(0, j) >= 1e-24 && nb2(0, j) >= 1e-24) ? 1.0 : 0.0;
    const Tensor fallback_cols = (1.0 - cosine_cols.array()).matrix();

    if (cosine_cols.sum() > 0.0) {
      // Fallback columns get a dummy norm of 1 so the powers stay finite;
      // their cosine term is masked out anyway.
      const Var pad = Var::constant(fallback_cols);
      const Var dots = ad::sum_rows(ga * gb);
      const Var inv_a = ad::power(ad::sum_rows(ga * ga) + pad, -0.5);
      const Var inv_b = ad::power(ad::sum_rows(gb * gb) + pad, -0.5);
      const Var cos = dots * inv_a * inv_b;
      const Var one_minus = ad::shift(ad::scale(cos, -1.0), 1.0);
      total = total + ad::sum(one_minus * Var::constant(cosine_cols));
    }
    if (fallback_cols.sum() > 0.0) {
      const Var diff = ga - gb;
      total = total + ad::sum(diff * diff * ad::broadcast_rows(Var::constant(fallback_cols), rows));
    }
  }
  return total;
}

TrainResult fit_gcn(GCNParams init, const Adjacency& a, const Tensor& x, std::span<const int> labels,
                    const Mask& mask, const TrainOptions& opt) {
  TrainResult result;
  result.params = std::move(init);
  Tensor* params[] = {&result.params.w1, &result.params.w2};
  std::vector<Tensor> m1, m2;
  for (Tensor* p : params) {
    m1.push_back(Tensor::Zero(p->rows(), p->cols()));
    m2.push_back(Tensor::Zero(p->rows(), p->cols()));
  }
  const Var xv = Var::constant(x);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    std::vector<Var> grads;
    double loss_value = 0.0;
    try {
      const GCNVars theta = GCNVars::leaves(result.params);
      const Var loss = ad::masked_cross_entropy(gcn_forward(theta, a, xv), labels, mask);
      loss_value = loss.item();
      const auto wrt = theta.list();
      grads = ad::grad(loss, wrt);
    } catch (const NumericError& e) {
      throw NumericError(std::string("train_gcn diverged: ") + e.what(), epoch);
    }
    result.loss_history.push_back(loss_value);
    for (std::size_t i = 0; i < 2; ++i) {
      Tensor g = grads[i].value() + opt.weight_decay * *params[i];
      if (opt.optimizer == OptimizerKind::kSgd) {
        *params[i] -= opt.lr * g;
      } else {
        m1[i] = beta1 * m1[i] + (1.0 - beta1) * g;
        m2[i] = beta2 * m2[i] + (1.0 - beta2) * g.cwiseProduct(g);
        const double c1 = 1.0 - std::pow(beta1, epoch);
        const double c2 = 1.0 - std::pow(beta2, epoch);
        *params[i] -= (opt.lr * (m1[i] / c1).array() / ((m2[i] / c2).array().sqrt() + eps)).matrix();
      }
      if (!params[i]->allFinite()) throw NumericError("train_gcn diverged: non-finite parameters", epoch);
    }
  }
  return result;
}

TrainResult train_gcn(const Adjacency& a, const Tensor& x, std::span<const int> labels, const Mask& mask,
                      int num_classes, const TrainOptions& opt, std::uint64_t seed) {
  return fit_gcn(GCNParams::sample(static_cast<int>(x.cols()), opt.hidden, num_classes, seed), a, x, labels, mask,
                 opt);
}

std::vector<int> predict(const GCNParams& p, const Adjacency& a, const Tensor& x) {
  const Tensor logits = gcn_logits(p, a, x);
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Index i = 0; i < logits.rows(); ++i) {
    Index best = 0;
    for (Index c = 1; c < logits.cols(); ++c) {
      if (logits(i, c) > logits(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

double evaluate_accuracy(const GCNParams& p, const Adjacency& a, const Tensor& x, std::span<const int> labels,
                         const Mask& mask) {
  const auto pred = predict(p, a, x);
  int hit = 0, total = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    ++total;
    hit += pred[i] == labels[i];
  }
  return total ? static_cast<double>(hit) / total : 0.0;
}

double evaluate_accuracy(const GCNParams& p, const Graph& g, const Mask& mask) {
  return evaluate_accuracy(p, ad::SparseOperator(normalized_adjacency(g)), g.features, g.labels, mask);
}

}  // namespace fedgm
