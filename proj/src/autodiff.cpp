#include "fedgm/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <utility>

namespace fedgm {

std::string shape_string(Index rows, Index cols) {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

namespace ad {

struct Node {
  const char* op = "leaf";
  Tensor value;
  std::vector<Var> inputs;
  BackwardFn backward;
  bool requires_grad = false;
};

namespace {

thread_local bool g_grad_enabled = true;

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.rows(), a.cols()) +
                         " vs " + shape_string(b.rows(), b.cols()));
  }
}

void require_shape(const char* op, const Var& a, Index rows, Index cols) {
  if (a.rows() != rows || a.cols() != cols) {
    throw DimensionError(std::string(op) + ": expected " + shape_string(rows, cols) + ", got " +
                         shape_string(a.rows(), a.cols()));
  }
}

Var leaf(Tensor value, bool requires_grad);

}  // namespace

Var make_op(const char* op, Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  if (!value.allFinite()) {
    throw NumericError(std::string("non-finite value produced by ") + op);
  }
  auto node = std::make_shared<Node>();
  node->op = op;
  node->value = std::move(value);
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& in : inputs) needs = needs || in.requires_grad();
  }
  node->requires_grad = needs;
  if (needs) {
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
  }
  return Var(std::move(node));
}

namespace {

Var leaf(Tensor value, bool requires_grad) {
  Var v = make_op("leaf", std::move(value), {}, nullptr);
  const_cast<Node*>(v.node())->requires_grad = requires_grad;
  return v;
}

}  // namespace

Var Var::constant(Tensor value) { return leaf(std::move(value), false); }
Var Var::parameter(Tensor value) { return leaf(std::move(value), true); }

const Tensor& Var::value() const { return node_->value; }
bool Var::requires_grad() const { return node_ && node_->requires_grad; }
const Var& Var::input(std::size_t i) const { return node_->inputs.at(i); }
const char* Var::op_name() const { return node_->op; }

double Var::item() const {
  if (rows() != 1 || cols() != 1) {
    throw DimensionError("item() on non-scalar " + shape_string(rows(), cols()));
  }
  return node_->value(0, 0);
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
EnableGradGuard::EnableGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = true; }
EnableGradGuard::~EnableGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

SparseOperator::SparseOperator(SparseTensor m)
    : m_(std::make_shared<const SparseTensor>(std::move(m))),
      mt_(std::make_shared<const SparseTensor>(SparseTensor(m_->transpose()))) {}

SparseOperator SparseOperator::transposed() const {
  SparseOperator t;
  t.m_ = mt_;
  t.mt_ = m_;
  return t;
}

// ---------------------------------------------------------------------------
// Elementwise

Var add(const Var& a, const Var& b) {
  require_same_shape("add", a, b);
  return make_op("add", a.value() + b.value(), {a, b},
                 [](const Var&, const Var& g) { return std::vector<Var>{g, g}; });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape("sub", a, b);
  return make_op("sub", a.value() - b.value(), {a, b},
                 [](const Var&, const Var& g) { return std::vector<Var>{g, scale(g, -1.0)}; });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape("mul", a, b);
  return make_op("mul", a.value().cwiseProduct(b.value()), {a, b}, [](const Var& self, const Var& g) {
    const Var& x = self.input(0);
    const Var& y = self.input(1);
    return std::vector<Var>{x.requires_grad() ? mul(g, y) : Var{},
                            y.requires_grad() ? mul(g, x) : Var{}};
  });
}

Var scale(const Var& a, double s) {
  return make_op("scale", a.value() * s, {a},
                 [s](const Var&, const Var& g) { return std::vector<Var>{scale(g, s)}; });
}

Var shift(const Var& a, double s) {
  return make_op("shift", (a.value().array() + s).matrix(), {a},
                 [](const Var&, const Var& g) { return std::vector<Var>{g}; });
}

Var power(const Var& a, double p) {
  Tensor v = a.value().unaryExpr([p](double x) { return std::pow(x, p); });
  return make_op("power", std::move(v), {a}, [p](const Var& self, const Var& g) {
    return std::vector<Var>{mul(g, scale(power(self.input(0), p - 1.0), p))};
  });
}

Var relu(const Var& a) {
  Tensor v = a.value().cwiseMax(0.0);
  return make_op("relu", std::move(v), {a}, [](const Var& self, const Var& g) {
    // Subgradient at exactly 0 is 0.
    Tensor step = self.input(0).value().unaryExpr([](double x) { return x > 0.0 ? 1.0 : 0.0; });
    return std::vector<Var>{mul(g, Var::constant(std::move(step)))};
  });
}

Var sigmoid(const Var& a) {
  Tensor v = a.value().unaryExpr([](double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  return make_op("sigmoid", std::move(v), {a}, [](const Var& self, const Var& g) {
    return std::vector<Var>{mul(g, mul(self, shift(scale(self, -1.0), 1.0)))};
  });
}

// ---------------------------------------------------------------------------
// Products

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions disagree " + shape_string(a.rows(), a.cols()) +
                         " x " + shape_string(b.rows(), b.cols()));
  }
  Tensor v(a.rows(), b.cols());
  v.noalias() = a.value() * b.value();
  return make_op("matmul", std::move(v), {a, b}, [](const Var& self, const Var& g) {
    const Var& x = self.input(0);
    const Var& y = self.input(1);
    return std::vector<Var>{x.requires_grad() ? matmul_nt(g, y) : Var{},
                            y.requires_grad() ? matmul_tn(x, g) : Var{}};
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: inner dimensions disagree " + shape_string(a.rows(), a.cols()) +
                         " x " + shape_string(b.rows(), b.cols()) + "^T");
  }
  Tensor v(a.rows(), b.rows());
  v.noalias() = a.value() * b.value().transpose();
  return make_op("matmul_nt", std::move(v), {a, b}, [](const Var& self, const Var& g) {
    const Var& x = self.input(0);
    const Var& y = self.input(1);
    return std::vector<Var>{x.requires_grad() ? matmul(g, y) : Var{},
                            y.requires_grad() ? matmul_tn(g, x) : Var{}};
  });
}

Var matmul_tn(const Var& a, const Var& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_tn: inner dimensions disagree " + shape_string(a.rows(), a.cols()) +
                         "^T x " + shape_string(b.rows(), b.cols()));
  }
  Tensor v(a.cols(), b.cols());
  v.noalias() = a.value().transpose() * b.value();
  return make_op("matmul_tn", std::move(v), {a, b}, [](const Var& self, const Var& g) {
    const Var& x = self.input(0);
    const Var& y = self.input(1);
    return std::vector<Var>{x.requires_grad() ? matmul_nt(y, g) : Var{},
                            y.requires_grad() ? matmul(x, g) : Var{}};
  });
}

Var transpose(const Var& a) {
  Tensor v = a.value().transpose();
  return make_op("transpose", std::move(v), {a},
                 [](const Var&, const Var& g) { return std::vector<Var>{transpose(g)}; });
}

Var spmm(const SparseOperator& s, const Var& b) {
  if (s.cols() != b.rows()) {
    throw DimensionError("spmm: inner dimensions disagree " + shape_string(s.rows(), s.cols()) + " x " +
                         shape_string(b.rows(), b.cols()));
  }
  Tensor v(s.rows(), b.cols());
  v.noalias() = s.matrix() * b.value();
  return make_op("spmm", std::move(v), {b}, [s](const Var&, const Var& g) {
    return std::vector<Var>{spmm(s.transposed(), g)};
  });
}

// ---------------------------------------------------------------------------
// Reductions and broadcasts

Var sum(const Var& a) {
  Tensor v(1, 1);
  v(0, 0) = a.value().sum();
  const Index r = a.rows(), c = a.cols();
  return make_op("sum", std::move(v), {a},
                 [r, c](const Var&, const Var& g) { return std::vector<Var>{broadcast_to(g, r, c)}; });
}

Var broadcast_to(const Var& a, Index rows, Index cols) {
  require_shape("broadcast_to", a, 1, 1);
  return make_op("broadcast_to", Tensor::Constant(rows, cols, a.value()(0, 0)), {a},
                 [](const Var&, const Var& g) { return std::vector<Var>{sum(g)}; });
}

Var sum_rows(const Var& a) {
  Tensor v = a.value().colwise().sum();
  const Index r = a.rows();
  return make_op("sum_rows", std::move(v), {a},
                 [r](const Var&, const Var& g) { return std::vector<Var>{broadcast_rows(g, r)}; });
}

Var broadcast_rows(const Var& a, Index rows) {
  if (a.rows() != 1) throw DimensionError("broadcast_rows: expected a row vector, got " + shape_string(a.rows(), a.cols()));
  Tensor v = a.value().replicate(rows, 1);
  return make_op("broadcast_rows", std::move(v), {a},
                 [](const Var&, const Var& g) { return std::vector<Var>{sum_rows(g)}; });
}

Var sum_cols(const Var& a) {
  Tensor v = a.value().rowwise().sum();
  const Index c = a.cols();
  return make_op("sum_cols", std::move(v), {a},
                 [c](const Var&, const Var& g) { return std::vector<Var>{broadcast_cols(g, c)}; });
}

Var broadcast_cols(const Var& a, Index cols) {
  if (a.cols() != 1) throw DimensionError("broadcast_cols: expected a column vector, got " + shape_string(a.rows(), a.cols()));
  Tensor v = a.value().replicate(1, cols);
  return make_op("broadcast_cols", std::move(v), {a},
                 [](const Var&, const Var& g) { return std::vector<Var>{sum_cols(g)}; });
}

// ---------------------------------------------------------------------------
// Row indexing

Var gather_rows(const Var& a, std::vector<Index> idx) {
  Tensor v(static_cast<Index>(idx.size()), a.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= a.rows()) throw DimensionError("gather_rows: row index out of range");
    v.row(static_cast<Index>(i)) = a.value().row(idx[i]);
  }
  const Index n = a.rows();
  return make_op("gather_rows", std::move(v), {a}, [idx = std::move(idx), n](const Var&, const Var& g) {
    return std::vector<Var>{scatter_rows(g, idx, n)};
  });
}

Var scatter_rows(const Var& a, std::vector<Index> idx, Index out_rows) {
  if (static_cast<Index>(idx.size()) != a.rows()) throw DimensionError("scatter_rows: index count != rows");
  Tensor v = Tensor::Zero(out_rows, a.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= out_rows) throw DimensionError("scatter_rows: row index out of range");
    v.row(idx[i]) += a.value().row(static_cast<Index>(i));
  }
  return make_op("scatter_rows", std::move(v), {a}, [idx = std::move(idx)](const Var&, const Var& g) {
    return std::vector<Var>{gather_rows(g, idx)};
  });
}

Var reshape(const Var& a, Index rows, Index cols) {
  if (rows * cols != a.rows() * a.cols()) {
    throw DimensionError("reshape: " + shape_string(a.rows(), a.cols()) + " -> " + shape_string(rows, cols));
  }
  Tensor v = Eigen::Map<const Tensor>(a.value().data(), rows, cols);
  const Index r = a.rows(), c = a.cols();
  return make_op("reshape", std::move(v), {a},
                 [r, c](const Var&, const Var& g) { return std::vector<Var>{reshape(g, r, c)}; });
}

Var softmax_rows(const Var& a) {
  Tensor v = a.value();
  for (Index i = 0; i < v.rows(); ++i) {
    const double m = v.row(i).maxCoeff();
    v.row(i) = (v.row(i).array() - m).exp().matrix();
    v.row(i) /= v.row(i).sum();
  }
  return make_op("softmax_rows", std::move(v), {a}, [](const Var& self, const Var& g) {
    const Var weighted = sum_cols(mul(g, self));
    return std::vector<Var>{mul(self, sub(g, broadcast_cols(weighted, self.cols())))};
  });
}

Var masked_cross_entropy(const Var& logits, std::span<const int> labels, const Mask& mask) {
  const Index n = logits.rows();
  const Index c = logits.cols();
  if (static_cast<Index>(labels.size()) != n || static_cast<Index>(mask.size()) != n) {
    throw DimensionError("masked_cross_entropy: labels/mask length must equal logits rows " +
                         shape_string(n, c));
  }
  Tensor target = Tensor::Zero(n, c);
  Tensor row_mask = Tensor::Zero(n, c);
  double total = 0.0;
  Index count = 0;
  const Tensor& z = logits.value();
  for (Index i = 0; i < n; ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= c) {
      throw Error("masked_cross_entropy: label " + std::to_string(y) + " outside [0, " + std::to_string(c) + ")");
    }
    const double m = z.row(i).maxCoeff();
    const double lse = m + std::log((z.row(i).array() - m).exp().sum());
    total += lse - z(i, y);
    target(i, y) = 1.0;
    row_mask.row(i).setOnes();
    ++count;
  }
  if (count == 0) throw Error("masked_cross_entropy: empty mask");
  Tensor v(1, 1);
  v(0, 0) = total / static_cast<double>(count);
  const double inv = 1.0 / static_cast<double>(count);
  return make_op("masked_cross_entropy", std::move(v), {logits},
                 [target = std::move(target), row_mask = std::move(row_mask), inv](const Var& self, const Var& g) {
                   const Var& z = self.input(0);
                   Var probs = mul(softmax_rows(z), Var::constant(row_mask));
                   Var diff = sub(probs, Var::constant(target));
                   return std::vector<Var>{scale(mul(broadcast_to(g, z.rows(), z.cols()), diff), inv)};
                 });
}

// ---------------------------------------------------------------------------
// Reverse pass

std::vector<Var> grad(const Var& output, std::span<const Var> wrt, bool create_graph) {
  if (!output.defined() || output.rows() != 1 || output.cols() != 1) {
    throw DimensionError("grad: output must be scalar, got " +
                         (output.defined() ? shape_string(output.rows(), output.cols()) : std::string("undefined")));
  }

  std::vector<Var> order;
  if (output.requires_grad()) {
    // Iterative post-order DFS over nodes that carry history.
    std::unordered_map<const Node*, bool> visited;
    std::vector<std::pair<Var, std::size_t>> stack{{output, 0}};
    visited[output.node()] = true;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      const auto& inputs = v.node_->inputs;
      if (next < inputs.size()) {
        const Var in = inputs[next++];
        if (in.requires_grad() && !visited[in.node()]) {
          visited[in.node()] = true;
          stack.emplace_back(in, 0);
        }
      } else {
        order.push_back(v);
        stack.pop_back();
      }
    }
  }

  const bool previous = g_grad_enabled;
  g_grad_enabled = create_graph;
  struct Restore {
    bool value;
    ~Restore() { g_grad_enabled = value; }
  } restore{previous};

  std::unordered_map<const Node*, Var> grads;
  if (output.requires_grad()) grads[output.node()] = Var::constant(Tensor::Ones(1, 1));

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Var& v = *it;
    if (!v.node_->backward) continue;
    auto found = grads.find(v.node());
    if (found == grads.end()) continue;
    const Var upstream = found->second;
    std::vector<Var> in_grads = v.node_->backward(v, upstream);
    const auto& inputs = v.node_->inputs;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (i >= in_grads.size() || !in_grads[i].defined() || !inputs[i].requires_grad()) continue;
      auto [slot, inserted] = grads.try_emplace(inputs[i].node(), in_grads[i]);
      if (!inserted) slot->second = add(slot->second, in_grads[i]);
    }
  }

  std::vector<Var> result;
  result.reserve(wrt.size());
  for (const auto& w : wrt) {
    auto found = grads.find(w.node());
    if (found != grads.end()) {
      result.push_back(found->second);
    } else {
      result.push_back(Var::constant(Tensor::Zero(w.rows(), w.cols())));
    }
  }
  return result;
}

double finite_difference_check(const std::function<Var(const Var&)>& f, const Tensor& x, double h) {
  const Var xv = Var::parameter(x);
  const Tensor analytic = grad(f(xv), {xv})[0].value();

  NoGradGuard no_grad;
  double worst = 0.0;
  Tensor probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double orig = probe.data()[i];
    probe.data()[i] = orig + h;
    const double up = f(Var::constant(probe)).item();
    probe.data()[i] = orig - h;
    const double down = f(Var::constant(probe)).item();
    probe.data()[i] = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic.data()[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

}  // namespace ad
}  // namespace fedgm
