#include "fedgm/autodiff.hpp"

#include <cmath>
#include <cstring>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace fedgm::ad {
namespace {

using fedgm::testing::make_tensor;
using fedgm::testing::random_tensor;

TEST(Matmul, IdentityAndSelector) {
  const Var id = Var::constant(Tensor::Identity(2, 2));
  const Var m = Var::constant(make_tensor(2, 2, {1, 2, 3, 4}));
  EXPECT_EQ(matmul(id, m).value(), m.value());

  const Var sel = Var::constant(make_tensor(2, 2, {1, 0, 0, 0}));
  const Var col = Var::constant(make_tensor(2, 1, {5, 7}));
  EXPECT_EQ(matmul(sel, col).value(), make_tensor(2, 1, {5, 0}));
}

TEST(Matmul, HandMultiplied) {
  const Var a = Var::constant(make_tensor(2, 2, {1, 2, 3, 4}));
  const Var b = Var::constant(make_tensor(2, 2, {5, 6, 7, 8}));
  EXPECT_EQ(matmul(a, b).value(), make_tensor(2, 2, {19, 22, 43, 50}));
}

TEST(Matmul, ShapeMismatchReportsBothShapes) {
  const Var a = Var::constant(Tensor::Zero(2, 3));
  const Var b = Var::constant(Tensor::Zero(2, 3));
  try {
    matmul(a, b);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("[2x3]"), std::string::npos);
    EXPECT_NE(what.find("x [2x3]"), std::string::npos);
  }
}

TEST(Relu, ForwardAndIndicatorGradient) {
  EXPECT_EQ(relu(Var::constant(make_tensor(1, 3, {-1, 0, 2}))).value(), make_tensor(1, 3, {0, 0, 2}));
  EXPECT_EQ(relu(Var::constant(make_tensor(1, 3, {-1, -2, -3}))).value(), Tensor::Zero(1, 3));

  const Var x = Var::parameter(make_tensor(1, 2, {-1, 2}));
  EXPECT_EQ(grad(sum(relu(x)), {x})[0].value(), make_tensor(1, 2, {0, 1}));
  // Subgradient at exactly zero is zero.
  const Var z = Var::parameter(Tensor::Zero(1, 1));
  EXPECT_EQ(grad(sum(relu(z)), {z})[0].item(), 0.0);
}

TEST(Sigmoid, ValuesAndSymmetry) {
  EXPECT_EQ(sigmoid(Var::constant(Tensor::Zero(1, 1))).item(), 0.5);
  for (double x : {-3.0, 1.0, 10.0}) {
    const double s = sigmoid(Var::constant(Tensor::Constant(1, 1, x))).item();
    const double t = sigmoid(Var::constant(Tensor::Constant(1, 1, -x))).item();
    EXPECT_NEAR(s, 1.0 - t, 1e-15);
  }
  EXPECT_NEAR(sigmoid(Var::constant(Tensor::Constant(1, 1, 50.0))).item(), 1.0, 1e-15);
  // Stable branch: no overflow at large negative arguments either.
  EXPECT_GT(sigmoid(Var::constant(Tensor::Constant(1, 1, -800.0))).item(), -1.0);
}

TEST(MaskedCrossEntropy, Examples) {
  const std::vector<int> labels{0, 1, 1};
  const Mask all{true, true, true};
  EXPECT_NEAR(masked_cross_entropy(Var::constant(Tensor::Zero(3, 2)), labels, all).item(), std::log(2.0), 1e-15);

  Tensor sure = Tensor::Zero(3, 2);
  for (int i = 0; i < 3; ++i) sure(i, labels[static_cast<std::size_t>(i)]) = 50.0;
  EXPECT_LT(masked_cross_entropy(Var::constant(sure), labels, all).item(), 1e-15);

  const std::vector<int> zero{0};
  EXPECT_NEAR(masked_cross_entropy(Var::constant(make_tensor(1, 2, {1, 2})), zero, Mask{true}).item(), 1.3132616875,
              1e-10);
}

TEST(MaskedCrossEntropy, Errors) {
  const std::vector<int> labels{0, 1};
  EXPECT_THROW(masked_cross_entropy(Var::constant(Tensor::Zero(2, 2)), labels, Mask{false, false}), Error);
  const std::vector<int> bad{0, 2};
  EXPECT_THROW(masked_cross_entropy(Var::constant(Tensor::Zero(2, 2)), bad, Mask{true, true}), Error);
  // Out-of-range labels on unmasked rows are not inspected.
  EXPECT_NO_THROW(masked_cross_entropy(Var::constant(Tensor::Zero(2, 2)), bad, Mask{true, false}));
}

TEST(Grad, FirstAndSecondOrderPolynomials) {
  const Var x = Var::parameter(Tensor::Constant(1, 1, 3.0));
  EXPECT_EQ(grad(x * x, {x})[0].item(), 6.0);

  const Var y = Var::parameter(Tensor::Constant(1, 1, 2.0));
  const Var dy = grad(y * y * y, {y}, true)[0];
  EXPECT_NEAR(dy.item(), 12.0, 1e-12);
  EXPECT_NEAR(grad(dy, {y})[0].item(), 12.0, 1e-10);
}

TEST(Grad, SecondOrderMatchesSymbolic) {
  // f(x) = sum(x^4 + 3 x^2 y), d2f/dx2 = 12 x^2 + 6 y, d2f/dxdy = 6x.
  const Tensor xv = make_tensor(1, 3, {0.5, -1.25, 2.0});
  const Tensor yv = make_tensor(1, 3, {1.0, 0.3, -0.7});
  const Var x = Var::parameter(xv);
  const Var y = Var::parameter(yv);
  const Var f = sum(power(x, 4.0) + scale(x * x * y, 3.0));
  const auto g = grad(f, {x}, true);
  const auto h = grad(sum(g[0]), {x, y});
  for (Index i = 0; i < 3; ++i) {
    EXPECT_NEAR(h[0].value()(0, i), 12 * xv(0, i) * xv(0, i) + 6 * yv(0, i), 1e-10);
    EXPECT_NEAR(h[1].value()(0, i), 6 * xv(0, i), 1e-10);
  }
}

TEST(Grad, NonScalarOutputAndUnusedInputs) {
  const Var x = Var::parameter(Tensor::Ones(2, 2));
  EXPECT_THROW(grad(x * x, {x}), DimensionError);
  const Var unused = Var::parameter(Tensor::Ones(3, 1));
  const auto g = grad(sum(x), {x, unused});
  EXPECT_EQ(g[1].value(), Tensor::Zero(3, 1));
}

TEST(Grad, CrossEntropyMatchesFiniteDifferences) {
  const std::vector<int> labels{2, 0, 1, 2};
  const Mask mask{true, false, true, true};
  const double err = finite_difference_check(
      [&](const Var& z) { return masked_cross_entropy(z, labels, mask); }, random_tensor(4, 3, 7), 1e-5);
  EXPECT_LT(err, 1e-6);
}

TEST(Grad, NonFiniteValuesAreErrors) {
  EXPECT_THROW(power(Var::constant(Tensor::Constant(1, 1, -1.0)), 0.5), NumericError);
  EXPECT_THROW(power(Var::constant(Tensor::Zero(1, 1)), -1.0), NumericError);
}

TEST(FiniteDifference, QuadraticAndDeadRelu) {
  const auto squares = [](const Var& x) { return sum(x * x); };
  EXPECT_LT(finite_difference_check(squares, random_tensor(3, 4, 11), 1e-5), 1e-9);
  // All coordinates well inside the dead region: locally linear (zero).
  const auto dead = [](const Var& x) { return sum(relu(x)) + sum(scale(x, 2.0)); };
  EXPECT_LT(finite_difference_check(dead, Tensor::Constant(2, 2, -1.0), 1e-5), 1e-9);
}

// Every differentiable op against central differences on random inputs.
TEST(FiniteDifference, EveryOpRandomized) {
  const Tensor w = random_tensor(3, 4, 99);
  const Var wv = Var::constant(w);
  const Tensor sparse_dense = make_tensor(3, 3, {0.5, 0, 0.2, 0, 1, 0, 0.2, 0, 0.3});
  const SparseOperator sp(sparse_dense.sparseView());
  const std::vector<std::pair<const char*, std::function<Var(const Var&)>>> cases = {
      {"add/sub/mul", [&](const Var& x) { return sum((x + wv) * (x - wv) * x); }},
      {"matmul", [&](const Var& x) { return sum(power(matmul(x, transpose(wv)), 2.0)); }},
      {"matmul_nt", [&](const Var& x) { return sum(power(matmul_nt(x, wv), 2.0)); }},
      {"matmul_tn", [&](const Var& x) { return sum(power(matmul_tn(x, wv), 2.0)); }},
      {"sigmoid", [&](const Var& x) { return sum(sigmoid(x) * wv); }},
      {"relu", [&](const Var& x) { return sum(relu(x) * wv); }},
      {"power", [&](const Var& x) { return sum(power(shift(x * x, 1.0), -0.5)); }},
      {"reductions", [&](const Var& x) {
         return sum(broadcast_cols(sum_cols(x), 4) * broadcast_rows(sum_rows(x), 3) * wv) +
                sum(broadcast_to(sum(x), 3, 4) * x);
       }},
      {"rows", [&](const Var& x) {
         return sum(power(reshape(scatter_rows(gather_rows(x, {2, 0, 2}), {1, 1, 0}, 4), 2, 8), 2.0));
       }},
      {"softmax", [&](const Var& x) { return sum(softmax_rows(x) * wv); }},
      {"spmm", [&](const Var& x) { return sum(power(spmm(sp, x), 3.0)); }},
  };
  for (std::uint64_t draw = 0; draw < 5; ++draw) {
    const Tensor x = random_tensor(3, 4, 1000 + draw);
    for (const auto& [name, f] : cases) {
      EXPECT_LT(finite_difference_check(f, x, 1e-5), 1e-5) << name << " draw " << draw;
    }
  }
}

TEST(Properties, ForwardReplayIsBitwiseDeterministic) {
  const Tensor x = random_tensor(5, 4, 3);
  const Tensor w = random_tensor(4, 3, 4);
  auto run = [&] {
    const Var h = softmax_rows(matmul(relu(Var::constant(x)), Var::constant(w)));
    return sigmoid(h).value();
  };
  const Tensor a = run();
  const Tensor b = run();
  EXPECT_EQ(0, std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())));
}

TEST(Properties, LinearFunctionGradientIsInputIndependent) {
  const Tensor w = random_tensor(3, 3, 5);
  const auto f = [&](const Var& x) { return sum(matmul(x, Var::constant(w))) + sum(scale(x, -2.0)); };
  const Var x1 = Var::parameter(random_tensor(2, 3, 6));
  const Var x2 = Var::parameter(random_tensor(2, 3, 7));
  const Tensor g1 = grad(f(x1), {x1})[0].value();
  const Tensor g2 = grad(f(x2), {x2})[0].value();
  EXPECT_LT((g1 - g2).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Properties, NoGradGuardRecordsNothing) {
  const Var x = Var::parameter(Tensor::Ones(2, 2));
  NoGradGuard guard;
  EXPECT_FALSE((x * x).requires_grad());
}

}  // namespace
}  // namespace fedgm::ad
