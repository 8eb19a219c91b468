#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "grad_cases.hpp"
#include "hifinet/error.hpp"
#include "hifinet/nn/autodiff.hpp"
#include "hifinet/nn/layers.hpp"
#include "hifinet/nn/params.hpp"

using namespace hifinet;
using namespace hifinet::nn;
using hifinet::testing::grad_check;
using hifinet::testing::random_tensor;

namespace {

constexpr double kMaxRel = 1e-4;
constexpr int kSeeds = 20;

template <class F>
void expect_grads(F case_fn, const char* name) {
  for (int s = 1; s <= kSeeds; ++s) {
    auto r = case_fn(static_cast<std::uint64_t>(s));
    EXPECT_LT(r.max_rel_error, kMaxRel) << name << " seed " << s << " worst " << r.worst;
    EXPECT_GT(r.checked, 0u);
  }
}

}  // namespace

TEST(Gradients, Dense) { expect_grads(hifinet::testing::grad_case_dense, "dense"); }
TEST(Gradients, Lstm) { expect_grads(hifinet::testing::grad_case_lstm, "lstm"); }
TEST(Gradients, SoftmaxCrossEntropy) { expect_grads(hifinet::testing::grad_case_softmax_ce, "softmax+ce"); }
TEST(Gradients, Film) { expect_grads(hifinet::testing::grad_case_film, "film"); }
TEST(Gradients, GatLayer) { expect_grads(hifinet::testing::grad_case_gat, "gat"); }
TEST(Gradients, IgnForward) { expect_grads(hifinet::testing::grad_case_ign, "ign_forward"); }

TEST(Gradients, CrossEntropyTight) {
  for (int s = 1; s <= kSeeds; ++s) {
    Rng rng(s);
    ParamStore store;
    auto& z = store.add("z", random_tensor(3, 6, rng, 2.0));
    std::vector<std::size_t> labels = {rng.below(6), rng.below(6), rng.below(6)};
    auto r = grad_check(store, [&](Tape& t) { return cross_entropy(t.param(z), labels); });
    EXPECT_LT(r.max_rel_error, 1e-6) << "seed " << s;
  }
}

TEST(Gradients, MseTight) {
  for (int s = 1; s <= kSeeds; ++s) {
    Rng rng(s);
    ParamStore store;
    auto& a = store.add("a", random_tensor(3, 4, rng));
    const auto b = random_tensor(3, 4, rng);
    auto r = grad_check(store, [&](Tape& t) { return mse(t.param(a), t.constant(b)); });
    EXPECT_LT(r.max_rel_error, 1e-6) << "seed " << s;
  }
}

TEST(Gradients, RemainingPrimitives) {
  for (int s = 1; s <= kSeeds; ++s) {
    Rng rng(s);
    ParamStore store;
    auto& a = store.add("a", random_tensor(3, 4, rng));
    auto& b = store.add("b", random_tensor(3, 4, rng));
    auto& u = store.add("u", random_tensor(3, 1, rng));
    auto& v = store.add("v", random_tensor(3, 1, rng));
    auto& gain = store.add("gain", random_tensor(1, 4, rng));
    auto& bias = store.add("bias", random_tensor(1, 4, rng));
    const Tensor mask = Tensor::from_rows({{1, 0, 1}, {1, 1, 0}, {0, 0, 1}});
    auto r = grad_check(store, [&](Tape& t) {
      Var x = t.param(a), y = t.param(b);
      Var parts[] = {tanh(x), sigmoid(y), relu(sub(x, y))};
      Var cat = concat_cols(parts);
      Var s1 = hifinet::testing::probe(t, slice_cols(cat, 2, 6), 99);
      Var att = masked_softmax_rows(outer_sum(t.param(u), t.param(v)), mask);
      Var s2 = hifinet::testing::probe(t, matmul(att, x), 98);
      Var s3 = hifinet::testing::probe(t, layer_norm_rows(add(x, scale(y, 0.5)), t.param(gain), t.param(bias)), 97);
      Var s4 = sum(row_max(x));
      return add(add(s1, s2), add(s3, s4));
    });
    EXPECT_LT(r.max_rel_error, kMaxRel) << "seed " << s << " worst " << r.worst;
  }
}

TEST(Softmax, KnownValues) {
  auto p = softmax(std::vector<double>(6, 0.0));
  for (double x : p) EXPECT_NEAR(x, 1.0 / 6, 1e-15);
  auto q = softmax(std::vector<double>{std::log(2.0), 0.0});
  EXPECT_NEAR(q[0], 2.0 / 3, 1e-15);
  EXPECT_NEAR(q[1], 1.0 / 3, 1e-15);
  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> z(6);
    for (auto& x : z) x = rng.uniform(-50, 50);
    auto pz = softmax(z);
    double s = 0;
    for (double x : pz) {
      EXPECT_GT(x, 0.0);
      s += x;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(CrossEntropy, UniformAndMonotone) {
  Tape t;
  std::vector<std::size_t> lab = {2};
  EXPECT_NEAR(cross_entropy(t.constant(Tensor(1, 6)), lab).value()[0], std::log(6.0), 1e-12);
  double prev = 1e9;
  for (double m = 0; m <= 40; m += 2) {
    Tensor z(1, 6);
    z[2] = m;
    const double l = cross_entropy(t.constant(z), lab).value()[0];
    EXPECT_LT(l, prev);
    EXPECT_GE(l, 0.0);
    prev = l;
  }
  EXPECT_LT(prev, 1e-15);
}

TEST(Mse, Definition) {
  Tape t;
  EXPECT_EQ(mse(t.constant(Tensor(1, 2)), t.constant(Tensor(1, 2))).value()[0], 0.0);
  EXPECT_EQ(mse(t.constant(Tensor(1, 2)), t.constant(Tensor(1, 2, 1.0))).value()[0], 1.0);
}

TEST(Dense, IdentityAndRelu) {
  ParamStore store;
  Rng rng(1);
  auto d = Dense::create(store, "d", 2, 2, Activation::Identity, rng);
  store.at("d.W").value = Tensor::from_rows({{1, 0}, {0, 1}});
  store.at("d.b").value.fill(0);
  Tape t;
  auto y = d.forward(t, store, t.constant(Tensor::from_rows({{-1, 2}})));
  EXPECT_EQ(y.value(), Tensor::from_rows({{-1, 2}}));
  EXPECT_EQ(relu(y).value(), Tensor::from_rows({{0, 2}}));
  EXPECT_THROW(d.forward(t, store, t.constant(Tensor(1, 3))), ShapeError);
}

TEST(Lstm, ZeroWeightsGiveZeroStates) {
  ParamStore store;
  Rng rng(1);
  auto l = LstmLayer::create(store, "l", 2, 3, rng);
  for (auto* p : store.all()) p->value.fill(0);
  std::vector<Tensor> seq(4, Tensor::from_rows({{0.5, -1.0}}));
  for (const auto& h : lstm_infer(l, store, seq))
    for (double v : h.data()) EXPECT_EQ(v, 0.0);
}

TEST(Lstm, OneStepHandComputed) {
  // Scalar cell: gates i, f, g, o with hand-set weights.
  ParamStore store;
  Rng rng(1);
  auto l = LstmLayer::create(store, "l", 1, 1, rng);
  store.at("l.Wx").value = Tensor::from_rows({{0.5, -0.3, 0.8, 0.2}});
  store.at("l.Wh").value = Tensor::from_rows({{0.1, 0.1, 0.1, 0.1}});
  store.at("l.b").value = Tensor::from_rows({{0.1, 1.0, -0.2, 0.0}});
  const double x = 0.7;
  auto sig = [](double v) { return 1 / (1 + std::exp(-v)); };
  const double i = sig(0.5 * x + 0.1), g = std::tanh(0.8 * x - 0.2), o = sig(0.2 * x);
  const double c = i * g;  // zero previous cell state, forget gate irrelevant
  const double h = o * std::tanh(c);
  std::vector<Tensor> seq = {Tensor::from_rows({{x}})};
  EXPECT_NEAR(lstm_infer(l, store, seq)[0][0], h, 1e-15);
}

TEST(Lstm, ShapeErrorNamesTensor) {
  ParamStore store;
  Rng rng(1);
  auto l = LstmLayer::create(store, "enc1", 2, 3, rng);
  std::vector<Tensor> seq = {Tensor(1, 5)};
  try {
    lstm_infer(l, store, seq);
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("enc1"), std::string::npos);
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  ParamStore store;
  store.add("p", Tensor::from_rows({{1, 2}}));
  store.zero_grad();
  store.adam_step({});
  EXPECT_EQ(store.at("p").value, Tensor::from_rows({{1, 2}}));
}

TEST(Adam, DescendsQuadratic) {
  ParamStore store;
  auto& p = store.add("theta", Tensor::from_rows({{1.0}}));
  store.zero_grad();
  p.grad[0] = 2 * p.value[0];
  store.adam_step({0.1});
  EXPECT_LT(p.value[0], 1.0);
}

TEST(Adam, ConvergesOnTwoDimensionalQuadratic) {
  // f = (x - 3)^2 + 10 (y + 1)^2, optimum (3, -1)
  ParamStore store;
  auto& p = store.add("xy", Tensor::from_rows({{0.0, 0.0}}));
  for (int k = 0; k < 200; ++k) {
    store.zero_grad();
    p.grad[0] = 2 * (p.value[0] - 3);
    p.grad[1] = 20 * (p.value[1] + 1);
    store.adam_step({0.1});
  }
  EXPECT_LT(std::hypot(p.value[0] - 3, p.value[1] + 1), 1e-2);
}

TEST(Tape, RepeatedBackwardIsIdempotentAfterZeroing) {
  Rng rng(5);
  ParamStore store;
  auto& w = store.add("w", random_tensor(3, 2, rng));
  const auto x = random_tensor(4, 3, rng);
  Tape t;
  Var loss = sum(tanh(matmul(t.constant(x), t.param(w))));
  store.zero_grad();
  t.backward(loss);
  const Tensor first = w.grad;
  store.zero_grad();
  t.backward(loss);
  EXPECT_EQ(first, w.grad);
}

TEST(Dropout, InferenceIsIdentityAndTrainingIsSeeded) {
  Rng rng(2);
  const auto x = random_tensor(4, 4, rng);
  Tape t;
  Var a = t.constant(x);
  EXPECT_EQ(dropout(a, 0.5).value(), x);
  t.training = true;
  Rng r1(9), r2(9);
  t.dropout_rng = &r1;
  const Tensor d1 = dropout(a, 0.5).value();
  t.dropout_rng = &r2;
  const Tensor d2 = dropout(a, 0.5).value();
  EXPECT_EQ(d1, d2);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_TRUE(d1[i] == 0.0 || d1[i] == 2 * x[i]);
}

TEST(MaskedSoftmax, RowsSumToOneAndRespectMask) {
  Rng rng(4);
  Tape t;
  const Tensor mask = Tensor::from_rows({{1, 1, 0}, {0, 1, 0}, {1, 1, 1}});
  auto p = masked_softmax_rows(t.constant(random_tensor(3, 3, rng, 5)), mask).value();
  for (std::size_t r = 0; r < 3; ++r) {
    double s = 0;
    for (std::size_t c = 0; c < 3; ++c) {
      if (mask(r, c) == 0) EXPECT_EQ(p(r, c), 0.0);
      s += p(r, c);
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  EXPECT_THROW(masked_softmax_rows(t.constant(Tensor(1, 2)), Tensor(1, 2)), ShapeError);
}

TEST(Checkpoint, RoundTripAndChecksum) {
  Rng rng(8);
  ParamStore a;
  a.add("x.W", random_tensor(3, 2, rng));
  a.add("x.b", random_tensor(1, 2, rng));
  const auto path = std::filesystem::temp_directory_path() / "hifinet_ckpt_test.bin";
  a.save(path);
  ParamStore b;
  b.add("x.W", Tensor(3, 2));
  b.add("x.b", Tensor(1, 2));
  b.load(path);
  EXPECT_EQ(a.checksum(), b.checksum());
  EXPECT_EQ(a.at("x.W").value, b.at("x.W").value);
  ParamStore c;
  c.add("x.W", Tensor(2, 2));
  c.add("x.b", Tensor(1, 2));
  EXPECT_ANY_THROW(c.load(path));
  std::filesystem::remove(path);
}
