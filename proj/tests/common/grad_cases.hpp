#pragma once

// Gradient-check scenarios shared by the unit tests and the acceptance suite.

#include <vector>

#include "gradcheck.hpp"
#include "hifinet/ign.hpp"
#include "hifinet/nn/layers.hpp"

namespace hifinet::testing {

// Random linear read-out of a matrix so every output entry carries gradient.
inline nn::Var probe(nn::Tape& tape, nn::Var y, std::uint64_t seed) {
  Rng rng(seed);
  return nn::sum(nn::mul(y, tape.constant(random_tensor(y.rows(), y.cols(), rng))));
}

inline GradCheckResult grad_case_dense(std::uint64_t seed) {
  Rng rng(seed);
  nn::ParamStore store;
  const nn::Activation acts[] = {nn::Activation::Identity, nn::Activation::Tanh, nn::Activation::Sigmoid,
                                 nn::Activation::LeakyRelu, nn::Activation::Relu};
  auto layer = nn::Dense::create(store, "d", 4, 3, acts[seed % 5], rng);
  const auto x = random_tensor(5, 4, rng);
  return grad_check(store, [&](nn::Tape& t) { return probe(t, layer.forward(t, store, t.constant(x)), seed + 1); });
}

inline GradCheckResult grad_case_lstm(std::uint64_t seed) {
  Rng rng(seed);
  nn::ParamStore store;
  auto layer = nn::LstmLayer::create(store, "lstm", 3, 4, rng);
  for (auto* p : store.all()) p->value = random_tensor(p->value.rows(), p->value.cols(), rng, 0.8);
  std::vector<nn::Tensor> xs;
  for (int t = 0; t < 5; ++t) xs.push_back(random_tensor(2, 3, rng));
  return grad_check(store, [&](nn::Tape& t) {
    std::vector<nn::Var> seq;
    for (const auto& x : xs) seq.push_back(t.constant(x));
    auto hs = layer.forward(t, store, seq);
    nn::Var loss = probe(t, hs[0], seed + 10);
    for (std::size_t k = 1; k < hs.size(); ++k) loss = nn::add(loss, probe(t, hs[k], seed + 10 + k));
    return loss;
  });
}

inline GradCheckResult grad_case_softmax_ce(std::uint64_t seed) {
  Rng rng(seed);
  nn::ParamStore store;
  auto& z = store.add("logits", random_tensor(4, 6, rng, 3.0));
  std::vector<std::size_t> labels;
  for (int i = 0; i < 4; ++i) labels.push_back(rng.below(6));
  return grad_check(store, [&](nn::Tape& t) {
    nn::Var logits = t.param(z);
    // Cross-entropy plus a read-out of the softmax itself.
    return nn::add(nn::cross_entropy(logits, labels), probe(t, nn::softmax_rows(logits), seed + 3));
  });
}

inline IgnConfig small_ign_config() {
  IgnConfig c;
  c.input_dim = 5;
  c.gat_hidden = 4;
  c.gat_layers = 2;
  c.iterations = 3;
  c.dropout = 0.0;
  c.passthrough_head = false;
  return c;
}

inline void randomize(nn::ParamStore& store, Rng& rng, double scale = 0.8) {
  for (auto* p : store.all()) p->value = random_tensor(p->value.rows(), p->value.cols(), rng, scale);
}

inline nn::Tensor path_mask3() {
  return nn::Tensor::from_rows({{1, 1, 0}, {1, 1, 1}, {0, 1, 1}});
}

inline GradCheckResult grad_case_film(std::uint64_t seed) {
  Rng rng(seed);
  IgnModel model = IgnModel::create(small_ign_config(), seed);
  randomize(model.params(), rng);
  const auto h0 = random_tensor(3, 5, rng);
  nn::Tensor c(3, 1);
  for (auto& v : c.data()) v = rng.uniform(0.2, 1.0);
  return grad_check(model.params(), [&](nn::Tape& t) {
    return probe(t, film_modulate(t, model, t.constant(h0), t.constant(c)), seed + 5);
  });
}

inline GradCheckResult grad_case_gat(std::uint64_t seed) {
  Rng rng(seed);
  nn::ParamStore store;
  store.add("gat1.W", random_tensor(5, 4, rng));
  store.add("gat1.a_src", random_tensor(4, 1, rng));
  store.add("gat1.a_dst", random_tensor(4, 1, rng));
  const auto h = random_tensor(3, 5, rng);
  const auto mask = path_mask3();
  return grad_check(store, [&](nn::Tape& t) {
    return probe(t, gat_layer(t, store, "gat1", t.constant(h), mask, 0.0).features, seed + 7);
  });
}

inline GradCheckResult grad_case_ign(std::uint64_t seed) {
  Rng rng(seed);
  IgnModel model = IgnModel::create(small_ign_config(), seed);
  randomize(model.params(), rng);
  const auto h0 = random_tensor(3, 5, rng);
  const auto mask = path_mask3();
  std::vector<std::size_t> labels;
  for (int i = 0; i < 3; ++i) labels.push_back(rng.below(6));
  return grad_check(model.params(), [&](nn::Tape& t) {
    return nn::cross_entropy(ign_forward(t, model, t.constant(h0), mask).logits, labels);
  });
}

}  // namespace hifinet::testing
