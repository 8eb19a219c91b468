#include <gtest/gtest.h>

#include <cmath>

#include "hifinet/edge_classifier.hpp"
#include "hifinet/error.hpp"
#include "hifinet/rng.hpp"

using namespace hifinet;

namespace {

constexpr std::size_t kLen = 12;

// One window per class shape, plus Gaussian noise.
std::vector<double> shaped(FaultClass c, Rng& rng) {
  std::vector<double> w(kLen);
  for (std::size_t k = 0; k < kLen; ++k) {
    double v = 0.3 * rng.normal();
    switch (c) {
      case FaultClass::Hardover: v += 2.5; break;
      case FaultClass::Drift: v += 0.35 * static_cast<double>(k); break;
      case FaultClass::Spike: v += k == 6 ? 3.0 : 0.0; break;
      case FaultClass::Erratic: v *= 3.0; break;
      case FaultClass::StuckAt: v = -1.5; break;
      default: break;
    }
    w[k] = v;
  }
  return w;
}

struct Data {
  std::vector<std::vector<double>> windows;
  std::vector<FaultClass> labels;
};

Data make_data(std::size_t per_class, std::uint64_t seed) {
  Rng rng(seed);
  Data d;
  for (std::size_t i = 0; i < per_class; ++i)
    for (FaultClass c : kAllClasses) {
      d.windows.push_back(shaped(c, rng));
      d.labels.push_back(c);
    }
  return d;
}

std::vector<double> centroid_features(const std::vector<double>& w) {
  std::vector<double> f(w);
  for (double v : w) f.push_back(v * v);
  return f;
}

double nearest_centroid_accuracy(const Data& train, const Data& test) {
  const std::size_t d = 2 * kLen;
  std::vector<std::vector<double>> mu(kNumClasses, std::vector<double>(d, 0.0));
  std::vector<double> n(kNumClasses, 0.0);
  for (std::size_t i = 0; i < train.windows.size(); ++i) {
    const auto f = centroid_features(train.windows[i]);
    const auto c = class_index(train.labels[i]);
    for (std::size_t j = 0; j < d; ++j) mu[c][j] += f[j];
    n[c] += 1;
  }
  for (std::size_t c = 0; c < kNumClasses; ++c)
    for (auto& v : mu[c]) v /= n[c];
  std::size_t ok = 0;
  for (std::size_t i = 0; i < test.windows.size(); ++i) {
    const auto f = centroid_features(test.windows[i]);
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      double s = 0;
      for (std::size_t j = 0; j < d; ++j) s += (f[j] - mu[c][j]) * (f[j] - mu[c][j]);
      if (s < best_d) best_d = s, best = c;
    }
    ok += best == class_index(test.labels[i]);
  }
  return static_cast<double>(ok) / static_cast<double>(test.windows.size());
}

double accuracy_of(EdgeModel& m, const Data& d) {
  const auto outs = edge_forward(m, SequenceBatch::from_windows(d.windows));
  std::size_t ok = 0;
  for (std::size_t i = 0; i < outs.size(); ++i) ok += argmax(outs[i].logits) == class_index(d.labels[i]);
  return static_cast<double>(ok) / static_cast<double>(outs.size());
}

}  // namespace

TEST(EdgeModel, ShapesAndLayerContract) {
  EdgeModel m = EdgeModel::create(EdgeArchitecture{1, {6, 4}}, 1);
  EXPECT_EQ(m.n_layers(), 2u);
  EXPECT_EQ(m.layer_input_dim(1), 1u);
  EXPECT_EQ(m.layer_input_dim(2), 6u);
  EXPECT_EQ(m.embedding_dim(), 4u);
  const std::vector<double> w(10, 0.5);
  const auto out = edge_forward(m, w);
  EXPECT_EQ(out.logits.size(), 6u);
  EXPECT_EQ(out.embedding.size(), 4u);
  const auto again = edge_forward(m, w);
  EXPECT_EQ(out.logits, again.logits);

  Rng rng(2);
  const auto raw = SequenceBatch::from_windows(make_data(2, 3).windows);
  TrainOptions o;
  o.epochs = 1;
  EXPECT_THROW(pretrain_layer(m, 2, raw, o), ShapeError);
  const auto h1 = encode_frozen(m, raw, 1);
  EXPECT_EQ(h1.dim(), 6u);
  EXPECT_NO_THROW(pretrain_layer(m, 2, h1, o));
  EXPECT_THROW(pretrain_layer(m, 3, h1, o), ConfigError);
}

TEST(Pretrain, ZeroInputsReachZeroLoss) {
  EdgeModel m = EdgeModel::create(EdgeArchitecture{1, {4}}, 5);
  const std::vector<std::vector<double>> zeros(32, std::vector<double>(kLen, 0.0));
  m.params().at("dec1.out.b").value.fill(0.2);  // start away from the fixed point
  TrainOptions o;
  o.epochs = 5;
  o.lr = 3e-2;
  o.batch_size = 8;
  const auto losses = pretrain_layer(m, 1, SequenceBatch::from_windows(zeros), o);
  ASSERT_EQ(losses.size(), 6u);
  EXPECT_LT(losses.back(), 1e-3);
  EXPECT_GT(losses.front(), 0.02);
}

TEST(Pretrain, LowerLayersUntouched) {
  EdgeModel m = EdgeModel::create(EdgeArchitecture{1, {5, 3}}, 6);
  const auto raw = SequenceBatch::from_windows(make_data(10, 7).windows);
  const auto before = m.params().checksum("enc1");
  TrainOptions o;
  o.epochs = 2;
  pretrain_layer(m, 2, encode_frozen(m, raw, 1), o);
  EXPECT_EQ(m.params().checksum("enc1"), before);
  EXPECT_EQ(build_stacked_encoder(m).size(), 2u);
}

TEST(Pretrain, HeldOutLossDrops) {
  EdgeModel m = EdgeModel::create(EdgeArchitecture{1, {8}}, 8);
  Data train = make_data(40, 9), held = make_data(10, 10);
  // clean windows only
  auto clean = [](const Data& d) {
    std::vector<std::vector<double>> w;
    for (std::size_t i = 0; i < d.windows.size(); ++i)
      if (d.labels[i] == FaultClass::Normal || d.labels[i] == FaultClass::Drift) w.push_back(d.windows[i]);
    return SequenceBatch::from_windows(w);
  };
  const auto held_batch = clean(held);
  const double start = reconstruction_loss(m, 1, held_batch);
  TrainOptions o;
  o.epochs = 30;
  o.lr = 1e-2;
  o.batch_size = 16;
  pretrain_layer(m, 1, clean(train), o);
  EXPECT_LE(reconstruction_loss(m, 1, held_batch), 0.7 * start);
}

TEST(FineTune, SeparableFaults) {
  const Data train = make_data(60, 11), test = make_data(30, 12);
  ASSERT_GT(nearest_centroid_accuracy(train, test), 0.7);

  EdgeModel m = EdgeModel::create(EdgeArchitecture{1, {12}}, 13);
  const auto batch = SequenceBatch::from_windows(train.windows);
  TrainOptions po;
  po.epochs = 3;
  po.lr = 1e-2;
  po.batch_size = 32;
  pretrain_layer(m, 1, batch, po);
  FineTuneOptions fo;
  fo.epochs = 40;
  fo.lr = 1e-2;
  fo.batch_size = 32;
  fo.seed = 14;
  const auto r = fine_tune(m, batch, train.labels, fo);
  EXPECT_GT(r.train_accuracy, 0.85);
  EXPECT_GT(accuracy_of(m, test), 0.85);
}

TEST(FineTune, FrozenHeadShuffledLabelsAtChance) {
  Data train = make_data(60, 15);
  Rng rng(16);
  for (auto& l : train.labels) l = class_from_index(rng.below(6));
  Data test = make_data(100, 17);
  for (auto& l : test.labels) l = class_from_index(rng.below(6));
  EdgeModel m = EdgeModel::create(EdgeArchitecture{1, {8}}, 18);
  FineTuneOptions fo;
  fo.epochs = 5;
  fo.freeze_head = true;
  fo.seed = 19;
  const auto head = m.params().checksum("head");
  fine_tune(m, SequenceBatch::from_windows(train.windows), train.labels, fo);
  EXPECT_EQ(m.params().checksum("head"), head);
  EXPECT_NEAR(accuracy_of(m, test), 1.0 / 6, 0.05);
}

TEST(FineTune, SingleClassRejected) {
  const Data d = make_data(5, 20);
  const std::vector<FaultClass> one(d.windows.size(), FaultClass::Spike);
  EdgeModel m = EdgeModel::create(EdgeArchitecture{1, {4}}, 21);
  EXPECT_THROW(fine_tune(m, SequenceBatch::from_windows(d.windows), one, FineTuneOptions{}), DegenerateLabelsError);
}

TEST(FineTune, DeterministicAndStratified) {
  const Data d = make_data(20, 22);
  Rng r1(5), r2(5);
  const auto [tr, va] = stratified_split(d.labels, 0.25, r1);
  const auto [tr2, va2] = stratified_split(d.labels, 0.25, r2);
  EXPECT_EQ(va, va2);
  EXPECT_EQ(tr.size() + va.size(), d.labels.size());
  std::vector<int> per(6, 0);
  for (auto i : va) ++per[class_index(d.labels[i])];
  for (int n : per) EXPECT_EQ(n, 5);

  auto run = [&] {
    EdgeModel m = EdgeModel::create(EdgeArchitecture{1, {4}}, 23);
    FineTuneOptions fo;
    fo.epochs = 3;
    fo.seed = 24;
    fine_tune(m, SequenceBatch::from_windows(d.windows), d.labels, fo);
    return m.params().checksum();
  };
  EXPECT_EQ(run(), run());
}
