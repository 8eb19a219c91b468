#include "hifinet/edge_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hifinet/error.hpp"

namespace hifinet {

using nn::Tape;
using nn::Tensor;
using nn::Var;

SequenceBatch SequenceBatch::gather(std::span<const std::size_t> rows) const {
  SequenceBatch out;
  out.steps.reserve(steps.size());
  for (const Tensor& s : steps) out.steps.push_back(nn::gather_rows(s, rows));
  return out;
}

SequenceBatch SequenceBatch::from_windows(std::span<const std::vector<double>> windows) {
  SequenceBatch out;
  if (windows.empty()) return out;
  const std::size_t w = windows.front().size();
  out.steps.assign(w, Tensor(windows.size(), 1));
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].size() != w) throw ShapeError("from_windows: windows differ in length");
    for (std::size_t t = 0; t < w; ++t) out.steps[t][i] = windows[i][t];
  }
  return out;
}

std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

EdgeModel EdgeModel::create(const EdgeArchitecture& arch, std::uint64_t seed) {
  if (arch.hidden.empty()) throw ConfigError("edge model needs at least one encoder layer");
  if (arch.input_dim == 0) throw ConfigError("edge model input dimension must be positive");
  EdgeModel m;
  m.arch_ = arch;
  Rng rng(seed);
  std::size_t in = arch.input_dim;
  for (std::size_t l = 1; l <= arch.hidden.size(); ++l) {
    const std::size_t h = arch.hidden[l - 1];
    if (h == 0) throw ConfigError("edge model hidden sizes must be positive");
    const std::string tag = std::to_string(l);
    m.encoders_.push_back(nn::LstmLayer::create(m.params_, "enc" + tag, in, h, rng));
    m.decoder_lstms_.push_back(nn::LstmLayer::create(m.params_, "dec" + tag + ".lstm", h, h, rng));
    m.decoder_outs_.push_back(
        nn::Dense::create(m.params_, "dec" + tag + ".out", h, in, nn::Activation::Identity, rng));
    in = h;
  }
  m.head_ = nn::Dense::create(m.params_, "head", in, kNumClasses, nn::Activation::Identity, rng);
  return m;
}

std::size_t EdgeModel::layer_input_dim(std::size_t l) const {
  if (l < 1 || l > n_layers()) throw ConfigError("encoder layer " + std::to_string(l) + " out of range");
  return l == 1 ? arch_.input_dim : arch_.hidden[l - 2];
}

std::vector<Var> EdgeModel::encode(Tape& tape, std::span<const Var> seq, std::size_t n) {
  std::vector<Var> h(seq.begin(), seq.end());
  for (std::size_t l = 1; l <= n; ++l) h = encoders_[l - 1].forward(tape, params_, h);
  return h;
}

namespace {

std::vector<Var> constants(Tape& tape, const SequenceBatch& batch) {
  std::vector<Var> out;
  out.reserve(batch.length());
  for (const Tensor& s : batch.steps) out.push_back(tape.constant(s));
  return out;
}

// Decoder D_l: the last encoder state, repeated over time, drives an LSTM whose
// per-step projection reconstructs the layer input.
Var reconstruction(EdgeModel& model, Tape& tape, std::size_t l, std::span<const Var> input) {
  const auto hidden = model.encoder(l).forward(tape, model.params(), input);
  const std::vector<Var> repeated(input.size(), hidden.back());
  const auto dec = model.decoder_lstm(l).forward(tape, model.params(), repeated);
  Var total;
  for (std::size_t t = 0; t < dec.size(); ++t) {
    Var step = nn::mse(model.decoder_out(l).forward(tape, model.params(), dec[t]), input[t]);
    total = t == 0 ? step : nn::add(total, step);
  }
  return nn::scale(total, 1.0 / static_cast<double>(input.size()));
}

std::vector<nn::Parameter*> layer_params(EdgeModel& model, std::size_t l) {
  const std::string tag = std::to_string(l);
  auto ps = model.params().with_prefix("enc" + tag + ".");
  auto dec = model.params().with_prefix("dec" + tag + ".");
  ps.insert(ps.end(), dec.begin(), dec.end());
  return ps;
}

void check_finite(double loss, const std::string& what) {
  if (!std::isfinite(loss)) throw DivergenceError(what + ": non-finite loss");
}

template <typename Fn>
void for_each_batch(std::span<const std::size_t> order, std::size_t batch_size, Fn fn) {
  for (std::size_t b = 0; b < order.size(); b += batch_size) {
    const std::size_t e = std::min(order.size(), b + batch_size);
    fn(order.subspan(b, e - b));
  }
}

}  // namespace

SequenceBatch encode_frozen(EdgeModel& model, const SequenceBatch& inputs, std::size_t n_layers) {
  if (n_layers == 0) return inputs;
  SequenceBatch out;
  out.steps.assign(inputs.length(), Tensor(inputs.count(), model.architecture().hidden[n_layers - 1]));
  constexpr std::size_t kChunk = 512;
  std::vector<std::size_t> all(inputs.count());
  std::iota(all.begin(), all.end(), 0);
  for_each_batch(all, kChunk, [&](std::span<const std::size_t> rows) {
    Tape tape;
    const SequenceBatch part = inputs.gather(rows);
    const auto h = model.encode(tape, constants(tape, part), n_layers);
    for (std::size_t t = 0; t < h.size(); ++t)
      for (std::size_t i = 0; i < rows.size(); ++i) {
        auto src = h[t].value().row(i);
        std::copy(src.begin(), src.end(), out.steps[t].row(rows[i]).begin());
      }
  });
  return out;
}

double reconstruction_loss(EdgeModel& model, std::size_t l, const SequenceBatch& inputs) {
  if (inputs.count() == 0) return 0.0;
  constexpr std::size_t kChunk = 512;
  std::vector<std::size_t> all(inputs.count());
  std::iota(all.begin(), all.end(), 0);
  double total = 0;
  for_each_batch(all, kChunk, [&](std::span<const std::size_t> rows) {
    Tape tape;
    const SequenceBatch part = inputs.gather(rows);
    total += reconstruction(model, tape, l, constants(tape, part)).value()[0] * static_cast<double>(rows.size());
  });
  return total / static_cast<double>(inputs.count());
}

std::vector<double> pretrain_layer(EdgeModel& model, std::size_t l, const SequenceBatch& inputs,
                                   const TrainOptions& options) {
  const std::size_t expected = model.layer_input_dim(l);
  if (inputs.dim() != expected)
    throw ShapeError("pretrain layer " + std::to_string(l) + ": inputs have dimension " +
                     std::to_string(inputs.dim()) + ", expected " + std::to_string(expected));
  if (inputs.count() == 0) throw InputError("pretrain: no input sequences");

  const auto params = layer_params(model, l);
  const nn::AdamConfig adam{options.lr};
  Rng rng(options.seed);
  std::vector<double> losses{reconstruction_loss(model, l, inputs)};
  std::vector<std::size_t> order(inputs.count());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    for_each_batch(order, options.batch_size, [&](std::span<const std::size_t> rows) {
      Tape tape;
      const SequenceBatch part = inputs.gather(rows);
      Var loss = reconstruction(model, tape, l, constants(tape, part));
      check_finite(loss.value()[0], "pretrain layer " + std::to_string(l));
      model.params().zero_grad();
      tape.backward(loss);
      nn::adam_step(params, adam);
    });
    losses.push_back(reconstruction_loss(model, l, inputs));
    check_finite(losses.back(), "pretrain layer " + std::to_string(l));
    if (options.on_epoch) options.on_epoch({epoch, "pretrain" + std::to_string(l), losses.back(), -1.0});
  }
  model.params().zero_grad();
  return losses;
}

std::vector<nn::LstmLayer> build_stacked_encoder(const EdgeModel& model) {
  std::vector<nn::LstmLayer> out;
  for (std::size_t l = 1; l <= model.n_layers(); ++l) out.push_back(model.encoder(l));
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(std::span<const FaultClass> labels,
                                                                               double val_fraction, Rng& rng) {
  std::vector<std::size_t> train, val;
  for (FaultClass c : kAllClasses) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) idx.push_back(i);
    rng.shuffle(std::span(idx));
    auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(idx.size())));
    if (val_fraction > 0 && n_val == 0 && idx.size() >= 2) n_val = 1;
    n_val = std::min(n_val, idx.size());
    val.insert(val.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
    train.insert(train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  return {std::move(train), std::move(val)};
}

namespace {

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

EvalResult evaluate(EdgeModel& model, const SequenceBatch& inputs, std::span<const std::size_t> labels,
                    std::span<const std::size_t> rows) {
  EvalResult r;
  if (rows.empty()) return r;
  std::size_t correct = 0;
  for_each_batch(rows, 512, [&](std::span<const std::size_t> part_rows) {
    Tape tape;
    const SequenceBatch part = inputs.gather(part_rows);
    const auto h = model.encode(tape, constants(tape, part));
    Var logits = model.head().forward(tape, model.params(), h.back());
    std::vector<std::size_t> y;
    for (std::size_t i : part_rows) y.push_back(labels[i]);
    r.loss += nn::cross_entropy(logits, y).value()[0] * static_cast<double>(part_rows.size());
    for (std::size_t i = 0; i < part_rows.size(); ++i) correct += argmax(logits.value().row(i)) == y[i];
  });
  r.loss /= static_cast<double>(rows.size());
  r.accuracy = static_cast<double>(correct) / static_cast<double>(rows.size());
  return r;
}

}  // namespace

FineTuneResult fine_tune(EdgeModel& model, const SequenceBatch& inputs, std::span<const FaultClass> labels,
                         const FineTuneOptions& options) {
  if (labels.size() != inputs.count()) throw ShapeError("fine_tune: label count differs from input count");
  if (inputs.dim() != model.architecture().input_dim)
    throw ShapeError("fine_tune: input dimension " + std::to_string(inputs.dim()) + ", expected " +
                     std::to_string(model.architecture().input_dim));
  {
    std::vector<FaultClass> distinct(labels.begin(), labels.end());
    std::sort(distinct.begin(), distinct.end());
    if (std::unique(distinct.begin(), distinct.end()) - distinct.begin() < 2)
      throw DegenerateLabelsError("fine_tune: training labels contain a single class");
  }

  Rng rng(options.seed);
  auto [train, val] = stratified_split(labels, options.val_fraction, rng);
  std::vector<std::size_t> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) y[i] = class_index(labels[i]);

  auto params = model.params().with_prefix("enc");
  if (!options.freeze_head) {
    auto head = model.params().with_prefix("head.");
    params.insert(params.end(), head.begin(), head.end());
  }
  const nn::AdamConfig adam{options.lr};

  FineTuneResult result;
  auto best = model.params().snapshot();
  result.best_val_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::vector<std::size_t> order = train;
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    double loss_sum = 0;
    std::size_t correct = 0;
    for_each_batch(order, options.batch_size, [&](std::span<const std::size_t> rows) {
      Tape tape;
      const SequenceBatch part = inputs.gather(rows);
      const auto h = model.encode(tape, constants(tape, part));
      Var logits = model.head().forward(tape, model.params(), h.back());
      std::vector<std::size_t> yb;
      for (std::size_t i : rows) yb.push_back(y[i]);
      Var loss = nn::cross_entropy(logits, yb);
      check_finite(loss.value()[0], "fine-tune");
      loss_sum += loss.value()[0] * static_cast<double>(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) correct += argmax(logits.value().row(i)) == yb[i];
      model.params().zero_grad();
      tape.backward(loss);
      nn::adam_step(params, adam);
    });
    result.epochs_run = epoch;
    const double train_loss = loss_sum / static_cast<double>(std::max<std::size_t>(order.size(), 1));
    const double train_acc = static_cast<double>(correct) / static_cast<double>(std::max<std::size_t>(order.size(), 1));
    if (options.on_epoch) options.on_epoch({epoch, "train", train_loss, train_acc});

    const EvalResult v = val.empty() ? EvalResult{train_loss, train_acc} : evaluate(model, inputs, y, val);
    if (options.on_epoch && !val.empty()) options.on_epoch({epoch, "val", v.loss, v.accuracy});
    if (v.loss < result.best_val_loss) {
      result.best_val_loss = v.loss;
      result.best_val_accuracy = v.accuracy;
      result.best_epoch = epoch;
      best = model.params().snapshot();
      since_best = 0;
    } else if (++since_best >= options.patience) {
      break;
    }
  }
  model.params().restore(best);
  model.params().zero_grad();
  result.train_accuracy = evaluate(model, inputs, y, train).accuracy;
  return result;
}

std::vector<EdgeOutput> edge_forward(EdgeModel& model, const SequenceBatch& inputs, std::size_t batch_size) {
  if (inputs.count() > 0 && inputs.dim() != model.architecture().input_dim)
    throw ShapeError("edge_forward: input dimension mismatch");
  std::vector<EdgeOutput> out(inputs.count());
  std::vector<std::size_t> all(inputs.count());
  std::iota(all.begin(), all.end(), 0);
  for_each_batch(all, std::max<std::size_t>(batch_size, 1), [&](std::span<const std::size_t> rows) {
    Tape tape;
    const SequenceBatch part = inputs.gather(rows);
    const auto h = model.encode(tape, constants(tape, part));
    Var logits = model.head().forward(tape, model.params(), h.back());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto z = logits.value().row(i);
      auto e = h.back().value().row(i);
      out[rows[i]] = EdgeOutput{{z.begin(), z.end()}, {e.begin(), e.end()}};
    }
  });
  return out;
}

EdgeOutput edge_forward(EdgeModel& model, std::span<const double> window) {
  const std::vector<std::vector<double>> one{{window.begin(), window.end()}};
  return edge_forward(model, SequenceBatch::from_windows(one)).front();
}

}  // namespace hifinet
