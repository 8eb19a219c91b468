#include "hifinet/ign.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "hifinet/error.hpp"

namespace hifinet {

using nn::Tape;
using nn::Tensor;
using nn::Var;

void IgnConfig::validate() const {
  if (iterations < 1) throw ConfigError("ign: iteration count K must be >= 1");
  if (gat_layers < 1) throw ConfigError("ign: at least one GAT layer is required");
  if (input_dim == 0 || gat_hidden == 0) throw ConfigError("ign: dimensions must be positive");
  if (!(dropout >= 0 && dropout < 1)) throw ConfigError("ign: dropout must lie in [0, 1)");
  if (passthrough_head && input_dim < kNumClasses)
    throw ConfigError("ign: a pass-through head needs the edge logits in the node state");
}

IgnModel IgnModel::create(const IgnConfig& config, std::uint64_t seed) {
  config.validate();
  IgnModel m;
  m.config_ = config;
  Rng rng(seed);
  const std::size_t d0 = config.input_dim, dg = config.gat_hidden;

  m.gamma_ = nn::Dense::create(m.params_, "film.gamma", 1, d0, nn::Activation::Identity, rng);
  m.beta_ = nn::Dense::create(m.params_, "film.beta", 1, d0, nn::Activation::Identity, rng);
  m.params_.at("film.gamma.W").value.fill(0.0);
  m.params_.at("film.gamma.b").value.fill(1.0);
  m.params_.at("film.beta.W").value.fill(0.0);
  m.params_.at("film.beta.b").value.fill(0.0);

  for (std::size_t l = 1; l <= config.gat_layers; ++l) {
    const std::string p = "gat" + std::to_string(l);
    const std::size_t in = l == 1 ? d0 : dg;
    m.params_.add(p + ".W", nn::fan_in_uniform(in, dg, in, rng));
    m.params_.add(p + ".a_src", nn::fan_in_uniform(dg, 1, dg, rng));
    m.params_.add(p + ".a_dst", nn::fan_in_uniform(dg, 1, dg, rng));
    if (l < config.gat_layers) {
      const std::string q = "ln" + std::to_string(l);
      m.params_.add(q + ".gain", Tensor(1, dg, 1.0));
      m.params_.add(q + ".bias", Tensor(1, dg, 0.0));
    }
  }
  const std::size_t n_temps = config.shared_temp_classifier ? 1 : std::max<std::size_t>(config.iterations - 1, 1);
  for (std::size_t k = 0; k < n_temps; ++k) {
    const std::string name = config.shared_temp_classifier ? "temp" : "temp" + std::to_string(k);
    m.temps_.push_back(nn::Dense::create(m.params_, name, dg, kNumClasses, nn::Activation::Identity, rng));
  }
  m.head_ = nn::Dense::create(m.params_, "head", dg + d0, kNumClasses, nn::Activation::Identity, rng);
  if (config.passthrough_head) {
    Tensor& w = m.params_.at("head.W").value;
    w.fill(0.0);
    for (std::size_t c = 0; c < kNumClasses; ++c) w(dg + c, c) = 1.0;
    m.params_.at("head.b").value.fill(0.0);
  }
  return m;
}

const nn::Dense& IgnModel::temp_classifier(std::size_t k) const {
  return config_.shared_temp_classifier ? temps_.front() : temps_.at(k);
}

Var film_modulate(Tape& tape, IgnModel& model, Var h0, Var confidence) {
  if (confidence.cols() != 1 || confidence.rows() != h0.rows())
    throw ShapeError("film_modulate: confidence " + confidence.value().shape_str() + " for states " +
                     h0.value().shape_str());
  if (h0.cols() != model.config().input_dim)
    throw ShapeError("film_modulate: states have " + std::to_string(h0.cols()) + " columns, expected " +
                     std::to_string(model.config().input_dim));
  for (double c : confidence.value().data())
    if (!(c > 0 && c <= 1)) throw DomainError("film_modulate: confidence outside (0, 1]");
  Var gamma = model.gamma().forward(tape, model.params(), confidence);
  Var beta = model.beta().forward(tape, model.params(), confidence);
  return nn::add(nn::mul(gamma, h0), beta);
}

GatLayerOutput gat_layer(Tape& tape, nn::ParamStore& params, const std::string& prefix, Var h, const Tensor& mask,
                         double dropout) {
  const std::size_t n = h.rows();
  if (mask.rows() != n || mask.cols() != n)
    throw ShapeError(prefix + ": mask " + mask.shape_str() + " for " + std::to_string(n) + " nodes");
  for (std::size_t i = 0; i < n; ++i) {
    auto row = mask.row(i);
    if (std::all_of(row.begin(), row.end(), [](double v) { return v == 0; }))
      throw InputError(prefix + ": node " + std::to_string(i) + " has an empty neighborhood");
  }
  Var w = tape.param(params.at(prefix + ".W"));
  if (h.cols() != w.rows())
    throw ShapeError(prefix + ": input " + h.value().shape_str() + " does not match W " + w.value().shape_str());
  Var wh = nn::matmul(h, w);
  Var s_src = nn::matmul(wh, tape.param(params.at(prefix + ".a_src")));
  Var s_dst = nn::matmul(wh, tape.param(params.at(prefix + ".a_dst")));
  Var scores = nn::leaky_relu(nn::outer_sum(s_src, s_dst));
  Var alpha = nn::masked_softmax_rows(scores, mask);
  Var alpha_used = nn::dropout(alpha, dropout);
  return {nn::matmul(alpha_used, wh), alpha};
}

Var gat_block(Tape& tape, IgnModel& model, Var h, const Tensor& mask) {
  const auto& cfg = model.config();
  for (std::size_t l = 1; l <= cfg.gat_layers; ++l) {
    h = gat_layer(tape, model.params(), "gat" + std::to_string(l), h, mask, cfg.dropout).features;
    if (l < cfg.gat_layers) {
      const std::string q = "ln" + std::to_string(l);
      h = nn::leaky_relu(nn::layer_norm_rows(h, tape.param(model.params().at(q + ".gain")),
                                             tape.param(model.params().at(q + ".bias"))));
    }
  }
  return h;
}

TempClassification temp_classify(Tape& tape, IgnModel& model, Var hg, std::size_t iteration) {
  TempClassification out;
  out.logits = model.temp_classifier(iteration).forward(tape, model.params(), hg);
  out.probabilities = nn::softmax_rows(out.logits);
  out.confidence = nn::row_max(out.probabilities);
  return out;
}

IgnForward ign_forward(Tape& tape, IgnModel& model, Var h0, const Tensor& mask) {
  const auto& cfg = model.config();
  cfg.validate();
  if (h0.cols() != cfg.input_dim)
    throw ShapeError("ign_forward: states have " + std::to_string(h0.cols()) + " columns, expected " +
                     std::to_string(cfg.input_dim));
  IgnForward out;
  Var hg;
  for (std::size_t k = 0; k < cfg.iterations; ++k) {
    Var modulated = k == 0 ? h0 : film_modulate(tape, model, h0, out.confidences.back());
    hg = gat_block(tape, model, modulated, mask);
    if (k + 1 < cfg.iterations) {
      auto temp = temp_classify(tape, model, hg, k);
      out.confidences.push_back(temp.confidence);
      out.temp_logits.push_back(temp.logits);
    }
  }
  out.embedding = hg;
  const Var parts[] = {hg, h0};
  out.logits = model.head().forward(tape, model.params(), nn::concat_cols(parts));
  return out;
}

Tensor ign_predict(IgnModel& model, const Tensor& h0, const Tensor& mask) {
  Tape tape;
  return ign_forward(tape, model, tape.constant(h0), mask).logits.value();
}

std::pair<Tensor, Tensor> stack_graphs(std::span<const GraphSample* const> samples, const Tensor& mask) {
  const std::size_t n = mask.rows();
  const std::size_t d = samples.empty() ? 0 : samples.front()->h0.cols();
  Tensor h(samples.size() * n, d);
  Tensor m(samples.size() * n, samples.size() * n);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const Tensor& x = samples[s]->h0;
    if (x.rows() != n || x.cols() != d) throw ShapeError("stack_graphs: graph sample shape mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(x.row(i).begin(), x.row(i).end(), h.row(s * n + i).begin());
      for (std::size_t j = 0; j < n; ++j) m(s * n + i, s * n + j) = mask(i, j);
    }
  }
  return {std::move(h), std::move(m)};
}

namespace {

struct Eval {
  double loss = 0;
  double accuracy = 0;
};

Eval evaluate(IgnModel& model, std::span<const GraphSample> samples, std::span<const std::size_t> which,
              const Tensor& mask) {
  Eval e;
  if (which.empty()) return e;
  std::size_t correct = 0, total = 0;
  constexpr std::size_t kChunk = 32;
  for (std::size_t b = 0; b < which.size(); b += kChunk) {
    std::vector<const GraphSample*> part;
    std::vector<std::size_t> labels;
    for (std::size_t k = b; k < std::min(which.size(), b + kChunk); ++k) {
      part.push_back(&samples[which[k]]);
      labels.insert(labels.end(), samples[which[k]].labels.begin(), samples[which[k]].labels.end());
    }
    auto [h, m] = stack_graphs(part, mask);
    Tape tape;
    Var logits = ign_forward(tape, model, tape.constant(std::move(h)), m).logits;
    e.loss += nn::cross_entropy(logits, labels).value()[0] * static_cast<double>(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) correct += argmax(logits.value().row(i)) == labels[i];
    total += labels.size();
  }
  e.loss /= static_cast<double>(total);
  e.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  return e;
}

}  // namespace

IgnTrainResult train_ign(IgnModel& model, std::span<const GraphSample> samples, const Tensor& mask,
                         const IgnTrainOptions& options) {
  if (samples.empty()) throw InputError("train_ign: no graph samples");
  for (const auto& s : samples)
    if (s.labels.size() != mask.rows() || s.h0.rows() != mask.rows())
      throw ShapeError("train_ign: sample does not match the topology size");

  Rng rng(options.seed);
  std::vector<std::size_t> val, train;
  std::span<const GraphSample> val_pool = samples;
  if (!options.validation.empty()) {
    val_pool = options.validation;
    for (std::size_t i = 0; i < samples.size(); ++i) train.push_back(i);
    for (std::size_t i = 0; i < val_pool.size(); ++i) val.push_back(i);
  } else {
    const bool grouped = std::any_of(samples.begin(), samples.end(),
                                     [&](const GraphSample& g) { return g.group != samples.front().group; });
    auto key = [&](std::size_t i) { return grouped ? samples[i].group : i; };
    std::vector<std::size_t> keys;
    for (std::size_t i = 0; i < samples.size(); ++i) keys.push_back(key(i));
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    rng.shuffle(std::span(keys));
    // whole groups move to validation until the target share is reached
    const auto n_target =
        static_cast<std::size_t>(std::llround(options.val_fraction * static_cast<double>(samples.size())));
    std::set<std::size_t> val_keys;
    std::size_t n_val = 0;
    for (std::size_t k : keys) {
      if (n_val >= n_target || val_keys.size() + 1 >= keys.size()) break;
      val_keys.insert(k);
      n_val += grouped ? static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(),
                                                                 [&](const GraphSample& g) { return g.group == k; }))
                       : 1;
    }
    for (std::size_t i = 0; i < samples.size(); ++i) (val_keys.count(key(i)) ? val : train).push_back(i);
  }

  Rng dropout_rng(derive_seed(options.seed, 0xd209));
  const auto params = model.params().all();
  const nn::AdamConfig adam{options.lr};
  IgnTrainResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  auto best = model.params().snapshot();
  std::size_t since_best = 0;
  // the untrained model competes too
  if (!val.empty()) {
    const Eval v0 = evaluate(model, val_pool, val, mask);
    if (options.on_epoch) options.on_epoch({0, "val", v0.loss, v0.accuracy});
    result.best_val_loss = v0.loss;
    result.best_val_accuracy = v0.accuracy;
    result.best_epoch = 0;
  }

  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    rng.shuffle(std::span(train));
    double loss_sum = 0;
    std::size_t correct = 0, total = 0;
    for (std::size_t b = 0; b < train.size(); b += options.batch_size) {
      std::vector<const GraphSample*> part;
      std::vector<std::size_t> labels;
      for (std::size_t k = b; k < std::min(train.size(), b + options.batch_size); ++k) {
        part.push_back(&samples[train[k]]);
        labels.insert(labels.end(), samples[train[k]].labels.begin(), samples[train[k]].labels.end());
      }
      auto [h, m] = stack_graphs(part, mask);
      Tape tape;
      tape.training = true;
      tape.dropout_rng = &dropout_rng;
      IgnForward fwd = ign_forward(tape, model, tape.constant(std::move(h)), m);
      Var loss = nn::cross_entropy(fwd.logits, labels);
      const double final_loss = loss.value()[0];
      if (options.temp_loss_weight > 0)
        for (const Var& z : fwd.temp_logits)
          loss = nn::add(loss, nn::scale(nn::cross_entropy(z, labels),
                                         options.temp_loss_weight / static_cast<double>(fwd.temp_logits.size())));
      if (!std::isfinite(loss.value()[0])) throw DivergenceError("train_ign: non-finite loss");
      loss_sum += final_loss * static_cast<double>(labels.size());
      for (std::size_t i = 0; i < labels.size(); ++i) correct += argmax(fwd.logits.value().row(i)) == labels[i];
      total += labels.size();
      model.params().zero_grad();
      tape.backward(loss);
      nn::adam_step(params, adam);
    }
    result.epochs_run = epoch;
    const double train_loss = loss_sum / static_cast<double>(std::max<std::size_t>(total, 1));
    const double train_acc = static_cast<double>(correct) / static_cast<double>(std::max<std::size_t>(total, 1));
    if (options.on_epoch) options.on_epoch({epoch, "train", train_loss, train_acc});
    const Eval v = val.empty() ? Eval{train_loss, train_acc} : evaluate(model, val_pool, val, mask);
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
  return result;
}

std::vector<double> node_state(const EdgeOutput& edge) {
  std::vector<double> out(edge.logits);
  out.insert(out.end(), edge.embedding.begin(), edge.embedding.end());
  return out;
}

}  // namespace hifinet
