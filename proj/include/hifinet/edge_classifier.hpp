#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hifinet/fault.hpp"
#include "hifinet/nn/layers.hpp"
#include "hifinet/nn/params.hpp"
#include "hifinet/rng.hpp"

namespace hifinet {

/// A batch of equal-length sequences; steps[t] holds one row per sequence.
struct SequenceBatch {
  std::vector<nn::Tensor> steps;

  std::size_t count() const { return steps.empty() ? 0 : steps.front().rows(); }
  std::size_t length() const { return steps.size(); }
  std::size_t dim() const { return steps.empty() ? 0 : steps.front().cols(); }
  SequenceBatch gather(std::span<const std::size_t> rows) const;

  /// One scalar channel per window; every window must have the same length.
  static SequenceBatch from_windows(std::span<const std::vector<double>> windows);
};

struct EdgeArchitecture {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden = {32, 16};
};

/// Stacked LSTM encoder E_1..E_L, the matching decoders D_1..D_L used only in
/// pretraining, and a dense head producing one logit per class.
///
/// Parameter names: "enc<l>.*", "dec<l>.lstm.*", "dec<l>.out.*", "head.*" with
/// l starting at 1.
class EdgeModel {
 public:
  static EdgeModel create(const EdgeArchitecture& arch, std::uint64_t seed);

  const EdgeArchitecture& architecture() const { return arch_; }
  std::size_t n_layers() const { return encoders_.size(); }
  std::size_t embedding_dim() const { return arch_.hidden.back(); }
  /// Input width expected by encoder layer l (1-based).
  std::size_t layer_input_dim(std::size_t l) const;

  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  const nn::LstmLayer& encoder(std::size_t l) const { return encoders_.at(l - 1); }
  const nn::LstmLayer& decoder_lstm(std::size_t l) const { return decoder_lstms_.at(l - 1); }
  const nn::Dense& decoder_out(std::size_t l) const { return decoder_outs_.at(l - 1); }
  const nn::Dense& head() const { return head_; }

  /// Encoder stack E_L(...E_1(x)...) on the tape; returns the top layer's
  /// hidden sequence.
  std::vector<nn::Var> encode(nn::Tape& tape, std::span<const nn::Var> seq, std::size_t n_layers);
  std::vector<nn::Var> encode(nn::Tape& tape, std::span<const nn::Var> seq) { return encode(tape, seq, n_layers()); }

 private:
  EdgeArchitecture arch_;
  nn::ParamStore params_;
  std::vector<nn::LstmLayer> encoders_;
  std::vector<nn::LstmLayer> decoder_lstms_;
  std::vector<nn::Dense> decoder_outs_;
  nn::Dense head_;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::string split;  // "pretrain<l>", "train", "val"
  double loss = 0.0;
  double accuracy = -1.0;  // negative when not applicable
};

using EpochCallback = std::function<void(const EpochRecord&)>;

struct TrainOptions {
  std::size_t epochs = 10;
  double lr = 1e-3;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  EpochCallback on_epoch;
};

/// Outputs of the first `n_layers` encoders (no gradient), i.e. H*_{n_layers}.
SequenceBatch encode_frozen(EdgeModel& model, const SequenceBatch& inputs, std::size_t n_layers);

/// Reconstruction loss of (E_l, D_l) on `inputs` without updating anything.
double reconstruction_loss(EdgeModel& model, std::size_t l, const SequenceBatch& inputs);

/// Trains (E_l, D_l) to reconstruct `inputs`, which must be H*_{l-1} (the raw
/// windows for l = 1). Lower layers are not touched. Returns the loss per epoch
/// with index 0 measured before the first update.
std::vector<double> pretrain_layer(EdgeModel& model, std::size_t l, const SequenceBatch& inputs,
                                   const TrainOptions& options);

/// The pretrained encoders in stacking order; the decoders take no part in
/// inference.
std::vector<nn::LstmLayer> build_stacked_encoder(const EdgeModel& model);

struct FineTuneOptions : TrainOptions {
  std::size_t patience = 10;
  double val_fraction = 0.15;
  bool freeze_head = false;
};

struct FineTuneResult {
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  double best_val_accuracy = 0.0;
  double train_accuracy = 0.0;  // of the retained checkpoint
  std::size_t epochs_run = 0;
};

/// Supervised training of encoder + head with cross-entropy. A stratified
/// validation split is carved out of the inputs; the best-validation-loss
/// parameters are kept.
FineTuneResult fine_tune(EdgeModel& model, const SequenceBatch& inputs, std::span<const FaultClass> labels,
                         const FineTuneOptions& options);

struct EdgeOutput {
  std::vector<double> logits;     // kNumClasses
  std::vector<double> embedding;  // final hidden state of the top encoder
};

EdgeOutput edge_forward(EdgeModel& model, std::span<const double> window);
std::vector<EdgeOutput> edge_forward(EdgeModel& model, const SequenceBatch& inputs,
                                     std::size_t batch_size = 256);

/// Stratified split of indices 0..n-1: returns (train, validation).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(std::span<const FaultClass> labels,
                                                                               double val_fraction, Rng& rng);

std::size_t argmax(std::span<const double> values);

}  // namespace hifinet
