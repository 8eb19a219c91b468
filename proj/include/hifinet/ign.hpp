#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hifinet/edge_classifier.hpp"
#include "hifinet/nn/autodiff.hpp"
#include "hifinet/nn/params.hpp"

namespace hifinet {

struct IgnConfig {
  std::size_t input_dim = kNumClasses + 16;  // edge logits followed by the embedding
  std::size_t gat_hidden = 16;
  std::size_t gat_layers = 2;
  std::size_t iterations = 3;  // K, the number of GAT passes
  double dropout = 0.1;        // on attention weights, training only
  bool shared_temp_classifier = true;
  bool self_loops = true;
  // Start the head as a copy of the edge logits in H0, so an untrained model
  // reproduces the edge predictions. Needs input_dim >= 6.
  bool passthrough_head = true;

  void validate() const;  // throws ConfigError
};

/// Parameters of the iterative graph network.
///
///   film.gamma.{W,b}  1 x d0, d0       (init W = 0, b = 1)
///   film.beta.{W,b}   1 x d0, d0       (init W = 0, b = 0)
///   gat<l>.W          d_in x d_G
///   gat<l>.a_src      d_G x 1
///   gat<l>.a_dst      d_G x 1
///   ln<l>.{gain,bias} 1 x d_G          between stacked GAT layers
///   temp[<k>].{W,b}   d_G x 6
///   head.{W,b}        (d_G + d0) x 6
class IgnModel {
 public:
  static IgnModel create(const IgnConfig& config, std::uint64_t seed);

  const IgnConfig& config() const { return config_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  const nn::Dense& gamma() const { return gamma_; }
  const nn::Dense& beta() const { return beta_; }
  const nn::Dense& temp_classifier(std::size_t k) const;
  const nn::Dense& head() const { return head_; }

 private:
  IgnConfig config_;
  nn::ParamStore params_;
  nn::Dense gamma_;
  nn::Dense beta_;
  std::vector<nn::Dense> temps_;
  nn::Dense head_;
};

/// H' = g_gamma(c) * H0 + g_beta(c), row-wise. c is N x 1 with entries in (0, 1].
nn::Var film_modulate(nn::Tape& tape, IgnModel& model, nn::Var h0, nn::Var confidence);

struct GatLayerOutput {
  nn::Var features;   // N x d_out, before normalization
  nn::Var attention;  // N x N, zero outside the mask
};

/// One graph-attention layer: scores leaky_relu(a_src . Wh_i + a_dst . Wh_j)
/// normalized over each masked neighborhood, then h_i' = sum_j alpha_ij Wh_j.
GatLayerOutput gat_layer(nn::Tape& tape, nn::ParamStore& params, const std::string& prefix, nn::Var h,
                         const nn::Tensor& mask, double dropout);

/// Stacked GAT layers with layer normalization and leaky ReLU between them.
nn::Var gat_block(nn::Tape& tape, IgnModel& model, nn::Var h, const nn::Tensor& mask);

struct TempClassification {
  nn::Var logits;         // z
  nn::Var probabilities;  // P = softmax(z)
  nn::Var confidence;     // c_i = max_j P_ij
};

TempClassification temp_classify(nn::Tape& tape, IgnModel& model, nn::Var hg, std::size_t iteration);

struct IgnForward {
  nn::Var logits;                          // N x 6
  nn::Var embedding;                       // H_G of the last pass
  std::vector<nn::Var> confidences;        // one per temporary classification
  std::vector<nn::Var> temp_logits;
};

/// K GAT passes: pass 0 sees H0 unmodulated, pass k > 0 sees H0 modulated by
/// the confidence of pass k-1. Final logits = head([H_G^(K-1) | H0]).
IgnForward ign_forward(nn::Tape& tape, IgnModel& model, nn::Var h0, const nn::Tensor& mask);

/// Inference convenience: final logits as a tensor.
nn::Tensor ign_predict(IgnModel& model, const nn::Tensor& h0, const nn::Tensor& mask);

/// One graph observation: the N x d0 node states for one time window and the
/// per-node labels.
struct GraphSample {
  nn::Tensor h0;
  std::vector<std::size_t> labels;
  // Samples sharing a group go to the same side of the validation split.
  // When all groups are equal every sample is split on its own.
  std::size_t group = 0;
};

/// Stacks graphs into one block-diagonal problem.
std::pair<nn::Tensor, nn::Tensor> stack_graphs(std::span<const GraphSample* const> samples, const nn::Tensor& mask);

struct IgnTrainOptions : TrainOptions {
  std::size_t patience = 10;
  double val_fraction = 0.15;
  double temp_loss_weight = 0.0;  // optional auxiliary loss on temporary logits
  // When set, every training sample is fitted and these score the
  // checkpoints; val_fraction is then ignored.
  std::span<const GraphSample> validation;
};

struct IgnTrainResult {
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  double best_val_accuracy = 0.0;
  std::size_t epochs_run = 0;
};

/// Cross-entropy over every node's final logits; the best-validation-loss
/// parameters are kept.
IgnTrainResult train_ign(IgnModel& model, std::span<const GraphSample> samples, const nn::Tensor& mask,
                         const IgnTrainOptions& options);

/// H0 row: edge logits followed by the embedding.
std::vector<double> node_state(const EdgeOutput& edge);

}  // namespace hifinet
