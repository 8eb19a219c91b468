#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hifinet/nn/autodiff.hpp"
#include "hifinet/nn/params.hpp"
#include "hifinet/rng.hpp"

namespace hifinet::nn {

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Tensor fan_in_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng);

/// y = act(x W + b). Parameters are "<prefix>.W" (in x out) and "<prefix>.b" (1 x out).
struct Dense {
  std::string prefix;
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::Identity;

  static Dense create(ParamStore& store, std::string prefix, std::size_t in, std::size_t out,
                      Activation activation, Rng& rng);
  Var forward(Tape& tape, ParamStore& store, Var x) const;
};

/// Single LSTM layer, zero initial state. Gate blocks in the fused weight
/// matrices are ordered input, forget, candidate, output.
/// Parameters: "<prefix>.Wx" (in x 4H), "<prefix>.Wh" (H x 4H), "<prefix>.b" (1 x 4H).
struct LstmLayer {
  std::string prefix;
  std::size_t in = 0;
  std::size_t hidden = 0;

  static LstmLayer create(ParamStore& store, std::string prefix, std::size_t in, std::size_t hidden,
                          Rng& rng);

  /// seq[t] is batch x in; returns the hidden state per step (batch x hidden).
  std::vector<Var> forward(Tape& tape, ParamStore& store, std::span<const Var> seq) const;
};

/// Forward pass without recording gradients; convenience for inference.
std::vector<Tensor> lstm_infer(const LstmLayer& layer, ParamStore& store, std::span<const Tensor> seq);

}  // namespace hifinet::nn
