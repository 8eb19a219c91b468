#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "hifinet/nn/params.hpp"
#include "hifinet/nn/tensor.hpp"
#include "hifinet/rng.hpp"

namespace hifinet::nn {

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records a computation and replays it backwards. Nodes live until clear().
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Var constant(Tensor value);
  /// Leaf bound to a parameter; backward() adds its gradient into p.grad.
  Var param(Parameter& p);

  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be 1x1. Parameter
  /// gradients accumulate, so call ParamStore::zero_grad between steps.
  void backward(Var loss);

  void clear();
  std::size_t size() const { return nodes_.size(); }

  /// Enables dropout. Inference leaves this off.
  bool training = false;
  Rng* dropout_rng = nullptr;

  // Op-author interface.
  Var record(Tensor value, std::vector<std::size_t> parents, BackwardFn fn);
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  Tensor& grad(std::size_t id) { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

enum class Activation { Identity, Relu, LeakyRelu, Tanh, Sigmoid };

inline constexpr double kLeakySlope = 0.2;

// Differentiable ops. All operands must live on the same tape.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);                  // element-wise
Var add_bias(Var a, Var bias);          // a: n x m, bias: 1 x m
Var scale(Var a, double s);
Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var leaky_relu(Var a, double slope = kLeakySlope);
Var activate(Var a, Activation act);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
/// out(i, j) = a(i) + b(j) for column vectors a (n x 1), b (m x 1).
Var outer_sum(Var a, Var b);
/// Row-wise softmax restricted to entries where mask(i, j) != 0; zero elsewhere.
/// Every row of the mask needs at least one non-zero entry.
Var masked_softmax_rows(Var a, const Tensor& mask);
Var softmax_rows(Var a);
/// Row-wise maximum (n x 1). The gradient goes to the first arg-max.
Var row_max(Var a);
/// Row-wise layer normalization followed by gain/bias (each 1 x m).
Var layer_norm_rows(Var a, Var gain, Var bias, double eps = 1e-5);
/// Inverted dropout; identity when the tape is not training or rate == 0.
Var dropout(Var a, double rate);
/// Mean over rows of -log softmax(logits)[label].
Var cross_entropy(Var logits, std::span<const std::size_t> labels);
/// Mean squared difference over all entries.
Var mse(Var a, Var b);
Var sum(Var a);

}  // namespace hifinet::nn
