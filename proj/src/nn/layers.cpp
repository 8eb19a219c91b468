#include "hifinet/nn/layers.hpp"

#include <cmath>

#include "hifinet/error.hpp"

namespace hifinet::nn {

Tensor fan_in_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  Tensor t(rows, cols);
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

Dense Dense::create(ParamStore& store, std::string prefix, std::size_t in, std::size_t out,
                    Activation activation, Rng& rng) {
  store.add(prefix + ".W", fan_in_uniform(in, out, in, rng));
  store.add(prefix + ".b", Tensor(1, out));
  return Dense{std::move(prefix), in, out, activation};
}

Var Dense::forward(Tape& tape, ParamStore& store, Var x) const {
  if (x.cols() != in)
    throw ShapeError(prefix + ": input " + x.value().shape_str() + " does not match in=" + std::to_string(in));
  Var w = tape.param(store.at(prefix + ".W"));
  Var b = tape.param(store.at(prefix + ".b"));
  return activate(add_bias(matmul(x, w), b), activation);
}

LstmLayer LstmLayer::create(ParamStore& store, std::string prefix, std::size_t in, std::size_t hidden,
                            Rng& rng) {
  store.add(prefix + ".Wx", fan_in_uniform(in, 4 * hidden, in, rng));
  store.add(prefix + ".Wh", fan_in_uniform(hidden, 4 * hidden, hidden, rng));
  Tensor b(1, 4 * hidden);
  for (std::size_t j = hidden; j < 2 * hidden; ++j) b[j] = 1.0;  // forget gate
  store.add(prefix + ".b", std::move(b));
  return LstmLayer{std::move(prefix), in, hidden};
}

std::vector<Var> LstmLayer::forward(Tape& tape, ParamStore& store, std::span<const Var> seq) const {
  const Parameter& wx_p = store.at(prefix + ".Wx");
  const Parameter& wh_p = store.at(prefix + ".Wh");
  const Parameter& b_p = store.at(prefix + ".b");
  if (wx_p.value.rows() != in || wx_p.value.cols() != 4 * hidden)
    throw ShapeError(prefix + ".Wx: expected " + std::to_string(in) + "x" + std::to_string(4 * hidden) +
                     ", got " + wx_p.value.shape_str());
  if (wh_p.value.rows() != hidden || wh_p.value.cols() != 4 * hidden)
    throw ShapeError(prefix + ".Wh: expected " + std::to_string(hidden) + "x" + std::to_string(4 * hidden) +
                     ", got " + wh_p.value.shape_str());
  if (b_p.value.rows() != 1 || b_p.value.cols() != 4 * hidden)
    throw ShapeError(prefix + ".b: expected 1x" + std::to_string(4 * hidden) + ", got " + b_p.value.shape_str());
  if (seq.empty()) return {};
  const std::size_t batch = seq.front().rows();
  for (const Var& x : seq)
    if (x.rows() != batch || x.cols() != in)
      throw ShapeError(prefix + ": sequence step " + x.value().shape_str() + " does not match batch x " +
                       std::to_string(in));

  Var wx = tape.param(store.at(prefix + ".Wx"));
  Var wh = tape.param(store.at(prefix + ".Wh"));
  Var b = tape.param(store.at(prefix + ".b"));
  const std::size_t H = hidden;
  std::vector<Var> out;
  out.reserve(seq.size());
  Var h, c;
  for (std::size_t t = 0; t < seq.size(); ++t) {
    Var z = matmul(seq[t], wx);
    if (t > 0) z = add(z, matmul(h, wh));
    z = add_bias(z, b);
    Var i = sigmoid(slice_cols(z, 0, H));
    Var g = tanh(slice_cols(z, 2 * H, H));
    Var o = sigmoid(slice_cols(z, 3 * H, H));
    if (t == 0) {
      c = mul(i, g);  // c_0 = 0
    } else {
      Var f = sigmoid(slice_cols(z, H, H));
      c = add(mul(f, c), mul(i, g));
    }
    h = mul(o, tanh(c));
    out.push_back(h);
  }
  return out;
}

std::vector<Tensor> lstm_infer(const LstmLayer& layer, ParamStore& store, std::span<const Tensor> seq) {
  Tape tape;
  std::vector<Var> in;
  for (const Tensor& x : seq) in.push_back(tape.constant(x));
  std::vector<Tensor> out;
  for (const Var& h : layer.forward(tape, store, in)) out.push_back(h.value());
  return out;
}

}  // namespace hifinet::nn
