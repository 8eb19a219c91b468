#include "hifinet/nn/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "hifinet/error.hpp"

namespace hifinet::nn {

namespace {

Tape& same_tape(Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) throw ShapeError("operands live on different tapes");
  return *a.tape();
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw ShapeError(std::string(op) + ": " + a.shape_str() + " vs " + b.shape_str());
}

// Element-wise unary op given value and derivative-from-output/input.
template <typename F, typename DF>
Var unary(Var a, F f, DF df) {
  Tape& t = *a.tape();
  const Tensor& x = a.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const std::size_t ia = a.id();
  return t.record(std::move(y), {ia}, [ia, df](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(ia)) return;
    const Tensor& g = tp.grad(self);
    const Tensor& x = tp.value(ia);
    const Tensor& y = tp.value(self);
    Tensor& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * df(x[i], y[i]);
  });
}

}  // namespace

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::record(Tensor value, std::vector<std::size_t> parents, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  for (std::size_t p : parents) n.requires_grad = n.requires_grad || nodes_[p].requires_grad;
  n.parents = std::move(parents);
  if (n.requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
  Node n;
  n.value = p.value;
  n.param = &p;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw ShapeError("backward: loss is not on this tape");
  const std::size_t root = loss.id();
  if (nodes_[root].value.size() != 1) throw ShapeError("backward: loss must be 1x1");
  for (std::size_t i = 0; i <= root; ++i) {
    Node& n = nodes_[i];
    if (n.requires_grad) n.grad = Tensor(n.value.rows(), n.value.cols());
  }
  if (!nodes_[root].requires_grad) return;
  nodes_[root].grad[0] = 1.0;
  for (std::size_t i = root + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param) n.param->grad += n.grad;
  }
}

void Tape::clear() { nodes_.clear(); }

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.cols() != y.rows()) throw ShapeError("matmul: " + x.shape_str() + " * " + y.shape_str());
  Tensor out(x.rows(), y.cols());
  gemm_acc(x, y, out);
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    if (tp.requires_grad(ia)) gemm_nt_acc(g, tp.value(ib), tp.grad(ia));
    if (tp.requires_grad(ib)) gemm_tn_acc(tp.value(ia), g, tp.grad(ib));
  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape("add", a.value(), b.value());
  Tensor out = a.value();
  out += b.value();
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    if (tp.requires_grad(ia)) tp.grad(ia) += g;
    if (tp.requires_grad(ib)) tp.grad(ib) += g;
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape("sub", a.value(), b.value());
  Tensor out = a.value();
  const Tensor& y = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= y[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    if (tp.requires_grad(ia)) tp.grad(ia) += g;
    if (tp.requires_grad(ib)) {
      Tensor& gb = tp.grad(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape("mul", a.value(), b.value());
  Tensor out = a.value();
  const Tensor& y = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    if (tp.requires_grad(ia)) {
      Tensor& ga = tp.grad(ia);
      const Tensor& y = tp.value(ib);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
    }
    if (tp.requires_grad(ib)) {
      Tensor& gb = tp.grad(ib);
      const Tensor& x = tp.value(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x[i];
    }
  });
}

Var add_bias(Var a, Var bias) {
  Tape& t = same_tape(a, bias);
  const Tensor& x = a.value();
  const Tensor& b = bias.value();
  if (b.rows() != 1 || b.cols() != x.cols())
    throw ShapeError("add_bias: " + x.shape_str() + " + " + b.shape_str());
  Tensor out = x;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) += b[c];
  const std::size_t ia = a.id(), ib = bias.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    if (tp.requires_grad(ia)) tp.grad(ia) += g;
    if (tp.requires_grad(ib)) {
      Tensor& gb = tp.grad(ib);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gb[c] += g(r, c);
    }
  });
}

Var scale(Var a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var sigmoid(Var a) {
  return unary(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0 ? x : 0.0; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var leaky_relu(Var a, double slope) {
  return unary(
      a, [slope](double x) { return x > 0 ? x : slope * x; },
      [slope](double x, double) { return x > 0 ? 1.0 : slope; });
}

Var activate(Var a, Activation act) {
  switch (act) {
    case Activation::Identity: return a;
    case Activation::Relu: return relu(a);
    case Activation::LeakyRelu: return leaky_relu(a);
    case Activation::Tanh: return tanh(a);
    case Activation::Sigmoid: return sigmoid(a);
  }
  return a;
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  Tape& t = *parts.front().tape();
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  std::vector<std::size_t> ids, offsets;
  for (const Var& p : parts) {
    if (p.tape() != &t) throw ShapeError("operands live on different tapes");
    if (p.rows() != rows) throw ShapeError("concat_cols: row count mismatch");
    ids.push_back(p.id());
    offsets.push_back(cols);
    cols += p.cols();
  }
  Tensor out(rows, cols);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& x = parts[k].value();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy(x.row(r).begin(), x.row(r).end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(offsets[k]));
  }
  return t.record(std::move(out), ids, [ids, offsets](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!tp.requires_grad(ids[k])) continue;
      Tensor& gk = tp.grad(ids[k]);
      for (std::size_t r = 0; r < gk.rows(); ++r)
        for (std::size_t c = 0; c < gk.cols(); ++c) gk(r, c) += g(r, offsets[k] + c);
    }
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  Tape& t = *a.tape();
  const Tensor& x = a.value();
  if (begin + count > x.cols()) throw ShapeError("slice_cols: out of range for " + x.shape_str());
  Tensor out(x.rows(), count);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = x(r, begin + c);
  const std::size_t ia = a.id();
  return t.record(std::move(out), {ia}, [ia, begin](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(ia)) return;
    const Tensor& g = tp.grad(self);
    Tensor& ga = tp.grad(ia);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) ga(r, begin + c) += g(r, c);
  });
}

Var outer_sum(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.cols() != 1 || y.cols() != 1) throw ShapeError("outer_sum: operands must be column vectors");
  Tensor out(x.rows(), y.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < y.rows(); ++j) out(i, j) = x[i] + y[j];
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    const bool ra = tp.requires_grad(ia), rb = tp.requires_grad(ib);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) {
        if (ra) tp.grad(ia)[i] += g(i, j);
        if (rb) tp.grad(ib)[j] += g(i, j);
      }
  });
}

namespace {

Var softmax_impl(Var a, const Tensor* mask) {
  Tape& t = *a.tape();
  const Tensor& x = a.value();
  if (mask && !mask->same_shape(x)) throw ShapeError("masked_softmax_rows: mask " + mask->shape_str() + " vs " + x.shape_str());
  Tensor out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double mx = -INFINITY;
    for (std::size_t c = 0; c < x.cols(); ++c)
      if (!mask || (*mask)(r, c) != 0) mx = std::max(mx, x(r, c));
    if (mx == -INFINITY) throw ShapeError("masked_softmax_rows: row " + std::to_string(r) + " has an empty mask");
    double s = 0;
    for (std::size_t c = 0; c < x.cols(); ++c)
      if (!mask || (*mask)(r, c) != 0) s += (out(r, c) = std::exp(x(r, c) - mx));
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) /= s;
  }
  const std::size_t ia = a.id();
  return t.record(std::move(out), {ia}, [ia](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(ia)) return;
    const Tensor& g = tp.grad(self);
    const Tensor& p = tp.value(self);
    Tensor& ga = tp.grad(ia);
    for (std::size_t r = 0; r < p.rows(); ++r) {
      double dot = 0;
      for (std::size_t c = 0; c < p.cols(); ++c) dot += p(r, c) * g(r, c);
      for (std::size_t c = 0; c < p.cols(); ++c) ga(r, c) += p(r, c) * (g(r, c) - dot);
    }
  });
}

}  // namespace

Var masked_softmax_rows(Var a, const Tensor& mask) { return softmax_impl(a, &mask); }

Var softmax_rows(Var a) { return softmax_impl(a, nullptr); }

Var row_max(Var a) {
  Tape& t = *a.tape();
  const Tensor& x = a.value();
  if (x.cols() == 0) throw ShapeError("row_max: no columns");
  Tensor out(x.rows(), 1);
  std::vector<std::size_t> arg(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    arg[r] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    out[r] = row[arg[r]];
  }
  const std::size_t ia = a.id();
  return t.record(std::move(out), {ia}, [ia, arg](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(ia)) return;
    const Tensor& g = tp.grad(self);
    Tensor& ga = tp.grad(ia);
    for (std::size_t r = 0; r < g.rows(); ++r) ga(r, arg[r]) += g[r];
  });
}

Var layer_norm_rows(Var a, Var gain, Var bias, double eps) {
  Tape& t = same_tape(a, gain);
  same_tape(a, bias);
  const Tensor& x = a.value();
  const std::size_t n = x.rows(), m = x.cols();
  if (gain.value().rows() != 1 || gain.value().cols() != m || !bias.value().same_shape(gain.value()))
    throw ShapeError("layer_norm_rows: gain/bias must be 1x" + std::to_string(m));
  Tensor xhat(n, m);
  std::vector<double> inv_sd(n);
  for (std::size_t r = 0; r < n; ++r) {
    double mean = 0;
    for (double v : x.row(r)) mean += v;
    mean /= static_cast<double>(m);
    double var = 0;
    for (double v : x.row(r)) var += (v - mean) * (v - mean);
    var /= static_cast<double>(m);
    inv_sd[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < m; ++c) xhat(r, c) = (x(r, c) - mean) * inv_sd[r];
  }
  Tensor out(n, m);
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < m; ++c) out(r, c) = xhat(r, c) * gv[c] + bv[c];
  const std::size_t ia = a.id(), ig = gain.id(), ib = bias.id();
  return t.record(std::move(out), {ia, ig, ib},
                  [ia, ig, ib, xhat = std::move(xhat), inv_sd = std::move(inv_sd)](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad(self);
                    const Tensor& gv = tp.value(ig);
                    const std::size_t n = g.rows(), m = g.cols();
                    if (tp.requires_grad(ig) || tp.requires_grad(ib)) {
                      for (std::size_t r = 0; r < n; ++r)
                        for (std::size_t c = 0; c < m; ++c) {
                          if (tp.requires_grad(ig)) tp.grad(ig)[c] += g(r, c) * xhat(r, c);
                          if (tp.requires_grad(ib)) tp.grad(ib)[c] += g(r, c);
                        }
                    }
                    if (!tp.requires_grad(ia)) return;
                    Tensor& ga = tp.grad(ia);
                    for (std::size_t r = 0; r < n; ++r) {
                      double mean_d = 0, mean_dx = 0;
                      for (std::size_t c = 0; c < m; ++c) {
                        const double d = g(r, c) * gv[c];
                        mean_d += d;
                        mean_dx += d * xhat(r, c);
                      }
                      mean_d /= static_cast<double>(m);
                      mean_dx /= static_cast<double>(m);
                      for (std::size_t c = 0; c < m; ++c) {
                        const double d = g(r, c) * gv[c];
                        ga(r, c) += inv_sd[r] * (d - mean_d - xhat(r, c) * mean_dx);
                      }
                    }
                  });
}

Var dropout(Var a, double rate) {
  Tape& t = *a.tape();
  if (!t.training || rate <= 0) return a;
  if (rate >= 1) throw ConfigError("dropout rate must be < 1");
  if (!t.dropout_rng) throw ConfigError("dropout needs a seeded rng on the tape");
  const Tensor& x = a.value();
  Tensor keep(x.rows(), x.cols());
  const double s = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = t.dropout_rng->uniform() >= rate ? s : 0.0;
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= keep[i];
  const std::size_t ia = a.id();
  return t.record(std::move(out), {ia}, [ia, keep = std::move(keep)](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(ia)) return;
    const Tensor& g = tp.grad(self);
    Tensor& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * keep[i];
  });
}

Var cross_entropy(Var logits, std::span<const std::size_t> labels) {
  Tape& t = *logits.tape();
  const Tensor& z = logits.value();
  if (labels.size() != z.rows()) throw ShapeError("cross_entropy: label count differs from logit rows");
  Tensor probs(z.rows(), z.cols());
  double loss = 0;
  for (std::size_t r = 0; r < z.rows(); ++r) {
    if (labels[r] >= z.cols()) throw ShapeError("cross_entropy: label out of range");
    const auto p = softmax(z.row(r));
    std::copy(p.begin(), p.end(), probs.row(r).begin());
    // Shifted by the label logit: log(1 + sum_{j != y} exp(z_j - z_y)) stays
    // accurate for large margins, plain log-sum-exp otherwise.
    const double zy = z(r, labels[r]);
    const double mx = *std::max_element(z.row(r).begin(), z.row(r).end());
    if (mx == zy) {
      double s = 0;
      for (std::size_t c = 0; c < z.cols(); ++c)
        if (c != labels[r]) s += std::exp(z(r, c) - zy);
      loss += std::log1p(s);
    } else {
      double s = 0;
      for (double v : z.row(r)) s += std::exp(v - mx);
      loss += mx + std::log(s) - zy;
    }
  }
  const double inv_n = z.rows() ? 1.0 / static_cast<double>(z.rows()) : 0.0;
  Tensor out(1, 1, loss * inv_n);
  const std::size_t ia = logits.id();
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  return t.record(std::move(out), {ia},
                  [ia, inv_n, lab = std::move(lab), probs = std::move(probs)](Tape& tp, std::size_t self) {
                    if (!tp.requires_grad(ia)) return;
                    const double g = tp.grad(self)[0] * inv_n;
                    Tensor& ga = tp.grad(ia);
                    for (std::size_t r = 0; r < probs.rows(); ++r)
                      for (std::size_t c = 0; c < probs.cols(); ++c)
                        ga(r, c) += g * (probs(r, c) - (c == lab[r] ? 1.0 : 0.0));
                  });
}

Var mse(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape("mse", a.value(), b.value());
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  const double inv_n = x.size() ? 1.0 / static_cast<double>(x.size()) : 0.0;
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(Tensor(1, 1, s * inv_n), {ia, ib}, [ia, ib, inv_n](Tape& tp, std::size_t self) {
    const double g = tp.grad(self)[0] * 2.0 * inv_n;
    const Tensor& x = tp.value(ia);
    const Tensor& y = tp.value(ib);
    if (tp.requires_grad(ia)) {
      Tensor& ga = tp.grad(ia);
      for (std::size_t i = 0; i < x.size(); ++i) ga[i] += g * (x[i] - y[i]);
    }
    if (tp.requires_grad(ib)) {
      Tensor& gb = tp.grad(ib);
      for (std::size_t i = 0; i < x.size(); ++i) gb[i] -= g * (x[i] - y[i]);
    }
  });
}

Var sum(Var a) {
  Tape& t = *a.tape();
  double s = 0;
  for (double v : a.value().data()) s += v;
  const std::size_t ia = a.id();
  return t.record(Tensor(1, 1, s), {ia}, [ia](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(ia)) return;
    const double g = tp.grad(self)[0];
    for (double& v : tp.grad(ia).data()) v += g;
  });
}

}  // namespace hifinet::nn
