#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "hifinet/nn/autodiff.hpp"
#include "hifinet/nn/params.hpp"

namespace hifinet::testing {

struct GradCheckResult {
  double max_rel_error = 0;
  std::string worst;  // "param[index]"
  std::size_t checked = 0;
};

// Gradients below this magnitude are compared on an absolute scale.
inline constexpr double kGradFloor = 1e-6;

/// Compares reverse-mode gradients of every parameter entry in `store` with
/// central differences. `build` must construct the scalar loss on the tape it
/// is handed, reading parameters only through `store`.
inline GradCheckResult grad_check(nn::ParamStore& store, const std::function<nn::Var(nn::Tape&)>& build,
                                  double eps = 1e-5) {
  auto loss_at = [&] {
    nn::Tape tape;
    return build(tape).value()[0];
  };
  store.zero_grad();
  {
    nn::Tape tape;
    tape.backward(build(tape));
  }
  GradCheckResult res;
  for (nn::Parameter* p : store.all()) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double orig = p->value[i];
      p->value[i] = orig + eps;
      const double up = loss_at();
      p->value[i] = orig - eps;
      const double down = loss_at();
      p->value[i] = orig;
      const double numeric = (up - down) / (2 * eps);
      const double analytic = p->grad[i];
      const double rel =
          std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), kGradFloor});
      ++res.checked;
      if (rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst = p->name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return res;
}

/// Random weights in [-1, 1] for a fresh parameter.
inline nn::Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  nn::Tensor t(r, c);
  for (auto& v : t.data()) v = rng.uniform(-scale, scale);
  return t;
}

}  // namespace hifinet::testing
