#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hifinet/nn/tensor.hpp"

namespace hifinet::nn {

/// A trainable tensor with its gradient slot and Adam moments.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor m;
  Tensor v;
  std::uint64_t step = 0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam update on each parameter from its own gradient.
void adam_step(std::span<Parameter* const> params, const AdamConfig& config);

/// Named parameters. Addresses are stable for the lifetime of the store.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;

  Parameter& add(const std::string& name, Tensor init);
  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;
  bool contains(std::string_view name) const { return params_.find(name) != params_.end(); }
  std::size_t size() const { return params_.size(); }

  std::vector<Parameter*> with_prefix(std::string_view prefix);
  std::vector<Parameter*> all() { return with_prefix(""); }
  std::vector<std::string> names() const;

  void zero_grad();
  void adam_step(const AdamConfig& config, std::string_view prefix = "");

  /// Copy of every parameter value, keyed by name.
  std::map<std::string, Tensor> snapshot() const;
  /// Restores values from a snapshot; names must match exactly.
  void restore(const std::map<std::string, Tensor>& values);

  /// FNV-1a over names, shapes and value bits of parameters with the prefix.
  std::uint64_t checksum(std::string_view prefix = "") const;

  /// Flat binary checkpoint: magic, version, per-parameter name and shape,
  /// then the little-endian float64 payload in the same order.
  void save(const std::filesystem::path& path) const;
  /// Loads values into already-registered parameters with matching shapes.
  void load(const std::filesystem::path& path);

  static constexpr std::uint32_t kCheckpointVersion = 1;

 private:
  std::map<std::string, Parameter, std::less<>> params_;
};

/// Reads a checkpoint file without a target store.
std::map<std::string, Tensor> read_checkpoint(const std::filesystem::path& path);

}  // namespace hifinet::nn
