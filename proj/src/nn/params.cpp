#include "hifinet/nn/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "hifinet/error.hpp"

namespace hifinet::nn {

namespace {

constexpr char kMagic[8] = {'H', 'F', 'N', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
void put_le(std::ostream& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.put(static_cast<char>((value >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(std::istream& in) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = in.get();
    if (c == EOF) throw InputError("checkpoint truncated");
    value |= static_cast<T>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return value;
}

void fnv(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

void adam_step(std::span<Parameter* const> params, const AdamConfig& c) {
  for (Parameter* p : params) {
    if (p->m.empty()) {
      p->m = Tensor(p->value.rows(), p->value.cols());
      p->v = Tensor(p->value.rows(), p->value.cols());
    }
    ++p->step;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(p->step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(p->step));
    auto w = p->value.data();
    auto g = p->grad.data();
    auto m = p->m.data();
    auto v = p->v.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1 - c.beta2) * g[i] * g[i];
      w[i] -= c.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + c.eps);
    }
  }
}

Parameter& ParamStore::add(const std::string& name, Tensor init) {
  if (contains(name)) throw ConfigError("duplicate parameter " + name);
  Parameter p;
  p.name = name;
  p.grad = Tensor(init.rows(), init.cols());
  p.value = std::move(init);
  return params_.emplace(name, std::move(p)).first->second;
}

Parameter& ParamStore::at(std::string_view name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ShapeError("unknown parameter " + std::string(name));
  return it->second;
}

const Parameter& ParamStore::at(std::string_view name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ShapeError("unknown parameter " + std::string(name));
  return it->second;
}

std::vector<Parameter*> ParamStore::with_prefix(std::string_view prefix) {
  std::vector<Parameter*> out;
  for (auto& [name, p] : params_)
    if (name.starts_with(prefix)) out.push_back(&p);
  return out;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  for (const auto& [name, p] : params_) out.push_back(name);
  return out;
}

void ParamStore::zero_grad() {
  for (auto& [name, p] : params_) p.grad.fill(0.0);
}

void ParamStore::adam_step(const AdamConfig& config, std::string_view prefix) {
  auto ps = with_prefix(prefix);
  nn::adam_step(ps, config);
}

std::map<std::string, Tensor> ParamStore::snapshot() const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, p] : params_) out.emplace(name, p.value);
  return out;
}

void ParamStore::restore(const std::map<std::string, Tensor>& values) {
  if (values.size() != params_.size()) throw ShapeError("snapshot parameter count mismatch");
  for (auto& [name, p] : params_) {
    auto it = values.find(name);
    if (it == values.end()) throw ShapeError("snapshot lacks parameter " + name);
    if (!it->second.same_shape(p.value)) throw ShapeError("snapshot shape mismatch for " + name);
    p.value = it->second;
  }
}

std::uint64_t ParamStore::checksum(std::string_view prefix) const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [name, p] : params_) {
    if (!name.starts_with(prefix)) continue;
    fnv(h, name.data(), name.size());
    const std::uint64_t shape[2] = {p.value.rows(), p.value.cols()};
    fnv(h, shape, sizeof shape);
    fnv(h, p.value.data().data(), p.value.size() * sizeof(double));
  }
  return h;
}

void ParamStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params_.size()));
  for (const auto& [name, p] : params_) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_le<std::uint64_t>(out, p.value.rows());
    put_le<std::uint64_t>(out, p.value.cols());
  }
  for (const auto& [name, p] : params_)
    for (double v : p.value.data()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw InputError("failed writing checkpoint " + path.string());
}

std::map<std::string, Tensor> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw InputError("not a checkpoint: " + path.string());
  const auto version = get_le<std::uint32_t>(in);
  if (version != ParamStore::kCheckpointVersion)
    throw InputError("unsupported checkpoint version " + std::to_string(version));
  const auto count = get_le<std::uint32_t>(in);
  std::vector<std::pair<std::string, std::pair<std::uint64_t, std::uint64_t>>> header;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = get_le<std::uint32_t>(in);
    std::string name(len, '\0');
    in.read(name.data(), len);
    const auto rows = get_le<std::uint64_t>(in);
    const auto cols = get_le<std::uint64_t>(in);
    header.push_back({std::move(name), {rows, cols}});
  }
  std::map<std::string, Tensor> out;
  for (const auto& [name, shape] : header) {
    Tensor t(shape.first, shape.second);
    for (double& v : t.data()) v = std::bit_cast<double>(get_le<std::uint64_t>(in));
    out.emplace(name, std::move(t));
  }
  return out;
}

void ParamStore::load(const std::filesystem::path& path) { restore(read_checkpoint(path)); }

}  // namespace hifinet::nn
