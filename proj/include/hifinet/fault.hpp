#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace hifinet {

/// The six mutually exclusive window classes. Normal is the fault-free class;
/// the numeric value doubles as the class index in logits and confusion
/// matrices.
enum class FaultClass : std::uint8_t {
  Normal = 0,
  Hardover = 1,
  Drift = 2,
  Spike = 3,
  Erratic = 4,
  StuckAt = 5,
};

inline constexpr std::size_t kNumClasses = 6;

inline constexpr std::array<FaultClass, kNumClasses> kAllClasses = {
    FaultClass::Normal, FaultClass::Hardover, FaultClass::Drift,
    FaultClass::Spike,  FaultClass::Erratic,  FaultClass::StuckAt};

inline constexpr std::array<FaultClass, 5> kFaultTypes = {
    FaultClass::Hardover, FaultClass::Drift, FaultClass::Spike,
    FaultClass::Erratic, FaultClass::StuckAt};

constexpr std::size_t class_index(FaultClass c) { return static_cast<std::size_t>(c); }

constexpr FaultClass class_from_index(std::size_t i) { return static_cast<FaultClass>(i); }

constexpr std::string_view class_name(FaultClass c) {
  switch (c) {
    case FaultClass::Normal: return "Normal";
    case FaultClass::Hardover: return "Hardover";
    case FaultClass::Drift: return "Drift";
    case FaultClass::Spike: return "Spike";
    case FaultClass::Erratic: return "Erratic";
    case FaultClass::StuckAt: return "StuckAt";
  }
  return "?";
}

inline std::optional<FaultClass> parse_class(std::string_view name) {
  for (FaultClass c : kAllClasses) {
    if (class_name(c) == name) return c;
  }
  return std::nullopt;
}

}  // namespace hifinet

#include <vector>

namespace hifinet {

/// Per-node, per-sample ground truth: which fault (or Normal) touched each
/// sample of an aligned panel. Rows are aligned with AlignedPanel rows.
struct FaultMask {
  std::vector<std::vector<FaultClass>> rows;

  static FaultMask all_normal(std::size_t n_nodes, std::size_t n_samples) {
    return FaultMask{std::vector<std::vector<FaultClass>>(
        n_nodes, std::vector<FaultClass>(n_samples, FaultClass::Normal))};
  }

  std::size_t faulty_count() const {
    std::size_t n = 0;
    for (const auto& row : rows)
      for (FaultClass c : row) n += (c != FaultClass::Normal);
    return n;
  }

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& row : rows) n += row.size();
    return n;
  }
};

}  // namespace hifinet
