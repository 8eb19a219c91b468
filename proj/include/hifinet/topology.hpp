#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hifinet/nn/tensor.hpp"

namespace hifinet {

struct Point {
  double x = 0.0;  // meters
  double y = 0.0;
};

/// Static undirected cluster graph. The adjacency never stores self-loops;
/// attention masks add them on request.
///
/// Text format (blank lines and '#' comments ignored):
///
///     nodes
///     <id> <x> <y>
///     ...
///     edges
///     <id> <id>
///     ...
///     cluster_head <id>
class Topology {
 public:
  Topology() = default;
  Topology(std::vector<int> node_ids, std::vector<Point> coords,
           std::vector<std::pair<int, int>> edges, int cluster_head);

  /// Nodes on a square-ish grid with `spacing` meters between columns/rows,
  /// linked when closer than `radius`. The node nearest to the centroid
  /// (smallest id on ties) is the cluster head.
  static Topology grid(std::span<const int> node_ids, double spacing = 40.0, double radius = 60.0);

  static Topology parse(std::istream& in);
  static Topology load(const std::filesystem::path& path);
  void write(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return node_ids_.size(); }
  const std::vector<int>& node_ids() const { return node_ids_; }
  const std::vector<Point>& coords() const { return coords_; }
  int cluster_head() const { return cluster_head_; }
  std::size_t cluster_head_index() const { return index_of(cluster_head_); }
  std::size_t index_of(int node_id) const;

  bool adjacent(std::size_t i, std::size_t j) const { return adjacency_[i * size() + j] != 0; }
  std::vector<std::size_t> neighbors(std::size_t i) const;
  double distance(std::size_t i, std::size_t j) const;

  /// Symmetric, connected and consistent; throws otherwise.
  void validate() const;
  bool connected() const;

  /// N x N 0/1 matrix of closed (self_loops) or open neighborhoods.
  nn::Tensor attention_mask(bool self_loops) const;

 private:
  std::vector<int> node_ids_;
  std::vector<Point> coords_;
  std::vector<unsigned char> adjacency_;
  int cluster_head_ = 0;
};

}  // namespace hifinet
