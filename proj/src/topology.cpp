#include "hifinet/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <cstdio>

#include "hifinet/error.hpp"

namespace hifinet {

Topology::Topology(std::vector<int> node_ids, std::vector<Point> coords,
                   std::vector<std::pair<int, int>> edges, int cluster_head)
    : node_ids_(std::move(node_ids)), coords_(std::move(coords)), cluster_head_(cluster_head) {
  if (node_ids_.size() != coords_.size()) throw InputError("topology: ids and coordinates differ in length");
  {
    auto sorted = node_ids_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw InputError("topology: duplicate node id");
  }
  adjacency_.assign(size() * size(), 0);
  for (auto [a, b] : edges) {
    const std::size_t i = index_of(a), j = index_of(b);
    if (i == j) continue;
    adjacency_[i * size() + j] = adjacency_[j * size() + i] = 1;
  }
  (void)index_of(cluster_head_);
}

Topology Topology::grid(std::span<const int> node_ids, double spacing, double radius) {
  const std::size_t n = node_ids.size();
  if (n == 0) throw InputError("topology: no nodes");
  const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  std::vector<Point> pts;
  for (std::size_t k = 0; k < n; ++k)
    pts.push_back(Point{static_cast<double>(k % cols) * spacing, static_cast<double>(k / cols) * spacing});
  std::vector<std::pair<int, int>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y) <= radius)
        edges.emplace_back(node_ids[i], node_ids[j]);
  double cx = 0, cy = 0;
  for (const Point& p : pts) {
    cx += p.x / static_cast<double>(n);
    cy += p.y / static_cast<double>(n);
  }
  std::size_t head = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::hypot(pts[i].x - cx, pts[i].y - cy);
    if (d < best - 1e-12 || (std::abs(d - best) <= 1e-12 && node_ids[i] < node_ids[head])) {
      best = d;
      head = i;
    }
  }
  Topology t({node_ids.begin(), node_ids.end()}, std::move(pts), std::move(edges), node_ids[head]);
  t.validate();
  return t;
}

std::size_t Topology::index_of(int node_id) const {
  auto it = std::find(node_ids_.begin(), node_ids_.end(), node_id);
  if (it == node_ids_.end()) throw InputError("topology: unknown node " + std::to_string(node_id));
  return static_cast<std::size_t>(it - node_ids_.begin());
}

std::vector<std::size_t> Topology::neighbors(std::size_t i) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < size(); ++j)
    if (adjacent(i, j)) out.push_back(j);
  return out;
}

double Topology::distance(std::size_t i, std::size_t j) const {
  return std::hypot(coords_[i].x - coords_[j].x, coords_[i].y - coords_[j].y);
}

bool Topology::connected() const {
  if (size() == 0) return false;
  std::vector<bool> seen(size(), false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    for (std::size_t j : neighbors(i))
      if (!seen[j]) {
        seen[j] = true;
        stack.push_back(j);
      }
  }
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

void Topology::validate() const {
  if (size() == 0) throw InputError("topology: no nodes");
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = 0; j < size(); ++j)
      if (adjacent(i, j) != adjacent(j, i)) throw InputError("topology: adjacency is not symmetric");
  if (!connected()) throw InputError("topology: graph is not connected");
  (void)index_of(cluster_head_);
}

nn::Tensor Topology::attention_mask(bool self_loops) const {
  nn::Tensor m(size(), size());
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = 0; j < size(); ++j) m(i, j) = (adjacent(i, j) || (self_loops && i == j)) ? 1.0 : 0.0;
  return m;
}

Topology Topology::parse(std::istream& in) {
  enum class Section { None, Nodes, Edges } section = Section::None;
  std::vector<int> ids;
  std::vector<Point> pts;
  std::vector<std::pair<int, int>> edges;
  std::optional<int> head;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw InputError("topology line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string first;
    if (!(ss >> first)) continue;
    if (first == "nodes") {
      section = Section::Nodes;
    } else if (first == "edges") {
      section = Section::Edges;
    } else if (first == "cluster_head") {
      int id;
      if (!(ss >> id)) fail("cluster_head needs a node id");
      head = id;
    } else if (section == Section::Nodes) {
      Point p;
      std::size_t pos = 0;
      int id = 0;
      try {
        id = std::stoi(first, &pos);
      } catch (const std::exception&) {
        fail("bad node id");
      }
      if (pos != first.size() || !(ss >> p.x >> p.y)) fail("expected <id> <x> <y>");
      ids.push_back(id);
      pts.push_back(p);
    } else if (section == Section::Edges) {
      int a = 0, b = 0;
      std::size_t pos = 0;
      try {
        a = std::stoi(first, &pos);
      } catch (const std::exception&) {
        fail("bad edge endpoint");
      }
      if (pos != first.size() || !(ss >> b)) fail("expected <id> <id>");
      edges.emplace_back(a, b);
    } else {
      fail("unexpected content outside a section");
    }
    std::string extra;
    if (ss >> extra) fail("trailing tokens");
  }
  if (!head) throw InputError("topology: missing cluster_head line");
  Topology t(std::move(ids), std::move(pts), std::move(edges), *head);
  t.validate();
  return t;
}

Topology Topology::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read topology " + path.string());
  return parse(in);
}

void Topology::write(std::ostream& out) const {
  out << "nodes\n";
  char buf[128];
  for (std::size_t i = 0; i < size(); ++i) {
    std::snprintf(buf, sizeof buf, "%d %.17g %.17g\n", node_ids_[i], coords_[i].x, coords_[i].y);
    out << buf;
  }
  out << "edges\n";
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = i + 1; j < size(); ++j)
      if (adjacent(i, j)) out << node_ids_[i] << ' ' << node_ids_[j] << '\n';
  out << "cluster_head " << cluster_head_ << '\n';
}

void Topology::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write topology " + path.string());
  write(out);
}

}  // namespace hifinet
