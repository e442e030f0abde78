#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sentinel/core/error.hpp"
#include "sentinel/core/rng.hpp"
#include "sentinel/docking/geometry.hpp"

namespace sentinel::sim {

using docking::Pose2D;

enum class NodeKind : std::uint8_t { Waypoint, Dock, Room };

constexpr std::string_view to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Waypoint: return "waypoint";
    case NodeKind::Dock: return "dock";
    case NodeKind::Room: return "room";
  }
  return "?";
}

inline std::optional<NodeKind> parse_node_kind(std::string_view s) {
  for (auto k : {NodeKind::Waypoint, NodeKind::Dock, NodeKind::Room})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

struct MapNode {
  std::string id;
  Pose2D pose;
  NodeKind kind = NodeKind::Waypoint;
};

struct MapEdge {
  std::string a;
  std::string b;
  double length = 0.0;  // m
  double speed = 0.5;   // nominal traversal speed, m/s
};

/// Undirected patrol graph.
class TopoMap {
 public:
  TopoMap() = default;
  TopoMap(std::vector<MapNode> nodes, std::vector<MapEdge> edges) : nodes_(std::move(nodes)), edges_(std::move(edges)) {
    index();
    validate();
  }

  const std::vector<MapNode>& nodes() const { return nodes_; }
  const std::vector<MapEdge>& edges() const { return edges_; }

  bool has(const std::string& id) const { return by_id_.contains(id); }

  const MapNode& node(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw Error("unknown map node '" + id + "'");
    return nodes_[it->second];
  }

  const std::string& dock() const { return dock_; }

  /// Neighbour ids in edge declaration order.
  const std::vector<std::string>& neighbors(const std::string& id) const {
    auto it = adjacency_.find(id);
    if (it == adjacency_.end()) throw Error("unknown map node '" + id + "'");
    return it->second;
  }

  const MapEdge& edge(const std::string& a, const std::string& b) const {
    for (const auto& e : edges_)
      if ((e.a == a && e.b == b) || (e.a == b && e.b == a)) return e;
    throw Error("no edge " + a + " - " + b);
  }

  /// Shortest route (node ids, inclusive) and its length.
  std::pair<std::vector<std::string>, double> shortest_path(const std::string& from, const std::string& to) const {
    std::map<std::string, double> dist;
    std::map<std::string, std::string> prev;
    using Item = std::pair<double, std::string>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    for (const auto& n : nodes_) dist[n.id] = std::numeric_limits<double>::infinity();
    dist.at(from) = 0.0;
    pq.push({0.0, from});
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[u]) continue;
      if (u == to) break;
      for (const auto& v : neighbors(u)) {
        const double nd = d + edge(u, v).length;
        if (nd < dist[v]) {
          dist[v] = nd;
          prev[v] = u;
          pq.push({nd, v});
        }
      }
    }
    std::vector<std::string> path{to};
    while (path.back() != from) path.push_back(prev.at(path.back()));
    std::reverse(path.begin(), path.end());
    return {path, dist.at(to)};
  }

  void validate() const {
    if (nodes_.empty()) throw Error("map has no nodes");
    if (dock_.empty()) throw Error("map has no dock node");
    for (const auto& e : edges_) {
      if (!has(e.a) || !has(e.b)) throw Error("edge references unknown node " + e.a + " - " + e.b);
      if (e.a == e.b) throw Error("self-loop at " + e.a);
      if (!(e.length > 0)) throw Error("edge " + e.a + " - " + e.b + " must have positive length");
      if (!(e.speed > 0)) throw Error("edge " + e.a + " - " + e.b + " must have positive speed");
    }
    std::set<std::string> seen{nodes_.front().id};
    std::vector<std::string> stack{nodes_.front().id};
    while (!stack.empty()) {
      auto u = stack.back();
      stack.pop_back();
      for (const auto& v : neighbors(u))
        if (seen.insert(v).second) stack.push_back(v);
    }
    if (seen.size() != nodes_.size()) throw Error("map is not connected");
  }

 private:
  void index() {
    by_id_.clear();
    adjacency_.clear();
    dock_.clear();
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (!by_id_.emplace(nodes_[i].id, i).second) throw Error("duplicate map node '" + nodes_[i].id + "'");
      adjacency_[nodes_[i].id];
      if (nodes_[i].kind == NodeKind::Dock) {
        if (!dock_.empty()) throw Error("map has more than one dock node");
        dock_ = nodes_[i].id;
      }
    }
    for (auto& e : edges_) {
      if (!has(e.a) || !has(e.b)) throw Error("edge references unknown node " + e.a + " - " + e.b);
      if (e.length == 0.0) {
        const auto& p = node(e.a).pose;
        const auto& q = node(e.b).pose;
        e.length = std::hypot(p.x - q.x, p.y - q.y);
      }
      adjacency_[e.a].push_back(e.b);
      adjacency_[e.b].push_back(e.a);
    }
  }

  std::vector<MapNode> nodes_;
  std::vector<MapEdge> edges_;
  std::map<std::string, std::size_t> by_id_;
  std::map<std::string, std::vector<std::string>> adjacency_;
  std::string dock_;
};

/// Random patrol step: a uniform choice among the neighbours, excluding the
/// node just left and the dock, unless nothing else is left.
inline std::string next_waypoint(const TopoMap& map, const std::string& current, const std::string& previous,
                                 Rng& rng) {
  const auto& all = map.neighbors(current);
  if (all.empty()) throw Error("node '" + current + "' has no neighbours");
  std::vector<std::string> candidates;
  for (const auto& n : all)
    if (n != previous && map.node(n).kind != NodeKind::Dock) candidates.push_back(n);
  if (candidates.empty())
    for (const auto& n : all)
      if (map.node(n).kind != NodeKind::Dock) candidates.push_back(n);
  if (candidates.empty()) candidates = all;
  return candidates[rng.below(candidates.size())];
}

/// Hallway loop of ten corridor waypoints with two side rooms and a dock,
/// about 190 m of corridor.
inline TopoMap default_hallway_map() {
  auto wp = [](std::string id, double x, double y, NodeKind k = NodeKind::Waypoint) {
    return MapNode{std::move(id), Pose2D(x, y, 0.0), k};
  };
  std::vector<MapNode> nodes{
      wp("dock", 0.0, -3.0, NodeKind::Dock),
      wp("w1", 0.0, 0.0),    wp("w2", 15.0, 0.0),   wp("w3", 30.0, 0.0),   wp("w4", 45.0, 0.0),
      wp("w5", 60.0, 0.0),   wp("w6", 60.0, 18.0),  wp("w7", 45.0, 36.0),  wp("w8", 30.0, 36.0),
      wp("w9", 15.0, 36.0),  wp("w10", 0.0, 18.0),
      wp("r1", 30.0, 10.0, NodeKind::Room), wp("r2", 30.0, 26.0, NodeKind::Room),
  };
  std::vector<MapEdge> edges{
      {"dock", "w1", 0, 0.5}, {"w1", "w2", 0, 0.5}, {"w2", "w3", 0, 0.5}, {"w3", "w4", 0, 0.5},
      {"w4", "w5", 0, 0.5},   {"w5", "w6", 0, 0.5}, {"w6", "w7", 0, 0.5}, {"w7", "w8", 0, 0.5},
      {"w8", "w9", 0, 0.5},   {"w9", "w10", 0, 0.5}, {"w10", "w1", 0, 0.5}, {"w3", "r1", 0, 0.5},
      {"w8", "r2", 0, 0.5},
  };
  return TopoMap(std::move(nodes), std::move(edges));
}

}  // namespace sentinel::sim
