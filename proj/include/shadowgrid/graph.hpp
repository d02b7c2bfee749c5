// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "shadowgrid/geo.hpp"
#include "shadowgrid/types.hpp"

namespace shadowgrid {

/// Shadow reach in multiples of the shadower's height.
inline constexpr double kShadowReachFactor = 3.0;

struct GraphNode {
  std::string id;
  GeoPoint centroid;
  double height_m = 0.0;
};

/// Directed edge: `src` (the shadower) can influence `dst`. Indices refer to
/// DependencyGraph::nodes().
struct DependencyEdge {
  Index src = 0;
  Index dst = 0;
  double distance_m = 0.0;

  friend bool operator==(const DependencyEdge&, const DependencyEdge&) = default;
};

struct EdgeAttributes {
  double radiation = 0.0;  // W/m^2
  double angle_rad = 0.0;  // [0, pi]
  double binary = 0.0;     // 0 or 1
  double distance_m = 0.0;

  static constexpr Index kCount = 4;
};

class DependencyGraph {
 public:
  DependencyGraph() = default;
  /// Nodes must have unique ids; edges reference node indices. Edges are kept
  /// in (src, dst) lexicographic order.
  DependencyGraph(std::vector<GraphNode> nodes, std::vector<DependencyEdge> edges);

  const std::vector<GraphNode>& nodes() const { return nodes_; }
  const std::vector<DependencyEdge>& edges() const { return edges_; }
  Index node_count() const { return static_cast<Index>(nodes_.size()); }
  Index edge_count() const { return static_cast<Index>(edges_.size()); }

  /// Throws UnknownBuilding.
  Index index_of(const std::string& id) const;
  bool contains(const std::string& id) const;
  /// Indices (into edges()) of edges ending at node `dst`.
  const std::vector<Index>& in_edges(Index dst) const { return in_edges_[static_cast<std::size_t>(dst)]; }
  const std::vector<Index>& out_edges(Index src) const { return out_edges_[static_cast<std::size_t>(src)]; }

  /// Stable 64-bit hash of node ids and edge list.
  std::uint64_t fingerprint() const;

 private:
  std::vector<GraphNode> nodes_;
  std::vector<DependencyEdge> edges_;
  std::vector<std::vector<Index>> in_edges_;
  std::vector<std::vector<Index>> out_edges_;
};

/// Edge u->v exists iff u != v and centroid distance <= 3 * effective_height(u).
/// Nodes are sorted by id, so the result does not depend on input order.
DependencyGraph build_graph(std::span<const BuildingFootprint> footprints,
                            double floor_height_m = kDefaultFloorHeightM);

/// Attributes for a given sun position and edge geometry. Night (altitude <= 0)
/// yields the sentinel (0, pi, 0, distance).
EdgeAttributes edge_attributes(const SolarPosition& sun, double bearing_src_to_dst_deg, double distance_m);

EdgeAttributes edge_attributes(const DependencyGraph& g, const DependencyEdge& e, const UtcInstant& t);

/// Per-edge, per-timestamp attributes laid out as (edges x steps) rows of 4
/// columns: radiation, angle_rad, binary, distance_m.
class EdgeAttributeSeries {
 public:
  EdgeAttributeSeries() = default;
  EdgeAttributeSeries(Index edges, Index steps)
      : edges_(edges), steps_(steps), data_(RowMatrixXd::Zero(edges * steps, EdgeAttributes::kCount)) {}

  Index edges() const { return edges_; }
  Index steps() const { return steps_; }
  const RowMatrixXd& data() const { return data_; }

  auto row(Index edge, Index step) { return data_.row(edge * steps_ + step); }
  auto row(Index edge, Index step) const { return data_.row(edge * steps_ + step); }
  EdgeAttributes at(Index edge, Index step) const;
  void set(Index edge, Index step, const EdgeAttributes& a);

 private:
  Index edges_ = 0;
  Index steps_ = 0;
  RowMatrixXd data_;
};

/// Timestamps must be non-empty (EmptyTimeline), strictly increasing and
/// hourly (InvalidInput).
EdgeAttributeSeries edge_attribute_series(const DependencyGraph& g, std::span<const UtcInstant> timestamps);

Index indegree(const DependencyGraph& g, const std::string& id);

/// `{"nodes": [{"id","lat","lon","height_m"}], "edges": [{"src","dst","distance_m"}]}`
std::string graph_to_json(const DependencyGraph& g);
DependencyGraph graph_from_json(const std::string& text);
/// `origin,dest,count` with count = 1/distance_m to 6 decimals.
std::string graph_to_flowmap_csv(const DependencyGraph& g);

/// Writes graph.json and flowmap.csv into `dir` (created if missing).
void export_graph(const DependencyGraph& g, const std::filesystem::path& dir);
DependencyGraph import_graph(const std::filesystem::path& json_path);

}  // namespace shadowgrid
