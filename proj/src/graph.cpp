// SPDX-License-Identifier: Apache-2.0
#include "shadowgrid/graph.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>

#include "shadowgrid/error.hpp"

namespace shadowgrid {

DependencyGraph::DependencyGraph(std::vector<GraphNode> nodes, std::vector<DependencyEdge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  std::set<std::string> ids;
  for (const auto& n : nodes_) {
    if (!ids.insert(n.id).second) throw Error(ErrorKind::DuplicateId, fmt::format("duplicate building id {}", n.id));
  }
  std::sort(edges_.begin(), edges_.end(),
            [](const DependencyEdge& a, const DependencyEdge& b) { return std::tie(a.src, a.dst) < std::tie(b.src, b.dst); });
  in_edges_.assign(nodes_.size(), {});
  out_edges_.assign(nodes_.size(), {});
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const auto& e = edges_[k];
    if (e.src < 0 || e.dst < 0 || e.src >= node_count() || e.dst >= node_count() || e.src == e.dst) {
      throw Error(ErrorKind::InvalidInput, fmt::format("edge {}->{} is invalid", e.src, e.dst));
    }
    if (k > 0 && edges_[k - 1].src == e.src && edges_[k - 1].dst == e.dst) {
      throw Error(ErrorKind::InvalidInput,
                  fmt::format("duplicate edge {}->{}", nodes_[e.src].id, nodes_[e.dst].id));
    }
    in_edges_[static_cast<std::size_t>(e.dst)].push_back(static_cast<Index>(k));
    out_edges_[static_cast<std::size_t>(e.src)].push_back(static_cast<Index>(k));
  }
}

Index DependencyGraph::index_of(const std::string& id) const {
  const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id,
                                   [](const GraphNode& n, const std::string& key) { return n.id < key; });
  if (it != nodes_.end() && it->id == id) return static_cast<Index>(it - nodes_.begin());
  // Nodes built outside build_graph may not be sorted.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id == id) return static_cast<Index>(i);
  }
  throw Error(ErrorKind::UnknownBuilding, fmt::format("unknown building {}", id));
}

bool DependencyGraph::contains(const std::string& id) const {
  return std::any_of(nodes_.begin(), nodes_.end(), [&](const GraphNode& n) { return n.id == id; });
}

std::uint64_t DependencyGraph::fingerprint() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= 0xff;
    h *= 1099511628211ull;
  };
  for (const auto& n : nodes_) mix(n.id);
  for (const auto& e : edges_) mix(fmt::format("{}>{}", nodes_[e.src].id, nodes_[e.dst].id));
  return h;
}

DependencyGraph build_graph(std::span<const BuildingFootprint> footprints, double floor_height_m) {
  if (footprints.empty()) throw Error(ErrorKind::InvalidInput, "build_graph needs at least one footprint");
  std::vector<const BuildingFootprint*> sorted;
  for (const auto& f : footprints) sorted.push_back(&f);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id < b->id; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i]->id == sorted[i - 1]->id) {
      throw Error(ErrorKind::DuplicateId, fmt::format("duplicate building id {}", sorted[i]->id));
    }
  }

  std::vector<GraphNode> nodes;
  for (const auto* f : sorted) {
    f->validate();
    nodes.push_back(GraphNode{f->id, centroid(*f), effective_height(*f, floor_height_m)});
  }
  std::vector<DependencyEdge> edges;
  for (std::size_t u = 0; u < nodes.size(); ++u) {
    const double reach = kShadowReachFactor * nodes[u].height_m;
    for (std::size_t v = 0; v < nodes.size(); ++v) {
      if (u == v) continue;
      const double d = distance_m(nodes[u].centroid, nodes[v].centroid);
      if (d <= reach) edges.push_back(DependencyEdge{static_cast<Index>(u), static_cast<Index>(v), d});
    }
  }
  return DependencyGraph(std::move(nodes), std::move(edges));
}

EdgeAttributes edge_attributes(const SolarPosition& sun, double bearing_src_to_dst_deg, double distance) {
  EdgeAttributes out;
  out.distance_m = distance;
  if (!(sun.altitude > 0.0)) {
    out.radiation = 0.0;
    out.angle_rad = kPi<double>;
    out.binary = 0.0;
    return out;
  }
  out.radiation = clear_sky_radiation(sun);
  double diff = std::fmod(std::abs(shadow_azimuth(sun) - bearing_src_to_dst_deg), 360.0);
  if (diff > 180.0) diff = 360.0 - diff;
  out.angle_rad = deg_to_rad(diff);
  out.binary = (diff < 90.0 && out.radiation > 0.0) ? 1.0 : 0.0;
  return out;
}

EdgeAttributes edge_attributes(const DependencyGraph& g, const DependencyEdge& e, const UtcInstant& t) {
  const auto& src = g.nodes().at(static_cast<std::size_t>(e.src));
  const auto& dst = g.nodes().at(static_cast<std::size_t>(e.dst));
  return edge_attributes(solar_position(src.centroid, t), bearing_deg(src.centroid, dst.centroid), e.distance_m);
}

EdgeAttributes EdgeAttributeSeries::at(Index edge, Index step) const {
  const auto r = row(edge, step);
  return EdgeAttributes{r(0), r(1), r(2), r(3)};
}

void EdgeAttributeSeries::set(Index edge, Index step, const EdgeAttributes& a) {
  row(edge, step) << a.radiation, a.angle_rad, a.binary, a.distance_m;
}

EdgeAttributeSeries edge_attribute_series(const DependencyGraph& g, std::span<const UtcInstant> timestamps) {
  if (timestamps.empty()) throw Error(ErrorKind::EmptyTimeline, "no timestamps");
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    if (timestamps[i].seconds() - timestamps[i - 1].seconds() != std::chrono::hours(1)) {
      throw Error(ErrorKind::InvalidInput,
                  fmt::format("timestamps must be hourly and increasing at {}", timestamps[i].iso8601()));
    }
  }
  const Index steps = static_cast<Index>(timestamps.size());
  EdgeAttributeSeries series(g.edge_count(), steps);
  std::vector<double> bearings;
  for (const auto& e : g.edges()) bearings.push_back(bearing_deg(g.nodes()[e.src].centroid, g.nodes()[e.dst].centroid));

  for (Index src = 0; src < g.node_count(); ++src) {
    const auto& outs = g.out_edges(src);
    if (outs.empty()) continue;
    for (Index t = 0; t < steps; ++t) {
      const auto sun = solar_position(g.nodes()[src].centroid, timestamps[static_cast<std::size_t>(t)]);
      for (Index k : outs) series.set(k, t, edge_attributes(sun, bearings[k], g.edges()[k].distance_m));
    }
  }
  return series;
}

Index indegree(const DependencyGraph& g, const std::string& id) {
  return static_cast<Index>(g.in_edges(g.index_of(id)).size());
}

std::string graph_to_json(const DependencyGraph& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : g.nodes()) {
    nodes.push_back({{"id", n.id}, {"lat", n.centroid.latitude}, {"lon", n.centroid.longitude}, {"height_m", n.height_m}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : g.edges()) {
    edges.push_back({{"src", g.nodes()[e.src].id}, {"dst", g.nodes()[e.dst].id}, {"distance_m", e.distance_m}});
  }
  return nlohmann::json{{"nodes", nodes}, {"edges", edges}}.dump(1);
}

DependencyGraph graph_from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    std::vector<GraphNode> nodes;
    std::map<std::string, Index> index;
    for (const auto& n : doc.at("nodes")) {
      GraphNode node{n.at("id").get<std::string>(), GeoPoint{n.at("lat").get<double>(), n.at("lon").get<double>()},
                     n.at("height_m").get<double>()};
      index.emplace(node.id, static_cast<Index>(nodes.size()));
      nodes.push_back(std::move(node));
    }
    std::vector<DependencyEdge> edges;
    for (const auto& e : doc.at("edges")) {
      const auto src = index.find(e.at("src").get<std::string>());
      const auto dst = index.find(e.at("dst").get<std::string>());
      if (src == index.end() || dst == index.end()) {
        throw Error(ErrorKind::UnknownBuilding, "edge references an unknown node");
      }
      edges.push_back(DependencyEdge{src->second, dst->second, e.at("distance_m").get<double>()});
    }
    return DependencyGraph(std::move(nodes), std::move(edges));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, fmt::format("graph json: {}", e.what()));
  }
}

std::string graph_to_flowmap_csv(const DependencyGraph& g) {
  std::string out = "origin,dest,count\n";
  for (const auto& e : g.edges()) {
    out += fmt::format("{},{},{:.6f}\n", g.nodes()[e.src].id, g.nodes()[e.dst].id, 1.0 / e.distance_m);
  }
  return out;
}

void export_graph(const DependencyGraph& g, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream json(dir / "graph.json");
  std::ofstream csv(dir / "flowmap.csv");
  if (!json || !csv) throw Error(ErrorKind::IoError, fmt::format("cannot write graph into {}", dir.string()));
  json << graph_to_json(g) << '\n';
  csv << graph_to_flowmap_csv(g);
  if (!json || !csv) throw Error(ErrorKind::IoError, fmt::format("write failed in {}", dir.string()));
}

DependencyGraph import_graph(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw Error(ErrorKind::IoError, fmt::format("cannot open {}", json_path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return graph_from_json(ss.str());
}

}  // namespace shadowgrid
