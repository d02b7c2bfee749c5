// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <set>

#include "city_fixture.hpp"
#include "shadowgrid/error.hpp"
#include "shadowgrid/graph.hpp"

using namespace shadowgrid;
using testing::square;

namespace {

std::set<std::pair<std::string, std::string>> edge_names(const DependencyGraph& g) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& e : g.edges()) out.emplace(g.nodes()[e.src].id, g.nodes()[e.dst].id);
  return out;
}

std::vector<UtcInstant> hourly(const UtcInstant& start, int n) {
  std::vector<UtcInstant> out;
  for (int i = 0; i < n; ++i) out.push_back(start.plus_hours(i));
  return out;
}

}  // namespace

TEST_CASE("equal heights 25 m apart link both ways") {
  const std::vector<BuildingFootprint> fs = {square("u", 0, 0, 10.0), square("v", 25, 0, 10.0)};
  const auto g = build_graph(fs);
  CHECK(edge_names(g) == std::set<std::pair<std::string, std::string>>{{"u", "v"}, {"v", "u"}});
  CHECK(g.edges()[0].distance_m == doctest::Approx(25.0).epsilon(1e-6));
}

TEST_CASE("only the tall building shadows the short one") {
  const std::vector<BuildingFootprint> fs = {square("tall", 0, 0, 20.0), square("short", 45, 0, 5.0)};
  CHECK(edge_names(build_graph(fs)) == std::set<std::pair<std::string, std::string>>{{"tall", "short"}});
}

TEST_CASE("single building has no edges") {
  const std::vector<BuildingFootprint> fs = {square("solo", 0, 0, 50.0)};
  const auto g = build_graph(fs);
  CHECK(g.node_count() == 1);
  CHECK(g.edge_count() == 0);
}

TEST_CASE("distance exactly three heights is inclusive") {
  auto fs = testing::six_building_city();
  const auto g = build_graph(fs);
  const double d = distance_m(centroid(fs[4]), centroid(fs[5]));
  REQUIRE(3.0 * *fs[4].height_m == d);
  CHECK(edge_names(g).count({"E", "F"}) == 1);

  fs[4].height_m = std::nextafter(*fs[4].height_m, 0.0);
  REQUIRE(3.0 * *fs[4].height_m < d);
  CHECK(edge_names(build_graph(fs)).count({"E", "F"}) == 0);
}

TEST_CASE("six building fixture matches the hand-derived edge set") {
  const auto fs = testing::six_building_city();
  const auto g = build_graph(fs);
  const std::set<std::pair<std::string, std::string>> expected = {{"A", "B"}, {"B", "A"}, {"C", "D"}, {"E", "F"}};
  CHECK(edge_names(g) == expected);
  CHECK(indegree(g, "A") == 1);
  CHECK(indegree(g, "B") == 1);
  CHECK(indegree(g, "C") == 0);
  CHECK(indegree(g, "D") == 1);
  CHECK(indegree(g, "E") == 0);
  CHECK(indegree(g, "F") == 1);
}

TEST_CASE("duplicate ids and unknown buildings") {
  const std::vector<BuildingFootprint> fs = {square("a", 0, 0, 10.0), square("a", 50, 0, 10.0)};
  try {
    build_graph(fs);
    FAIL("expected DuplicateId");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DuplicateId);
  }
  const auto g = build_graph(testing::six_building_city());
  try {
    indegree(g, "Z");
    FAIL("expected UnknownBuilding");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownBuilding);
  }
}

TEST_CASE("degenerate polygons propagate") {
  std::vector<BuildingFootprint> fs = {square("a", 0, 0, 10.0)};
  fs[0].polygon.resize(2);
  CHECK_THROWS_AS(build_graph(fs), Error);
}

TEST_CASE("indegree counts distinct sources and increments by one") {
  std::vector<BuildingFootprint> fs = {square("t", 0, 0, 3.0), square("s1", 20, 0, 10.0), square("s2", -20, 0, 10.0),
                                       square("s3", 0, 20, 10.0)};
  CHECK(indegree(build_graph(fs), "t") == 3);
  fs.push_back(square("s4", 0, -20, 10.0));
  CHECK(indegree(build_graph(fs), "t") == 4);
  const std::vector<BuildingFootprint> lonely = {square("iso", 0, 0, 3.0), square("far", 500, 0, 3.0)};
  CHECK(indegree(build_graph(lonely), "iso") == 0);
}

TEST_CASE("edge attribute examples") {
  // Sun due south-west at a moderate altitude: shadow points 45 deg.
  const SolarPosition sun_sw{225.0, 30.0};
  auto a = edge_attributes(sun_sw, 45.0, 12.0);
  CHECK(a.angle_rad == 0.0);
  CHECK(a.binary == 1.0);
  CHECK(a.radiation == clear_sky_radiation(sun_sw));
  CHECK(a.distance_m == 12.0);

  const SolarPosition sun_10{190.0, 30.0};  // shadow azimuth 10
  a = edge_attributes(sun_10, 190.0, 5.0);
  CHECK(a.angle_rad == kPi<double>);
  CHECK(a.binary == 0.0);

  const SolarPosition sun_0{180.0, 30.0};  // shadow azimuth 0
  a = edge_attributes(sun_0, 90.0, 5.0);
  CHECK(a.angle_rad == kPi<double> / 2.0);
  CHECK(a.binary == 0.0);

  a = edge_attributes(SolarPosition{180.0, -5.0}, 0.0, 7.0);
  CHECK(a.radiation == 0.0);
  CHECK(a.angle_rad == kPi<double>);
  CHECK(a.binary == 0.0);
  CHECK(a.distance_m == 7.0);
}

TEST_CASE("edge attribute series shapes") {
  const auto g1 = build_graph(std::vector<BuildingFootprint>{square("u", 0, 0, 10.0), square("v", 300, 0, 10.0)});
  const auto noon = UtcInstant::parse("2016-06-21T17:00:00Z");
  const auto empty = edge_attribute_series(g1, hourly(noon, 5));
  CHECK(empty.edges() == 0);
  CHECK(empty.steps() == 5);
  CHECK(empty.data().rows() == 0);

  const auto g2 = build_graph(std::vector<BuildingFootprint>{square("tall", 0, 0, 20.0), square("short", 45, 0, 5.0)});
  const auto s = edge_attribute_series(g2, hourly(noon, 2));
  CHECK(s.edges() == 1);
  CHECK(s.steps() == 2);
  CHECK(s.data().rows() == 2);
  CHECK(s.data().cols() == 4);

  // 01:00-06:00 UTC is night in Atlanta in December.
  const auto night = edge_attribute_series(g2, hourly(UtcInstant::parse("2016-12-21T01:00:00Z"), 6));
  CHECK(night.data().col(0).cwiseAbs().maxCoeff() == 0.0);

  const std::vector<UtcInstant> none;
  try {
    edge_attribute_series(g2, none);
    FAIL("expected EmptyTimeline");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyTimeline);
  }
  const std::vector<UtcInstant> gap = {noon, noon.plus_hours(2)};
  CHECK_THROWS_AS(edge_attribute_series(g2, gap), Error);
}

TEST_CASE("series rows agree with single-edge evaluation") {
  const auto g = build_graph(testing::six_building_city());
  const auto ts = hourly(UtcInstant::parse("2016-03-20T10:00:00Z"), 30);
  const auto s = edge_attribute_series(g, ts);
  for (Index k = 0; k < g.edge_count(); ++k) {
    for (Index t = 0; t < s.steps(); ++t) {
      const auto a = edge_attributes(g, g.edges()[k], ts[t]);
      const auto b = s.at(k, t);
      REQUIRE(a.radiation == b.radiation);
      REQUIRE(a.angle_rad == b.angle_rad);
      REQUIRE(a.binary == b.binary);
      REQUIRE(a.distance_m == b.distance_m);
    }
  }
}

TEST_CASE("graph invariants on random layouts") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(0.0, 200.0), height(3.0, 40.0), shift(-3000.0, 3000.0);
  const auto ts = hourly(UtcInstant::parse("2016-07-04T08:00:00Z"), 24);
  for (int trial = 0; trial < 15; ++trial) {
    std::vector<BuildingFootprint> fs;
    for (int i = 0; i < 10; ++i) fs.push_back(square(std::string(1, static_cast<char>('a' + i)), pos(rng), pos(rng), height(rng), 6.0));
    const auto g = build_graph(fs);

    Index total = 0;
    for (const auto& n : g.nodes()) total += indegree(g, n.id);
    REQUIRE(total == g.edge_count());

    auto shuffled = fs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto gs = build_graph(shuffled);
    REQUIRE(gs.edges() == g.edges());
    REQUIRE(gs.fingerprint() == g.fingerprint());

    // Translate the whole layout a few km; keep the original polygons' local shape.
    const double dx = shift(rng), dy = shift(rng);
    std::vector<BuildingFootprint> moved;
    for (const auto& f : fs) {
      const auto c = centroid(f);
      const double m_per_deg = kEarthRadiusM * kPi<double> / 180.0;
      const double east = (c.longitude - testing::kOrigin.longitude) * m_per_deg *
                          std::cos(deg_to_rad(testing::kOrigin.latitude));
      const double north = (c.latitude - testing::kOrigin.latitude) * m_per_deg;
      moved.push_back(square(f.id, east + dx, north + dy, *f.height_m, 6.0));
    }
    const auto gm = build_graph(moved);
    // The local east/north frame is not exactly isometric after a shift of a few km,
    // so pairs within 0.1% of the threshold may legitimately flip.
    for (Index u = 0; u < g.node_count(); ++u) {
      for (Index v = 0; v < g.node_count(); ++v) {
        if (u == v) continue;
        const double d = distance_m(g.nodes()[u].centroid, g.nodes()[v].centroid);
        if (std::abs(d - 3.0 * g.nodes()[u].height_m) < 1e-3 * d) continue;
        const bool a = std::any_of(g.edges().begin(), g.edges().end(), [&](auto& e) { return e.src == u && e.dst == v; });
        const bool b = std::any_of(gm.edges().begin(), gm.edges().end(), [&](auto& e) { return e.src == u && e.dst == v; });
        REQUIRE(a == b);
      }
    }

    const auto s = edge_attribute_series(g, ts);
    for (Index r = 0; r < s.data().rows(); ++r) {
      const auto row = s.data().row(r);
      if (row(2) == 1.0) {
        REQUIRE(row(1) < kPi<double> / 2.0);
        REQUIRE(row(0) > 0.0);
      }
      REQUIRE(row(1) >= 0.0);
      REQUIRE(row(1) <= kPi<double>);
    }
  }
}

TEST_CASE("export and import round trip") {
  const auto g = build_graph(testing::six_building_city());
  const auto dir = std::filesystem::temp_directory_path() / "shadowgrid_graph_test";
  std::filesystem::remove_all(dir);
  export_graph(g, dir);
  const auto back = import_graph(dir / "graph.json");
  CHECK(edge_names(back) == edge_names(g));
  CHECK(back.fingerprint() == g.fingerprint());
  CHECK(std::filesystem::exists(dir / "flowmap.csv"));
  std::filesystem::remove_all(dir);

  const auto empty = graph_from_json(graph_to_json(DependencyGraph{}));
  CHECK(empty.node_count() == 0);
  CHECK(graph_to_json(DependencyGraph{}).find("\"edges\": []") != std::string::npos);

  const auto pair = build_graph(std::vector<BuildingFootprint>{square("tall", 0, 0, 20.0), square("short", 45, 0, 5.0)});
  const auto csv = graph_to_flowmap_csv(pair);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  CHECK(csv.rfind("origin,dest,count\ntall,short,0.0222", 0) == 0);
  CHECK_THROWS_AS(graph_from_json("{\"nodes\": 3}"), Error);
}
