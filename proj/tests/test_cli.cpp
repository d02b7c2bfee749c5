// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>

#include "city_fixture.hpp"
#include "shadowgrid/cli.hpp"
#include "shadowgrid/dataset/csv.hpp"
#include "shadowgrid/geo.hpp"

using namespace shadowgrid;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "shadowgrid");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "shadowgrid_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string first_line(const fs::path& p) {
  const auto text = read_text(p);
  return text.substr(0, text.find('\n'));
}

std::string write_config(const fs::path& dir, const std::string& json) {
  write_text(dir / "config.json", json);
  return (dir / "config.json").string();
}

constexpr const char* kSmallCity =
    R"({"synth": {"buildings": 6, "hours": 720, "start": "2016-06-01T05:00:00Z"},
        "training": {"max_epochs": 3}})";

}  // namespace

TEST_CASE("build-graph") {
  const auto dir = scratch("graph");
  SUBCASE("two buildings 25 m apart, 10 m tall") {
    const std::vector<BuildingFootprint> two{testing::square("P", 0, 0, 10.0), testing::square("Q", 25, 0, 10.0)};
    write_text(dir / "two.geojson", footprints_to_geojson(two));
    const auto r = run({"build-graph", "--footprints", (dir / "two.geojson").string(), "--out", (dir / "g").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("edges 2\n") != std::string::npos);
    CHECK(r.out.find("1,2\n") != std::string::npos);
    CHECK(fs::exists(dir / "g" / "graph.json"));
    CHECK(first_line(dir / "g" / "flowmap.csv") == "origin,dest,count");
  }
  SUBCASE("single building") {
    write_text(dir / "one.geojson", footprints_to_geojson({testing::square("P", 0, 0, 10.0)}));
    const auto r = run({"build-graph", "--footprints", (dir / "one.geojson").string(), "--out", (dir / "g").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("edges 0\n") != std::string::npos);
  }
  SUBCASE("missing file") {
    const auto r = run({"build-graph", "--footprints", (dir / "absent.geojson").string(), "--out", dir.string()});
    CHECK(r.code == 2);
  }
  SUBCASE("exclusions drop footprints") {
    const std::vector<BuildingFootprint> two{testing::square("P", 0, 0, 10.0), testing::square("Q", 25, 0, 10.0)};
    write_text(dir / "two.geojson", footprints_to_geojson(two));
    const auto cfg = write_config(dir, R"({"exclusions": ["Q"]})");
    const auto r = run({"build-graph", "--config", cfg, "--footprints", (dir / "two.geojson").string(), "--out",
                        (dir / "g").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("nodes 1\n") != std::string::npos);
  }
}

TEST_CASE("synth is reproducible and honours kappa") {
  const auto dir = scratch("synth");
  const auto cfg = write_config(dir, kSmallCity);
  REQUIRE(run({"synth", "--config", cfg, "--seed", "4", "--out", (dir / "a").string()}).code == 0);
  REQUIRE(run({"synth", "--config", cfg, "--seed", "4", "--out", (dir / "b").string()}).code == 0);
  for (const auto* name : {"meta.csv", "weather.csv", "energy.csv", "calendar.csv", "footprints.geojson",
                           "coupling_audit.csv", "graph.json"}) {
    CAPTURE(name);
    CHECK(read_text(dir / "a" / name) == read_text(dir / "b" / name));
  }
  CHECK(first_line(dir / "a" / "coupling_audit.csv") == "timestamp_utc,building_id,coupling_kwh");

  const auto zero = write_config(dir, R"({"synth": {"buildings": 6, "hours": 100, "kappa": 0}})");
  REQUIRE(run({"synth", "--config", zero, "--out", (dir / "z").string()}).code == 0);
  const auto audit = read_csv(dir / "z" / "coupling_audit.csv");
  const auto col = audit.column("coupling_kwh");
  REQUIRE(audit.rows.size() == 600);
  for (const auto& row : audit.rows) CHECK(parse_double(row[col], "audit") == 0.0);
}

TEST_CASE("configuration and argument errors map to exit codes") {
  const auto dir = scratch("errors");
  CHECK(run({}).code == 3);
  CHECK(run({"fly"}).code == 3);
  CHECK(run({"synth"}).code == 3);
  CHECK(run({"synth", "--config", (dir / "absent.json").string(), "--out", dir.string()}).code == 2);
  CHECK(run({"synth", "--config", write_config(dir, R"({"colour": 1})"), "--out", dir.string()}).code == 3);
  CHECK(run({"synth", "--config", write_config(dir, R"({"synth": {"buildings": 0}})"), "--out", dir.string()}).code ==
        3);
  CHECK(run({"synth", "--config", write_config(dir, R"({"training": {"epochs": 3}})"), "--out", dir.string()}).code ==
        3);
  CHECK(run({"synth", "--config", write_config(dir, "{not json"), "--out", dir.string()}).code == 3);
  CHECK(run({"synth", "--seed", "minus-one", "--out", dir.string()}).code == 3);
}

TEST_CASE("train and eval") {
  const auto dir = scratch("pipeline");
  const auto cfg = write_config(dir, kSmallCity);
  const auto data = (dir / "data").string(), ck = (dir / "ck").string();
  REQUIRE(run({"synth", "--config", cfg, "--seed", "2", "--out", data}).code == 0);

  SUBCASE("invalid model name") {
    const auto r = run({"train", "--config", cfg, "--data", data, "--model", "arima", "--out", ck});
    CHECK(r.code == 3);
    CHECK(r.err.find("stgcn, last_hour, average12, linreg, mlp, gbt, gru") != std::string::npos);
  }
  SUBCASE("missing dataset") {
    CHECK(run({"train", "--data", (dir / "nowhere").string(), "--model", "mlp", "--out", ck}).code == 2);
  }
  SUBCASE("divergence is a numeric failure") {
    const auto wild = write_config(dir, R"({"synth": {"buildings": 6, "hours": 720},
                                          "training": {"max_epochs": 3, "learning_rate": 1e300}})");
    CHECK(run({"train", "--config", wild, "--data", data, "--model", "mlp", "--out", ck}).code == 4);
  }
  SUBCASE("thread budget from the environment") {
    ::setenv("SHADOWGRID_THREADS", "zero", 1);
    CHECK(run({"train", "--config", cfg, "--data", data, "--model", "last_hour", "--out", ck}).code == 3);
    ::setenv("SHADOWGRID_THREADS", "2", 1);
    CHECK(thread_budget() == 2);
    CHECK(run({"train", "--config", cfg, "--data", data, "--model", "gbt", "--out", ck}).code == 0);
    ::unsetenv("SHADOWGRID_THREADS");
  }
  SUBCASE("exclusions also drop the stored graph's nodes") {
    const auto ex = write_config(dir, R"({"exclusions": ["B10003"], "training": {"max_epochs": 2}})");
    CHECK(run({"train", "--config", ex, "--data", data, "--model", "stgcn", "--out", ck}).code == 0);
    const auto r = run({"eval", "--config", ex, "--data", data, "--checkpoints", ck, "--out", (dir / "ex").string()});
    REQUIRE(r.code == 0);
    CHECK(read_text(dir / "ex" / "per_building.csv").find("B10003") == std::string::npos);
  }
  SUBCASE("full pipeline") {
    auto t = run({"train", "--config", cfg, "--data", data, "--model", "last_hour", "--out", ck});
    REQUIRE(t.code == 0);
    CHECK(fs::exists(dir / "ck" / "last_hour" / "params.json"));
    CHECK(fs::exists(dir / "ck" / "last_hour" / "model.json"));

    t = run({"train", "--config", cfg, "--data", data, "--model", "stgcn", "--out", ck, "--seed", "2"});
    REQUIRE(t.code == 0);
    const auto log = read_csv(dir / "ck" / "stgcn" / "training_log.csv");
    REQUIRE(log.rows.size() == 3);
    const auto loss = log.column("train_loss");
    CHECK(parse_double(log.rows.back()[loss], "loss") < parse_double(log.rows.front()[loss], "loss"));

    SUBCASE("one model omits the improvement tables") {
      const auto r = run({"eval", "--config", cfg, "--data", data, "--checkpoints", ck, "--models", "last_hour",
                          "--out", (dir / "one").string()});
      REQUIRE(r.code == 0);
      CHECK(r.out.find("note: improvement tables omitted") != std::string::npos);
      CHECK(!fs::exists(dir / "one" / "seasonal_improvement.csv"));
      CHECK(!fs::exists(dir / "one" / "indegree_improvement.csv"));
    }
    SUBCASE("golden headers") {
      const auto rep = dir / "rep";
      const auto r = run({"eval", "--config", cfg, "--data", data, "--checkpoints", ck, "--out", rep.string()});
      REQUIRE(r.code == 0);
      CHECK(first_line(rep / "overall.csv") ==
            "model,rmse_kwh,mape_pct,mape_excluded_hours,rmse_variance,ashrae_pass,buildings");
      CHECK(first_line(rep / "per_building.csv") ==
            "model,building_id,rmse_kwh,mape_pct,mape_excluded_hours,rmse_spring,rmse_summer,rmse_fall,rmse_winter");
      CHECK(first_line(rep / "ashrae.csv") == "model,building_id,mape_pct,threshold_pct,pass");
      CHECK(first_line(rep / "seasonal_improvement.csv") == "season,count,last_hour,average");
      CHECK(first_line(rep / "indegree_improvement.csv") == "indegree,count,last_hour,average");
      CHECK(first_line(rep / "predictions.csv") == "timestamp_utc,building_id,model,kwh");
      CHECK(fs::exists(rep / "report.json"));
      CHECK(fs::exists(rep / "charts" / "B10001.svg"));

      SUBCASE("perfect oracle predictions give a zero row") {
        std::map<std::pair<std::string, std::string>, std::string> energy;
        const auto e = read_csv(fs::path(data) / "energy.csv");
        for (const auto& row : e.rows) energy[{row[0], row[1]}] = row[2];
        const auto preds = read_csv(rep / "predictions.csv");
        std::string oracle = "timestamp_utc,building_id,model,kwh\n";
        for (const auto& row : preds.rows) {
          if (row[2] == "stgcn") oracle += row[0] + "," + row[1] + ",oracle," + energy.at({row[0], row[1]}) + "\n";
        }
        write_text(dir / "oracle.csv", oracle);
        const auto o = run({"eval", "--config", cfg, "--data", data, "--predictions", (dir / "oracle.csv").string(),
                            "--out", (dir / "orep").string()});
        REQUIRE(o.code == 0);
        const auto overall = read_text(dir / "orep" / "overall.csv");
        CHECK(overall.find("\noracle,0.000000,0.000000,") != std::string::npos);

        write_text(dir / "partial.csv", oracle.substr(0, oracle.rfind('\n', oracle.size() - 2) + 1));
        CHECK(run({"eval", "--config", cfg, "--data", data, "--predictions", (dir / "partial.csv").string(), "--out",
                   (dir / "prep").string()})
                  .code == 3);
      }
    }
    SUBCASE("reports are byte-identical across runs") {
      const auto a = dir / "ra", b = dir / "rb";
      REQUIRE(run({"eval", "--config", cfg, "--data", data, "--checkpoints", ck, "--out", a.string()}).code == 0);
      REQUIRE(run({"eval", "--config", cfg, "--data", data, "--checkpoints", ck, "--out", b.string()}).code == 0);
      for (const auto* name : {"overall.csv", "per_building.csv", "ashrae.csv", "predictions.csv", "report.json"}) {
        CAPTURE(name);
        CHECK(read_text(a / name) == read_text(b / name));
      }
    }
  }
}
