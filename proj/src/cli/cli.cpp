// SPDX-License-Identifier: Apache-2.0
#include "shadowgrid/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <cstdlib>
#include <set>
#include <thread>

#include "shadowgrid/dataset/csv.hpp"
#include "shadowgrid/dataset/dataset.hpp"
#include "shadowgrid/dataset/synth.hpp"
#include "shadowgrid/error.hpp"
#include "shadowgrid/graph.hpp"

namespace shadowgrid {

namespace fs = std::filesystem;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::IoError: return kExitIo;
    case ErrorKind::NumericFailure: return kExitNumeric;
    default: return kExitValidation;
  }
}

// --- configuration -------------------------------------------------------------

namespace {

template <typename T>
T get_as(const nlohmann::json& value, std::string_view key) {
  try {
    return value.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, fmt::format("config '{}': {}", key, e.what()));
  }
}

void require_object(const nlohmann::json& j, std::string_view what) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidConfig, fmt::format("config '{}' must be an object", what));
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  require_object(j, "<root>");
  for (const auto& [key, value] : j.items()) {
    if (key == "exclusions") {
      c.exclusions = get_as<std::vector<std::string>>(value, key);
    } else if (key == "split") {
      require_object(value, key);
      for (const auto& [k, v] : value.items()) {
        if (k == "train") c.split.train = get_as<double>(v, "split.train");
        else if (k == "val") c.split.val = get_as<double>(v, "split.val");
        else if (k == "test") c.split.test = get_as<double>(v, "split.test");
        else throw Error(ErrorKind::InvalidConfig, fmt::format("config: unknown key 'split.{}'", k));
      }
      c.split.validate();
    } else if (key == "window") {
      c.window = get_as<Index>(value, key);
      if (c.window < 1) throw Error(ErrorKind::InvalidConfig, "config 'window' must be >= 1");
    } else if (key == "utc_offset_hours") {
      c.utc_offset_hours = get_as<double>(value, key);
      if (!(std::abs(c.utc_offset_hours) <= 14.0)) {
        throw Error(ErrorKind::InvalidConfig, "config 'utc_offset_hours' must lie in [-14, 14]");
      }
    } else if (key == "floor_height_m") {
      c.floor_height_m = get_as<double>(value, key);
      if (!(c.floor_height_m > 0.0)) throw Error(ErrorKind::InvalidConfig, "config 'floor_height_m' must be > 0");
    } else if (key == "synth") {
      require_object(value, key);
      (void)SynthConfig::from_json(value);
      c.synth = value;
    } else if (key == "models") {
      require_object(value, key);
      for (const auto& [name, hyper] : value.items()) {
        c.models[name] = hyper;
        (void)make_forecaster(name, c.model_config(name));
      }
    } else if (key == "training") {
      require_object(value, key);
      for (const auto& [k, v] : value.items()) {
        if (k == "max_epochs") c.training.max_epochs = get_as<Index>(v, "training.max_epochs");
        else if (k == "patience") c.training.patience = get_as<Index>(v, "training.patience");
        else if (k == "batch_size") c.training.batch_size = get_as<Index>(v, "training.batch_size");
        else if (k == "learning_rate") c.training.learning_rate = get_as<double>(v, "training.learning_rate");
        else throw Error(ErrorKind::InvalidConfig, fmt::format("config: unknown key 'training.{}'", k));
      }
      if (c.training.max_epochs < 1 || c.training.patience < 1 || c.training.batch_size < 1 ||
          !(c.training.learning_rate > 0.0)) {
        throw Error(ErrorKind::InvalidConfig, "config 'training' values must be positive");
      }
    } else if (key == "ashrae_threshold") {
      c.ashrae_threshold = get_as<double>(value, key);
      if (!(c.ashrae_threshold >= 0.0)) throw Error(ErrorKind::InvalidConfig, "config 'ashrae_threshold' must be >= 0");
    } else if (key == "indegree_metric") {
      const auto m = get_as<std::string>(value, key);
      if (m == "points") c.indegree_metric = IndegreeMetric::Points;
      else if (m == "relative") c.indegree_metric = IndegreeMetric::Relative;
      else throw Error(ErrorKind::InvalidConfig, fmt::format("config 'indegree_metric': '{}' is not points|relative", m));
    } else if (key == "charts") {
      c.charts = get_as<bool>(value, key);
    } else {
      throw Error(ErrorKind::InvalidConfig, fmt::format("config: unknown key '{}'", key));
    }
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  const std::string text = read_text(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, fmt::format("{}: {}", path.string(), e.what()));
  }
  return from_json(j);
}

nlohmann::json RunConfig::model_config(const std::string& model) const {
  const auto it = models.find(model);
  nlohmann::json j = it == models.end() ? nlohmann::json::object() : it->second;
  if (model == "stgcn" && j.is_object() && !j.contains("window")) j["window"] = window;
  return j;
}

unsigned thread_budget() {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const char* env = std::getenv("SHADOWGRID_THREADS");
  if (env == nullptr || *env == '\0') return hw;
  long long v = 0;
  try {
    v = parse_integer(env, "SHADOWGRID_THREADS");
  } catch (const Error&) {
    throw Error(ErrorKind::InvalidConfig, fmt::format("SHADOWGRID_THREADS='{}' is not an integer", env));
  }
  if (v < 1) throw Error(ErrorKind::InvalidConfig, "SHADOWGRID_THREADS must be >= 1");
  return static_cast<unsigned>(std::min<long long>(v, 1024));
}

// --- prediction files ----------------------------------------------------------------

std::string predictions_to_csv(const ForecastProblem& problem, std::span<const Index> targets,
                               const std::vector<ModelPredictions>& predictions) {
  std::string out = "timestamp_utc,building_id,model,kwh\n";
  for (const auto& p : predictions) {
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const auto stamp = problem.timestamps[static_cast<std::size_t>(targets[i])].iso8601();
      for (Index b = 0; b < problem.buildings(); ++b) {
        out += fmt::format("{},{},{},{}\n", stamp, problem.ids[static_cast<std::size_t>(b)], p.model,
                           format_double(p.predicted(b, static_cast<Index>(i))));
      }
    }
  }
  return out;
}

std::vector<ModelPredictions> predictions_from_csv(const ForecastProblem& problem, std::span<const Index> targets,
                                                   std::string_view text) {
  const auto table = parse_csv(text, "predictions");
  const auto c_time = table.column("timestamp_utc"), c_id = table.column("building_id"),
             c_model = table.column("model"), c_kwh = table.column("kwh");
  std::map<std::string, Index> hour_of;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    hour_of[problem.timestamps[static_cast<std::size_t>(targets[i])].iso8601()] = static_cast<Index>(i);
  }
  std::map<std::string, Index> building_of;
  for (std::size_t b = 0; b < problem.ids.size(); ++b) building_of[problem.ids[b]] = static_cast<Index>(b);

  std::map<std::string, std::pair<RowMatrixXd, Index>> by_model;
  const Index n = problem.buildings(), hours = static_cast<Index>(targets.size());
  for (const auto& row : table.rows) {
    const auto stamp = UtcInstant::parse(row[c_time]).iso8601();
    const auto h = hour_of.find(stamp);
    if (h == hour_of.end()) {
      throw Error(ErrorKind::ShapeMismatch, fmt::format("predictions: {} is not a test hour", row[c_time]));
    }
    const auto b = building_of.find(row[c_id]);
    if (b == building_of.end()) throw Error(ErrorKind::UnknownBuilding, fmt::format("predictions: '{}'", row[c_id]));
    auto [it, fresh] = by_model.try_emplace(row[c_model], RowMatrixXd::Constant(n, hours, std::nan("")), 0);
    auto& [m, filled] = it->second;
    if (!std::isnan(m(b->second, h->second))) {
      throw Error(ErrorKind::ShapeMismatch,
                  fmt::format("predictions: duplicate row for {} {} {}", row[c_model], row[c_id], row[c_time]));
    }
    m(b->second, h->second) = parse_double(row[c_kwh], "predictions kwh");
    ++filled;
  }
  std::vector<ModelPredictions> out;
  for (auto& [model, entry] : by_model) {
    if (entry.second != n * hours) {
      throw Error(ErrorKind::ShapeMismatch, fmt::format("predictions for '{}' cover {} of {} building-hours", model,
                                                        entry.second, n * hours));
    }
    out.push_back(ModelPredictions{model, std::move(entry.first)});
  }
  return out;
}

// --- commands ----------------------------------------------------------------------------

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  std::string out;
};

RunConfig load_config(const Common& c) { return c.config.empty() ? RunConfig{} : RunConfig::load(c.config); }

std::string indegree_histogram(const DependencyGraph& g) {
  std::map<Index, Index> hist;
  for (Index v = 0; v < g.node_count(); ++v) ++hist[static_cast<Index>(g.in_edges(v).size())];
  std::string out = "indegree,count\n";
  for (const auto& [k, count] : hist) out += fmt::format("{},{}\n", k, count);
  return out;
}

int cmd_build_graph(const Common& common, const std::string& footprints_path, const std::string& data_dir,
                    std::ostream& out) {
  const RunConfig config = load_config(common);
  if (footprints_path.empty() == data_dir.empty()) {
    throw Error(ErrorKind::InvalidConfig, "build-graph needs exactly one of --footprints or --data");
  }
  const fs::path path = footprints_path.empty() ? DatasetPaths::in_directory(data_dir).footprints : fs::path(footprints_path);
  auto footprints = read_footprints(path);
  std::erase_if(footprints, [&](const BuildingFootprint& f) {
    return std::find(config.exclusions.begin(), config.exclusions.end(), f.id) != config.exclusions.end();
  });
  const auto graph = build_graph(footprints, config.floor_height_m);
  export_graph(graph, common.out);
  out << fmt::format("nodes {}\nedges {}\n", graph.node_count(), graph.edge_count()) << indegree_histogram(graph);
  out << fmt::format("wrote {} and {}\n", (fs::path(common.out) / "graph.json").string(),
                     (fs::path(common.out) / "flowmap.csv").string());
  return kExitOk;
}

int cmd_synth(const Common& common, std::ostream& out) {
  const RunConfig config = load_config(common);
  SynthConfig sc = SynthConfig::from_json(config.synth);
  sc.utc_offset_hours = config.utc_offset_hours;
  const auto city = synth_generate(sc, common.seed);
  write_synth(city, common.out);
  export_graph(city.graph, common.out);
  write_text(fs::path(common.out) / "synth_config.json", sc.to_json().dump(2) + "\n");
  out << fmt::format("buildings {}\nhours {}\nedges {}\nmean coupling kwh {:.6f}\nwrote {}\n", sc.buildings, sc.hours,
                     city.graph.edge_count(), city.coupling.size() ? city.coupling.mean() : 0.0, common.out);
  return kExitOk;
}

struct Loaded {
  Dataset data;
  ForecastProblem problem;
};

/// `g` without the excluded buildings. The shadow rule is pairwise, so this
/// equals rebuilding the graph from the remaining footprints.
DependencyGraph drop_excluded(const DependencyGraph& g, const std::vector<std::string>& excluded) {
  std::vector<Index> remap(static_cast<std::size_t>(g.node_count()), -1);
  std::vector<GraphNode> nodes;
  for (Index i = 0; i < g.node_count(); ++i) {
    const auto& n = g.nodes()[static_cast<std::size_t>(i)];
    if (std::find(excluded.begin(), excluded.end(), n.id) != excluded.end()) continue;
    remap[static_cast<std::size_t>(i)] = static_cast<Index>(nodes.size());
    nodes.push_back(n);
  }
  if (static_cast<Index>(nodes.size()) == g.node_count()) return g;
  std::vector<DependencyEdge> edges;
  for (const auto& e : g.edges()) {
    const Index s = remap[static_cast<std::size_t>(e.src)], d = remap[static_cast<std::size_t>(e.dst)];
    if (s >= 0 && d >= 0) edges.push_back({s, d, e.distance_m});
  }
  return DependencyGraph(std::move(nodes), std::move(edges));
}

Loaded load_problem(const RunConfig& config, const std::string& data_dir, const std::string& graph_path) {
  Loaded l;
  IngestOptions options;
  options.exclusions = config.exclusions;
  options.utc_offset_hours = config.utc_offset_hours;
  l.data = ingest(DatasetPaths::in_directory(data_dir), options);
  fs::path gp = graph_path.empty() ? fs::path(data_dir) / "graph.json" : fs::path(graph_path);
  const DependencyGraph graph =
      (graph_path.empty() && !fs::exists(gp)) ? build_graph(l.data.footprints, config.floor_height_m)
                                                : drop_excluded(import_graph(gp), config.exclusions);
  l.problem = make_problem(l.data, graph, config.window, config.split);
  return l;
}

std::string log_to_csv(const std::vector<TrainingLogRow>& log) {
  std::string out = "epoch,building,train_loss,val_mape_pct\n";
  for (const auto& r : log) {
    out += fmt::format("{},{},{},{}\n", r.epoch, r.building, format_double(r.train_loss),
                       std::isnan(r.val_mape) ? std::string() : format_double(r.val_mape));
  }
  return out;
}

int cmd_train(const Common& common, const std::string& data_dir, const std::string& graph_path,
              const std::string& model_name, std::ostream& out) {
  const RunConfig config = load_config(common);
  auto model = make_forecaster(model_name, config.model_config(model_name));
  const auto loaded = load_problem(config, data_dir, graph_path);
  const auto& p = loaded.problem;

  TrainOptions options = config.training;
  options.seed = common.seed;
  options.threads = thread_budget();
  std::vector<TrainingLogRow> log;
  model->fit(p, options, log);

  const fs::path dir = fs::path(common.out) / model_name;
  fs::create_directories(dir);
  save_checkpoint(*model, p, dir);
  write_text(dir / "training_log.csv", log_to_csv(log));

  out << fmt::format("model {}\ntrain windows {}\nval windows {}\n", model_name, p.windows.train.size(),
                     p.windows.val.size());
  const auto joint = std::count_if(log.begin(), log.end(), [](const auto& r) { return r.building == "all"; });
  if (joint > 0) {
    out << fmt::format("epochs {}\nfirst train loss {}\nlast train loss {}\n", joint, format_double(log.front().train_loss),
                       format_double(log.back().train_loss));
  }
  out << fmt::format("checkpoint {}\n", dir.string());
  return kExitOk;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size() && !s.empty()) {
    const auto comma = s.find(',', pos);
    const auto end = comma == std::string::npos ? s.size() : comma;
    if (end > pos) out.push_back(s.substr(pos, end - pos));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

int cmd_eval(const Common& common, const std::string& data_dir, const std::string& graph_path,
             const std::string& checkpoints, const std::string& model_filter, const std::string& predictions_path,
             std::ostream& out) {
  const RunConfig config = load_config(common);
  const auto loaded = load_problem(config, data_dir, graph_path);
  const auto& p = loaded.problem;
  const auto& test = p.windows.test;
  if (test.empty()) throw Error(ErrorKind::InvalidConfig, "the test split is empty");

  const auto wanted = split_list(model_filter);
  auto selected = [&](const std::string& name) {
    return wanted.empty() || std::find(wanted.begin(), wanted.end(), name) != wanted.end();
  };

  std::vector<ModelPredictions> preds;
  if (!checkpoints.empty()) {
    const fs::path root(checkpoints);
    if (!fs::is_directory(root)) throw Error(ErrorKind::IoError, fmt::format("{} is not a directory", checkpoints));
    std::vector<fs::path> dirs;
    if (fs::exists(root / "model.json")) dirs.push_back(root);
    for (const auto& entry : fs::directory_iterator(root)) {
      if (entry.is_directory() && fs::exists(entry.path() / "model.json")) dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& dir : dirs) {
      auto model = load_checkpoint(dir, p);
      if (!selected(model->name())) continue;
      preds.push_back(ModelPredictions{model->name(), model->predict(p, test)});
    }
  }
  if (!predictions_path.empty()) {
    for (auto& m : predictions_from_csv(p, test, read_text(predictions_path))) {
      if (selected(m.model)) preds.push_back(std::move(m));
    }
  }
  if (preds.empty()) throw Error(ErrorKind::InvalidConfig, "no models to evaluate (give --checkpoints or --predictions)");
  std::set<std::string> seen;
  for (const auto& m : preds) {
    if (!seen.insert(m.model).second) {
      throw Error(ErrorKind::InvalidInput, fmt::format("model '{}' appears more than once", m.model));
    }
  }

  std::vector<UtcInstant> stamps;
  for (Index t : test) stamps.push_back(p.timestamps[static_cast<std::size_t>(t)]);
  const auto seasons = season_map(stamps, config.utc_offset_hours);
  const RowMatrixXd actual = p.actual(test);
  const auto report = per_building_report(preds, actual, p.ids, stamps, seasons, config.ashrae_threshold);

  const fs::path dir(common.out);
  write_text(dir / "overall.csv", overall_csv(report));
  write_text(dir / "per_building.csv", per_building_csv(report));
  write_text(dir / "ashrae.csv", ashrae_csv(report));
  write_text(dir / "predictions.csv", predictions_to_csv(p, test, preds));

  std::vector<ImprovementTable> tables;
  std::vector<std::string> notes;
  std::vector<std::string> references;
  for (const auto& m : report.models) {
    if (m.model != "stgcn") references.push_back(m.model);
  }
  if (report.has_model("stgcn") && !references.empty()) {
    std::vector<Season> present;
    for (Season s : kSeasons) {
      if (std::find(seasons.begin(), seasons.end(), s) != seasons.end()) present.push_back(s);
    }
    tables.push_back(seasonal_improvement(report, "stgcn", references, present));
    tables.push_back(indegree_improvement(report, p.graph, "stgcn", references, config.indegree_metric));
    write_text(dir / "seasonal_improvement.csv", improvement_csv(tables[0]));
    write_text(dir / "indegree_improvement.csv", improvement_csv(tables[1]));
  } else {
    notes.push_back("improvement tables omitted: they need stgcn and at least one reference model");
  }
  auto bundle = report_json(report, tables);
  bundle["notes"] = notes;
  write_text(dir / "report.json", bundle.dump(2) + "\n");

  if (config.charts) {
    for (Index b = 0; b < p.buildings(); ++b) {
      write_text(dir / "charts" / (p.ids[static_cast<std::size_t>(b)] + ".svg"),
                 building_chart_svg(report, preds, actual, b));
    }
  }

  out << fmt::format("test hours {}\nbuildings {}\n", test.size(), p.buildings());
  out << fmt::format("{:<10} {:>12} {:>10} {:>14} {:>7}\n", "model", "rmse_kwh", "mape_pct", "rmse_variance", "ashrae");
  for (const auto& m : report.models) {
    out << fmt::format("{:<10} {:>12.6f} {:>10.6f} {:>14.6f} {:>3}/{:<3}\n", m.model, m.rmse, m.mape, m.rmse_variance,
                       m.ashrae_pass.size(), m.buildings.size());
  }
  for (const auto& n : notes) out << "note: " << n << '\n';
  out << fmt::format("wrote {}\n", dir.string());
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Shadow-aware building energy forecasting"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "shadowgrid 1.0.0");

  Common common;
  auto add_common = [&](CLI::App* sub, bool seed) {
    sub->add_option("--config", common.config, "JSON run configuration");
    sub->add_option("--out", common.out, "Output directory")->required();
    if (seed) sub->add_option("--seed", common.seed, "Random seed");
  };

  std::string footprints, data, graph, model, checkpoints, models, predictions;

  auto* build = app.add_subcommand("build-graph", "Build the shadow dependency graph from footprints");
  add_common(build, false);
  build->add_option("--footprints", footprints, "GeoJSON footprint file");
  build->add_option("--data", data, "Dataset directory holding footprints.geojson");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic city with known shading coupling");
  add_common(synth, true);

  auto* train = app.add_subcommand("train", "Train one model and write its checkpoint");
  add_common(train, true);
  train->add_option("--data", data, "Dataset directory")->required();
  train->add_option("--graph", graph, "Graph JSON (default: <data>/graph.json)");
  train->add_option("--model", model, fmt::format("One of: {}", fmt::join(forecaster_names(), ", ")))->required();

  auto* eval = app.add_subcommand("eval", "Evaluate checkpoints on the test split");
  add_common(eval, false);
  eval->add_option("--data", data, "Dataset directory")->required();
  eval->add_option("--graph", graph, "Graph JSON (default: <data>/graph.json)");
  eval->add_option("--checkpoints", checkpoints, "Directory of checkpoints (one per subdirectory)");
  eval->add_option("--models", models, "Comma-separated subset of models to evaluate");
  eval->add_option("--predictions", predictions, "Extra predictions, timestamp_utc,building_id,model,kwh");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::FileError)) {
      err << "error: " << e.what() << '\n';
      return kExitIo;
    }
    (void)app.exit(e, out, err);
    return kExitValidation;
  }

  try {
    if (*build) return cmd_build_graph(common, footprints, data, out);
    if (*synth) return cmd_synth(common, out);
    if (*train) return cmd_train(common, data, graph, model, out);
    if (*eval) return cmd_eval(common, data, graph, checkpoints, models, predictions, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitValidation;
}

}  // namespace shadowgrid
