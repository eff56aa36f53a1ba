#include "core/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "core/error.hpp"
#include "core/genloss.hpp"
#include "core/render.hpp"

namespace lumen::pipeline {

using nlohmann::json;
using workspace::Workspace;

namespace {

constexpr const char* kPois = "pois.csv";
constexpr const char* kRaster = "ntl.asc";
constexpr const char* kAreas = "areas.json";
constexpr const char* kIndices = "indices.csv";
constexpr const char* kLevels = "levels.json";
constexpr const char* kAte = "ate.csv";
constexpr const char* kDiagnostics = "dml_diagnostics.json";
constexpr const char* kWhatif = "whatif.json";

json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

assess::AssessmentTable load_indices(const Workspace& w) {
  std::istringstream in(w.read(kIndices));
  return assess::read_indices_csv(in);
}

cluster::LevelModel load_levels(const Workspace& w) {
  try {
    return cluster::model_from_json(json::parse(w.read(kLevels)));
  } catch (const json::exception& e) {
    throw ParseError(std::string("levels.json: ") + e.what());
  }
}

std::vector<assess::ResidentialArea> recompute_areas(const ingest::CityDataset& ds,
                                                     const assess::InfluenceParams& params) {
  assess::ExtractOptions opts;
  opts.with_plots = false;
  return assess::extract_areas(ds, params, opts);
}

// Valid area ids must name an assessed area.
assess::ResidentialArea single_area(const ingest::CityDataset& ds, const assess::InfluenceParams& params,
                                    const std::string& id, bool with_plots) {
  auto area = assess::extract_area(ds, id, params, with_plots);
  if (!area) throw NotFoundError("unknown area '" + id + "'");
  return *area;
}

bool safe_name(const std::string& id) {
  return !id.empty() && id != "." && id != ".." &&
         std::all_of(id.begin(), id.end(), [](unsigned char c) { return c >= 0x20 && c != '/' && c != '\\'; });
}

}  // namespace

ingest::CityDataset load_dataset(const Workspace& w) {
  ingest::CityDataset ds;
  std::istringstream in(w.read(kPois));
  ds.pois = ingest::parse_poi_csv(in, kPois);
  if (w.exists(kRaster)) {
    std::istringstream rin(w.read(kRaster));
    ds.raster = ingest::parse_ascii_grid(rin);
  }
  ds.name = w.root().filename().string();
  return ds;
}

assess::InfluenceParams load_params(const Workspace& w) {
  json j;
  try {
    j = json::parse(w.read(kAreas));
    assess::InfluenceParams p;
    p.bandwidth_m = j.at("params").at("bandwidth_m").get<double>();
    p.side_m = j.at("params").at("side_m").get<double>();
    p.validate();
    return p;
  } catch (const json::exception& e) {
    throw ParseError(std::string("areas.json: ") + e.what());
  }
}

std::string metrics_to_string(const scenario::MapMetrics& m) {
  json j = {{"mae", number(m.mae)}, {"mse", number(m.mse)}, {"psnr", number(m.psnr)}, {"rase", number(m.rase)}};
  return j.dump(2) + "\n";
}

std::string cmd_ingest(const fs::path& ws, const IngestOptions& opts) {
  ingest::CityDataset ds;
  ds.pois = ingest::parse_poi_csv(opts.poi_csv);
  if (opts.ntl_grid) ds.raster = ingest::parse_ascii_grid(*opts.ntl_grid);
  ingest::sample_missing(ds);
  ingest::validate(ds);

  std::ostringstream pois;
  ingest::write_poi_csv(pois, ds.pois);
  std::string raster;
  if (ds.raster) {
    std::ostringstream r;
    ingest::write_ascii_grid(r, *ds.raster);
    raster = r.str();
  }

  workspace::Lock lock(ws);
  Workspace w(ws, true);
  w.inputs() = json::object();
  w.inputs()["poi"] = {{"path", opts.poi_csv.string()}, {"sha256", workspace::sha256_file(opts.poi_csv)}};
  if (opts.ntl_grid)
    w.inputs()["ntl"] = {{"path", opts.ntl_grid->string()}, {"sha256", workspace::sha256_file(*opts.ntl_grid)}};
  if (ds.raster) {
    w.write(kRaster, raster);
  } else if (w.exists(kRaster)) {
    fs::remove(w.path(kRaster));
  }
  w.write(kPois, pois.str());
  return "ingested " + std::to_string(ds.pois.size()) + " POIs";
}

std::string cmd_assess(const fs::path& ws, const AssessOptions& opts) {
  assess::InfluenceParams params{opts.bandwidth_m, opts.side_m};
  params.validate();
  workspace::Lock lock(ws);
  Workspace w(ws);
  const auto ds = load_dataset(w);

  assess::ExtractOptions eo;
  eo.with_plots = false;
  eo.threads = opts.threads;
  const auto areas = assess::extract_areas(ds, params, eo);
  const auto table = assess::assess_areas(areas, ds, params, opts.threads);

  // Hand-assembled: the member lists dominate and nlohmann would hold a
  // second copy of every id.
  std::string aj;
  aj.reserve(areas.size() * 64);
  aj += "{\n  \"params\": " + json{{"bandwidth_m", params.bandwidth_m}, {"side_m", params.side_m}}.dump() +
        ",\n  \"areas\": [";
  for (std::size_t k = 0; k < areas.size(); ++k) {
    const auto& a = areas[k];
    json head = {{"area_id", a.center_poi_id}, {"lon", a.center_lon}, {"lat", a.center_lat}};
    json members = json::array();
    for (std::size_t m : a.members) members.push_back(ds.pois[m].id);
    head["members"] = std::move(members);
    aj += (k ? ",\n    " : "\n    ") + head.dump();
  }
  aj += areas.empty() ? "]\n}\n" : "\n  ]\n}\n";

  std::ostringstream ix;
  assess::write_indices_csv(ix, table);

  w.params()["assess"] = {{"bandwidth_m", params.bandwidth_m}, {"side_m", params.side_m}};
  w.write(kAreas, aj, {kPois});
  w.write(kIndices, ix.str(), {kPois, kAreas});
  return "assessed " + std::to_string(table.size()) + " residential areas";
}

std::string cmd_cluster(const fs::path& ws, const ClusterOptions& opts) {
  workspace::Lock lock(ws);
  Workspace w(ws);
  auto table = load_indices(w);
  w.require_fresh(kAreas);
  std::vector<cluster::Point3> pts;
  pts.reserve(table.size());
  for (const auto& [id, ix] : table) pts.push_back(cluster::features(ix));
  const auto model = cluster::fit_kmeans(pts, opts.k, opts.seed);
  std::vector<int> counts(static_cast<std::size_t>(model.k), 0);
  for (auto& [id, ix] : table) {
    ix.level = cluster::assign_level(model, ix);
    ++counts[static_cast<std::size_t>(*ix.level)];
  }
  std::ostringstream ix;
  assess::write_indices_csv(ix, table);

  w.params()["cluster"] = {{"k", opts.k}, {"seed", opts.seed}};
  w.write(kIndices, ix.str(), {kPois, kAreas});
  w.write(kLevels, cluster::to_json(model).dump(2) + "\n", {kIndices});
  std::string s = "levels:";
  for (int c : counts) s += " " + std::to_string(c);
  return s;
}

std::string cmd_dml(const fs::path& ws, const DmlOptions& opts) {
  workspace::Lock lock(ws);
  Workspace w(ws);
  const auto table = load_indices(w);
  const auto params = load_params(w);
  const auto ds = load_dataset(w);
  const auto areas = recompute_areas(ds, params);

  causal::DmlConfig cfg;
  cfg.cross_fit.folds = opts.folds;
  cfg.cross_fit.seed = opts.seed;
  cfg.cross_fit.l1_ratio = opts.l1_ratio;
  cfg.design.missing = opts.missing;

  std::vector<Category> cats;
  if (opts.category) cats.push_back(*opts.category);
  else cats.assign(kAllCategories.begin(), kAllCategories.end());

  std::vector<causal::AteEstimate> estimates;
  json diag = json::object();
  for (Category c : cats) {
    estimates.push_back(causal::run_dml(ds, areas, table, c, cfg));
    if (opts.split) {
      const auto design = causal::build_design(table, ds, areas, c, cfg.design);
      const auto d = causal::holdout_diagnostics(design, *opts.split, cfg.cross_fit);
      diag[std::string(category_name(c))] = {
          {"split", d.split},       {"n_train", d.n_train},     {"n_val", d.n_val},
          {"n_test", d.n_test},     {"alpha_y", d.alpha_y},     {"alpha_t", d.alpha_t},
          {"r2_val_y", d.r2_val_y}, {"r2_test_y", d.r2_test_y}, {"r2_val_t", d.r2_val_t},
          {"r2_test_t", d.r2_test_t}};
    }
  }

  std::ostringstream fresh;
  causal::write_ate_csv(fresh, estimates);

  // Keep rows of categories not rerun; order rows by category.
  std::vector<std::string> lines;
  auto collect = [&](const std::string& text, bool skip_rerun) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto cat = parse_category(line.substr(0, line.find(',')));
      if (!cat) throw ParseError("ate.csv: unknown category in row '" + line + "'");
      if (skip_rerun && std::find(cats.begin(), cats.end(), *cat) != cats.end()) continue;
      lines.push_back(line);
    }
  };
  if (w.is_fresh(kAte)) collect(w.read(kAte), true);
  collect(fresh.str(), false);
  std::stable_sort(lines.begin(), lines.end(), [](const std::string& a, const std::string& b) {
    return category_index(*parse_category(a.substr(0, a.find(',')))) <
           category_index(*parse_category(b.substr(0, b.find(','))));
  });
  std::string out = "category,treatment_var,outcome,theta,stderr,p,ci_low,ci_high,stars\n";
  for (const auto& l : lines) out += l + "\n";

  w.params()["dml"] = {{"folds", opts.folds}, {"seed", opts.seed}, {"l1_ratio", opts.l1_ratio}};
  w.write(kAte, out, {kPois, kAreas});
  if (opts.split) w.write(kDiagnostics, diag.dump(2) + "\n", {kPois, kAreas});
  return "estimated " + std::to_string(estimates.size()) + " categor" + (estimates.size() == 1 ? "y" : "ies") +
         ", ate.csv has " + std::to_string(lines.size()) + " rows";
}

std::string cmd_whatif(const fs::path& ws, const WhatifOptions& opts) {
  const auto spec = scenario::parse_spec(workspace::read_file(opts.spec));
  workspace::Lock lock(ws);
  Workspace w(ws);
  w.require_fresh(kIndices);
  const auto model = load_levels(w);
  const auto baseline = scenario::make_baseline(load_dataset(w), load_params(w));
  scenario::ScenarioOptions so;
  so.map_area = opts.area;
  so.all_maps = opts.all_maps;
  const auto report = scenario::run_scenario(baseline, spec, model, so);
  const std::string text = scenario::report_to_string(report);
  w.write(kWhatif, text, {kPois, kAreas, kLevels});
  return text;
}

std::string cmd_render(const fs::path& ws, const RenderOptions& opts) {
  if (!safe_name(opts.area)) throw DomainError("invalid area id '" + opts.area + "'");
  workspace::Lock lock(ws);
  Workspace w(ws);
  w.require_fresh(kIndices);
  const auto ds = load_dataset(w);
  const auto params = load_params(w);
  const auto area = single_area(ds, params, opts.area, false);
  const auto map = render::render_area(area, ds, params, render::ColorRamp::default_ramp(), opts.size, opts.size);
  const std::string bytes = render::encode_ppm(map);
  if (opts.out) {
    workspace::atomic_write(*opts.out, bytes);
    return opts.out->string();
  }
  const std::string name = "maps/" + opts.area + ".ppm";
  w.write(name, bytes, {kPois, kAreas});
  return w.path(name).string();
}

std::string cmd_plots(const fs::path& ws, const std::string& area_id) {
  if (!safe_name(area_id)) throw DomainError("invalid area id '" + area_id + "'");
  workspace::Lock lock(ws);
  Workspace w(ws);
  w.require_fresh(kIndices);
  const auto ds = load_dataset(w);
  const auto params = load_params(w);
  const auto area = single_area(ds, params, area_id, true);
  const auto infl = assess::member_influences(area, ds, params);
  json plots = json::array();
  for (std::size_t m = 0; m < area.members.size(); ++m) {
    json ring = json::array();
    for (const auto& v : area.plots[m]) ring.push_back(json::array({v.x, v.y}));
    plots.push_back({{"poi_id", infl[m].poi_id},
                     {"category", category_name(infl[m].category)},
                     {"x", area.member_xy[m].x},
                     {"y", area.member_xy[m].y},
                     {"ntl", infl[m].ntl},
                     {"distance_m", infl[m].distance_m},
                     {"influence", infl[m].influence},
                     {"area_m2", polygon_area(area.plots[m])},
                     {"polygon", std::move(ring)}});
  }
  json j = {{"area_id", area.center_poi_id},
            {"center", {{"lon", area.center_lon}, {"lat", area.center_lat}}},
            {"side_m", area.side_m},
            {"plots", std::move(plots)}};
  const std::string name = "plots/" + area_id + ".json";
  w.write(name, j.dump(2) + "\n", {kPois, kAreas});
  return w.path(name).string();
}

std::string cmd_metrics(const fs::path& a, const fs::path& b) {
  const auto ia = scenario::to_image(render::read_ppm(a));
  const auto ib = scenario::to_image(render::read_ppm(b));
  return metrics_to_string(scenario::map_metrics(ia, ib));
}

ingest::SyntheticSpec synthetic_spec_from_json(const json& j) {
  ingest::SyntheticSpec s;
  try {
    s.seed = j.value("seed", std::uint64_t{0});
    s.name = j.value("name", std::string("synthetic"));
    s.n_residential = j.at("n_residential").get<std::size_t>();
    const auto& e = j.at("extent");
    s.area_extent = {e.at("lon_min").get<double>(), e.at("lon_max").get<double>(), e.at("lat_min").get<double>(),
                     e.at("lat_max").get<double>()};
    if (j.contains("categories")) {
      for (const auto& [name, c] : j.at("categories").items()) {
        const auto cat = parse_category(name);
        if (!cat) throw DomainError("synthetic spec: unknown category '" + name + "'");
        const auto i = category_index(*cat);
        s.per_category_counts[i] = c.value("count", std::size_t{0});
        s.per_category_ntl_means[i] = c.value("ntl_mean", 0.0);
        s.per_category_ntl_sds[i] = c.value("ntl_sd", 0.0);
      }
    }
    if (j.contains("couplings")) {
      for (const auto& c : j.at("couplings")) {
        ingest::NtlCoupling cp;
        cp.source = category_from_string(c.at("source").get<std::string>());
        cp.target = category_from_string(c.at("target").get<std::string>());
        cp.radius_m = c.value("radius_m", cp.radius_m);
        cp.gain = c.value("gain", cp.gain);
        s.couplings.push_back(cp);
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("synthetic spec: ") + e.what());
  }
  return s;
}

std::string cmd_synth(const fs::path& spec_json, const fs::path& out_csv) {
  json j;
  try {
    j = json::parse(workspace::read_file(spec_json));
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("synthetic spec: ") + e.what());
  }
  const auto ds = ingest::generate_synthetic_city(synthetic_spec_from_json(j));
  std::ostringstream out;
  ingest::write_poi_csv(out, ds.pois);
  workspace::atomic_write(out_csv, out.str());
  return "wrote " + std::to_string(ds.pois.size()) + " POIs to " + out_csv.string();
}

std::string cmd_losses_selftest(std::uint64_t seed, int points, bool& passed) {
  const auto rows = genloss::gradient_selftest(seed, points);
  passed = std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.passed; });
  return genloss::format_selftest(rows);
}

WorkspaceView load_view(const fs::path& ws) {
  Workspace w(ws);
  WorkspaceView v;
  v.root = ws;
  if (!w.is_fresh(kPois)) return v;
  v.dataset = load_dataset(w);
  if (!w.is_fresh(kAreas) || !w.is_fresh(kIndices)) return v;
  v.params = load_params(w);
  v.indices = load_indices(w);
  if (w.is_fresh(kLevels)) v.levels = load_levels(w);
  if (w.is_fresh(kAte)) {
    std::istringstream in(w.read(kAte));
    v.ate = causal::read_ate_csv(in);
  }
  return v;
}

}  // namespace lumen::pipeline
