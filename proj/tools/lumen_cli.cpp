// lumen command-line tool. Thin wrapper over the C API.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lumen/lumen.h"

namespace {

struct Failure {
  lumen_status status;
  std::string message;
};

void check(lumen_status s) {
  if (s != LUMEN_OK) throw Failure{s, lumen_last_error()};
}

// Takes ownership of a C string from the library.
std::string take(char* s) {
  if (!s) return {};
  std::string out(s);
  lumen_string_free(s);
  return out;
}

class Workspace {
 public:
  Workspace(const std::string& dir, bool create) { check(lumen_workspace_open(dir.c_str(), create, &ws_)); }
  ~Workspace() { lumen_workspace_close(ws_); }
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;
  lumen_workspace* get() { return ws_; }

 private:
  lumen_workspace* ws_ = nullptr;
};

std::vector<double> parse_split(const std::string& text) {
  std::vector<double> out;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, ':')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw Failure{LUMEN_E_INVALID_ARGUMENT, "--split expects three ratios like 0.7:0.15:0.15"};
    }
  }
  if (out.size() != 3) throw Failure{LUMEN_E_INVALID_ARGUMENT, "--split expects three ratios like 0.7:0.15:0.15"};
  return out;
}

void print_line(const std::string& s) {
  std::fwrite(s.data(), 1, s.size(), stdout);
  if (s.empty() || s.back() != '\n') std::fputc('\n', stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lumen: nighttime-light pollution assessment of residential areas"};
  app.set_version_flag("--version", std::string(lumen_version()));
  app.require_subcommand(1);

  std::string workspace;
  auto add_ws = [&](CLI::App* sub) {
    sub->add_option("-w,--workspace", workspace, "Workspace directory")->envname("LUMEN_WORKSPACE");
  };

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Parse POIs (and an NTL raster) into a workspace");
  std::string poi_path, ntl_path;
  ingest->add_option("--poi", poi_path, "POI CSV (id,lon,lat,category,ntl)")->required();
  ingest->add_option("--ntl", ntl_path, "ESRI ASCII grid used to fill missing ntl");
  ingest->add_option("--out,-w,--workspace", workspace, "Workspace directory")->envname("LUMEN_WORKSPACE");

  // assess
  auto* assess = app.add_subcommand("assess", "Extract residential areas and compute pollution indices");
  add_ws(assess);
  double bandwidth = 1500.0, side = 2000.0;
  unsigned threads = 0;
  assess->add_option("--bandwidth", bandwidth, "Influence bandwidth in metres")->capture_default_str();
  assess->add_option("--side", side, "Area side length in metres")->capture_default_str();
  assess->add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();

  // cluster
  auto* cluster = app.add_subcommand("cluster", "Fit k-means pollution levels");
  add_ws(cluster);
  int k = 4;
  std::uint64_t cluster_seed = 0;
  cluster->add_option("--k", k, "Number of levels")->capture_default_str();
  cluster->add_option("--seed", cluster_seed, "k-means++ seed")->capture_default_str();

  // dml
  auto* dml = app.add_subcommand("dml", "Estimate per-category treatment effects by double machine learning");
  add_ws(dml);
  std::string dml_category, split_text;
  int folds = 3;
  std::uint64_t dml_seed = 0;
  double l1_ratio = 0.5;
  bool drop_missing = false;
  dml->add_option("--category", dml_category, "Treated category (default: all nine)");
  dml->add_option("--folds", folds, "Cross-fitting folds")->capture_default_str();
  dml->add_option("--seed", dml_seed, "Fold assignment seed")->capture_default_str();
  dml->add_option("--l1-ratio", l1_ratio, "Elastic-net mixing")->capture_default_str();
  auto* split_opt = dml->add_option("--split", split_text, "Holdout diagnostics split, train:val:test")
                        ->expected(0, 1)
                        ->default_str("0.7:0.15:0.15");
  dml->add_flag("--drop-missing", drop_missing, "Drop areas without the treated category");

  // whatif
  auto* whatif = app.add_subcommand("whatif", "Run an intervention scenario against the baseline");
  add_ws(whatif);
  std::string spec_path, whatif_area;
  bool all_maps = false, quiet = false;
  whatif->add_option("--spec", spec_path, "Scenario JSON")->required();
  whatif->add_option("--area", whatif_area, "Area used for map metrics (default: highest score)");
  whatif->add_flag("--all-maps", all_maps, "Pool map metrics over every area");
  whatif->add_flag("-q,--quiet", quiet, "Do not print the report");

  // render
  auto* render = app.add_subcommand("render", "Render an area's Voronoi influence map as PPM");
  add_ws(render);
  std::string render_area, render_out;
  int size = 256;
  render->add_option("--area", render_area, "Area id")->required();
  render->add_option("--size", size, "Image side in pixels")->capture_default_str();
  render->add_option("--out", render_out, "Output file (default: maps/<area>.ppm)");

  // plots
  auto* plots = app.add_subcommand("plots", "Export an area's Voronoi plots as JSON");
  add_ws(plots);
  std::string plots_area;
  plots->add_option("--area", plots_area, "Area id")->required();

  // metrics
  auto* metrics = app.add_subcommand("metrics", "Compare two PPM images (MAE, MSE, PSNR, RASE)");
  std::string img_a, img_b;
  metrics->add_option("--a", img_a, "Reference image")->required();
  metrics->add_option("--b", img_b, "Compared image")->required();

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic city POI CSV");
  std::string synth_spec, synth_out;
  synth->add_option("--spec", synth_spec, "Synthetic city JSON")->required();
  synth->add_option("--out", synth_out, "Output CSV")->required();

  // losses
  auto* losses = app.add_subcommand("losses", "Loss-kernel utilities");
  bool selftest = false;
  std::uint64_t loss_seed = 0;
  int points = 100;
  losses->add_flag("--selftest", selftest, "Check analytic gradients against finite differences")->required();
  losses->add_option("--seed", loss_seed)->capture_default_str();
  losses->add_option("--points", points, "Random points per kernel")->capture_default_str();

  // serve
  auto* serve = app.add_subcommand("serve", "Serve the workspace over HTTP");
  add_ws(serve);
  int port = 8080;
  std::string host = "127.0.0.1", cors_origin;
  std::size_t max_areas = 50000;
  int ttl = 1800;
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--cors-origin", cors_origin, "Origin allowed by CORS");
  serve->add_option("--max-areas", max_areas, "Scenario budget in areas")->capture_default_str();
  serve->add_option("--session-ttl", ttl, "Scenario session lifetime in seconds")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  auto need_ws = [&]() {
    if (workspace.empty()) throw Failure{LUMEN_E_INVALID_ARGUMENT, "no workspace given; use --workspace or LUMEN_WORKSPACE"};
  };

  try {
    if (*ingest) {
      need_ws();
      Workspace ws(workspace, true);
      char* out = nullptr;
      check(lumen_ingest(ws.get(), poi_path.c_str(), ntl_path.empty() ? nullptr : ntl_path.c_str(), &out));
      print_line(take(out));
    } else if (*assess) {
      need_ws();
      Workspace ws(workspace, false);
      char* out = nullptr;
      check(lumen_assess(ws.get(), bandwidth, side, threads, &out));
      print_line(take(out));
    } else if (*cluster) {
      need_ws();
      Workspace ws(workspace, false);
      char* out = nullptr;
      check(lumen_cluster(ws.get(), k, cluster_seed, &out));
      print_line(take(out));
    } else if (*dml) {
      need_ws();
      Workspace ws(workspace, false);
      lumen_dml_options o;
      lumen_dml_options_init(&o);
      if (!dml_category.empty()) o.category = dml_category.c_str();
      o.folds = folds;
      o.seed = dml_seed;
      o.l1_ratio = l1_ratio;
      o.drop_missing = drop_missing ? 1 : 0;
      std::vector<double> split;
      if (split_opt->count() > 0) {
        split = parse_split(split_text.empty() ? "0.7:0.15:0.15" : split_text);
        o.split = split.data();
      }
      char* out = nullptr;
      check(lumen_dml(ws.get(), &o, &out));
      print_line(take(out));
    } else if (*whatif) {
      need_ws();
      Workspace ws(workspace, false);
      char* out = nullptr;
      check(lumen_whatif(ws.get(), spec_path.c_str(), whatif_area.empty() ? nullptr : whatif_area.c_str(),
                         all_maps ? 1 : 0, &out));
      const std::string report = take(out);
      if (!quiet) std::fwrite(report.data(), 1, report.size(), stdout);
    } else if (*render) {
      need_ws();
      Workspace ws(workspace, false);
      char* out = nullptr;
      check(lumen_render(ws.get(), render_area.c_str(), size, render_out.empty() ? nullptr : render_out.c_str(),
                         &out));
      print_line(take(out));
    } else if (*plots) {
      need_ws();
      Workspace ws(workspace, false);
      char* out = nullptr;
      check(lumen_plots(ws.get(), plots_area.c_str(), &out));
      print_line(take(out));
    } else if (*metrics) {
      char* out = nullptr;
      check(lumen_metrics(img_a.c_str(), img_b.c_str(), &out));
      std::fputs(take(out).c_str(), stdout);
    } else if (*synth) {
      char* out = nullptr;
      check(lumen_synth(synth_spec.c_str(), synth_out.c_str(), &out));
      print_line(take(out));
    } else if (*losses) {
      char* out = nullptr;
      int passed = 0;
      check(lumen_losses_selftest(loss_seed, points, &out, &passed));
      std::fputs(take(out).c_str(), stdout);
      if (!passed) {
        std::fprintf(stderr, "lumen: gradient self-test failed\n");
        return 1;
      }
    } else if (*serve) {
      need_ws();
      lumen_service_options o;
      lumen_service_options_init(&o);
      if (!cors_origin.empty()) o.cors_origin = cors_origin.c_str();
      o.max_scenario_areas = max_areas;
      o.session_ttl_seconds = ttl;
      lumen_service* svc = nullptr;
      check(lumen_service_create(workspace.c_str(), &o, &svc));
      std::fprintf(stderr, "lumen: serving %s on http://%s:%d\n", workspace.c_str(), host.c_str(), port);
      const lumen_status s = lumen_service_listen(svc, host.c_str(), port);
      const std::string err = lumen_last_error();
      lumen_service_destroy(svc);
      if (s != LUMEN_OK) throw Failure{s, err};
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "lumen: error: %s\n", f.message.c_str());
    return f.status == LUMEN_E_INVALID_ARGUMENT ? 2 : 1;
  }
  std::fflush(stdout);
  return 0;
}
