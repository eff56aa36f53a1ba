#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "core/assess.hpp"
#include "core/causal.hpp"
#include "core/cluster.hpp"
#include "core/scenario.hpp"
#include "core/workspace.hpp"
#include "json.hpp"

// Workspace commands. Each takes the workspace lock, verifies its inputs are
// present and fresh, writes its artifacts atomically and returns a one-line
// summary for the caller to print.
namespace lumen::pipeline {

namespace fs = std::filesystem;

struct IngestOptions {
  fs::path poi_csv;
  std::optional<fs::path> ntl_grid;
};
std::string cmd_ingest(const fs::path& ws, const IngestOptions& opts);

struct AssessOptions {
  double bandwidth_m = 1500.0;
  double side_m = 2000.0;
  unsigned threads = 0;
};
std::string cmd_assess(const fs::path& ws, const AssessOptions& opts);

struct ClusterOptions {
  int k = 4;
  std::uint64_t seed = 0;
};
std::string cmd_cluster(const fs::path& ws, const ClusterOptions& opts);

struct DmlOptions {
  std::optional<Category> category;  // all categories when unset
  int folds = 3;
  std::uint64_t seed = 0;
  double l1_ratio = 0.5;
  std::optional<std::array<double, 3>> split;  // holdout diagnostics
  causal::MissingPolicy missing = causal::MissingPolicy::kSentinel;
};
std::string cmd_dml(const fs::path& ws, const DmlOptions& opts);

struct WhatifOptions {
  fs::path spec;
  std::optional<std::string> area;
  bool all_maps = false;
};
// Returns the canonical report text, also written to whatif.json.
std::string cmd_whatif(const fs::path& ws, const WhatifOptions& opts);

struct RenderOptions {
  std::string area;
  int size = 256;
  std::optional<fs::path> out;  // default maps/<area>.ppm inside the workspace
};
// Returns the path written.
std::string cmd_render(const fs::path& ws, const RenderOptions& opts);

// Voronoi plots with per-member influence for one area, as plots/<area>.json.
std::string cmd_plots(const fs::path& ws, const std::string& area);

// Compares two PPM images; returns {"mae","mse","psnr","rase"} JSON.
std::string cmd_metrics(const fs::path& a, const fs::path& b);

// Synthetic city from a JSON description, written as a POI CSV.
ingest::SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);
std::string cmd_synth(const fs::path& spec_json, const fs::path& out_csv);

// Finite-difference gradient report; `passed` is set when every kernel passes.
std::string cmd_losses_selftest(std::uint64_t seed, int points, bool& passed);

// Read-only view of a workspace as used by the HTTP service. Missing or stale
// pieces are left empty.
struct WorkspaceView {
  fs::path root;
  std::optional<ingest::CityDataset> dataset;
  std::optional<assess::InfluenceParams> params;
  std::optional<assess::AssessmentTable> indices;  // as stored in indices.csv
  std::optional<cluster::LevelModel> levels;
  std::optional<std::vector<causal::AteRow>> ate;
};
WorkspaceView load_view(const fs::path& ws);

// Helpers shared with the service.
ingest::CityDataset load_dataset(const workspace::Workspace& w);
assess::InfluenceParams load_params(const workspace::Workspace& w);
std::string metrics_to_string(const scenario::MapMetrics& m);

}  // namespace lumen::pipeline
