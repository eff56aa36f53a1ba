#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "core/assess.hpp"
#include "core/cluster.hpp"
#include "core/error.hpp"
#include "core/render.hpp"
#include "json.hpp"

namespace lumen::scenario {

struct ScaleNtl {
  Category category;
  double factor;
};
struct SetNtl {
  Category category;
  double value;
};
struct RemoveCategory {
  Category category;
};
struct AddPoi {
  ingest::Poi poi;
};

using Action = std::variant<ScaleNtl, SetNtl, RemoveCategory, AddPoi>;

struct InterventionSpec {
  std::vector<Action> actions;  // applied in order
};

// Malformed scenario specs; messages name the offending field.
class SpecError : public DomainError {
 public:
  using DomainError::DomainError;
};

// {"actions":[{"op":"scale_ntl","category":"grass","factor":0.5}, ...]}
InterventionSpec parse_spec(const nlohmann::json& j);
InterventionSpec parse_spec(const std::string& text);
inline InterventionSpec parse_spec(const char* text) { return parse_spec(std::string(text)); }
nlohmann::json to_json(const InterventionSpec& spec);

ingest::CityDataset apply_intervention(const ingest::CityDataset& dataset, const InterventionSpec& spec);

// KL(p || q) over level histograms given as counts. q is smoothed by adding
// 1e-9 per bin only when some bin has q = 0 where p > 0.
double level_kl(std::span<const double> p_hist, std::span<const double> q_hist);

// Channels in [0, 1], row-major, interleaved.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<double> data;
};
Image to_image(const render::AreaMap& map);

struct MapMetrics {
  double mae = 0.0;
  double mse = 0.0;
  double psnr = 0.0;  // +inf when the images are identical
  double rase = 0.0;
};

MapMetrics map_metrics(const Image& a, const Image& b);
// Metrics over the concatenation of several image pairs.
MapMetrics map_metrics(std::span<const Image> a, std::span<const Image> b);

// Precomputed baseline shared by every scenario run against one city.
struct Baseline {
  ingest::CityDataset dataset;
  assess::InfluenceParams params;
  std::vector<assess::ResidentialArea> areas;  // sorted by id, with member coordinates
  assess::AssessmentTable table;

  const assess::ResidentialArea* find_area(const std::string& id) const;
};
Baseline make_baseline(ingest::CityDataset dataset, const assess::InfluenceParams& params);

struct ScenarioOptions {
  std::optional<std::string> map_area;  // default: the highest-scoring baseline area
  bool all_maps = false;
  int map_size = 256;
};

struct AreaOutcome {
  std::string area_id;
  std::optional<assess::PollutionIndices> before;
  std::optional<assess::PollutionIndices> after;
};

struct ScenarioReport {
  std::vector<AreaOutcome> areas;  // sorted by id; union of both scenarios
  std::vector<double> histogram_before;
  std::vector<double> histogram_after;
  double kl = 0.0;
  std::optional<MapMetrics> metrics;
  std::vector<std::string> map_areas;
  InterventionSpec spec;
};

ScenarioReport run_scenario(const Baseline& baseline, const InterventionSpec& spec,
                            const cluster::LevelModel& level_model, const ScenarioOptions& options = {});

// Renders `area_id` under the intervention, coloured on the baseline area's
// scale so before and after maps are directly comparable.
render::AreaMap render_scenario_map(const Baseline& baseline, const ingest::CityDataset& intervened,
                                    const std::string& area_id, int size = 256);

nlohmann::json report_to_json(const ScenarioReport& report);
// Canonical serialisation shared by the CLI and the HTTP service.
std::string report_to_string(const ScenarioReport& report);

}  // namespace lumen::scenario
