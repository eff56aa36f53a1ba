#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "core/assess.hpp"
#include "json.hpp"

namespace lumen::cluster {

using Point3 = std::array<double, 3>;

// k-means model over standardised (tnl, nld, nlsd). level_order maps a
// centroid index to its severity level; level k-1 is the most polluted.
struct LevelModel {
  int k = 0;
  std::vector<Point3> centroids;
  Point3 feature_means{};
  Point3 feature_sds{};
  std::vector<int> level_order;
  std::uint64_t seed = 0;
  double inertia = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> inertia_history;  // one entry per Lloyd iteration
};

Point3 features(const assess::PollutionIndices& ix);

LevelModel fit_kmeans(std::span<const Point3> points, int k, std::uint64_t seed, int max_iter = 300,
                      double tol = 1e-6);

int assign_level(const LevelModel& model, const Point3& raw_point);
int assign_level(const LevelModel& model, const assess::PollutionIndices& ix);

// Within-cluster sum of squares of `labels` over already-standardised points.
double partition_inertia(std::span<const Point3> points, std::span<const int> labels, int k);

nlohmann::json to_json(const LevelModel& model);
LevelModel model_from_json(const nlohmann::json& j);

}  // namespace lumen::cluster
