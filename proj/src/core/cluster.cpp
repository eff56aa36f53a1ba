#include "core/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "core/error.hpp"

namespace lumen::cluster {

namespace {

double dist2(const Point3& a, const Point3& b) {
  double s = 0.0;
  for (int d = 0; d < 3; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return s;
}

Point3 standardize(const LevelModel& m, const Point3& p) {
  Point3 z;
  for (int d = 0; d < 3; ++d) z[d] = (p[d] - m.feature_means[d]) / m.feature_sds[d];
  return z;
}

int nearest(const std::vector<Point3>& centroids, const Point3& p) {
  int best = 0;
  double best_d = INFINITY;
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = dist2(centroids[c], p);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

std::vector<Point3> kmeans_pp(const std::vector<Point3>& z, int k, std::mt19937_64& rng) {
  std::vector<Point3> centers;
  std::uniform_int_distribution<std::size_t> pick(0, z.size() - 1);
  centers.push_back(z[pick(rng)]);
  std::vector<double> d2(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) d2[i] = dist2(z[i], centers[0]);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  while (static_cast<int>(centers.size()) < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t chosen = 0;
    const double target = u(rng) * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (d2[i] <= 0.0) continue;
      chosen = i;
      acc += d2[i];
      if (acc >= target) break;
    }
    centers.push_back(z[chosen]);
    for (std::size_t i = 0; i < z.size(); ++i) d2[i] = std::min(d2[i], dist2(z[i], centers.back()));
  }
  return centers;
}

}  // namespace

Point3 features(const assess::PollutionIndices& ix) { return {ix.tnl, ix.nld, ix.nlsd}; }

double partition_inertia(std::span<const Point3> points, std::span<const int> labels, int k) {
  std::vector<Point3> sums(static_cast<std::size_t>(k), Point3{});
  std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    for (int d = 0; d < 3; ++d) sums[c][d] += points[i][d];
    counts[c] += 1.0;
  }
  for (std::size_t c = 0; c < sums.size(); ++c) {
    if (counts[c] > 0)
      for (int d = 0; d < 3; ++d) sums[c][d] /= counts[c];
  }
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) s += dist2(points[i], sums[static_cast<std::size_t>(labels[i])]);
  return s;
}

LevelModel fit_kmeans(std::span<const Point3> points, int k, std::uint64_t seed, int max_iter,
                      double tol) {
  if (k < 2) throw DomainError("k must be at least 2");
  if (points.size() < static_cast<std::size_t>(k))
    throw DomainError("k-means needs at least k=" + std::to_string(k) + " points, got " +
                      std::to_string(points.size()));
  if (max_iter < 1 || !(tol >= 0.0)) throw DomainError("max_iter must be >= 1 and tol >= 0");
  for (const auto& p : points)
    for (double v : p)
      if (!std::isfinite(v)) throw DomainError("k-means input contains a non-finite value");

  LevelModel m;
  m.k = k;
  m.seed = seed;
  const double n = static_cast<double>(points.size());
  for (int d = 0; d < 3; ++d) {
    double lo = points[0][d], hi = points[0][d];
    for (const auto& p : points) lo = std::min(lo, p[d]), hi = std::max(hi, p[d]);
    if (lo == hi) throw DomainError("degenerate feature");
    double mean = 0.0;
    for (const auto& p : points) mean += p[d];
    mean /= n;
    double ss = 0.0;
    for (const auto& p : points) ss += (p[d] - mean) * (p[d] - mean);
    m.feature_means[d] = mean;
    m.feature_sds[d] = std::sqrt(ss / n);
  }

  std::vector<Point3> z(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) z[i] = standardize(m, points[i]);
  if (std::set<Point3>(z.begin(), z.end()).size() < static_cast<std::size_t>(k))
    throw DomainError("fewer distinct points than k");

  std::mt19937_64 rng(seed);
  auto centroids = kmeans_pp(z, k, rng);
  std::vector<int> label(z.size(), 0);

  for (int it = 0; it < max_iter; ++it) {
    for (std::size_t i = 0; i < z.size(); ++i) label[i] = nearest(centroids, z[i]);

    // Reseed any empty cluster at the point farthest from its own centroid.
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (int l : label) ++counts[static_cast<std::size_t>(l)];
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] != 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < z.size(); ++i) {
        if (counts[static_cast<std::size_t>(label[i])] < 2) continue;
        const double d = dist2(z[i], centroids[static_cast<std::size_t>(label[i])]);
        if (d > far_d) far_d = d, far = i;
      }
      --counts[static_cast<std::size_t>(label[far])];
      label[far] = c;
      counts[static_cast<std::size_t>(c)] = 1;
    }

    std::vector<Point3> next(static_cast<std::size_t>(k), Point3{});
    for (std::size_t i = 0; i < z.size(); ++i)
      for (int d = 0; d < 3; ++d) next[static_cast<std::size_t>(label[i])][d] += z[i][d];
    double shift = 0.0;
    for (std::size_t c = 0; c < next.size(); ++c) {
      for (int d = 0; d < 3; ++d) next[c][d] /= static_cast<double>(counts[c]);
      shift = std::max(shift, std::sqrt(dist2(next[c], centroids[c])));
    }
    centroids = std::move(next);

    double inertia = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i)
      inertia += dist2(z[i], centroids[static_cast<std::size_t>(label[i])]);
    m.inertia_history.push_back(inertia);
    m.iterations = it + 1;
    if (shift < tol) {
      m.converged = true;
      break;
    }
  }
  m.inertia = m.inertia_history.back();
  m.centroids = std::move(centroids);

  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  auto sum = [&](int c) {
    const auto& p = m.centroids[static_cast<std::size_t>(c)];
    return p[0] + p[1] + p[2];
  };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return sum(a) < sum(b); });
  m.level_order.assign(static_cast<std::size_t>(k), 0);
  for (int rank = 0; rank < k; ++rank) m.level_order[static_cast<std::size_t>(order[static_cast<std::size_t>(rank)])] = rank;
  return m;
}

int assign_level(const LevelModel& model, const Point3& raw_point) {
  const Point3 z = standardize(model, raw_point);
  int best_level = 0;
  double best_d = INFINITY;
  for (std::size_t c = 0; c < model.centroids.size(); ++c) {
    const double d = dist2(model.centroids[c], z);
    const int level = model.level_order[c];
    if (d < best_d || (d == best_d && level < best_level)) {
      best_d = d;
      best_level = level;
    }
  }
  return best_level;
}

int assign_level(const LevelModel& model, const assess::PollutionIndices& ix) {
  return assign_level(model, features(ix));
}

nlohmann::json to_json(const LevelModel& m) {
  nlohmann::json j;
  j["k"] = m.k;
  j["centroids"] = m.centroids;
  j["means"] = m.feature_means;
  j["sds"] = m.feature_sds;
  j["level_order"] = m.level_order;
  j["seed"] = m.seed;
  j["inertia"] = m.inertia;
  j["iterations"] = m.iterations;
  j["converged"] = m.converged;
  return j;
}

LevelModel model_from_json(const nlohmann::json& j) {
  LevelModel m;
  try {
    m.k = j.at("k").get<int>();
    m.centroids = j.at("centroids").get<std::vector<Point3>>();
    m.feature_means = j.at("means").get<Point3>();
    m.feature_sds = j.at("sds").get<Point3>();
    m.level_order = j.at("level_order").get<std::vector<int>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.inertia = j.value("inertia", 0.0);
    m.iterations = j.value("iterations", 0);
    m.converged = j.value("converged", false);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("level model: ") + e.what());
  }
  if (m.k < 2 || m.centroids.size() != static_cast<std::size_t>(m.k) ||
      m.level_order.size() != static_cast<std::size_t>(m.k))
    throw ParseError("level model: inconsistent k");
  std::vector<int> perm = m.level_order;
  std::sort(perm.begin(), perm.end());
  for (int i = 0; i < m.k; ++i)
    if (perm[static_cast<std::size_t>(i)] != i) throw ParseError("level model: level_order is not a permutation");
  for (double sd : m.feature_sds)
    if (!(sd > 0.0)) throw ParseError("level model: feature sds must be positive");
  return m;
}

}  // namespace lumen::cluster
