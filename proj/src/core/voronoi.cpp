#include "core/voronoi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lumen {

namespace {

// Keeps the part of `poly` where dot(p - m, n) <= 0.
Polygon clip_half_plane(const Polygon& poly, geo::LocalPoint m, geo::LocalPoint n) {
  Polygon out;
  if (poly.empty()) return out;
  out.reserve(poly.size() + 1);
  auto side = [&](geo::LocalPoint p) { return (p.x - m.x) * n.x + (p.y - m.y) * n.y; };
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto a = poly[i];
    const auto b = poly[(i + 1) % poly.size()];
    const double sa = side(a), sb = side(b);
    if (sa <= 0.0) out.push_back(a);
    if ((sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0)) {
      const double t = sa / (sa - sb);
      out.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    }
  }
  if (out.size() < 3) out.clear();
  return out;
}

}  // namespace

std::vector<Polygon> clipped_voronoi(std::span<const geo::LocalPoint> sites, double half) {
  std::vector<Polygon> cells(sites.size());
  std::vector<std::size_t> order(sites.size());
  std::vector<double> dist(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const auto s = sites[i];
    for (std::size_t j = 0; j < sites.size(); ++j) dist[j] = geo::distance(s, sites[j]);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return dist[a] != dist[b] ? dist[a] < dist[b] : a < b;
    });

    Polygon cell = {{-half, -half}, {half, -half}, {half, half}, {-half, half}};
    bool empty = false;
    for (std::size_t j : order) {
      if (j == i) continue;
      if (dist[j] == 0.0) {
        if (j < i) {
          empty = true;
          break;
        }
        continue;
      }
      // Sites farther than twice the cell radius cannot cut the cell.
      double radius = 0.0;
      for (const auto& v : cell) radius = std::max(radius, geo::distance(s, v));
      if (dist[j] > 2.0 * radius) break;
      const geo::LocalPoint mid{0.5 * (s.x + sites[j].x), 0.5 * (s.y + sites[j].y)};
      const geo::LocalPoint normal{sites[j].x - s.x, sites[j].y - s.y};
      cell = clip_half_plane(cell, mid, normal);
      if (cell.empty()) break;
    }
    if (!empty) cells[i] = std::move(cell);
  }
  return cells;
}

double polygon_area(const Polygon& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

std::size_t nearest_site(std::span<const geo::LocalPoint> sites, geo::LocalPoint p) {
  std::size_t best = 0;
  double best_d2 = INFINITY;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const double dx = sites[i].x - p.x, dy = sites[i].y - p.y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

}  // namespace lumen
