#include "core/kdtree.hpp"

#include <algorithm>

namespace lumen {

KdTree2::KdTree2(std::span<const Point> points, std::size_t leaf_size)
    : pts_(points.begin(), points.end()), order_(points.size()), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  if (!order_.empty()) {
    nodes_.reserve(2 * order_.size() / leaf_size_ + 2);
    build(0, order_.size());
  }
}

std::size_t KdTree2::build(std::size_t begin, std::size_t end) {
  const std::size_t id = nodes_.size();
  nodes_.push_back(Node{begin, end, 0.0, -1, 0, 0});
  if (end - begin <= leaf_size_) return id;

  // Split on the wider extent.
  double xlo = pts_[order_[begin]].x, xhi = xlo;
  double ylo = pts_[order_[begin]].y, yhi = ylo;
  for (std::size_t i = begin; i < end; ++i) {
    const auto& p = pts_[order_[i]];
    xlo = std::min(xlo, p.x), xhi = std::max(xhi, p.x);
    ylo = std::min(ylo, p.y), yhi = std::max(yhi, p.y);
  }
  const int axis = (xhi - xlo) >= (yhi - ylo) ? 0 : 1;
  const std::size_t mid = begin + (end - begin) / 2;
  auto coord = [&](std::size_t idx) { return axis == 0 ? pts_[idx].x : pts_[idx].y; };
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                   order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t a, std::size_t b) { return coord(a) < coord(b); });
  const double split = coord(order_[mid]);

  const std::size_t left = build(begin, mid);
  const std::size_t right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree2::query_box(double xmin, double xmax, double ymin, double ymax,
                        std::vector<std::size_t>& out) const {
  if (nodes_.empty()) return;
  query_node(0, xmin, xmax, ymin, ymax, out);
}

void KdTree2::query_node(std::size_t node, double xmin, double xmax, double ymin, double ymax,
                         std::vector<std::size_t>& out) const {
  const Node& n = nodes_[node];
  if (n.axis < 0) {
    for (std::size_t i = n.begin; i < n.end; ++i) {
      const auto& p = pts_[order_[i]];
      if (p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax) out.push_back(order_[i]);
    }
    return;
  }
  // Left holds coordinates <= split, right holds >= split.
  const double lo = n.axis == 0 ? xmin : ymin;
  const double hi = n.axis == 0 ? xmax : ymax;
  if (lo <= n.split) query_node(n.left, xmin, xmax, ymin, ymax, out);
  if (hi >= n.split) query_node(n.right, xmin, xmax, ymin, ymax, out);
}

void KdTree2::query_radius(double x, double y, double radius, std::vector<std::size_t>& out) const {
  std::vector<std::size_t> box;
  query_box(x - radius, x + radius, y - radius, y + radius, box);
  const double r2 = radius * radius;
  for (std::size_t idx : box) {
    const double dx = pts_[idx].x - x, dy = pts_[idx].y - y;
    if (dx * dx + dy * dy <= r2) out.push_back(idx);
  }
}

}  // namespace lumen
