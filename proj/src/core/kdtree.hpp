#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lumen {

// Static 2-d tree over a point set, answering inclusive axis-aligned box
// queries. Points are stored in an implicit balanced layout; the tree never
// changes after construction.
class KdTree2 {
 public:
  struct Point {
    double x;
    double y;
  };

  explicit KdTree2(std::span<const Point> points, std::size_t leaf_size = 16);

  // Appends the original indices of every point with
  // xmin <= x <= xmax and ymin <= y <= ymax. Output order is unspecified.
  void query_box(double xmin, double xmax, double ymin, double ymax,
                 std::vector<std::size_t>& out) const;

  // Indices of points within `radius` (inclusive) of (x, y).
  void query_radius(double x, double y, double radius, std::vector<std::size_t>& out) const;

  std::size_t size() const { return order_.size(); }

 private:
  struct Node {
    std::size_t begin;
    std::size_t end;
    double split;
    int axis;  // -1 marks a leaf
    std::size_t left;
    std::size_t right;
  };

  std::size_t build(std::size_t begin, std::size_t end);
  void query_node(std::size_t node, double xmin, double xmax, double ymin, double ymax,
                  std::vector<std::size_t>& out) const;

  std::vector<Point> pts_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_;
};

}  // namespace lumen
