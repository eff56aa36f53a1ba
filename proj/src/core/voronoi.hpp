#pragma once

#include <span>
#include <vector>

#include "core/geo.hpp"

namespace lumen {

using Polygon = std::vector<geo::LocalPoint>;

// Voronoi cells of `sites` clipped to the square [-half, half]^2, one
// counter-clockwise polygon per site in input order. A site coinciding with an
// earlier one gets an empty cell so the cells still tile the square.
std::vector<Polygon> clipped_voronoi(std::span<const geo::LocalPoint> sites, double half);

double polygon_area(const Polygon& poly);

// Index of the site nearest to p; ties go to the lower index. This is the
// pointwise form of the same partition.
std::size_t nearest_site(std::span<const geo::LocalPoint> sites, geo::LocalPoint p);

}  // namespace lumen
