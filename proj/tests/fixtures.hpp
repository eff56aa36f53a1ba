#pragma once

#include <string>

#include "core/ingest.hpp"

namespace lumen::testing {

inline ingest::Poi poi(std::string id, double lon, double lat, Category c, double ntl) {
  ingest::Poi p;
  p.id = std::move(id);
  p.lon = lon;
  p.lat = lat;
  p.category = c;
  p.ntl = ntl;
  return p;
}

// A few hundred POIs over roughly 8 x 9 km with every category present.
inline ingest::SyntheticSpec small_city(std::uint64_t seed, std::size_t n_residential = 60) {
  ingest::SyntheticSpec s;
  s.seed = seed;
  s.n_residential = n_residential;
  s.area_extent = {116.30, 116.40, 39.90, 39.98};
  const double means[] = {5, 60, 20, 3, 2, 15, 45, 30, 50};
  const double sds[] = {2, 15, 6, 1, 1, 5, 10, 8, 12};
  const std::size_t counts[] = {25, 60, 35, 25, 25, 70, 40, 0, 55};
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    s.per_category_counts[c] = counts[c];
    s.per_category_ntl_means[c] = means[c];
    s.per_category_ntl_sds[c] = sds[c];
  }
  s.couplings.push_back({Category::kConstruction, Category::kGrass, 600.0, 2.0});
  return s;
}

}  // namespace lumen::testing
