#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "core/assess.hpp"

namespace lumen::render {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

// Piecewise-linear ramp over evenly spaced stops. Influence is normalised by
// the area's largest influence unless `fixed_max` pins the scale.
struct ColorRamp {
  std::vector<Rgb> stops;
  std::optional<double> fixed_max;

  static ColorRamp default_ramp();
  Rgb at(double t) const;  // t clamped to [0, 1]
};

struct LegendEntry {
  std::string poi_id;
  double influence = 0.0;
  Rgb color;
};

struct AreaMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB, north row first
  std::vector<LegendEntry> legend;   // aligned with area members

  Rgb pixel(int row, int col) const {
    const auto i = 3 * (static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col));
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
  }
};

inline constexpr Rgb kBoundary{0, 0, 0};

// Largest member influence of the area; the default colour scale.
double max_influence(const assess::ResidentialArea& area, const ingest::CityDataset& dataset,
                     const assess::InfluenceParams& params);

AreaMap render_area(const assess::ResidentialArea& area, const ingest::CityDataset& dataset,
                    const assess::InfluenceParams& params,
                    const ColorRamp& style = ColorRamp::default_ramp(), int width = 256,
                    int height = 256);

std::string encode_ppm(const AreaMap& map);
void write_ppm(const AreaMap& map, const std::filesystem::path& path);
AreaMap decode_ppm(const std::string& bytes);
AreaMap read_ppm(const std::filesystem::path& path);

}  // namespace lumen::render
