#include "core/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "core/error.hpp"
#include "core/voronoi.hpp"

namespace lumen::render {

ColorRamp ColorRamp::default_ramp() {
  // dark blue -> blue -> yellow -> orange -> red
  return ColorRamp{{{8, 16, 80}, {32, 96, 200}, {250, 230, 40}, {245, 130, 20}, {200, 20, 20}}, std::nullopt};
}

Rgb ColorRamp::at(double t) const {
  if (stops.empty()) return {};
  if (stops.size() == 1 || !(t > 0.0)) return stops.front();
  if (t >= 1.0) return stops.back();
  const double pos = t * static_cast<double>(stops.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double f = pos - static_cast<double>(i);
  const Rgb& a = stops[i];
  const Rgb& b = stops[std::min(i + 1, stops.size() - 1)];
  auto mix = [f](std::uint8_t u, std::uint8_t v) {
    return static_cast<std::uint8_t>(std::lround((1.0 - f) * u + f * v));
  };
  return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

double max_influence(const assess::ResidentialArea& area, const ingest::CityDataset& dataset,
                     const assess::InfluenceParams& params) {
  double mx = 0.0;
  for (const auto& m : assess::member_influences(area, dataset, params)) mx = std::max(mx, m.influence);
  return mx;
}

AreaMap render_area(const assess::ResidentialArea& area, const ingest::CityDataset& dataset,
                    const assess::InfluenceParams& params, const ColorRamp& style, int width,
                    int height) {
  if (width <= 0 || height <= 0) throw DomainError("map size must be positive");
  if (area.members.empty()) throw DomainError("area '" + area.center_poi_id + "' has no members");
  const auto infl = assess::member_influences(area, dataset, params);

  double scale = style.fixed_max.value_or(0.0);
  if (!style.fixed_max)
    for (const auto& m : infl) scale = std::max(scale, m.influence);

  AreaMap map;
  map.width = width;
  map.height = height;
  for (const auto& m : infl) {
    const double t = scale > 0.0 ? m.influence / scale : 0.0;
    map.legend.push_back({m.poi_id, m.influence, style.at(t)});
  }

  const double half = area.side_m / 2.0;
  const double dx = area.side_m / width;
  const double dy = area.side_m / height;
  std::vector<std::size_t> owner(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  for (int r = 0; r < height; ++r) {
    const double y = half - (r + 0.5) * dy;
    for (int c = 0; c < width; ++c) {
      const double x = -half + (c + 0.5) * dx;
      owner[static_cast<std::size_t>(r) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c)] =
          nearest_site(area.member_xy, {x, y});
    }
  }

  map.pixels.resize(3 * owner.size());
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c);
      const bool edge = r == 0 || c == 0 || r == height - 1 || c == width - 1;
      const bool boundary = (c + 1 < width && owner[i + 1] != owner[i]) ||
                            (r + 1 < height && owner[i + static_cast<std::size_t>(width)] != owner[i]);
      const Rgb px = (edge || boundary) ? kBoundary : map.legend[owner[i]].color;
      map.pixels[3 * i] = px.r;
      map.pixels[3 * i + 1] = px.g;
      map.pixels[3 * i + 2] = px.b;
    }
  }
  return map;
}

std::string encode_ppm(const AreaMap& map) {
  std::string out = "P6\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(map.pixels.data()), map.pixels.size());
  return out;
}

void write_ppm(const AreaMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const std::string bytes = encode_ppm(map);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

AreaMap decode_ppm(const std::string& bytes) {
  std::size_t pos = 0;
  auto next_token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  if (next_token() != "P6") throw ParseError("not a binary PPM (P6) image");
  AreaMap map;
  try {
    map.width = std::stoi(next_token());
    map.height = std::stoi(next_token());
    if (std::stoi(next_token()) != 255) throw ParseError("PPM maxval must be 255");
  } catch (const std::logic_error&) {
    throw ParseError("malformed PPM header");
  }
  if (map.width <= 0 || map.height <= 0) throw ParseError("PPM dimensions must be positive");
  ++pos;  // single whitespace before the raster
  const std::size_t n = 3 * static_cast<std::size_t>(map.width) * static_cast<std::size_t>(map.height);
  if (bytes.size() < pos + n) throw ParseError("PPM raster is truncated");
  map.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                    bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return map;
}

AreaMap read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_ppm(bytes);
}

}  // namespace lumen::render
