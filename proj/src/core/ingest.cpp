#include "core/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "core/error.hpp"
#include "core/geo.hpp"
#include "core/kdtree.hpp"

namespace lumen::ingest {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string at_line(std::size_t line) { return ", line " + std::to_string(line); }

}  // namespace

std::vector<Poi> parse_poi_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open POI file '" + path.string() + "'");
  return parse_poi_csv(in, path.string());
}

std::vector<Poi> parse_poi_csv(std::istream& in, const std::string& source) {
  std::string raw;
  std::size_t line_no = 0;
  if (!std::getline(in, raw)) throw ParseError(source + ": empty POI file, expected header");
  ++line_no;
  if (raw.size() >= 3 && raw.compare(0, 3, "\xEF\xBB\xBF") == 0) raw.erase(0, 3);
  if (trim(raw) != "id,lon,lat,category,ntl")
    throw ParseError(source + ": bad header, expected 'id,lon,lat,category,ntl'" + at_line(1));

  std::vector<Poi> pois;
  std::unordered_set<std::string> seen;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 5)
      throw ParseError("malformed row: expected 5 fields, found " + std::to_string(fields.size()) +
                       at_line(line_no));
    Poi poi;
    poi.id = std::string(trim(fields[0]));
    if (poi.id.empty()) throw ParseError("empty id" + at_line(line_no));
    const auto lon = to_double(fields[1]);
    const auto lat = to_double(fields[2]);
    if (!lon) throw ParseError("malformed lon '" + std::string(fields[1]) + "'" + at_line(line_no));
    if (!lat) throw ParseError("malformed lat '" + std::string(fields[2]) + "'" + at_line(line_no));
    if (*lon < -180.0 || *lon > 180.0) throw ParseError("lon out of range" + at_line(line_no));
    if (*lat < -90.0 || *lat > 90.0) throw ParseError("lat out of range" + at_line(line_no));
    poi.lon = *lon;
    poi.lat = *lat;
    const auto cat_token = trim(fields[3]);
    const auto cat = parse_category(cat_token);
    if (!cat)
      throw ParseError("unknown category '" + std::string(cat_token) + "'" + at_line(line_no));
    poi.category = *cat;
    if (!trim(fields[4]).empty()) {
      const auto ntl = to_double(fields[4]);
      if (!ntl) throw ParseError("malformed ntl '" + std::string(fields[4]) + "'" + at_line(line_no));
      if (*ntl < 0.0) throw ParseError("negative ntl" + at_line(line_no));
      poi.ntl = *ntl;
    }
    if (!seen.insert(poi.id).second)
      throw ParseError("duplicate id '" + poi.id + "'" + at_line(line_no));
    pois.push_back(std::move(poi));
  }
  return pois;
}

void write_poi_csv(std::ostream& out, const std::vector<Poi>& pois) {
  out << "id,lon,lat,category,ntl\n";
  for (const auto& p : pois) {
    out << p.id << ',' << shortest(p.lon) << ',' << shortest(p.lat) << ','
        << category_name(p.category) << ',';
    if (p.ntl) out << shortest(*p.ntl);
    out << '\n';
  }
}

NtlRaster parse_ascii_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open raster '" + path.string() + "'");
  return parse_ascii_grid(in);
}

NtlRaster parse_ascii_grid(std::istream& in) {
  static constexpr std::array<std::string_view, 6> kKeys = {
      "ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value"};
  std::array<std::optional<double>, 6> header{};

  std::string token;
  std::vector<std::string> body;
  while (in >> token) {
    const bool alpha = std::isalpha(static_cast<unsigned char>(token[0])) != 0;
    if (!alpha) {
      body.push_back(token);
      break;
    }
    std::string key = token;
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const auto it = std::find(kKeys.begin(), kKeys.end(), key);
    if (it == kKeys.end()) throw ParseError("unknown header key '" + token + "'");
    std::string value;
    if (!(in >> value)) throw ParseError("missing value for header key '" + token + "'");
    const auto v = to_double(value);
    if (!v) throw ParseError("malformed value '" + value + "' for header key '" + token + "'");
    header[static_cast<std::size_t>(it - kKeys.begin())] = *v;
  }
  static constexpr std::array<std::string_view, 6> kDisplay = {
      "ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "NODATA_value"};
  for (std::size_t i = 0; i < kKeys.size(); ++i) {
    if (!header[i]) throw ParseError("missing header key '" + std::string(kDisplay[i]) + "'");
  }

  NtlRaster r;
  const double ncols = *header[0], nrows = *header[1];
  if (ncols < 1 || nrows < 1 || ncols != std::floor(ncols) || nrows != std::floor(nrows))
    throw ParseError("ncols and nrows must be positive integers");
  r.ncols = static_cast<std::size_t>(ncols);
  r.nrows = static_cast<std::size_t>(nrows);
  r.xllcorner = *header[2];
  r.yllcorner = *header[3];
  r.cellsize = *header[4];
  r.nodata = *header[5];
  if (!(r.cellsize > 0.0)) throw ParseError("cellsize must be positive");

  const std::size_t expected = r.ncols * r.nrows;
  r.values.reserve(expected);
  auto push = [&](const std::string& t) {
    const auto v = to_double(t);
    if (!v) throw ParseError("malformed cell value '" + t + "'");
    if (*v < 0.0 && !r.is_nodata(*v)) throw ParseError("negative cell value '" + t + "'");
    r.values.push_back(*v);
  };
  for (const auto& t : body) push(t);
  while (in >> token) push(token);
  if (r.values.size() != expected)
    throw ParseError("expected " + std::to_string(expected) + " cells, found " +
                     std::to_string(r.values.size()));
  return r;
}

void write_ascii_grid(std::ostream& out, const NtlRaster& r) {
  out << "ncols " << r.ncols << '\n'
      << "nrows " << r.nrows << '\n'
      << "xllcorner " << shortest(r.xllcorner) << '\n'
      << "yllcorner " << shortest(r.yllcorner) << '\n'
      << "cellsize " << shortest(r.cellsize) << '\n'
      << "NODATA_value " << shortest(r.nodata) << '\n';
  for (std::size_t row = 0; row < r.nrows; ++row) {
    for (std::size_t col = 0; col < r.ncols; ++col) {
      if (col) out << ' ';
      out << shortest(r.at(row, col));
    }
    out << '\n';
  }
}

std::optional<double> sample_ntl(const NtlRaster& r, double lon, double lat) {
  if (!(lon >= r.xllcorner && lon <= r.xmax() && lat >= r.yllcorner && lat <= r.ymax())) {
    std::ostringstream msg;
    msg << "point (" << shortest(lon) << ", " << shortest(lat) << ") outside raster bounds";
    throw OutOfBoundsError(msg.str(), lon, lat);
  }
  auto index = [](double offset, double cell, std::size_t n) {
    const auto i = static_cast<std::size_t>(std::floor(offset / cell));
    return std::min(i, n - 1);  // exact upper edge
  };
  const std::size_t col = index(lon - r.xllcorner, r.cellsize, r.ncols);
  const std::size_t row_from_south = index(lat - r.yllcorner, r.cellsize, r.nrows);
  const double v = r.at(r.nrows - 1 - row_from_south, col);
  if (r.is_nodata(v)) return std::nullopt;
  return v;
}

void sample_missing(CityDataset& dataset) {
  for (auto& poi : dataset.pois) {
    if (poi.ntl) continue;
    if (!dataset.raster) throw DomainError("POI '" + poi.id + "' has no ntl and no raster was given");
    std::optional<double> v;
    try {
      v = sample_ntl(*dataset.raster, poi.lon, poi.lat);
    } catch (const OutOfBoundsError& e) {
      throw OutOfBoundsError("POI '" + poi.id + "': " + e.what(), e.lon(), e.lat());
    }
    if (!v) throw DomainError("POI '" + poi.id + "' falls on a nodata raster cell");
    poi.ntl = *v;
  }
}

void validate(const CityDataset& dataset) {
  std::unordered_set<std::string> ids;
  for (const auto& p : dataset.pois) {
    if (p.id.empty()) throw DomainError("POI with empty id");
    if (!(p.lon >= -180.0 && p.lon <= 180.0)) throw DomainError("POI '" + p.id + "': lon out of range");
    if (!(p.lat >= -90.0 && p.lat <= 90.0)) throw DomainError("POI '" + p.id + "': lat out of range");
    if (p.ntl && !(*p.ntl >= 0.0 && std::isfinite(*p.ntl)))
      throw DomainError("POI '" + p.id + "': ntl must be a finite non-negative value");
    if (!ids.insert(p.id).second) throw DomainError("duplicate id '" + p.id + "'");
  }
}

CityDataset generate_synthetic_city(const SyntheticSpec& spec) {
  const auto& ext = spec.area_extent;
  if (!(ext.lon_min < ext.lon_max) || !(ext.lat_min < ext.lat_max))
    throw DomainError("synthetic city extent is empty");
  if (ext.lon_min < -180.0 || ext.lon_max > 180.0 || ext.lat_min < -90.0 || ext.lat_max > 90.0)
    throw DomainError("synthetic city extent exceeds WGS84 bounds");
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    if (!(spec.per_category_ntl_means[c] >= 0.0) || !(spec.per_category_ntl_sds[c] >= 0.0))
      throw DomainError("synthetic ntl means and sds must be non-negative");
  }

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> ulon(ext.lon_min, ext.lon_max);
  std::uniform_real_distribution<double> ulat(ext.lat_min, ext.lat_max);

  CityDataset ds;
  ds.name = spec.name;
  for (Category cat : kAllCategories) {
    const std::size_t ci = category_index(cat);
    const std::size_t count =
        cat == Category::kResidential ? spec.n_residential : spec.per_category_counts[ci];
    const double mean = spec.per_category_ntl_means[ci];
    const double sd = spec.per_category_ntl_sds[ci];
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t i = 0; i < count; ++i) {
      Poi p;
      char idbuf[48];
      std::snprintf(idbuf, sizeof idbuf, "%s-%06zu", std::string(category_name(cat)).c_str(), i);
      p.id = idbuf;
      p.category = cat;
      p.lon = ulon(rng);
      p.lat = ulat(rng);
      double v = mean;
      if (sd > 0.0) {
        // Truncated normal by rejection; mean >= 0 keeps acceptance >= 1/2.
        do {
          v = mean + sd * noise(rng);
        } while (v < 0.0);
      }
      p.ntl = v;
      ds.pois.push_back(std::move(p));
    }
  }

  if (!spec.couplings.empty()) {
    // Counts use the base layout so coupling order does not matter.
    const double lat_mid = 0.5 * (ext.lat_min + ext.lat_max);
    const geo::LocalFrame frame(0.5 * (ext.lon_min + ext.lon_max), lat_mid);
    std::vector<double> boost(ds.pois.size(), 0.0);
    for (const auto& cp : spec.couplings) {
      if (!(cp.radius_m >= 0.0) || !std::isfinite(cp.gain))
        throw DomainError("coupling radius must be non-negative and gain finite");
      std::vector<KdTree2::Point> src;
      for (const auto& p : ds.pois) {
        if (p.category != cp.source) continue;
        const auto q = frame.project(p.lon, p.lat);
        src.push_back({q.x, q.y});
      }
      const KdTree2 tree(src);
      std::vector<std::size_t> hits;
      for (std::size_t i = 0; i < ds.pois.size(); ++i) {
        if (ds.pois[i].category != cp.target) continue;
        const auto q = frame.project(ds.pois[i].lon, ds.pois[i].lat);
        hits.clear();
        tree.query_radius(q.x, q.y, cp.radius_m, hits);
        boost[i] += cp.gain * static_cast<double>(hits.size());
      }
    }
    for (std::size_t i = 0; i < ds.pois.size(); ++i) {
      ds.pois[i].ntl = std::max(0.0, *ds.pois[i].ntl + boost[i]);
    }
  }
  return ds;
}

}  // namespace lumen::ingest
