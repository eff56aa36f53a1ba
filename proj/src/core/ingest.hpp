#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "core/category.hpp"

namespace lumen::ingest {

struct Poi {
  std::string id;
  double lon = 0.0;
  double lat = 0.0;
  Category category = Category::kResidential;
  std::optional<double> ntl;  // unset until sampled

  bool operator==(const Poi&) const = default;
};

// ESRI ASCII grid. Row 0 of `values` is the northern-most row.
struct NtlRaster {
  std::size_t ncols = 0;
  std::size_t nrows = 0;
  double xllcorner = 0.0;
  double yllcorner = 0.0;
  double cellsize = 1.0;
  double nodata = -9999.0;
  std::vector<double> values;

  bool is_nodata(double v) const { return v == nodata; }
  double at(std::size_t row, std::size_t col) const { return values[row * ncols + col]; }
  double xmax() const { return xllcorner + static_cast<double>(ncols) * cellsize; }
  double ymax() const { return yllcorner + static_cast<double>(nrows) * cellsize; }

  bool operator==(const NtlRaster&) const = default;
};

struct CityDataset {
  std::string name;
  std::vector<Poi> pois;
  std::optional<NtlRaster> raster;
  std::string crs_note = "WGS84";

  bool operator==(const CityDataset&) const = default;
};

std::vector<Poi> parse_poi_csv(const std::filesystem::path& path);
// `source` only labels error messages.
std::vector<Poi> parse_poi_csv(std::istream& in, const std::string& source = "<stream>");
void write_poi_csv(std::ostream& out, const std::vector<Poi>& pois);

NtlRaster parse_ascii_grid(const std::filesystem::path& path);
NtlRaster parse_ascii_grid(std::istream& in);
void write_ascii_grid(std::ostream& out, const NtlRaster& raster);

// Nearest-cell lookup; nullopt for a nodata cell. Throws OutOfBoundsError.
std::optional<double> sample_ntl(const NtlRaster& raster, double lon, double lat);

// Fills unset ntl values from the raster. POIs that already carry a value are
// left alone. Throws naming the first POI that cannot be resolved.
void sample_missing(CityDataset& dataset);

// Throws DomainError on duplicate ids or invalid fields.
void validate(const CityDataset& dataset);

struct Extent {
  double lon_min = 0.0;
  double lon_max = 0.0;
  double lat_min = 0.0;
  double lat_max = 0.0;
};

// Raises the ntl of every `target` POI by gain x (number of `source` POIs
// within radius). Gives synthetic cities a known confounding path.
struct NtlCoupling {
  Category source = Category::kConstruction;
  Category target = Category::kGrass;
  double radius_m = 500.0;
  double gain = 1.0;
};

struct SyntheticSpec {
  std::uint64_t seed = 0;
  std::size_t n_residential = 0;
  // The residential entry is ignored in favour of n_residential.
  std::array<std::size_t, kCategoryCount> per_category_counts{};
  std::array<double, kCategoryCount> per_category_ntl_means{};
  std::array<double, kCategoryCount> per_category_ntl_sds{};
  Extent area_extent;
  std::vector<NtlCoupling> couplings;
  std::string name = "synthetic";
};

CityDataset generate_synthetic_city(const SyntheticSpec& spec);

}  // namespace lumen::ingest
