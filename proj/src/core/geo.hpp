#pragma once

#include <cmath>
#include <numbers>

namespace lumen::geo {

inline constexpr double kEarthRadiusM = 6371000.0;
inline constexpr double kMetersPerDegree = kEarthRadiusM * std::numbers::pi / 180.0;

struct LocalPoint {
  double x = 0.0;  // east, meters
  double y = 0.0;  // north, meters
};

// Equirectangular projection about a fixed origin. Accurate to well under
// 0.1% over a few kilometres, which is all the neighbourhood geometry needs.
class LocalFrame {
 public:
  LocalFrame(double origin_lon, double origin_lat)
      : lon0_(origin_lon),
        lat0_(origin_lat),
        kx_(std::cos(origin_lat * std::numbers::pi / 180.0) * kMetersPerDegree) {}

  LocalPoint project(double lon, double lat) const {
    return {(lon - lon0_) * kx_, (lat - lat0_) * kMetersPerDegree};
  }

  // Half-widths in degrees of a metric half-extent, used for candidate boxes.
  double lon_span(double meters) const {
    return kx_ > 0.0 ? meters / kx_ : 360.0;
  }
  static double lat_span(double meters) { return meters / kMetersPerDegree; }

  double origin_lon() const { return lon0_; }
  double origin_lat() const { return lat0_; }

 private:
  double lon0_;
  double lat0_;
  double kx_;
};

inline double distance(LocalPoint a, LocalPoint b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace lumen::geo
