#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/geo.hpp"
#include "core/ingest.hpp"
#include "core/voronoi.hpp"

namespace lumen::assess {

struct InfluenceParams {
  double bandwidth_m = 1500.0;
  double side_m = 2000.0;

  void validate() const;  // throws DomainError unless both are positive
};

// Square neighbourhood around one residential POI. Members are dataset
// indices sorted by POI id and always include the centre.
struct ResidentialArea {
  std::string center_poi_id;
  std::size_t center_index = 0;
  double center_lon = 0.0;
  double center_lat = 0.0;
  double side_m = 0.0;
  std::vector<std::size_t> members;
  std::vector<geo::LocalPoint> member_xy;  // local metres, aligned with members
  std::vector<Polygon> plots;              // aligned with members; empty unless requested
};

struct PollutionIndices {
  double tnl = 0.0;
  double nld = 0.0;
  double nlsd = 0.0;
  double score = 0.0;
  std::optional<int> level;

  bool operator==(const PollutionIndices&) const = default;
};

enum class CandidateSearch { kSpatialIndex, kNaive };

struct ExtractOptions {
  CandidateSearch search = CandidateSearch::kSpatialIndex;
  bool with_plots = true;
  unsigned threads = 0;  // 0 = hardware concurrency
};

// Areas are returned sorted by centre id.
std::vector<ResidentialArea> extract_areas(const ingest::CityDataset& dataset,
                                           const InfluenceParams& params,
                                           const ExtractOptions& options = {});

// Single area by centre id (naive scan); nullopt unless the id names a
// residential POI.
std::optional<ResidentialArea> extract_area(const ingest::CityDataset& dataset, const std::string& area_id,
                                            const InfluenceParams& params, bool with_plots = true);

// Gaussian-kernel influence of a source with intensity `ntl` at distance
// `distance_m`; `bandwidth_m` uses the same unit as the distance.
double influence(double ntl, double distance_m, double bandwidth_m);

struct MemberInfluence {
  std::string poi_id;
  Category category = Category::kResidential;
  double distance_m = 0.0;
  double ntl = 0.0;
  double influence = 0.0;
};

std::vector<MemberInfluence> member_influences(const ResidentialArea& area,
                                               const ingest::CityDataset& dataset,
                                               const InfluenceParams& params);

PollutionIndices compute_indices(const ResidentialArea& area, const ingest::CityDataset& dataset,
                                 const InfluenceParams& params);

// Keyed (and therefore ordered) by area id.
using AssessmentTable = std::map<std::string, PollutionIndices>;

AssessmentTable assess_areas(const std::vector<ResidentialArea>& areas,
                             const ingest::CityDataset& dataset, const InfluenceParams& params,
                             unsigned threads = 0);

AssessmentTable assess_city(const ingest::CityDataset& dataset, const InfluenceParams& params,
                            CandidateSearch search = CandidateSearch::kSpatialIndex,
                            unsigned threads = 0);

// `area_id,tnl,nld,nlsd,score,level`, 9 significant digits, empty level when unset.
void write_indices_csv(std::ostream& out, const AssessmentTable& table);
AssessmentTable read_indices_csv(std::istream& in);

}  // namespace lumen::assess
