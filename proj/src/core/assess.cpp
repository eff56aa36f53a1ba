#include "core/assess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "core/error.hpp"
#include "core/kdtree.hpp"
#include "core/parallel.hpp"

namespace lumen::assess {

void InfluenceParams::validate() const {
  if (!(bandwidth_m > 0.0) || !std::isfinite(bandwidth_m))
    throw DomainError("bandwidth must be a positive number of metres");
  if (!(side_m > 0.0) || !std::isfinite(side_m))
    throw DomainError("area side must be a positive number of metres");
}

double influence(double ntl, double distance_m, double bandwidth_m) {
  if (!(ntl >= 0.0) || !std::isfinite(ntl)) throw DomainError("influence: ntl must be >= 0");
  if (!(distance_m >= 0.0) || !std::isfinite(distance_m))
    throw DomainError("influence: distance must be >= 0");
  if (!(bandwidth_m > 0.0) || !std::isfinite(bandwidth_m))
    throw DomainError("influence: bandwidth must be > 0");
  const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * bandwidth_m);
  return ntl * norm * std::exp(-(distance_m * distance_m) / (2.0 * bandwidth_m * bandwidth_m));
}

namespace {

ResidentialArea build_area(const std::vector<ingest::Poi>& pois, std::size_t ci, double side_m,
                           const std::vector<std::size_t>& candidates, bool with_plots) {
  const auto& c = pois[ci];
  const geo::LocalFrame frame(c.lon, c.lat);
  const double half = side_m / 2.0;
  ResidentialArea area;
  area.center_poi_id = c.id;
  area.center_index = ci;
  area.center_lon = c.lon;
  area.center_lat = c.lat;
  area.side_m = side_m;
  for (std::size_t j : candidates) {
    const auto q = frame.project(pois[j].lon, pois[j].lat);
    if (std::abs(q.x) <= half && std::abs(q.y) <= half) area.members.push_back(j);
  }
  std::sort(area.members.begin(), area.members.end(),
            [&](std::size_t a, std::size_t b) { return pois[a].id < pois[b].id; });
  area.member_xy.reserve(area.members.size());
  for (std::size_t j : area.members) area.member_xy.push_back(frame.project(pois[j].lon, pois[j].lat));
  if (with_plots) area.plots = clipped_voronoi(area.member_xy, half);
  return area;
}

}  // namespace

std::vector<ResidentialArea> extract_areas(const ingest::CityDataset& dataset,
                                           const InfluenceParams& params,
                                           const ExtractOptions& options) {
  params.validate();
  const auto& pois = dataset.pois;
  const double half = params.side_m / 2.0;

  std::vector<std::size_t> centers;
  for (std::size_t i = 0; i < pois.size(); ++i) {
    if (pois[i].category == Category::kResidential) centers.push_back(i);
  }
  std::sort(centers.begin(), centers.end(),
            [&](std::size_t a, std::size_t b) { return pois[a].id < pois[b].id; });

  std::optional<KdTree2> tree;
  std::vector<std::size_t> everyone;
  if (options.search == CandidateSearch::kSpatialIndex) {
    std::vector<KdTree2::Point> pts(pois.size());
    for (std::size_t i = 0; i < pois.size(); ++i) pts[i] = {pois[i].lon, pois[i].lat};
    tree.emplace(pts);
  } else {
    everyone.resize(pois.size());
    for (std::size_t i = 0; i < pois.size(); ++i) everyone[i] = i;
  }

  std::vector<ResidentialArea> areas(centers.size());
  parallel_for(
      centers.size(),
      [&](std::size_t k) {
        const auto& c = pois[centers[k]];
        if (!tree) {
          areas[k] = build_area(pois, centers[k], params.side_m, everyone, options.with_plots);
          return;
        }
        // Slightly widened degree box; the metric test in build_area decides.
        const geo::LocalFrame frame(c.lon, c.lat);
        const double dlon = frame.lon_span(half) * (1.0 + 1e-9) + 1e-12;
        const double dlat = geo::LocalFrame::lat_span(half) * (1.0 + 1e-9) + 1e-12;
        std::vector<std::size_t> candidates;
        tree->query_box(c.lon - dlon, c.lon + dlon, c.lat - dlat, c.lat + dlat, candidates);
        areas[k] = build_area(pois, centers[k], params.side_m, candidates, options.with_plots);
      },
      options.threads);
  return areas;
}

std::optional<ResidentialArea> extract_area(const ingest::CityDataset& dataset, const std::string& area_id,
                                            const InfluenceParams& params, bool with_plots) {
  params.validate();
  const auto& pois = dataset.pois;
  for (std::size_t i = 0; i < pois.size(); ++i) {
    if (pois[i].id != area_id) continue;
    if (pois[i].category != Category::kResidential) return std::nullopt;
    std::vector<std::size_t> everyone(pois.size());
    for (std::size_t j = 0; j < pois.size(); ++j) everyone[j] = j;
    return build_area(pois, i, params.side_m, everyone, with_plots);
  }
  return std::nullopt;
}

std::vector<MemberInfluence> member_influences(const ResidentialArea& area,
                                               const ingest::CityDataset& dataset,
                                               const InfluenceParams& params) {
  std::vector<MemberInfluence> out;
  out.reserve(area.members.size());
  for (std::size_t m = 0; m < area.members.size(); ++m) {
    const auto& poi = dataset.pois[area.members[m]];
    if (!poi.ntl) throw DomainError("POI '" + poi.id + "' has no sampled ntl");
    const auto xy = area.member_xy[m];
    const double d = area.members[m] == area.center_index ? 0.0 : std::hypot(xy.x, xy.y);
    out.push_back({poi.id, poi.category, d, *poi.ntl, influence(*poi.ntl, d, params.bandwidth_m)});
  }
  return out;
}

PollutionIndices compute_indices(const ResidentialArea& area, const ingest::CityDataset& dataset,
                                 const InfluenceParams& params) {
  const auto infl = member_influences(area, dataset, params);
  if (infl.empty()) throw DomainError("area '" + area.center_poi_id + "' has no members");

  double self = 0.0;
  double others = 0.0;
  for (std::size_t m = 0; m < infl.size(); ++m) {
    if (area.members[m] == area.center_index) self = infl[m].influence;
    else others += infl[m].influence;
  }
  PollutionIndices ix;
  ix.nld = others;
  ix.tnl = self + others;

  // Shifted two-pass variance: exactly zero for a constant set.
  const double n = static_cast<double>(infl.size());
  const double pivot = infl.front().influence;
  double shifted_mean = 0.0;
  for (const auto& v : infl) shifted_mean += v.influence - pivot;
  shifted_mean /= n;
  double ss = 0.0;
  for (const auto& v : infl) {
    const double dev = (v.influence - pivot) - shifted_mean;
    ss += dev * dev;
  }
  ix.nlsd = std::sqrt(ss / n);
  ix.score = ix.tnl + ix.nld + ix.nlsd;
  return ix;
}

AssessmentTable assess_areas(const std::vector<ResidentialArea>& areas,
                             const ingest::CityDataset& dataset, const InfluenceParams& params,
                             unsigned threads) {
  std::vector<PollutionIndices> rows(areas.size());
  parallel_for(
      areas.size(), [&](std::size_t k) { rows[k] = compute_indices(areas[k], dataset, params); },
      threads);
  AssessmentTable table;
  for (std::size_t k = 0; k < areas.size(); ++k) table.emplace(areas[k].center_poi_id, rows[k]);
  return table;
}

AssessmentTable assess_city(const ingest::CityDataset& dataset, const InfluenceParams& params,
                            CandidateSearch search, unsigned threads) {
  ExtractOptions opts;
  opts.search = search;
  opts.with_plots = false;
  opts.threads = threads;
  return assess_areas(extract_areas(dataset, params, opts), dataset, params, threads);
}

namespace {
std::string g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}
}  // namespace

void write_indices_csv(std::ostream& out, const AssessmentTable& table) {
  out << "area_id,tnl,nld,nlsd,score,level\n";
  for (const auto& [id, ix] : table) {
    out << id << ',' << g9(ix.tnl) << ',' << g9(ix.nld) << ',' << g9(ix.nlsd) << ','
        << g9(ix.score) << ',';
    if (ix.level) out << *ix.level;
    out << '\n';
  }
}

AssessmentTable read_indices_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("area_id,tnl,nld,nlsd,score,level", 0) != 0)
    throw ParseError("indices.csv: bad header");
  AssessmentTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 6) throw ParseError("indices.csv: malformed row, line " + std::to_string(line_no));
    PollutionIndices ix;
    try {
      ix.tnl = std::stod(f[1]);
      ix.nld = std::stod(f[2]);
      ix.nlsd = std::stod(f[3]);
      ix.score = std::stod(f[4]);
      if (!f[5].empty()) ix.level = std::stoi(f[5]);
    } catch (const std::exception&) {
      throw ParseError("indices.csv: malformed number, line " + std::to_string(line_no));
    }
    table.emplace(f[0], ix);
  }
  return table;
}

}  // namespace lumen::assess
