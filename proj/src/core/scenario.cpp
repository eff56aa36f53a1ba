#include "core/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace lumen::scenario {

using nlohmann::json;

namespace {

std::string field(std::size_t i, const char* name) {
  return "actions[" + std::to_string(i) + "]." + name;
}

Category category_field(const json& a, std::size_t i) {
  const auto it = a.find("category");
  if (it == a.end() || !it->is_string()) throw SpecError(field(i, "category") + " must be a string");
  const auto c = parse_category(it->get<std::string>());
  if (!c) throw SpecError(field(i, "category") + ": unknown category '" + it->get<std::string>() + "'");
  return *c;
}

double nonneg_field(const json& a, std::size_t i, const char* name) {
  const auto it = a.find(name);
  if (it == a.end() || !it->is_number())
    throw SpecError(field(i, name) + " must be a number");
  const double v = it->get<double>();
  if (!(v >= 0.0) || !std::isfinite(v)) throw SpecError(field(i, name) + " must be finite and >= 0");
  return v;
}

ingest::Poi poi_field(const json& a, std::size_t i) {
  const auto it = a.find("poi");
  if (it == a.end() || !it->is_object()) throw SpecError(field(i, "poi") + " must be an object");
  const json& p = *it;
  ingest::Poi poi;
  if (!p.contains("id") || !p["id"].is_string() || p["id"].get<std::string>().empty())
    throw SpecError(field(i, "poi.id") + " must be a non-empty string");
  poi.id = p["id"].get<std::string>();
  for (const char* k : {"lon", "lat"}) {
    if (!p.contains(k) || !p[k].is_number()) throw SpecError(field(i, "poi.") + k + " must be a number");
  }
  poi.lon = p["lon"].get<double>();
  poi.lat = p["lat"].get<double>();
  if (!(poi.lon >= -180.0 && poi.lon <= 180.0)) throw SpecError(field(i, "poi.lon") + " out of range");
  if (!(poi.lat >= -90.0 && poi.lat <= 90.0)) throw SpecError(field(i, "poi.lat") + " out of range");
  poi.category = category_field(p, i);
  if (p.contains("ntl") && !p["ntl"].is_null()) {
    if (!p["ntl"].is_number()) throw SpecError(field(i, "poi.ntl") + " must be a number");
    const double v = p["ntl"].get<double>();
    if (!(v >= 0.0) || !std::isfinite(v)) throw SpecError(field(i, "poi.ntl") + " must be finite and >= 0");
    poi.ntl = v;
  }
  return poi;
}

}  // namespace

InterventionSpec parse_spec(const json& j) {
  if (!j.is_object()) throw SpecError("scenario spec must be a JSON object");
  const auto it = j.find("actions");
  if (it == j.end()) throw SpecError("missing 'actions' array");
  if (!it->is_array()) throw SpecError("'actions' must be an array");
  InterventionSpec spec;
  for (std::size_t i = 0; i < it->size(); ++i) {
    const json& a = (*it)[i];
    if (!a.is_object()) throw SpecError("actions[" + std::to_string(i) + "] must be an object");
    if (!a.contains("op") || !a["op"].is_string()) throw SpecError(field(i, "op") + " must be a string");
    const auto op = a["op"].get<std::string>();
    if (op == "scale_ntl") {
      spec.actions.emplace_back(ScaleNtl{category_field(a, i), nonneg_field(a, i, "factor")});
    } else if (op == "set_ntl") {
      spec.actions.emplace_back(SetNtl{category_field(a, i), nonneg_field(a, i, "value")});
    } else if (op == "remove_category") {
      spec.actions.emplace_back(RemoveCategory{category_field(a, i)});
    } else if (op == "add_poi") {
      spec.actions.emplace_back(AddPoi{poi_field(a, i)});
    } else {
      throw SpecError("unknown action '" + op + "'");
    }
  }
  return spec;
}

InterventionSpec parse_spec(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("malformed JSON: ") + e.what());
  }
  return parse_spec(j);
}

json to_json(const InterventionSpec& spec) {
  json actions = json::array();
  for (const auto& action : spec.actions) {
    std::visit(
        [&](const auto& a) {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, ScaleNtl>) {
            actions.push_back({{"op", "scale_ntl"}, {"category", category_name(a.category)}, {"factor", a.factor}});
          } else if constexpr (std::is_same_v<T, SetNtl>) {
            actions.push_back({{"op", "set_ntl"}, {"category", category_name(a.category)}, {"value", a.value}});
          } else if constexpr (std::is_same_v<T, RemoveCategory>) {
            actions.push_back({{"op", "remove_category"}, {"category", category_name(a.category)}});
          } else {
            json p = {{"id", a.poi.id},
                      {"lon", a.poi.lon},
                      {"lat", a.poi.lat},
                      {"category", category_name(a.poi.category)}};
            p["ntl"] = a.poi.ntl ? json(*a.poi.ntl) : json(nullptr);
            actions.push_back({{"op", "add_poi"}, {"poi", p}});
          }
        },
        action);
  }
  return {{"actions", actions}};
}

ingest::CityDataset apply_intervention(const ingest::CityDataset& dataset, const InterventionSpec& spec) {
  ingest::CityDataset out = dataset;
  for (const auto& action : spec.actions) {
    if (const auto* s = std::get_if<ScaleNtl>(&action)) {
      for (auto& p : out.pois)
        if (p.category == s->category && p.ntl) *p.ntl *= s->factor;
    } else if (const auto* s = std::get_if<SetNtl>(&action)) {
      for (auto& p : out.pois)
        if (p.category == s->category) p.ntl = s->value;
    } else if (const auto* r = std::get_if<RemoveCategory>(&action)) {
      std::erase_if(out.pois, [&](const ingest::Poi& p) { return p.category == r->category; });
    } else {
      ingest::Poi poi = std::get<AddPoi>(action).poi;
      for (const auto& p : out.pois)
        if (p.id == poi.id) throw DomainError("add_poi: duplicate id '" + poi.id + "'");
      if (!poi.ntl) {
        if (!out.raster) throw DomainError("add_poi: POI '" + poi.id + "' needs an ntl value");
        poi.ntl = ingest::sample_ntl(*out.raster, poi.lon, poi.lat);
        if (!poi.ntl) throw DomainError("add_poi: POI '" + poi.id + "' falls on a nodata cell");
      }
      out.pois.push_back(std::move(poi));
    }
  }
  return out;
}

double level_kl(std::span<const double> p_hist, std::span<const double> q_hist) {
  if (p_hist.size() != q_hist.size()) throw DomainError("level histograms differ in length");
  if (p_hist.empty()) throw DomainError("level histograms are empty");
  double ps = 0.0, qs = 0.0;
  for (std::size_t i = 0; i < p_hist.size(); ++i) {
    if (!(p_hist[i] >= 0.0) || !(q_hist[i] >= 0.0) || !std::isfinite(p_hist[i]) || !std::isfinite(q_hist[i]))
      throw DomainError("level histogram counts must be finite and >= 0");
    ps += p_hist[i];
    qs += q_hist[i];
  }
  if (!(ps > 0.0) || !(qs > 0.0)) throw DomainError("level histogram has no mass");

  bool smooth = false;
  for (std::size_t i = 0; i < p_hist.size(); ++i)
    if (p_hist[i] > 0.0 && q_hist[i] == 0.0) smooth = true;
  const double eps = smooth ? 1e-9 : 0.0;
  const double qtotal = qs + eps * static_cast<double>(q_hist.size());

  double kl = 0.0;
  for (std::size_t i = 0; i < p_hist.size(); ++i) {
    if (p_hist[i] == 0.0) continue;
    const double p = p_hist[i] / ps;
    const double q = (q_hist[i] + eps) / qtotal;
    kl += p * std::log(p / q);
  }
  return std::max(kl, 0.0);
}

Image to_image(const render::AreaMap& map) {
  Image img;
  img.width = map.width;
  img.height = map.height;
  img.channels = 3;
  img.data.resize(map.pixels.size());
  for (std::size_t i = 0; i < map.pixels.size(); ++i) img.data[i] = map.pixels[i] / 255.0;
  return img;
}

MapMetrics map_metrics(std::span<const Image> a, std::span<const Image> b) {
  if (a.size() != b.size()) throw DomainError("image lists differ in length");
  if (a.empty()) throw DomainError("no images to compare");
  double abs_sum = 0.0, sq_sum = 0.0, a_sum = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const Image& x = a[k];
    const Image& y = b[k];
    if (x.width != y.width || x.height != y.height || x.channels != y.channels)
      throw DomainError("image dimensions differ: " + std::to_string(x.width) + "x" + std::to_string(x.height) +
                        "x" + std::to_string(x.channels) + " vs " + std::to_string(y.width) + "x" +
                        std::to_string(y.height) + "x" + std::to_string(y.channels));
    const std::size_t expect = static_cast<std::size_t>(x.width) * static_cast<std::size_t>(x.height) *
                               static_cast<std::size_t>(x.channels);
    if (x.data.size() != expect || y.data.size() != expect) throw DomainError("image buffer size mismatch");
    for (std::size_t i = 0; i < expect; ++i) {
      const double d = x.data[i] - y.data[i];
      abs_sum += std::abs(d);
      sq_sum += d * d;
      a_sum += x.data[i];
    }
    n += expect;
  }
  if (n == 0) throw DomainError("images are empty");
  const double nn = static_cast<double>(n);
  MapMetrics m;
  m.mae = abs_sum / nn;
  m.mse = sq_sum / nn;
  const double inf = std::numeric_limits<double>::infinity();
  m.psnr = m.mse == 0.0 ? inf : 10.0 * std::log10(1.0 / m.mse);
  const double mean_a = a_sum / nn;
  // Equal channel counts make the mean of per-channel MSEs the pooled MSE.
  if (m.mse == 0.0) m.rase = 0.0;
  else m.rase = mean_a > 0.0 ? 100.0 / mean_a * std::sqrt(m.mse) : inf;
  return m;
}

MapMetrics map_metrics(const Image& a, const Image& b) {
  return map_metrics(std::span<const Image>(&a, 1), std::span<const Image>(&b, 1));
}

const assess::ResidentialArea* Baseline::find_area(const std::string& id) const {
  const auto it = std::lower_bound(areas.begin(), areas.end(), id,
                                   [](const assess::ResidentialArea& a, const std::string& k) {
                                     return a.center_poi_id < k;
                                   });
  return it != areas.end() && it->center_poi_id == id ? &*it : nullptr;
}

Baseline make_baseline(ingest::CityDataset dataset, const assess::InfluenceParams& params) {
  Baseline b;
  b.dataset = std::move(dataset);
  b.params = params;
  assess::ExtractOptions opts;
  opts.with_plots = false;
  b.areas = assess::extract_areas(b.dataset, params, opts);
  b.table = assess::assess_areas(b.areas, b.dataset, params);
  return b;
}

namespace {

render::AreaMap render_on_scale(const assess::ResidentialArea& area, const ingest::CityDataset& dataset,
                                const assess::InfluenceParams& params, double scale, int size) {
  auto ramp = render::ColorRamp::default_ramp();
  ramp.fixed_max = scale;
  return render::render_area(area, dataset, params, ramp, size, size);
}

std::vector<double> histogram(const assess::AssessmentTable& table, const cluster::LevelModel& model) {
  std::vector<double> h(static_cast<std::size_t>(model.k), 0.0);
  for (const auto& [id, ix] : table) {
    if (ix.level) h[static_cast<std::size_t>(*ix.level)] += 1.0;
  }
  return h;
}

}  // namespace

render::AreaMap render_scenario_map(const Baseline& baseline, const ingest::CityDataset& intervened,
                                    const std::string& area_id, int size) {
  const auto* before = baseline.find_area(area_id);
  if (!before) throw NotFoundError("unknown area '" + area_id + "'");
  const double scale = render::max_influence(*before, baseline.dataset, baseline.params);
  const auto after = assess::extract_area(intervened, area_id, baseline.params, false);
  if (!after) throw NotFoundError("area '" + area_id + "' does not exist in the scenario");
  return render_on_scale(*after, intervened, baseline.params, scale, size);
}

ScenarioReport run_scenario(const Baseline& baseline, const InterventionSpec& spec,
                            const cluster::LevelModel& level_model, const ScenarioOptions& options) {
  if (options.map_size <= 0) throw DomainError("map size must be positive");
  const auto intervened = apply_intervention(baseline.dataset, spec);
  ingest::validate(intervened);

  assess::ExtractOptions opts;
  opts.with_plots = false;
  const auto after_areas = assess::extract_areas(intervened, baseline.params, opts);
  auto after_table = assess::assess_areas(after_areas, intervened, baseline.params);
  auto before_table = baseline.table;
  for (auto& [id, ix] : before_table) ix.level = cluster::assign_level(level_model, ix);
  for (auto& [id, ix] : after_table) ix.level = cluster::assign_level(level_model, ix);

  ScenarioReport report;
  report.spec = spec;
  auto bi = before_table.begin();
  auto ai = after_table.begin();
  while (bi != before_table.end() || ai != after_table.end()) {
    AreaOutcome o;
    if (ai == after_table.end() || (bi != before_table.end() && bi->first < ai->first)) {
      o.area_id = bi->first;
      o.before = bi->second;
      ++bi;
    } else if (bi == before_table.end() || ai->first < bi->first) {
      o.area_id = ai->first;
      o.after = ai->second;
      ++ai;
    } else {
      o.area_id = bi->first;
      o.before = bi->second;
      o.after = ai->second;
      ++bi;
      ++ai;
    }
    report.areas.push_back(std::move(o));
  }

  report.histogram_before = histogram(before_table, level_model);
  report.histogram_after = histogram(after_table, level_model);
  if (after_table.empty()) throw DomainError("scenario leaves no residential areas");
  report.kl = level_kl(report.histogram_before, report.histogram_after);

  std::vector<std::string> targets;
  if (options.map_area) {
    if (!baseline.find_area(*options.map_area)) throw NotFoundError("unknown area '" + *options.map_area + "'");
    targets.push_back(*options.map_area);
  } else if (options.all_maps) {
    for (const auto& a : baseline.areas) targets.push_back(a.center_poi_id);
  } else {
    const std::string* best = nullptr;
    double best_score = -std::numeric_limits<double>::infinity();
    for (const auto& [id, ix] : baseline.table) {
      if (ix.score > best_score) {
        best_score = ix.score;
        best = &id;
      }
    }
    if (best) targets.push_back(*best);
  }

  std::vector<Image> imgs_before, imgs_after;
  for (const auto& id : targets) {
    const auto* before = baseline.find_area(id);
    const auto it = std::lower_bound(after_areas.begin(), after_areas.end(), id,
                                     [](const assess::ResidentialArea& a, const std::string& k) {
                                       return a.center_poi_id < k;
                                     });
    if (!before || it == after_areas.end() || it->center_poi_id != id) continue;
    const double scale = render::max_influence(*before, baseline.dataset, baseline.params);
    imgs_before.push_back(
        to_image(render_on_scale(*before, baseline.dataset, baseline.params, scale, options.map_size)));
    imgs_after.push_back(to_image(render_on_scale(*it, intervened, baseline.params, scale, options.map_size)));
    report.map_areas.push_back(id);
  }
  if (!imgs_before.empty()) report.metrics = map_metrics(imgs_before, imgs_after);
  return report;
}

namespace {

json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

json indices_json(const std::optional<assess::PollutionIndices>& ix) {
  if (!ix) return nullptr;
  json j = {{"tnl", ix->tnl}, {"nld", ix->nld}, {"nlsd", ix->nlsd}, {"score", ix->score}};
  j["level"] = ix->level ? json(*ix->level) : json(nullptr);
  return j;
}

}  // namespace

json report_to_json(const ScenarioReport& report) {
  json areas = json::array();
  for (const auto& o : report.areas) {
    json a = {{"area_id", o.area_id}, {"before", indices_json(o.before)}, {"after", indices_json(o.after)}};
    if (o.before && o.after) {
      json d = {{"tnl", o.after->tnl - o.before->tnl},
                {"nld", o.after->nld - o.before->nld},
                {"nlsd", o.after->nlsd - o.before->nlsd},
                {"score", o.after->score - o.before->score}};
      d["level"] = o.before->level && o.after->level ? json(*o.after->level - *o.before->level) : json(nullptr);
      a["delta"] = d;
    } else {
      a["delta"] = nullptr;
    }
    areas.push_back(std::move(a));
  }
  json j;
  j["spec"] = to_json(report.spec);
  j["areas"] = std::move(areas);
  j["histogram_before"] = report.histogram_before;
  j["histogram_after"] = report.histogram_after;
  j["kl"] = report.kl;
  if (report.metrics) {
    j["metrics"] = {{"mae", number(report.metrics->mae)},
                    {"mse", number(report.metrics->mse)},
                    {"psnr", number(report.metrics->psnr)},
                    {"rase", number(report.metrics->rase)}};
  } else {
    j["metrics"] = nullptr;
  }
  j["map_areas"] = report.map_areas;
  return j;
}

std::string report_to_string(const ScenarioReport& report) {
  return report_to_json(report).dump(2) + "\n";
}

}  // namespace lumen::scenario
