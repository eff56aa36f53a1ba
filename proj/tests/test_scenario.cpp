#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "core/cluster.hpp"
#include "core/scenario.hpp"
#include "fixtures.hpp"

namespace lumen {
namespace {

using scenario::parse_spec;
using scenario::SpecError;

std::string spec_error(const std::string& text) {
  try {
    parse_spec(text);
  } catch (const SpecError& e) {
    return e.what();
  }
  return "";
}

TEST(Spec, ParsesEveryAction) {
  const auto spec = parse_spec(R"({"actions":[
    {"op":"scale_ntl","category":"grass","factor":0.5},
    {"op":"set_ntl","category":"retail","value":3},
    {"op":"remove_category","category":"forest"},
    {"op":"add_poi","poi":{"id":"new","lon":116.35,"lat":39.95,"category":"commercial","ntl":12}}]})");
  ASSERT_EQ(spec.actions.size(), 4u);
  EXPECT_EQ(std::get<scenario::ScaleNtl>(spec.actions[0]).factor, 0.5);
  EXPECT_EQ(std::get<scenario::SetNtl>(spec.actions[1]).category, Category::kRetail);
  EXPECT_EQ(std::get<scenario::RemoveCategory>(spec.actions[2]).category, Category::kForest);
  EXPECT_EQ(std::get<scenario::AddPoi>(spec.actions[3]).poi.ntl, 12.0);
  const auto again = parse_spec(scenario::to_json(spec));
  EXPECT_EQ(scenario::to_json(again), scenario::to_json(spec));
}

TEST(Spec, ErrorsNameTheField) {
  EXPECT_EQ(spec_error("{}"), "missing 'actions' array");
  EXPECT_EQ(spec_error(R"({"actions":[{"op":"paint"}]})"), "unknown action 'paint'");
  EXPECT_EQ(spec_error(R"({"actions":[{"op":"scale_ntl","category":"grass","factor":-1}]})"),
            "actions[0].factor must be finite and >= 0");
  EXPECT_EQ(spec_error(R"({"actions":[{"op":"set_ntl","category":"grass"}]})"), "actions[0].value must be a number");
  EXPECT_EQ(spec_error(R"({"actions":[{"op":"remove_category","category":"lava"}]})"),
            "actions[0].category: unknown category 'lava'");
  EXPECT_EQ(spec_error(R"({"actions":[{"op":"add_poi","poi":{"id":"x","lon":200,"lat":0,"category":"grass"}}]})"),
            "actions[0].poi.lon out of range");
  EXPECT_NE(spec_error("{not json").find("malformed JSON"), std::string::npos);
  EXPECT_EQ(spec_error(R"({"actions":{}})"), "'actions' must be an array");
}

struct World {
  scenario::Baseline baseline;
  cluster::LevelModel model;
};

const World& world() {
  static const World w = [] {
    World out{scenario::make_baseline(ingest::generate_synthetic_city(testing::small_city(21, 70)), {}), {}};
    std::vector<cluster::Point3> pts;
    for (const auto& [id, ix] : out.baseline.table) pts.push_back(cluster::features(ix));
    out.model = cluster::fit_kmeans(pts, 4, 0);
    return out;
  }();
  return w;
}

scenario::InterventionSpec scale_everything(double a) {
  scenario::InterventionSpec spec;
  for (Category c : kAllCategories) spec.actions.emplace_back(scenario::ScaleNtl{c, a});
  return spec;
}

TEST(Intervention, ScaleComposesMultiplicatively) {
  const auto& ds = world().baseline.dataset;
  scenario::InterventionSpec two{{scenario::ScaleNtl{Category::kGrass, 0.3}, scenario::ScaleNtl{Category::kGrass, 2.5}}};
  scenario::InterventionSpec one{{scenario::ScaleNtl{Category::kGrass, 0.75}}};
  const auto a = scenario::apply_intervention(ds, two);
  const auto b = scenario::apply_intervention(ds, one);
  for (std::size_t i = 0; i < a.pois.size(); ++i) EXPECT_NEAR(*a.pois[i].ntl, *b.pois[i].ntl, 1e-12 * *b.pois[i].ntl);
}

TEST(Intervention, AddPoiAndDuplicates) {
  const auto& ds = world().baseline.dataset;
  scenario::InterventionSpec spec{{scenario::AddPoi{testing::poi("zz-new", 116.35, 39.94, Category::kResidential, 9)}}};
  const auto out = scenario::apply_intervention(ds, spec);
  EXPECT_EQ(out.pois.size(), ds.pois.size() + 1);
  scenario::InterventionSpec dup{{scenario::AddPoi{ds.pois.front()}}};
  EXPECT_THROW(scenario::apply_intervention(ds, dup), DomainError);
  auto no_ntl = testing::poi("q", 116.35, 39.94, Category::kGrass, 0);
  no_ntl.ntl.reset();
  EXPECT_THROW(scenario::apply_intervention(ds, {{scenario::AddPoi{no_ntl}}}), DomainError);
}

TEST(Scenario, EmptySpecChangesNothing) {
  const auto& w = world();
  const auto r = scenario::run_scenario(w.baseline, {}, w.model);
  EXPECT_EQ(r.kl, 0.0);
  EXPECT_EQ(r.histogram_before, r.histogram_after);
  ASSERT_EQ(r.areas.size(), w.baseline.table.size());
  for (const auto& o : r.areas) {
    ASSERT_TRUE(o.before && o.after);
    EXPECT_EQ(o.before->tnl, o.after->tnl);
    EXPECT_EQ(o.before->score, o.after->score);
    EXPECT_EQ(o.before->level, o.after->level);
  }
  ASSERT_TRUE(r.metrics);
  EXPECT_EQ(r.metrics->mse, 0.0);
  EXPECT_TRUE(std::isinf(r.metrics->psnr));
  const auto j = scenario::report_to_json(r);
  EXPECT_EQ(j["metrics"]["psnr"], "inf");
  EXPECT_EQ(j["areas"][0]["delta"]["score"], 0.0);
}

TEST(Scenario, GlobalScalingScalesEveryIndex) {
  const auto& w = world();
  for (double a : {0.0, 0.25, 3.0}) {
    const auto r = scenario::run_scenario(w.baseline, scale_everything(a), w.model);
    for (const auto& o : r.areas) {
      ASSERT_TRUE(o.before && o.after);
      EXPECT_NEAR(o.after->tnl, a * o.before->tnl, 1e-9 * o.before->tnl);
      EXPECT_NEAR(o.after->nld, a * o.before->nld, 1e-9 * o.before->tnl);
      EXPECT_NEAR(o.after->nlsd, a * o.before->nlsd, 1e-9 * o.before->tnl);
    }
  }
}

TEST(Scenario, DarkCityHasZeroIndices) {
  const auto& w = world();
  scenario::InterventionSpec spec;
  for (Category c : kAllCategories) spec.actions.emplace_back(scenario::SetNtl{c, 0.0});
  const auto r = scenario::run_scenario(w.baseline, spec, w.model);
  for (const auto& o : r.areas) {
    EXPECT_EQ(o.after->tnl, 0.0);
    EXPECT_EQ(o.after->score, 0.0);
  }
  EXPECT_GE(r.kl, 0.0);
}

TEST(Scenario, HalvingGrassNeverRaisesTnl) {
  const auto& w = world();
  const auto r = scenario::run_scenario(w.baseline, {{scenario::ScaleNtl{Category::kGrass, 0.5}}}, w.model);
  for (const auto& o : r.areas) {
    EXPECT_LE(o.after->tnl - o.before->tnl, 0.0) << o.area_id;
    EXPECT_LE(o.after->nld - o.before->nld, 0.0) << o.area_id;
  }
}

TEST(Scenario, NewResidentialPoiAppearsOnlyAfter) {
  const auto& w = world();
  const auto r = scenario::run_scenario(
      w.baseline, {{scenario::AddPoi{testing::poi("zz-new", 116.35, 39.94, Category::kResidential, 9)}}}, w.model);
  const auto& last = r.areas.back();
  EXPECT_EQ(last.area_id, "zz-new");
  EXPECT_FALSE(last.before);
  EXPECT_TRUE(last.after);
  EXPECT_TRUE(scenario::report_to_json(r)["areas"].back()["delta"].is_null());
  double before = 0, after = 0;
  for (double v : r.histogram_before) before += v;
  for (double v : r.histogram_after) after += v;
  EXPECT_EQ(after, before + 1);
}

TEST(Scenario, RemovingResidentialIsAnError) {
  const auto& w = world();
  EXPECT_THROW(scenario::run_scenario(w.baseline, {{scenario::RemoveCategory{Category::kResidential}}}, w.model),
               DomainError);
}

TEST(Scenario, MapAreaSelection) {
  const auto& w = world();
  const auto best = std::max_element(w.baseline.table.begin(), w.baseline.table.end(),
                                     [](const auto& a, const auto& b) { return a.second.score < b.second.score; });
  const auto r = scenario::run_scenario(w.baseline, {}, w.model);
  EXPECT_EQ(r.map_areas, std::vector<std::string>{best->first});
  scenario::ScenarioOptions all;
  all.all_maps = true;
  all.map_size = 32;
  EXPECT_EQ(scenario::run_scenario(w.baseline, {}, w.model, all).map_areas.size(), w.baseline.areas.size());
  scenario::ScenarioOptions bogus;
  bogus.map_area = "nope";
  EXPECT_THROW(scenario::run_scenario(w.baseline, {}, w.model, bogus), NotFoundError);
}

TEST(ScenarioMap, IdentityInterventionReproducesBaselineMap) {
  const auto& w = world();
  for (std::size_t i = 0; i < w.baseline.areas.size(); i += 7) {
    const auto& area = w.baseline.areas[i];
    const auto base = render::encode_ppm(render::render_area(area, w.baseline.dataset, w.baseline.params));
    const auto same = render::encode_ppm(scenario::render_scenario_map(w.baseline, w.baseline.dataset, area.center_poi_id));
    EXPECT_EQ(base, same) << area.center_poi_id;
  }
  EXPECT_THROW(scenario::render_scenario_map(w.baseline, w.baseline.dataset, "nope"), NotFoundError);
}

TEST(LevelKl, Properties) {
  const std::vector<double> p{1, 0}, q{1, 1};
  EXPECT_NEAR(scenario::level_kl(p, q), 0.693147180559945309417, 1e-15);
  const std::vector<double> a{3, 5, 0, 2};
  EXPECT_EQ(scenario::level_kl(a, a), 0.0);
  const std::vector<double> scaled{6, 10, 0, 4};
  EXPECT_NEAR(scenario::level_kl(a, scaled), 0.0, 1e-15);
  const std::vector<double> hole{1, 1}, gap{1, 0};
  const double smoothed = scenario::level_kl(hole, gap);
  EXPECT_TRUE(std::isfinite(smoothed));
  EXPECT_GT(smoothed, 5.0);

  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> u(0, 20);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> x(4), y(4);
    for (auto& v : x) v = u(rng);
    for (auto& v : y) v = u(rng);
    x[0] += 1;
    y[0] += 1;
    EXPECT_GE(scenario::level_kl(x, y), 0.0);
  }
  EXPECT_THROW(scenario::level_kl(std::vector<double>{1}, std::vector<double>{1, 2}), DomainError);
  EXPECT_THROW(scenario::level_kl(std::vector<double>{0, 0}, std::vector<double>{1, 2}), DomainError);
  EXPECT_THROW(scenario::level_kl(std::vector<double>{-1, 2}, std::vector<double>{1, 2}), DomainError);
}

scenario::Image constant_image(double v, int w = 4, int h = 3) {
  scenario::Image img;
  img.width = w;
  img.height = h;
  img.data.assign(static_cast<std::size_t>(3 * w * h), v);
  return img;
}

TEST(MapMetrics, ConstantImages) {
  const auto m = scenario::map_metrics(constant_image(0.5), constant_image(0.75));
  EXPECT_NEAR(m.mae, 0.25, 1e-15);
  EXPECT_NEAR(m.mse, 0.0625, 1e-15);
  EXPECT_NEAR(m.psnr, 12.041199826559247808, 1e-4);
  EXPECT_NEAR(m.psnr, 12.041199826559247808, 1e-12);
  EXPECT_NEAR(m.rase, 50.0, 1e-12);
  const auto same = scenario::map_metrics(constant_image(0.2), constant_image(0.2));
  EXPECT_EQ(same.mse, 0.0);
  EXPECT_TRUE(std::isinf(same.psnr));
  EXPECT_EQ(same.rase, 0.0);
  EXPECT_TRUE(std::isinf(scenario::map_metrics(constant_image(0.0), constant_image(0.1)).rase));
  EXPECT_THROW(scenario::map_metrics(constant_image(0.1, 4, 3), constant_image(0.1, 3, 4)), DomainError);
}

TEST(MapMetrics, MseBoundsMaeSquared) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 100; ++t) {
    auto a = constant_image(0), b = constant_image(0);
    for (auto& v : a.data) v = u(rng);
    for (auto& v : b.data) v = u(rng);
    const auto m = scenario::map_metrics(a, b);
    EXPECT_GE(m.mse, m.mae * m.mae - 1e-15);
    EXPECT_NEAR(m.psnr, 10 * std::log10(1 / m.mse), 1e-12);
  }
}

TEST(MapMetrics, ImageConversionNormalisesChannels) {
  render::AreaMap m;
  m.width = 1;
  m.height = 2;
  m.pixels = {0, 255, 51, 102, 0, 255};
  const auto img = scenario::to_image(m);
  EXPECT_EQ(img.data, (std::vector<double>{0, 1, 0.2, 0.4, 0, 1}));
}

}  // namespace
}  // namespace lumen
