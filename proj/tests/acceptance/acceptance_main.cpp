// Acceptance gate: one PASS/FAIL line per criterion.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "core/assess.hpp"
#include "core/causal.hpp"
#include "core/cluster.hpp"
#include "core/elastic_net.hpp"
#include "core/genloss.hpp"
#include "core/render.hpp"
#include "core/scenario.hpp"
#include "fixtures.hpp"
#include "json.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace lumen;
using Eigen::MatrixXd;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failures without stopping at the first one.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 3) failures_.push_back(what);
    pass_ = pass_ && ok;
  }
  void note(const std::string& s) { notes_.push_back(s); }
  Outcome done() const {
    std::string d;
    for (const auto& s : notes_) d += (d.empty() ? "" : "; ") + s;
    for (const auto& s : failures_) d += (d.empty() ? "" : "; ") + ("failed: " + s);
    return {pass_, d};
  }

 private:
  bool pass_ = true;
  std::vector<std::string> notes_, failures_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- influence

Outcome influence_formula() {
  Checker c;
  const auto t0 = std::chrono::steady_clock::now();
  // 100/(sqrt(2 pi) 1500) and that times exp(-1/2), to 20 digits.
  c.expect(std::abs(assess::influence(100, 0, 1500) - 0.026596152026762178529) < 1e-7, "I(100,0,1500)");
  c.expect(std::abs(assess::influence(100, 1500, 1500) - 0.016131381634609556653) < 1e-7, "I(100,1500,1500)");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ntl(0, 500), dist(0, 5000), bw(100, 3000), scale(0, 10);
  int bad = 0;
  for (int i = 0; i < 10000; ++i) {
    const double n = ntl(rng), b = bw(rng), a = scale(rng);
    double d1 = dist(rng), d2 = dist(rng);
    if (d1 > d2) std::swap(d1, d2);
    if (assess::influence(n, d1, b) < assess::influence(n, d2, b)) ++bad;
    const double rhs = a * assess::influence(n, d1, b);
    if (std::abs(assess::influence(a * n, d1, b) - rhs) > 1e-12 * std::abs(rhs)) ++bad;
  }
  c.expect(bad == 0, std::to_string(bad) + " property violations");
  const double t = seconds_since(t0);
  c.expect(t < 1.0, "runtime");
  c.note("10000 samples, " + fmt("%.3f s", t));
  return c.done();
}

// ------------------------------------------------------------------ indices

ingest::CityDataset fifty_poi_fixture() {
  std::mt19937_64 rng(50);
  std::uniform_real_distribution<double> lon(116.30, 116.33), lat(39.90, 39.925), ntl(0, 80);
  ingest::CityDataset ds;
  for (int i = 0; i < 50; ++i) {
    const Category cat = i < 12 ? Category::kResidential : kAllCategories[static_cast<std::size_t>(i) % kCategoryCount];
    char id[16];
    std::snprintf(id, sizeof id, "p%02d", i);
    ds.pois.push_back(testing::poi(id, lon(rng), lat(rng), cat, ntl(rng)));
  }
  return ds;
}

Outcome index_identities() {
  Checker c;
  for (std::uint64_t seed = 0; seed < 5; ++seed)
    for (const auto& [id, ix] : assess::assess_city(ingest::generate_synthetic_city(testing::small_city(seed)), {}))
      c.expect(ix.score == ix.tnl + ix.nld + ix.nlsd, "score identity " + id);

  ingest::CityDataset single;
  single.pois.push_back(testing::poi("home", 116.0, 40.0, Category::kResidential, 80));
  single.pois.push_back(testing::poi("far", 116.5, 40.5, Category::kCommercial, 500));
  c.expect(assess::assess_city(single, {}).at("home").nld == 0.0, "singleton NLD");

  ingest::CityDataset flat;
  flat.pois.push_back(testing::poi("c", 116.2, 39.9, Category::kResidential, 37.3));
  for (int i = 0; i < 6; ++i)
    flat.pois.push_back(testing::poi("m" + std::to_string(i), 116.2, 39.9, kAllCategories[static_cast<std::size_t>(i)], 37.3));
  c.expect(assess::assess_city(flat, {}).at("c").nlsd == 0.0, "constant-influence NLSD");

  const auto ds = fifty_poi_fixture();
  const auto fast = assess::assess_city(ds, {}, assess::CandidateSearch::kSpatialIndex);
  const auto slow = assess::assess_city(ds, {}, assess::CandidateSearch::kNaive);
  double worst = 0;
  c.expect(fast.size() == slow.size() && !fast.empty(), "same areas");
  for (const auto& [id, ix] : fast) {
    const auto& jx = slow.at(id);
    for (auto [a, b] : {std::pair{ix.tnl, jx.tnl}, {ix.nld, jx.nld}, {ix.nlsd, jx.nlsd}, {ix.score, jx.score}})
      if (b != 0) worst = std::max(worst, std::abs(a - b) / std::abs(b));
  }
  c.expect(worst <= 1e-12, "kd-tree vs naive");
  c.note(std::to_string(fast.size()) + " areas on 50 POIs, max rel diff " + fmt("%.1e", worst));
  return c.done();
}

// ------------------------------------------------------------------ k-means

std::vector<cluster::Point3> blobs(const std::vector<cluster::Point3>& centres, int per, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, sd);
  std::vector<cluster::Point3> out;
  for (const auto& ctr : centres)
    for (int i = 0; i < per; ++i) out.push_back({ctr[0] + n(rng), ctr[1] + n(rng), ctr[2] + n(rng)});
  return out;
}

Outcome kmeans() {
  Checker c;
  const auto t0 = std::chrono::steady_clock::now();
  int runs = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = cluster::fit_kmeans(blobs({{0, 0, 0}, {3, 1, 0}, {1, 4, 2}, {5, 5, 5}}, 40, 1.5, seed), 4, seed);
    for (std::size_t i = 1; i < m.inertia_history.size(); ++i)
      c.expect(m.inertia_history[i] <= m.inertia_history[i - 1] * (1 + 1e-12) + 1e-12, "inertia increased");
    ++runs;
  }

  const auto two = blobs({{0, 0, 0}, {100, 100, 100}}, 50, 1.0, 3);
  const auto m2 = cluster::fit_kmeans(two, 2, 0);
  for (int i = 0; i < 100; ++i)
    c.expect(cluster::assign_level(m2, two[static_cast<std::size_t>(i)]) == (i < 50 ? 0 : 1), "two-blob recovery");

  // Exhaustive search over every 3-partition of 12 standardized points.
  const auto pts = blobs({{0, 0, 0}, {10, 0, 3}, {0, 10, 6}}, 4, 0.8, 17);
  auto z = pts;
  for (int d = 0; d < 3; ++d) {
    double mean = 0, ss = 0;
    for (const auto& p : pts) mean += p[d];
    mean /= 12;
    for (const auto& p : pts) ss += (p[d] - mean) * (p[d] - mean);
    for (auto& p : z) p[d] = (p[d] - mean) / std::sqrt(ss / 12);
  }
  double best = INFINITY;
  for (int code = 0; code < 531441; ++code) {
    int labels[12], used = 0;
    for (int i = 0, x = code; i < 12; ++i, x /= 3) used |= 1 << (labels[i] = x % 3);
    if (used != 7) continue;
    double s = 0;
    for (int g = 0; g < 3; ++g) {
      cluster::Point3 mu{};
      int n = 0;
      for (int i = 0; i < 12; ++i)
        if (labels[i] == g) {
          ++n;
          for (int d = 0; d < 3; ++d) mu[d] += z[static_cast<std::size_t>(i)][d];
        }
      for (int i = 0; i < 12; ++i)
        if (labels[i] == g)
          for (int d = 0; d < 3; ++d) s += std::pow(z[static_cast<std::size_t>(i)][d] - mu[d] / n, 2);
    }
    best = std::min(best, s);
  }
  const auto m3 = cluster::fit_kmeans(pts, 3, 0);
  c.expect(std::abs(m3.inertia - best) <= 1e-9, "exhaustive oracle");
  const double t = seconds_since(t0);
  c.expect(t < 10.0, "runtime");
  c.note(std::to_string(runs) + " monotone runs, |inertia - oracle| " + fmt("%.1e", std::abs(m3.inertia - best)) +
         ", " + fmt("%.2f s", t));
  return c.done();
}

// -------------------------------------------------------------- elastic net

MatrixXd gaussian(Eigen::Index r, Eigen::Index cols, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0, sd);
  MatrixXd m(r, cols);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

Outcome elastic_net() {
  Checker c;
  std::mt19937_64 rng(1);
  const MatrixXd x = gaussian(80, 5, rng);
  const MatrixXd y = x * gaussian(5, 3, rng) + gaussian(80, 3, rng, 0.3);
  causal::ElasticNetConfig cfg;
  cfg.alpha = 0;
  cfg.tol = 1e-13;
  cfg.max_iter = 100000;
  const auto ols = causal::fit_multitask_elastic_net(x, y, cfg);
  MatrixXd xa(80, 6);
  xa << MatrixXd::Ones(80, 1), x;
  const MatrixXd beta = (xa.transpose() * xa).ldlt().solve(xa.transpose() * y);
  const double ols_err = (ols.coef - beta.bottomRows(5)).cwiseAbs().maxCoeff();
  c.expect(ols_err < 1e-6, "alpha=0 vs normal equations");

  // Sylvester-Hadamard columns: X'X/n = I.
  MatrixXd h(1, 1);
  h << 1;
  for (int s = 0; s < 3; ++s) {
    MatrixXd next(2 * h.rows(), 2 * h.cols());
    next << h, h, h, -h;
    h = next;
  }
  const MatrixXd hx = h.rightCols(7);
  const MatrixXd hy = gaussian(8, 2, rng, 2.0);
  const MatrixXd zz = hx.transpose() * (hy.rowwise() - hy.colwise().mean()) / 8.0;
  double st_err = 0;
  for (double alpha : {0.05, 0.3, 1.0})
    for (double l1 : {0.0, 0.5, 1.0}) {
      causal::ElasticNetConfig e;
      e.alpha = alpha;
      e.l1_ratio = l1;
      e.tol = 1e-14;
      const auto m = causal::fit_multitask_elastic_net(hx, hy, e);
      for (Eigen::Index j = 0; j < 7; ++j) {
        const double shrink = std::max(0.0, 1.0 - alpha * l1 / zz.row(j).norm());
        const Eigen::RowVectorXd want = shrink * zz.row(j) / (1.0 + alpha * (1.0 - l1));
        st_err = std::max(st_err, (m.coef.row(j) - want).cwiseAbs().maxCoeff());
      }
    }
  c.expect(st_err < 1e-6, "soft-threshold closed form");

  int sweeps = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 r(seed);
    const MatrixXd xs = gaussian(120, 24, r);
    const MatrixXd ys = xs.leftCols(3) * gaussian(3, 3, r) + gaussian(120, 3, r);
    causal::ElasticNetConfig e;
    e.alpha = 0.05;
    e.track_objective = true;
    const auto m = causal::fit_multitask_elastic_net(xs, ys, e);
    for (std::size_t i = 1; i < m.objective_history.size(); ++i, ++sweeps)
      c.expect(m.objective_history[i] <= m.objective_history[i - 1] + 1e-12, "objective increased");
  }
  c.note("OLS err " + fmt("%.1e", ols_err) + ", soft-threshold err " + fmt("%.1e", st_err) + ", " +
         std::to_string(sweeps) + " monotone sweeps");
  return c.done();
}

// ---------------------------------------------------------------------- DML

// y = theta t + conf + e, t = conf + u; conf loads on 4 of 24 confounders.
struct Dgp {
  MatrixXd y, t, x;
};
Dgp confounded(int n, std::uint64_t seed, double theta) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0, 1);
  Dgp d{MatrixXd(n, 1), MatrixXd(n, 1), MatrixXd(n, 24)};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 24; ++j) d.x(i, j) = z(rng);
    const double conf = 0.5 * (d.x(i, 0) + d.x(i, 1) + d.x(i, 2) + d.x(i, 3));
    d.t(i, 0) = conf + z(rng);
    d.y(i, 0) = theta * d.t(i, 0) + conf + 0.1 * z(rng);
  }
  return d;
}

causal::AteEstimate dml_fit(const Dgp& d, std::uint64_t seed) {
  causal::CrossFitConfig cfg;
  cfg.seed = seed;
  const auto cf = causal::cross_fit_residuals(causal::design_from_matrices(d.y, d.t, d.x, false), cfg);
  return causal::estimate_ate(cf.y_resid, cf.t_resid);
}

Outcome dml_debiasing() {
  Checker c;
  const auto t0 = std::chrono::steady_clock::now();
  const auto d = confounded(5000, 2024, 0.5);
  const double theta = dml_fit(d, 0).theta(0, 0);
  c.expect(theta >= 0.45 && theta <= 0.55, "point estimate");
  const Eigen::VectorXd tc = d.t.col(0).array() - d.t.mean();
  const double naive = tc.dot(d.y.col(0)) / tc.squaredNorm();
  c.expect(std::abs(naive - 0.5) > 0.1, "naive bias");
  int covered = 0;
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    const auto est = dml_fit(confounded(5000, 10000 + rep, 0.5), rep);
    if (est.ci_low(0, 0) <= 0.5 && 0.5 <= est.ci_high(0, 0)) ++covered;
  }
  c.expect(covered >= 180, "CI coverage");
  const double t = seconds_since(t0);
  c.expect(t < 300, "runtime");
  c.note("theta " + fmt("%.4f", theta) + ", naive " + fmt("%.4f", naive) + ", coverage " + std::to_string(covered) +
         "/200, " + fmt("%.1f s", t));
  return c.done();
}

Outcome null_calibration() {
  Checker c;
  int quiet = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto est = dml_fit(confounded(5000, seed, 0.0), seed);
    if (est.p_value(0, 0) >= 0.1 && causal::significance_stars(est.p_value(0, 0)).empty()) ++quiet;
  }
  c.expect(quiet >= 45, "p >= 0.1 in fewer than 90% of seeds");
  c.note(std::to_string(quiet) + "/50 seeds without stars");
  return c.done();
}

// ------------------------------------------------------------- loss kernels

Outcome loss_kernels() {
  Checker c;
  const auto rows = genloss::gradient_selftest(0, 100, 1e-5, 1e-5);
  double worst = 0;
  for (const auto& r : rows) {
    c.expect(r.passed && r.points == 100, r.kernel);
    worst = std::max(worst, r.max_rel_error);
  }
  c.expect(genloss::kl_loss({genloss::Vec::Zero(1), genloss::Vec::Zero(1)}).value == 0.0, "kl(0,0)");
  genloss::Mat probs = genloss::Mat::Constant(1, 4, 0.25), labels = genloss::Mat::Zero(1, 4);
  labels(0, 2) = 1;
  c.expect(std::abs(genloss::class_ce_loss(probs, labels).value - 1.386294361119890618834) < 1e-9, "CE ln 4");
  c.expect(genloss::total_loss({1, 1, 1, 1, 1}) == 4.001, "total 4.001");
  c.note(std::to_string(rows.size()) + " kernels, max rel err " + fmt("%.1e", worst));
  return c.done();
}

// ----------------------------------------------------------------- scenario

Outcome scenario_engine() {
  Checker c;
  const auto baseline = scenario::make_baseline(ingest::generate_synthetic_city(testing::small_city(21, 70)), {});
  std::vector<cluster::Point3> pts;
  for (const auto& [id, ix] : baseline.table) pts.push_back(cluster::features(ix));
  const auto model = cluster::fit_kmeans(pts, 4, 0);

  const auto empty = scenario::run_scenario(baseline, {}, model);
  c.expect(empty.kl == 0.0, "empty KL");
  for (const auto& o : empty.areas)
    c.expect(o.before && o.after && o.before->tnl == o.after->tnl && o.before->nld == o.after->nld &&
                 o.before->nlsd == o.after->nlsd && o.before->score == o.after->score,
             "empty delta " + o.area_id);

  for (double a : {0.25, 3.0}) {
    scenario::InterventionSpec spec;
    for (Category cat : kAllCategories) spec.actions.emplace_back(scenario::ScaleNtl{cat, a});
    for (const auto& o : scenario::run_scenario(baseline, spec, model).areas) {
      const double tol = 1e-9 * o.before->tnl;
      c.expect(std::abs(o.after->tnl - a * o.before->tnl) <= tol && std::abs(o.after->nld - a * o.before->nld) <= tol &&
                   std::abs(o.after->nlsd - a * o.before->nlsd) <= tol,
               "scaling " + o.area_id);
    }
  }

  int maps = 0;
  for (const auto& area : baseline.areas) {
    const auto base = render::encode_ppm(render::render_area(area, baseline.dataset, baseline.params));
    const auto same = render::encode_ppm(scenario::render_scenario_map(baseline, baseline.dataset, area.center_poi_id));
    c.expect(base == same, "identity map " + area.center_poi_id);
    ++maps;
  }
  c.note(std::to_string(empty.areas.size()) + " areas, " + std::to_string(maps) + " identity maps");
  return c.done();
}

// ------------------------------------------------------------------ metrics

scenario::Image constant_image(double v) {
  scenario::Image img;
  img.width = 8;
  img.height = 8;
  img.data.assign(3 * 64, v);
  return img;
}

Outcome metrics() {
  Checker c;
  const auto same = scenario::map_metrics(constant_image(0.3), constant_image(0.3));
  c.expect(same.mae == 0 && std::isinf(same.psnr) && same.psnr > 0 && same.rase == 0, "identical images");
  const auto m = scenario::map_metrics(constant_image(0.5), constant_image(0.75));
  c.expect(std::abs(m.psnr - 12.041199826559247808) < 1e-3, "PSNR 0.5 vs 0.75");
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 10);
  std::uniform_int_distribution<int> bins(2, 8);
  int negative = 0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> p(static_cast<std::size_t>(bins(rng))), q(p.size());
    for (auto& v : p) v = u(rng);
    for (auto& v : q) v = u(rng);
    if (scenario::level_kl(p, q) < 0) ++negative;
  }
  c.expect(negative == 0, "KL >= 0");
  const double ln2 = scenario::level_kl(std::vector<double>{1, 0}, std::vector<double>{0.5, 0.5});
  c.expect(std::abs(ln2 - 0.693147180559945309417) < 1e-9, "KL ln 2");
  c.note("PSNR " + fmt("%.6f", m.psnr) + ", 1000 KL pairs");
  return c.done();
}

// ---------------------------------------------------------------- pipeline

// About 10,000 areas of ~100 POIs: 100k POIs over ~63 x 63 km.
std::string big_city_json() {
  nlohmann::json j = {{"seed", 11},
                      {"n_residential", 10000},
                      {"name", "acceptance"},
                      {"extent", {{"lon_min", 116.0}, {"lon_max", 116.742}, {"lat_min", 39.6}, {"lat_max", 40.169}}}};
  const std::map<std::string, std::array<double, 3>> cats = {
      {"brownfield", {6000, 5, 2}},   {"commercial", {16000, 60, 15}}, {"construction", {8000, 20, 6}},
      {"farmland", {6000, 3, 1}},     {"forest", {6000, 2, 1}},        {"grass", {16000, 15, 5}},
      {"industrial", {10000, 45, 10}}, {"retail", {22000, 50, 12}}};
  j["categories"]["residential"] = {{"ntl_mean", 30}, {"ntl_sd", 8}};
  for (const auto& [name, v] : cats) j["categories"][name] = {{"count", v[0]}, {"ntl_mean", v[1]}, {"ntl_sd", v[2]}};
  j["couplings"] = {{{"source", "construction"}, {"target", "grass"}, {"radius_m", 600}, {"gain", 2.0}}};
  return j.dump(1);
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != ".lock")
      out[fs::relative(e.path(), dir).string()] = testing::read_text(e.path());
  return out;
}

Outcome pipeline_scale() {
  Checker c;
  testing::TempDir dir;
  const std::string cli = testing::quote(LUMEN_CLI_PATH);
  testing::write_text(dir / "city.json", big_city_json());
  auto sh = [&](const std::string& args) {
    const auto r = testing::run(cli + " " + args);
    c.expect(r.exit_code == 0, args + ": " + r.err);
    return r;
  };
  sh("synth --spec " + testing::quote(dir / "city.json") + " --out " + testing::quote(dir / "pois.csv"));
  testing::write_text(dir / "spec.json", R"({"actions":[{"op":"scale_ntl","category":"grass","factor":0.5}]})");

  std::vector<std::map<std::string, std::string>> runs;
  std::vector<double> assess_s;
  std::string area;
  for (const char* name : {"run1", "run2"}) {
    const std::string ws = " -w " + testing::quote(dir / name);
    sh("ingest --poi " + testing::quote(dir / "pois.csv") + ws);
    const auto t0 = std::chrono::steady_clock::now();
    sh("assess" + ws);
    assess_s.push_back(seconds_since(t0));
    sh("cluster --seed 0" + ws);
    sh("dml --seed 0" + ws);
    sh("whatif -q --spec " + testing::quote(dir / "spec.json") + ws);
    if (area.empty()) {
      const auto idx = testing::read_text(dir / name / "indices.csv");
      const auto row = idx.substr(idx.find('\n') + 1);
      area = row.substr(0, row.find(','));
    }
    sh("render --area " + area + ws);
    runs.push_back(snapshot(dir / name));
  }
  const std::string idx = runs[0]["indices.csv"];
  const auto n_areas = static_cast<std::size_t>(std::count(idx.begin(), idx.end(), '\n')) - 1;
  c.expect(n_areas == 10000, "area count " + std::to_string(n_areas));
  const auto areas = nlohmann::json::parse(runs[0]["areas.json"]);
  double members = 0;
  for (const auto& a : areas.at("areas")) members += static_cast<double>(a["members"].size());
  members /= static_cast<double>(std::max<std::size_t>(n_areas, 1));
  c.expect(members >= 80 && members <= 120, "POIs per area " + fmt("%.1f", members));
  c.expect(runs[0] == runs[1] && runs[0].size() >= 8, "artifacts differ between runs");
  const double worst = *std::max_element(assess_s.begin(), assess_s.end());
  c.expect(worst < 60.0, "assess runtime");
  c.note(std::to_string(n_areas) + " areas of " + fmt("%.1f", members) + " POIs, assess " + fmt("%.1f s", assess_s[0]) + " / " +
         fmt("%.1f s", assess_s[1]) + ", " + std::to_string(runs[0].size()) + " artifacts identical: " +
         (runs[0] == runs[1] ? "yes" : "no") + ", " + std::to_string(std::thread::hardware_concurrency()) + " cores");
  return c.done();
}

// ---------------------------------------------------------------- secondary

Outcome no_secondary() {
  Checker c;
  for (const fs::path root : {fs::path(LUMEN_SOURCE_DIR), fs::path(LUMEN_BINARY_DIR)})
    for (auto it = fs::recursive_directory_iterator(root); it != fs::recursive_directory_iterator(); ++it) {
      const auto name = it->path().filename().string();
      if (name == ".git" || name == "_deps") {
        it.disable_recursion_pending();
        continue;
      }
      c.expect(name.find("webui") == std::string::npos, it->path().string());
    }
  c.note("no web UI sources or targets; suite ran against liblumen and the CLI only");
  return c.done();
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"influence formula", influence_formula},
      {"index identities", index_identities},
      {"k-means", kmeans},
      {"elastic net", elastic_net},
      {"DML debiasing", dml_debiasing},
      {"null calibration", null_calibration},
      {"loss kernels", loss_kernels},
      {"scenario engine", scenario_engine},
      {"metrics", metrics},
      {"pipeline determinism and scale", pipeline_scale},
      {"no secondary component", no_secondary},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %s (%s) [%.2f s]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
