#include "core/causal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "core/error.hpp"

namespace lumen::causal {

namespace {

using Eigen::MatrixXd;

BlockStats standardize_columns(MatrixXd& m, bool apply) {
  BlockStats st;
  st.mean = Eigen::RowVectorXd::Zero(m.cols());
  st.sd = Eigen::RowVectorXd::Zero(m.cols());
  const double n = static_cast<double>(m.rows());
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    auto col = m.col(c);
    const double mean = col.mean();
    const bool constant = col.maxCoeff() == col.minCoeff();
    const double sd = constant ? 0.0 : std::sqrt((col.array() - mean).square().sum() / n);
    st.mean(c) = mean;
    st.sd(c) = sd;
    if (!apply) continue;
    if (constant) col.setZero();
    else col = (col.array() - mean) / sd;
  }
  return st;
}

MatrixXd take_rows(const MatrixXd& m, const std::vector<Eigen::Index>& idx) {
  MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  return out;
}

void winsorize_columns(MatrixXd& m, double lo_q, double hi_q) {
  const auto n = static_cast<std::size_t>(m.rows());
  if (n == 0) return;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    std::vector<double> v(m.col(c).data(), m.col(c).data() + n);
    std::sort(v.begin(), v.end());
    const double lo = v[static_cast<std::size_t>(std::floor(lo_q * static_cast<double>(n - 1)))];
    const double hi = v[static_cast<std::size_t>(std::ceil(hi_q * static_cast<double>(n - 1)))];
    m.col(c) = m.col(c).cwiseMax(lo).cwiseMin(hi);
  }
}

// Picks the alpha with the lowest pooled held-out squared error over the
// given inner folds. Ties favour the larger alpha.
double select_alpha(const MatrixXd& x, const MatrixXd& y, const std::vector<int>& inner_fold,
                    int inner_count, const CrossFitConfig& cfg) {
  std::vector<double> alphas = cfg.alpha_grid;
  std::sort(alphas.begin(), alphas.end(), std::greater<>());
  if (alphas.size() == 1) return alphas.front();

  std::vector<double> sse(alphas.size(), 0.0);
  for (int h = 0; h < inner_count; ++h) {
    std::vector<Eigen::Index> fit_rows, held_rows;
    for (std::size_t i = 0; i < inner_fold.size(); ++i)
      (inner_fold[i] == h ? held_rows : fit_rows).push_back(static_cast<Eigen::Index>(i));
    if (fit_rows.size() < 2 || held_rows.empty()) continue;
    const GramStats stats = GramStats::from(take_rows(x, fit_rows), take_rows(y, fit_rows));
    const MatrixXd xh = take_rows(x, held_rows);
    const MatrixXd yh = take_rows(y, held_rows);
    MatrixXd warm;
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      ElasticNetConfig ec{alphas[a], cfg.l1_ratio, cfg.max_iter, cfg.tol, false};
      const auto model = fit_multitask_elastic_net(stats, ec, a == 0 ? nullptr : &warm);
      warm = model.coef;
      sse[a] += (yh - model.predict(xh)).squaredNorm();
    }
  }
  std::size_t best = 0;
  for (std::size_t a = 1; a < alphas.size(); ++a)
    if (sse[a] < sse[best]) best = a;
  return alphas[best];
}

}  // namespace

std::vector<double> default_alpha_grid() {
  std::vector<double> g(10);
  for (int i = 0; i < 10; ++i) g[static_cast<std::size_t>(i)] = std::pow(10.0, -4.0 + 5.0 * i / 9.0);
  return g;
}

CausalDesign build_design(const assess::AssessmentTable& assessments,
                          const ingest::CityDataset& dataset,
                          const std::vector<assess::ResidentialArea>& areas, Category category,
                          const DesignOptions& options) {
  struct Row {
    std::string id;
    std::array<double, 3> y;
    std::array<std::array<double, 3>, kCategoryCount> feat;
    bool has_treated;
  };
  std::vector<Row> rows;
  rows.reserve(areas.size());
  bool any_treated = false;
  for (const auto& area : areas) {
    const auto it = assessments.find(area.center_poi_id);
    if (it == assessments.end())
      throw DomainError("no assessment for area '" + area.center_poi_id + "'");
    Row r;
    r.id = area.center_poi_id;
    r.y = {it->second.tnl, it->second.nld, it->second.nlsd};
    std::array<double, kCategoryCount> cnt{}, ntl{}, dist{};
    for (std::size_t m = 0; m < area.members.size(); ++m) {
      if (area.members[m] == area.center_index) continue;
      const auto& poi = dataset.pois[area.members[m]];
      if (!poi.ntl) throw DomainError("POI '" + poi.id + "' has no sampled ntl");
      const auto c = category_index(poi.category);
      cnt[c] += 1.0;
      ntl[c] += *poi.ntl;
      dist[c] += std::hypot(area.member_xy[m].x, area.member_xy[m].y);
    }
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
      if (cnt[c] > 0) r.feat[c] = {cnt[c], ntl[c] / cnt[c], dist[c] / cnt[c]};
      else r.feat[c] = {0.0, 0.0, area.side_m / 2.0};
    }
    r.has_treated = cnt[category_index(category)] > 0;
    any_treated = any_treated || r.has_treated;
    if (options.missing == MissingPolicy::kDropRows && !r.has_treated) continue;
    rows.push_back(std::move(r));
  }
  if (!any_treated)
    throw DomainError("category '" + std::string(category_name(category)) + "' is absent from all areas");

  CausalDesign d;
  d.category = category;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index p = 3 * static_cast<Eigen::Index>(kCategoryCount - 1);
  d.y.resize(n, 3);
  d.t.resize(n, 3);
  d.x.resize(n, p);
  for (Category c : kAllCategories) {
    if (c == category) continue;
    for (const char* v : kTreatmentNames) d.x_names.push_back(std::string(category_name(c)) + "_" + v);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    d.area_ids.push_back(r.id);
    Eigen::Index col = 0;
    for (Category c : kAllCategories) {
      const auto& f = r.feat[category_index(c)];
      for (int v = 0; v < 3; ++v) {
        if (c == category) d.t(i, v) = f[static_cast<std::size_t>(v)];
        else d.x(i, col + v) = f[static_cast<std::size_t>(v)];
      }
      if (c != category) col += 3;
    }
    for (int o = 0; o < 3; ++o) d.y(i, o) = r.y[static_cast<std::size_t>(o)];
  }
  if (options.winsorize) winsorize_columns(d.y, 0.01, 0.99);
  d.y_stats = standardize_columns(d.y, options.standardize);
  d.t_stats = standardize_columns(d.t, options.standardize);
  d.x_stats = standardize_columns(d.x, options.standardize);
  return d;
}

CausalDesign design_from_matrices(MatrixXd y, MatrixXd t, MatrixXd x, bool standardize_yt) {
  if (y.rows() != t.rows() || y.rows() != x.rows()) throw DomainError("design blocks have different row counts");
  CausalDesign d;
  d.y = std::move(y);
  d.t = std::move(t);
  d.x = std::move(x);
  for (Eigen::Index i = 0; i < d.y.rows(); ++i) d.area_ids.push_back(std::to_string(i));
  for (Eigen::Index c = 0; c < d.x.cols(); ++c) d.x_names.push_back("x" + std::to_string(c));
  d.y_stats = standardize_columns(d.y, standardize_yt);
  d.t_stats = standardize_columns(d.t, standardize_yt);
  d.x_stats = standardize_columns(d.x, true);
  return d;
}

std::vector<int> assign_folds(std::size_t n, int folds, std::uint64_t seed) {
  if (folds < 2) throw DomainError("folds must be >= 2");
  if (n < static_cast<std::size_t>(folds)) throw DomainError("fewer rows than folds");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> fold(n);
  for (std::size_t pos = 0; pos < n; ++pos)
    fold[perm[pos]] = static_cast<int>(pos * static_cast<std::size_t>(folds) / n);
  return fold;
}

CrossFitResult cross_fit_residuals(const CausalDesign& design, const CrossFitConfig& config) {
  const auto folds = assign_folds(static_cast<std::size_t>(design.y.rows()), config.folds, config.seed);
  return cross_fit_residuals(design, config, folds);
}

CrossFitResult cross_fit_residuals(const CausalDesign& design, const CrossFitConfig& config,
                                   std::span<const int> fold_of_row) {
  const std::size_t n = static_cast<std::size_t>(design.y.rows());
  const int k = config.folds;
  if (k < 2) throw DomainError("folds must be >= 2");
  if (n < static_cast<std::size_t>(k)) throw DomainError("fewer rows than folds");
  if (fold_of_row.size() != n) throw DomainError("fold assignment length differs from row count");
  if (config.alpha_grid.empty()) throw DomainError("alpha grid is empty");
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int f : fold_of_row) {
    if (f < 0 || f >= k) throw DomainError("fold label out of range");
    ++sizes[static_cast<std::size_t>(f)];
  }
  for (int f = 0; f < k; ++f)
    if (sizes[static_cast<std::size_t>(f)] < 2)
      throw DomainError("fold " + std::to_string(f) + " has fewer than 2 rows");

  CrossFitResult out;
  out.y_resid.resize(design.y.rows(), design.y.cols());
  out.t_resid.resize(design.t.rows(), design.t.cols());
  out.fold_of_row.assign(fold_of_row.begin(), fold_of_row.end());

  for (int f = 0; f < k; ++f) {
    std::vector<Eigen::Index> train, held;
    std::vector<int> inner;
    for (std::size_t i = 0; i < n; ++i) {
      if (fold_of_row[i] == f) {
        held.push_back(static_cast<Eigen::Index>(i));
      } else {
        train.push_back(static_cast<Eigen::Index>(i));
        inner.push_back(fold_of_row[i] < f ? fold_of_row[i] : fold_of_row[i] - 1);
      }
    }
    int inner_count = k - 1;
    if (inner_count < 2) {
      for (std::size_t i = 0; i < inner.size(); ++i) inner[i] = static_cast<int>(i % 2);
      inner_count = 2;
    }
    const MatrixXd xt = take_rows(design.x, train);
    const MatrixXd yt = take_rows(design.y, train);
    const MatrixXd tt = take_rows(design.t, train);
    const MatrixXd xh = take_rows(design.x, held);

    const double ay = select_alpha(xt, yt, inner, inner_count, config);
    const double at = select_alpha(xt, tt, inner, inner_count, config);
    const auto fy = fit_multitask_elastic_net(xt, yt, {ay, config.l1_ratio, config.max_iter, config.tol, false});
    const auto gt = fit_multitask_elastic_net(xt, tt, {at, config.l1_ratio, config.max_iter, config.tol, false});
    const MatrixXd ry = take_rows(design.y, held) - fy.predict(xh);
    const MatrixXd rt = take_rows(design.t, held) - gt.predict(xh);
    for (std::size_t i = 0; i < held.size(); ++i) {
      out.y_resid.row(held[i]) = ry.row(static_cast<Eigen::Index>(i));
      out.t_resid.row(held[i]) = rt.row(static_cast<Eigen::Index>(i));
    }
    out.alpha_y.push_back(ay);
    out.alpha_t.push_back(at);
  }
  return out;
}

AteEstimate estimate_ate(const MatrixXd& y_resid, const MatrixXd& t_resid) {
  const Eigen::Index n = t_resid.rows();
  const Eigen::Index k = t_resid.cols();
  const Eigen::Index m = y_resid.cols();
  if (y_resid.rows() != n) throw DomainError("residual blocks have different row counts");
  if (n <= k) throw DomainError("need more rows than treatment variables");
  if (!y_resid.allFinite() || !t_resid.allFinite()) throw NumericError("residuals contain non-finite values");

  const MatrixXd gram = t_resid.transpose() * t_resid;
  const Eigen::JacobiSVD<MatrixXd> svd(gram);
  const auto sv = svd.singularValues();
  if (sv(k - 1) <= 0.0 || sv(0) / sv(k - 1) > 1e10) throw NumericError("collinear treatments");
  const MatrixXd bread = gram.inverse();

  AteEstimate est;
  est.theta = bread * (t_resid.transpose() * y_resid);
  est.stderr_.resize(k, m);
  est.p_value.resize(k, m);
  const MatrixXd resid = y_resid - t_resid * est.theta;
  for (Eigen::Index o = 0; o < m; ++o) {
    const Eigen::VectorXd e2 = resid.col(o).array().square();
    const MatrixXd meat = t_resid.transpose() * e2.asDiagonal() * t_resid;
    const MatrixXd cov = bread * meat * bread;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double se = std::sqrt(std::max(cov(j, j), 0.0));
      const double th = est.theta(j, o);
      est.stderr_(j, o) = se;
      double p;
      if (se > 0.0) p = std::erfc(std::abs(th / se) / std::sqrt(2.0));
      else p = th == 0.0 ? 1.0 : 0.0;
      est.p_value(j, o) = std::clamp(p, 0.0, 1.0);
    }
  }
  est.ci_low = est.theta - kZ975 * est.stderr_;
  est.ci_high = est.theta + kZ975 * est.stderr_;
  est.n_used = static_cast<int>(n);
  return est;
}

std::string significance_stars(double p) {
  if (p < 0.01) return "***";
  if (p < 0.05) return "**";
  if (p < 0.1) return "*";
  return "";
}

AteEstimate run_dml(const ingest::CityDataset& dataset,
                    const std::vector<assess::ResidentialArea>& areas,
                    const assess::AssessmentTable& assessments, Category category,
                    const DmlConfig& config) {
  const auto design = build_design(assessments, dataset, areas, category, config.design);
  const auto cf = cross_fit_residuals(design, config.cross_fit);
  auto est = estimate_ate(cf.y_resid, cf.t_resid);
  est.category = category;
  est.folds = config.cross_fit.folds;
  return est;
}

namespace {
std::string g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}
}  // namespace

void write_ate_csv(std::ostream& out, const std::vector<AteEstimate>& estimates) {
  out << "category,treatment_var,outcome,theta,stderr,p,ci_low,ci_high,stars\n";
  for (const auto& e : estimates) {
    for (Eigen::Index t = 0; t < e.theta.rows(); ++t) {
      for (Eigen::Index o = 0; o < e.theta.cols(); ++o) {
        out << category_name(e.category) << ',' << kTreatmentNames[static_cast<std::size_t>(t)] << ','
            << kOutcomeNames[static_cast<std::size_t>(o)] << ',' << g9(e.theta(t, o)) << ','
            << g9(e.stderr_(t, o)) << ',' << g9(e.p_value(t, o)) << ',' << g9(e.ci_low(t, o)) << ','
            << g9(e.ci_high(t, o)) << ',' << significance_stars(e.p_value(t, o)) << '\n';
      }
    }
  }
}

std::vector<AteRow> read_ate_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("category,treatment_var,outcome,theta", 0) != 0)
    throw ParseError("ate.csv: bad header");
  std::vector<AteRow> rows;
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
    if (f.size() != 9) throw ParseError("ate.csv: malformed row, line " + std::to_string(line_no));
    AteRow r;
    r.category = f[0];
    r.treatment_var = f[1];
    r.outcome = f[2];
    try {
      r.theta = std::stod(f[3]);
      r.stderr_ = std::stod(f[4]);
      r.p = std::stod(f[5]);
      r.ci_low = std::stod(f[6]);
      r.ci_high = std::stod(f[7]);
    } catch (const std::exception&) {
      throw ParseError("ate.csv: malformed number, line " + std::to_string(line_no));
    }
    r.stars = f[8];
    rows.push_back(std::move(r));
  }
  return rows;
}

nlohmann::json ate_rows_to_json(const std::vector<AteRow>& rows) {
  nlohmann::json j = nlohmann::json::object();
  if (rows.empty()) return j;
  j["category"] = rows.front().category;
  j["treatment_vars"] = kTreatmentNames;
  j["outcomes"] = kOutcomeNames;
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& r : rows) {
    cells.push_back({{"treatment_var", r.treatment_var}, {"outcome", r.outcome}, {"theta", r.theta},
                     {"stderr", r.stderr_}, {"p", r.p}, {"ci_low", r.ci_low}, {"ci_high", r.ci_high},
                     {"stars", r.stars}});
  }
  j["cells"] = std::move(cells);
  // theta[treatment][outcome]
  nlohmann::json theta = nlohmann::json::array();
  for (const char* t : kTreatmentNames) {
    nlohmann::json row = nlohmann::json::array();
    for (const char* o : kOutcomeNames) {
      auto it = std::find_if(rows.begin(), rows.end(),
                             [&](const AteRow& r) { return r.treatment_var == t && r.outcome == o; });
      row.push_back(it == rows.end() ? nlohmann::json(nullptr) : nlohmann::json(it->theta));
    }
    theta.push_back(std::move(row));
  }
  j["theta"] = std::move(theta);
  return j;
}

HoldoutDiagnostics holdout_diagnostics(const CausalDesign& design, std::array<double, 3> split,
                                       const CrossFitConfig& config) {
  const double total = split[0] + split[1] + split[2];
  if (!(split[0] > 0 && split[1] > 0 && split[2] > 0) || std::abs(total - 1.0) > 1e-9)
    throw DomainError("split ratios must be positive and sum to 1");
  const std::size_t n = static_cast<std::size_t>(design.y.rows());
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::floor(split[0] * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::floor(split[1] * static_cast<double>(n)));
  if (n_train < 2 || n_val < 1 || n_train + n_val >= n) throw DomainError("too few rows for the split");

  std::vector<Eigen::Index> tr, va, te;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(perm[i]);
    (i < n_train ? tr : (i < n_train + n_val ? va : te)).push_back(r);
  }
  HoldoutDiagnostics d;
  d.split = split;
  d.n_train = tr.size();
  d.n_val = va.size();
  d.n_test = te.size();

  auto r2 = [](const MatrixXd& truth, const MatrixXd& pred) {
    const double sst = (truth.rowwise() - truth.colwise().mean()).squaredNorm();
    return sst > 0 ? 1.0 - (truth - pred).squaredNorm() / sst : 0.0;
  };
  auto evaluate = [&](const MatrixXd& target, double& alpha, double& r2_val, double& r2_test) {
    const MatrixXd xt = take_rows(design.x, tr), yt = take_rows(target, tr);
    const MatrixXd xv = take_rows(design.x, va), yv = take_rows(target, va);
    const MatrixXd xe = take_rows(design.x, te), ye = take_rows(target, te);
    const auto stats = GramStats::from(xt, yt);
    double best = INFINITY;
    for (double a : config.alpha_grid) {
      const auto mdl = fit_multitask_elastic_net(stats, {a, config.l1_ratio, config.max_iter, config.tol, false});
      const double sse = (yv - mdl.predict(xv)).squaredNorm();
      if (sse < best) best = sse, alpha = a;
    }
    const auto mdl = fit_multitask_elastic_net(stats, {alpha, config.l1_ratio, config.max_iter, config.tol, false});
    r2_val = r2(yv, mdl.predict(xv));
    r2_test = r2(ye, mdl.predict(xe));
  };
  evaluate(design.y, d.alpha_y, d.r2_val_y, d.r2_test_y);
  evaluate(design.t, d.alpha_t, d.r2_val_t, d.r2_test_t);
  return d;
}

}  // namespace lumen::causal
