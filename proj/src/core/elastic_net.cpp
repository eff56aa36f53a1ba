#include "core/elastic_net.hpp"

#include <cmath>

#include "core/error.hpp"

namespace lumen::causal {

namespace {

void check_config(const ElasticNetConfig& c) {
  if (!(c.alpha >= 0.0) || !std::isfinite(c.alpha)) throw DomainError("alpha must be >= 0");
  if (!(c.l1_ratio >= 0.0 && c.l1_ratio <= 1.0)) throw DomainError("l1_ratio must lie in [0, 1]");
  if (c.max_iter < 1) throw DomainError("max_iter must be >= 1");
  if (!(c.tol >= 0.0)) throw DomainError("tol must be >= 0");
}

double penalised_objective(const GramStats& s, const Eigen::MatrixXd& w, double alpha, double l1) {
  const double fit = 0.5 * (s.yy - 2.0 * (w.cwiseProduct(s.xy)).sum() + (w.transpose() * s.xx * w).trace());
  return fit + alpha * l1 * w.rowwise().norm().sum() + 0.5 * alpha * (1.0 - l1) * w.squaredNorm();
}

}  // namespace

Eigen::MatrixXd ElasticNetModel::predict(const Eigen::MatrixXd& x) const {
  return (x * coef).rowwise() + intercept;
}

GramStats GramStats::from(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  if (x.rows() != y.rows()) throw DomainError("X and Y row counts differ");
  if (x.rows() < 2) throw DomainError("elastic net needs at least 2 rows");
  if (!x.allFinite() || !y.allFinite()) throw NumericError("elastic net input contains non-finite values");
  GramStats s;
  s.n = static_cast<double>(x.rows());
  s.x_mean = x.colwise().mean();
  s.y_mean = y.colwise().mean();
  const Eigen::MatrixXd xc = x.rowwise() - s.x_mean;
  const Eigen::MatrixXd yc = y.rowwise() - s.y_mean;
  s.xx = xc.transpose() * xc / s.n;
  s.xy = xc.transpose() * yc / s.n;
  s.yy = yc.squaredNorm() / s.n;
  return s;
}

ElasticNetModel fit_multitask_elastic_net(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                          const ElasticNetConfig& config) {
  check_config(config);
  return fit_multitask_elastic_net(GramStats::from(x, y), config);
}

ElasticNetModel fit_multitask_elastic_net(const GramStats& s, const ElasticNetConfig& config,
                                          const Eigen::MatrixXd* warm_start) {
  check_config(config);
  const Eigen::Index p = s.xx.rows();
  const Eigen::Index m = s.xy.cols();
  const double l1_pen = config.alpha * config.l1_ratio;
  const double l2_pen = config.alpha * (1.0 - config.l1_ratio);

  ElasticNetModel model;
  model.alpha = config.alpha;
  model.l1_ratio = config.l1_ratio;
  model.max_iter = config.max_iter;
  model.tol = config.tol;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(p, m);
  if (warm_start && warm_start->rows() == p && warm_start->cols() == m) w = *warm_start;

  if (config.track_objective) model.objective_history.push_back(penalised_objective(s, w, config.alpha, config.l1_ratio));

  Eigen::RowVectorXd z(m);
  for (int sweep = 0; sweep < config.max_iter; ++sweep) {
    double max_update = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double gjj = s.xx(j, j);
      // Partial-residual correlation for row j with its own term added back.
      z = s.xy.row(j) - s.xx.row(j) * w + gjj * w.row(j);
      const double denom = gjj + l2_pen;
      const double znorm = z.norm();
      Eigen::RowVectorXd next = Eigen::RowVectorXd::Zero(m);
      if (denom > 0.0 && znorm > l1_pen) next = (1.0 - l1_pen / znorm) * z / denom;
      max_update = std::max(max_update, (next - w.row(j)).cwiseAbs().maxCoeff());
      w.row(j) = next;
    }
    model.sweeps = sweep + 1;
    if (config.track_objective) model.objective_history.push_back(penalised_objective(s, w, config.alpha, config.l1_ratio));
    if (max_update < config.tol) {
      model.converged = true;
      break;
    }
  }

  model.coef = std::move(w);
  model.intercept = s.y_mean - s.x_mean * model.coef;
  return model;
}

double elastic_net_objective(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                             const ElasticNetModel& model) {
  const double n = static_cast<double>(x.rows());
  const Eigen::MatrixXd r = y - model.predict(x);
  return 0.5 * r.squaredNorm() / n + model.alpha * model.l1_ratio * model.coef.rowwise().norm().sum() +
         0.5 * model.alpha * (1.0 - model.l1_ratio) * model.coef.squaredNorm();
}

}  // namespace lumen::causal
