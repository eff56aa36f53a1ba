#pragma once

#include <vector>

#include <Eigen/Dense>

namespace lumen::causal {

struct ElasticNetConfig {
  double alpha = 1.0;
  double l1_ratio = 0.5;
  int max_iter = 2000;
  double tol = 1e-5;
  bool track_objective = false;
};

// Multi-task elastic net
//   (1/2n)||Y - XW - 1b'||_F^2 + alpha*l1*sum_j ||W_j.||_2 + alpha*(1-l1)/2 ||W||_F^2
// W is p x m; rows are penalised as groups so a feature is kept or dropped
// for all tasks together.
struct ElasticNetModel {
  Eigen::MatrixXd coef;          // p x m
  Eigen::RowVectorXd intercept;  // 1 x m
  double alpha = 0.0;
  double l1_ratio = 0.5;
  int max_iter = 0;
  double tol = 0.0;
  bool converged = false;
  int sweeps = 0;
  std::vector<double> objective_history;  // filled when track_objective is set

  Eigen::MatrixXd predict(const Eigen::MatrixXd& x) const;
};

// Centred second moments of a training set; a fit only ever needs these.
struct GramStats {
  Eigen::MatrixXd xx;        // Xc'Xc / n
  Eigen::MatrixXd xy;        // Xc'Yc / n
  double yy = 0.0;           // ||Yc||^2 / n
  Eigen::RowVectorXd x_mean;
  Eigen::RowVectorXd y_mean;
  double n = 0.0;

  static GramStats from(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);
};

ElasticNetModel fit_multitask_elastic_net(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                          const ElasticNetConfig& config);

// Same solver on precomputed statistics. `warm_start` (p x m) seeds W.
ElasticNetModel fit_multitask_elastic_net(const GramStats& stats, const ElasticNetConfig& config,
                                          const Eigen::MatrixXd* warm_start = nullptr);

// Penalised objective evaluated directly from the data.
double elastic_net_objective(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                             const ElasticNetModel& model);

}  // namespace lumen::causal
