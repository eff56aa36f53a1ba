#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "core/assess.hpp"
#include "core/elastic_net.hpp"
#include "json.hpp"

namespace lumen::causal {

inline constexpr std::array<const char*, 3> kTreatmentNames = {"count", "mean_ntl", "mean_distance"};
inline constexpr std::array<const char*, 3> kOutcomeNames = {"tnl", "nld", "nlsd"};

struct BlockStats {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd sd;  // population sd; 0 marks a constant column
};

// Outcome Y (n x 3), treatment T (n x 3) for one category, confounders X
// (n x 3*8) for the remaining categories. Rows line up with area_ids.
struct CausalDesign {
  Eigen::MatrixXd y;
  Eigen::MatrixXd t;
  Eigen::MatrixXd x;
  Category category = Category::kGrass;
  std::vector<std::string> area_ids;
  std::vector<std::string> x_names;
  BlockStats y_stats;
  BlockStats t_stats;
  BlockStats x_stats;
};

enum class MissingPolicy { kSentinel, kDropRows };

struct DesignOptions {
  MissingPolicy missing = MissingPolicy::kSentinel;
  bool winsorize = false;  // clip outcomes at the 1st/99th percentiles
  bool standardize = true;
};

CausalDesign build_design(const assess::AssessmentTable& assessments,
                          const ingest::CityDataset& dataset,
                          const std::vector<assess::ResidentialArea>& areas, Category category,
                          const DesignOptions& options = {});

// Wraps raw matrices. Confounders are always standardised; outcomes and
// treatments only when `standardize_yt` is set.
CausalDesign design_from_matrices(Eigen::MatrixXd y, Eigen::MatrixXd t, Eigen::MatrixXd x,
                                  bool standardize_yt);

std::vector<double> default_alpha_grid();

struct CrossFitConfig {
  int folds = 3;
  std::vector<double> alpha_grid = default_alpha_grid();
  double l1_ratio = 0.5;
  std::uint64_t seed = 0;
  int max_iter = 2000;
  double tol = 1e-5;
};

struct CrossFitResult {
  Eigen::MatrixXd y_resid;  // n x m, original row order
  Eigen::MatrixXd t_resid;  // n x k
  std::vector<int> fold_of_row;
  std::vector<double> alpha_y;  // chosen per outer fold
  std::vector<double> alpha_t;
};

// Seeded shuffle split into `folds` contiguous blocks of the permutation.
std::vector<int> assign_folds(std::size_t n, int folds, std::uint64_t seed);

CrossFitResult cross_fit_residuals(const CausalDesign& design, const CrossFitConfig& config);
CrossFitResult cross_fit_residuals(const CausalDesign& design, const CrossFitConfig& config,
                                   std::span<const int> fold_of_row);

struct AteEstimate {
  Category category = Category::kGrass;
  Eigen::MatrixXd theta;  // treatment variable x outcome
  Eigen::MatrixXd stderr_;
  Eigen::MatrixXd p_value;
  Eigen::MatrixXd ci_low;
  Eigen::MatrixXd ci_high;
  int n_used = 0;
  int folds = 0;
};

inline constexpr double kZ975 = 1.959964;

// Residual-on-residual least squares per outcome column with HC0 sandwich
// errors and two-sided normal p-values.
AteEstimate estimate_ate(const Eigen::MatrixXd& y_resid, const Eigen::MatrixXd& t_resid);

std::string significance_stars(double p);

struct DmlConfig {
  CrossFitConfig cross_fit;
  DesignOptions design;
};

AteEstimate run_dml(const ingest::CityDataset& dataset,
                    const std::vector<assess::ResidentialArea>& areas,
                    const assess::AssessmentTable& assessments, Category category,
                    const DmlConfig& config);

// category,treatment_var,outcome,theta,stderr,p,ci_low,ci_high,stars
void write_ate_csv(std::ostream& out, const std::vector<AteEstimate>& estimates);

struct AteRow {
  std::string category;
  std::string treatment_var;
  std::string outcome;
  double theta = 0, stderr_ = 0, p = 0, ci_low = 0, ci_high = 0;
  std::string stars;
};
std::vector<AteRow> read_ate_csv(std::istream& in);
nlohmann::json ate_rows_to_json(const std::vector<AteRow>& rows);

// Nuisance-model fit quality on a train/validation/test split of the design.
struct HoldoutDiagnostics {
  std::array<double, 3> split{0.7, 0.15, 0.15};
  std::size_t n_train = 0, n_val = 0, n_test = 0;
  double alpha_y = 0, alpha_t = 0;
  double r2_val_y = 0, r2_test_y = 0, r2_val_t = 0, r2_test_t = 0;
};
HoldoutDiagnostics holdout_diagnostics(const CausalDesign& design, std::array<double, 3> split,
                                       const CrossFitConfig& config);

}  // namespace lumen::causal
