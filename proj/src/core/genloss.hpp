#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lumen::genloss {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Encoder output for one sample. log_var holds log-variances, so exp(log_var)
// is the variance of each latent coordinate.
struct LatentStats {
  Vec mu;
  Vec log_var;
};

struct LossWeights {
  double lambda1 = 1.0;    // reconstruction
  double lambda2 = 0.1;    // KL
  double lambda3 = 1.0;    // classification
  double lambda4 = 1.0;    // adversarial
  double lambda5 = 0.001;  // batch feature matching
  double lambda6 = 1.0;    // paired feature matching

  void validate() const;
};

struct KlResult {
  double value = 0.0;
  Vec grad_mu;
  Vec grad_log_var;
};

// 0.5 * (mu'mu + sum(exp(lv) - lv - 1)), per sample over latent dimensions.
KlResult kl_loss(const LatentStats& stats);
// Mean of kl_loss over a batch.
double kl_loss_batch(std::span<const LatentStats> batch);

struct L1Result {
  double value = 0.0;
  Vec grad_xhat;  // sign(xhat - x), 0 at ties
};
L1Result recon_l1(const Vec& x, const Vec& xhat);

struct ElboResult {
  double value = 0.0;
  double recon = 0.0;
  double kl = 0.0;
  Vec grad_xhat;
  Vec grad_mu;
  Vec grad_log_var;
};
ElboResult elbo_loss(const Vec& x, const Vec& xhat, const LatentStats& stats,
                     const LossWeights& weights = {});

struct CeResult {
  double value = 0.0;
  Mat grad_probs;  // -y / p
};
// probs: n x C rows summing to 1; labels: one-hot n x C. Callers clamp;
// a zero probability on a true label is an error.
CeResult class_ce_loss(const Mat& probs, const Mat& labels);

struct BceResult {
  double value = 0.0;
  Vec grad_p;
};
// p strictly inside (0, 1), y in {0, 1}.
BceResult adv_bce_loss(const Vec& p, const Vec& y);

enum class FeatureRole { kDiscriminator, kClassifier };

struct FeatureBatch {
  Mat features;  // n x q activations
  FeatureRole role = FeatureRole::kDiscriminator;
};

struct FeatureMatchBatchResult {
  double value = 0.0;
  Mat grad_real;
  Mat grad_fake;
};
// Squared L2 distance between the column means of the two batches.
FeatureMatchBatchResult feature_match_batch(const FeatureBatch& real, const FeatureBatch& fake);

struct FeatureMatchPairResult {
  double value = 0.0;
  Vec grad_fd_x;
  Vec grad_fd_xhat;
  Vec grad_fc_x;
  Vec grad_fc_xhat;
};
FeatureMatchPairResult feature_match_pair(const Vec& fd_x, const Vec& fd_xhat, const Vec& fc_x,
                                          const Vec& fc_xhat);

struct LossComponents {
  double elbo = 0.0;
  double classification = 0.0;
  double adversarial = 0.0;
  double feature_match_batch = 0.0;
  double feature_match_pair = 0.0;
};

// elbo + l3*classification + l4*adversarial + l5*batch FM + l6*pair FM
double total_loss(const LossComponents& c, const LossWeights& w = {});
// d total / d components, in LossComponents field order.
Vec total_loss_gradient(const LossWeights& w = {});

struct GradCheckRow {
  std::string kernel;
  int points = 0;
  double max_rel_error = 0.0;
  bool passed = false;
};

// Compares every analytic gradient against central differences at random
// points. Relative error uses max(|analytic|, |numeric|, 1e-3) as denominator.
std::vector<GradCheckRow> gradient_selftest(std::uint64_t seed, int points = 100, double step = 1e-5,
                                            double tolerance = 1e-5);
std::string format_selftest(const std::vector<GradCheckRow>& rows);

}  // namespace lumen::genloss
