#include "core/genloss.hpp"

#include <cmath>

#include "core/error.hpp"

namespace lumen::genloss {

namespace {
void require_finite(const Eigen::Ref<const Mat>& m, const char* what) {
  if (!m.allFinite()) throw DomainError(std::string(what) + " contains non-finite values");
}
}  // namespace

void LossWeights::validate() const {
  for (double l : {lambda1, lambda2, lambda3, lambda4, lambda5, lambda6})
    if (!(l >= 0.0) || !std::isfinite(l)) throw DomainError("loss weights must be finite and >= 0");
}

KlResult kl_loss(const LatentStats& s) {
  if (s.mu.size() != s.log_var.size()) throw DomainError("kl_loss: mu and log_var lengths differ");
  require_finite(s.mu, "mu");
  require_finite(s.log_var, "log_var");
  const Eigen::ArrayXd var = s.log_var.array().exp();
  KlResult r;
  r.value = 0.5 * (s.mu.squaredNorm() + (var - s.log_var.array() - 1.0).sum());
  r.grad_mu = s.mu;
  r.grad_log_var = 0.5 * (var - 1.0).matrix();
  return r;
}

double kl_loss_batch(std::span<const LatentStats> batch) {
  if (batch.empty()) throw DomainError("kl_loss_batch: empty batch");
  double sum = 0.0;
  for (const auto& s : batch) sum += kl_loss(s).value;
  return sum / static_cast<double>(batch.size());
}

L1Result recon_l1(const Vec& x, const Vec& xhat) {
  if (x.size() != xhat.size())
    throw DomainError("recon_l1: length mismatch (" + std::to_string(x.size()) + " vs " +
                      std::to_string(xhat.size()) + ")");
  require_finite(x, "x");
  require_finite(xhat, "xhat");
  L1Result r;
  const Eigen::ArrayXd diff = xhat.array() - x.array();
  r.value = diff.abs().sum();
  r.grad_xhat = diff.sign().matrix();
  return r;
}

ElboResult elbo_loss(const Vec& x, const Vec& xhat, const LatentStats& stats, const LossWeights& w) {
  w.validate();
  const auto rec = recon_l1(x, xhat);
  const auto kl = kl_loss(stats);
  ElboResult r;
  r.recon = rec.value;
  r.kl = kl.value;
  r.value = w.lambda1 * rec.value + w.lambda2 * kl.value;
  r.grad_xhat = w.lambda1 * rec.grad_xhat;
  r.grad_mu = w.lambda2 * kl.grad_mu;
  r.grad_log_var = w.lambda2 * kl.grad_log_var;
  return r;
}

CeResult class_ce_loss(const Mat& probs, const Mat& labels) {
  if (probs.rows() != labels.rows() || probs.cols() != labels.cols())
    throw DomainError("class_ce_loss: probs and labels shapes differ");
  require_finite(probs, "probs");
  require_finite(labels, "labels");
  CeResult r;
  r.grad_probs = Mat::Zero(probs.rows(), probs.cols());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    if (std::abs(probs.row(i).sum() - 1.0) > 1e-9)
      throw DomainError("class_ce_loss: probability row " + std::to_string(i) + " does not sum to 1");
    int ones = 0;
    for (Eigen::Index c = 0; c < probs.cols(); ++c) {
      const double p = probs(i, c), y = labels(i, c);
      if (p < 0.0 || p > 1.0) throw DomainError("class_ce_loss: probability outside [0, 1]");
      if (y != 0.0 && y != 1.0) throw DomainError("class_ce_loss: labels must be one-hot");
      if (y == 0.0) continue;
      ++ones;
      if (p == 0.0)
        throw DomainError("class_ce_loss: zero probability at a true label (row " + std::to_string(i) + ")");
      r.value -= std::log(p);
      r.grad_probs(i, c) = -1.0 / p;
    }
    if (ones != 1) throw DomainError("class_ce_loss: labels must be one-hot");
  }
  return r;
}

BceResult adv_bce_loss(const Vec& p, const Vec& y) {
  if (p.size() != y.size()) throw DomainError("adv_bce_loss: length mismatch");
  BceResult r;
  r.grad_p.resize(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!(p(i) > 0.0 && p(i) < 1.0)) throw DomainError("adv_bce_loss: probability outside (0, 1)");
    if (y(i) != 0.0 && y(i) != 1.0) throw DomainError("adv_bce_loss: labels must be 0 or 1");
    r.value -= y(i) * std::log(p(i)) + (1.0 - y(i)) * std::log1p(-p(i));
    r.grad_p(i) = -y(i) / p(i) + (1.0 - y(i)) / (1.0 - p(i));
  }
  return r;
}

FeatureMatchBatchResult feature_match_batch(const FeatureBatch& real, const FeatureBatch& fake) {
  if (real.features.cols() != fake.features.cols())
    throw DomainError("feature_match_batch: feature dimensions differ");
  if (real.features.rows() == 0 || fake.features.rows() == 0)
    throw DomainError("feature_match_batch: empty batch");
  require_finite(real.features, "real features");
  require_finite(fake.features, "fake features");
  const Eigen::RowVectorXd diff = real.features.colwise().mean() - fake.features.colwise().mean();
  FeatureMatchBatchResult r;
  r.value = diff.squaredNorm();
  const double nr = static_cast<double>(real.features.rows());
  const double nf = static_cast<double>(fake.features.rows());
  r.grad_real = (2.0 / nr) * diff.replicate(real.features.rows(), 1);
  r.grad_fake = (-2.0 / nf) * diff.replicate(fake.features.rows(), 1);
  return r;
}

FeatureMatchPairResult feature_match_pair(const Vec& fd_x, const Vec& fd_xhat, const Vec& fc_x,
                                          const Vec& fc_xhat) {
  if (fd_x.size() != fd_xhat.size() || fc_x.size() != fc_xhat.size())
    throw DomainError("feature_match_pair: dimension mismatch");
  require_finite(fd_x, "fD(x)");
  require_finite(fd_xhat, "fD(xhat)");
  require_finite(fc_x, "fC(x)");
  require_finite(fc_xhat, "fC(xhat)");
  FeatureMatchPairResult r;
  const Vec dd = fd_xhat - fd_x;
  const Vec dc = fc_xhat - fc_x;
  r.value = dd.squaredNorm() + dc.squaredNorm();
  r.grad_fd_xhat = 2.0 * dd;
  r.grad_fd_x = -2.0 * dd;
  r.grad_fc_xhat = 2.0 * dc;
  r.grad_fc_x = -2.0 * dc;
  return r;
}

double total_loss(const LossComponents& c, const LossWeights& w) {
  w.validate();
  // Neumaier compensated sum.
  const double terms[] = {c.elbo, w.lambda3 * c.classification, w.lambda4 * c.adversarial,
                          w.lambda5 * c.feature_match_batch, w.lambda6 * c.feature_match_pair};
  double sum = 0.0, comp = 0.0;
  for (double x : terms) {
    const double t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

Vec total_loss_gradient(const LossWeights& w) {
  w.validate();
  Vec g(5);
  g << 1.0, w.lambda3, w.lambda4, w.lambda5, w.lambda6;
  return g;
}

}  // namespace lumen::genloss
