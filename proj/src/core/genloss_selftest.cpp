#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

#include "core/genloss.hpp"

namespace lumen::genloss {

namespace {

double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-3});
}

// Central differences of f at theta along every coordinate.
double check_flat(const std::function<double(const Vec&)>& f, const Vec& theta, const Vec& grad,
                  double h) {
  double worst = 0.0;
  Vec probe = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    probe(i) = theta(i) + h;
    const double up = f(probe);
    probe(i) = theta(i) - h;
    const double down = f(probe);
    probe(i) = theta(i);
    worst = std::max(worst, rel_error(grad(i), (up - down) / (2.0 * h)));
  }
  return worst;
}

Vec uniform(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

Vec flatten(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }
Mat unflatten(const Vec& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Mat>(v.data(), rows, cols);
}

}  // namespace

std::vector<GradCheckRow> gradient_selftest(std::uint64_t seed, int points, double h, double tol) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(1, 8);
  std::vector<GradCheckRow> rows;
  auto record = [&](const std::string& name, const std::function<double()>& one_point) {
    GradCheckRow row{name, points, 0.0, false};
    for (int p = 0; p < points; ++p) row.max_rel_error = std::max(row.max_rel_error, one_point());
    row.passed = row.max_rel_error < tol;
    rows.push_back(row);
  };

  record("kl_loss", [&] {
    const int d = dim(rng);
    const Vec theta = uniform(rng, 2 * d, -2.0, 2.0);
    auto f = [d](const Vec& t) { return kl_loss({t.head(d), t.tail(d)}).value; };
    const auto r = kl_loss({theta.head(d), theta.tail(d)});
    Vec g(2 * d);
    g << r.grad_mu, r.grad_log_var;
    return check_flat(f, theta, g, h);
  });

  record("recon_l1", [&] {
    const int d = dim(rng);
    const Vec x = uniform(rng, d, -1.0, 1.0);
    Vec xhat = uniform(rng, d, -1.0, 1.0);
    // Stay clear of the kink at ties.
    for (Eigen::Index i = 0; i < d; ++i)
      if (std::abs(xhat(i) - x(i)) < 1e-3) xhat(i) = x(i) + 0.5;
    auto f = [&x](const Vec& t) { return recon_l1(x, t).value; };
    return check_flat(f, xhat, recon_l1(x, xhat).grad_xhat, h);
  });

  record("elbo_loss", [&] {
    const int d = dim(rng), q = dim(rng);
    const Vec x = uniform(rng, d, -1.0, 1.0);
    Vec theta = uniform(rng, d + 2 * q, -2.0, 2.0);
    for (Eigen::Index i = 0; i < d; ++i)
      if (std::abs(theta(i) - x(i)) < 1e-3) theta(i) = x(i) + 0.5;
    auto split = [d, q](const Vec& t) {
      return std::make_tuple(Vec(t.head(d)), LatentStats{t.segment(d, q), t.tail(q)});
    };
    auto f = [&](const Vec& t) {
      auto [xh, st] = split(t);
      return elbo_loss(x, xh, st).value;
    };
    auto [xh, st] = split(theta);
    const auto r = elbo_loss(x, xh, st);
    Vec g(d + 2 * q);
    g << r.grad_xhat, r.grad_mu, r.grad_log_var;
    return check_flat(f, theta, g, h);
  });

  record("class_ce_loss", [&] {
    const int n = dim(rng), c = 2 + dim(rng) % 5;
    Mat probs(n, c), labels = Mat::Zero(n, c);
    std::uniform_int_distribution<int> cls(0, c - 1);
    for (int i = 0; i < n; ++i) {
      const Vec raw = uniform(rng, c, 0.2, 1.0);
      probs.row(i) = raw.transpose() / raw.sum();
      labels(i, cls(rng)) = 1.0;
    }
    const auto r = class_ce_loss(probs, labels);
    // Probabilities live on the simplex, so probe along e_a - e_b.
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a + 1 < c; ++a) {
        Mat up = probs, down = probs;
        up(i, a) += h, up(i, a + 1) -= h;
        down(i, a) -= h, down(i, a + 1) += h;
        const double numeric = (class_ce_loss(up, labels).value - class_ce_loss(down, labels).value) / (2.0 * h);
        worst = std::max(worst, rel_error(r.grad_probs(i, a) - r.grad_probs(i, a + 1), numeric));
      }
    }
    return worst;
  });

  record("adv_bce_loss", [&] {
    const int n = dim(rng);
    const Vec p = uniform(rng, n, 0.05, 0.95);
    Vec y(n);
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < n; ++i) y(i) = coin(rng) ? 1.0 : 0.0;
    auto f = [&y](const Vec& t) { return adv_bce_loss(t, y).value; };
    return check_flat(f, p, adv_bce_loss(p, y).grad_p, h);
  });

  record("feature_match_batch", [&] {
    const int nr = dim(rng), nf = dim(rng), q = dim(rng);
    const Vec theta = uniform(rng, (nr + nf) * q, -2.0, 2.0);
    auto unpack = [=](const Vec& t) {
      return std::make_pair(FeatureBatch{unflatten(t.head(nr * q), nr, q), FeatureRole::kDiscriminator},
                            FeatureBatch{unflatten(t.tail(nf * q), nf, q), FeatureRole::kDiscriminator});
    };
    auto f = [&](const Vec& t) {
      auto [real, fake] = unpack(t);
      return feature_match_batch(real, fake).value;
    };
    auto [real, fake] = unpack(theta);
    const auto r = feature_match_batch(real, fake);
    Vec g(theta.size());
    g << flatten(r.grad_real), flatten(r.grad_fake);
    return check_flat(f, theta, g, h);
  });

  record("feature_match_pair", [&] {
    const int qd = dim(rng), qc = dim(rng);
    const Vec theta = uniform(rng, 2 * qd + 2 * qc, -2.0, 2.0);
    auto f = [=](const Vec& t) {
      return feature_match_pair(t.head(qd), t.segment(qd, qd), t.segment(2 * qd, qc), t.tail(qc)).value;
    };
    const auto r = feature_match_pair(theta.head(qd), theta.segment(qd, qd), theta.segment(2 * qd, qc),
                                      theta.tail(qc));
    Vec g(theta.size());
    g << r.grad_fd_x, r.grad_fd_xhat, r.grad_fc_x, r.grad_fc_xhat;
    return check_flat(f, theta, g, h);
  });

  record("total_loss", [&] {
    const Vec theta = uniform(rng, 5, 0.0, 5.0);
    auto f = [](const Vec& t) { return total_loss({t(0), t(1), t(2), t(3), t(4)}); };
    return check_flat(f, theta, total_loss_gradient(), h);
  });

  return rows;
}

std::string format_selftest(const std::vector<GradCheckRow>& rows) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof line, "%-22s %7s %14s  %s\n", "kernel", "points", "max_rel_err", "result");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-22s %7d %14.3e  %s\n", r.kernel.c_str(), r.points, r.max_rel_error,
                  r.passed ? "PASS" : "FAIL");
    out << line;
  }
  return out.str();
}

}  // namespace lumen::genloss
