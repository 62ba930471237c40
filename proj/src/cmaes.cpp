#include "ndp/cmaes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ndp/error.hpp"
#include "json.hpp"

namespace ndp {

Cmaes::Cmaes(int dim, std::vector<double> mean0, double sigma0, int popsize) {
  if (dim < 1) fail(ErrorKind::Contract, "cmaes: dim must be >= 1");
  if (sigma0 <= 0.0) fail(ErrorKind::Contract, "cmaes: sigma0 must be > 0");
  if (popsize < 4) fail(ErrorKind::Contract, "cmaes: popsize must be >= 4");
  if (static_cast<int>(mean0.size()) != dim)
    fail(ErrorKind::Contract, "cmaes: mean0 length != dim");

  dim_ = dim;
  lambda_ = popsize;
  mu_ = popsize / 2;
  double n = dim;

  weights_.resize(mu_);
  for (int i = 0; i < mu_; ++i)
    weights_[i] = std::log(mu_ + 0.5) - std::log(i + 1.0);
  double wsum = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  for (auto& w : weights_) w /= wsum;
  double w2 = 0.0;
  for (double w : weights_) w2 += w * w;
  mu_eff_ = 1.0 / w2;

  c_sigma_ = (mu_eff_ + 2.0) / (n + mu_eff_ + 5.0);
  d_sigma_ = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff_ - 1.0) / (n + 1.0)) - 1.0) +
             c_sigma_;
  c_c_ = (4.0 + mu_eff_ / n) / (n + 4.0 + 2.0 * mu_eff_ / n);
  c_1_ = 2.0 / ((n + 1.3) * (n + 1.3) + mu_eff_);
  c_mu_ = std::min(1.0 - c_1_, 2.0 * (mu_eff_ - 2.0 + 1.0 / mu_eff_) /
                                   ((n + 2.0) * (n + 2.0) + mu_eff_));
  chi_n_ = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

  mean_ = std::move(mean0);
  sigma_ = sigma0;
  cov_.assign(static_cast<size_t>(dim_) * dim_, 0.0);
  for (int i = 0; i < dim_; ++i) cov_[static_cast<size_t>(i) * dim_ + i] = 1.0;
  p_sigma_.assign(dim_, 0.0);
  p_c_.assign(dim_, 0.0);
}

void Cmaes::eigen_decompose() {
  // cyclic Jacobi rotations; adequate for the dimensions searched here
  int n = dim_;
  std::vector<double> a = cov_;
  std::vector<double> v(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) v[static_cast<size_t>(i) * n + i] = 1.0;
  auto at = [&](std::vector<double>& mat, int r, int c) -> double& {
    return mat[static_cast<size_t>(r) * n + c];
  };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += at(a, p, q) * at(a, p, q);
    if (std::sqrt(off) < 1e-12) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        double apq = at(a, p, q);
        if (std::abs(apq) < 1e-300) continue;
        double app = at(a, p, p), aqq = at(a, q, q);
        double theta = 0.5 * (aqq - app) / apq;
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < n; ++k) {
          double akp = at(a, k, p), akq = at(a, k, q);
          at(a, k, p) = c * akp - s * akq;
          at(a, k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = at(a, p, k), aqk = at(a, q, k);
          at(a, p, k) = c * apk - s * aqk;
          at(a, q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          double vkp = at(v, k, p), vkq = at(v, k, q);
          at(v, k, p) = c * vkp - s * vkq;
          at(v, k, q) = s * vkp + c * vkq;
        }
      }
  }
  eig_basis_ = std::move(v);
  eig_scale_.resize(n);
  for (int i = 0; i < n; ++i) {
    double ev = a[static_cast<size_t>(i) * n + i];
    eig_scale_[i] = std::sqrt(std::max(ev, 1e-30));
  }
  eigen_generation_ = generation_;
}

void Cmaes::refresh_eigen_if_stale() {
  if (eigen_generation_ < 0) {
    eigen_decompose();
    return;
  }
  double lag = static_cast<double>(generation_ - eigen_generation_);
  if (lag * (c_1_ + c_mu_) * dim_ * 10.0 >= 1.0) eigen_decompose();
}

std::vector<std::vector<double>> Cmaes::ask(Rng& rng) {
  refresh_eigen_if_stale();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> out(lambda_, std::vector<double>(dim_));
  std::vector<double> z(dim_);
  for (int k = 0; k < lambda_; ++k) {
    for (int i = 0; i < dim_; ++i) z[i] = normal(rng) * eig_scale_[i];
    for (int r = 0; r < dim_; ++r) {
      double s = 0.0;
      const double* brow = &eig_basis_[static_cast<size_t>(r) * dim_];
      for (int i = 0; i < dim_; ++i) s += brow[i] * z[i];
      out[k][r] = mean_[r] + sigma_ * s;
    }
  }
  return out;
}

void Cmaes::tell(const std::vector<std::vector<double>>& candidates,
                 std::vector<double> fitnesses) {
  if (static_cast<int>(candidates.size()) != lambda_ ||
      static_cast<int>(fitnesses.size()) != lambda_)
    fail(ErrorKind::Contract, "cmaes tell: expected " + std::to_string(lambda_) +
                                  " candidates and fitnesses");
  if (eigen_generation_ < 0) eigen_decompose();
  double worst = -std::numeric_limits<double>::infinity();
  for (double f : fitnesses)
    if (std::isfinite(f)) worst = std::max(worst, f);
  if (!std::isfinite(worst)) worst = 0.0;
  for (auto& f : fitnesses)
    if (!std::isfinite(f)) f = worst + 1.0;

  // a generation with identical fitnesses carries no selection information
  if (std::all_of(fitnesses.begin(), fitnesses.end(),
                  [&](double f) { return f == fitnesses[0]; })) {
    ++generation_;
    return;
  }

  std::vector<int> order(lambda_);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return fitnesses[a] < fitnesses[b];
  });

  std::vector<double> mean_old = mean_;
  for (int r = 0; r < dim_; ++r) {
    double s = 0.0;
    for (int i = 0; i < mu_; ++i) s += weights_[i] * candidates[order[i]][r];
    mean_[r] = s;
  }

  // C^{-1/2} (m' - m) / sigma via the eigen cache used by the last ask
  std::vector<double> delta(dim_);
  for (int r = 0; r < dim_; ++r) delta[r] = (mean_[r] - mean_old[r]) / sigma_;
  std::vector<double> tmp(dim_, 0.0);  // B^T delta
  for (int i = 0; i < dim_; ++i) {
    double s = 0.0;
    for (int r = 0; r < dim_; ++r)
      s += eig_basis_[static_cast<size_t>(r) * dim_ + i] * delta[r];
    tmp[i] = s / eig_scale_[i];
  }
  std::vector<double> whitened(dim_, 0.0);  // B diag(1/D) B^T delta
  for (int r = 0; r < dim_; ++r) {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i)
      s += eig_basis_[static_cast<size_t>(r) * dim_ + i] * tmp[i];
    whitened[r] = s;
  }

  double cs_fac = std::sqrt(c_sigma_ * (2.0 - c_sigma_) * mu_eff_);
  double ps_norm2 = 0.0;
  for (int r = 0; r < dim_; ++r) {
    p_sigma_[r] = (1.0 - c_sigma_) * p_sigma_[r] + cs_fac * whitened[r];
    ps_norm2 += p_sigma_[r] * p_sigma_[r];
  }
  double ps_norm = std::sqrt(ps_norm2);

  double decay = 1.0 - std::pow(1.0 - c_sigma_, 2.0 * (generation_ + 1));
  bool h_sigma =
      ps_norm / std::sqrt(decay) < (1.4 + 2.0 / (dim_ + 1.0)) * chi_n_;

  double cc_fac = std::sqrt(c_c_ * (2.0 - c_c_) * mu_eff_);
  for (int r = 0; r < dim_; ++r)
    p_c_[r] = (1.0 - c_c_) * p_c_[r] + (h_sigma ? cc_fac * delta[r] : 0.0);

  double c1a = c_1_ * (1.0 - (h_sigma ? 0.0 : 1.0) * c_c_ * (2.0 - c_c_));
  for (int r = 0; r < dim_; ++r)
    for (int c = 0; c < dim_; ++c) {
      size_t rc = static_cast<size_t>(r) * dim_ + c;
      double rank1 = p_c_[r] * p_c_[c];
      double rankmu = 0.0;
      for (int i = 0; i < mu_; ++i) {
        double yr = (candidates[order[i]][r] - mean_old[r]) / sigma_;
        double yc = (candidates[order[i]][c] - mean_old[c]) / sigma_;
        rankmu += weights_[i] * yr * yc;
      }
      cov_[rc] = (1.0 - c1a - c_mu_) * cov_[rc] + c_1_ * rank1 + c_mu_ * rankmu;
    }
  // enforce symmetry against accumulated round-off
  for (int r = 0; r < dim_; ++r)
    for (int c = r + 1; c < dim_; ++c) {
      size_t rc = static_cast<size_t>(r) * dim_ + c;
      size_t cr = static_cast<size_t>(c) * dim_ + r;
      double avg = 0.5 * (cov_[rc] + cov_[cr]);
      cov_[rc] = avg;
      cov_[cr] = avg;
    }

  sigma_ *= std::exp((c_sigma_ / d_sigma_) * (ps_norm / chi_n_ - 1.0));
  ++generation_;
}

double Cmaes::condition_number() const {
  if (eig_scale_.empty()) return 1.0;
  double lo = *std::min_element(eig_scale_.begin(), eig_scale_.end());
  double hi = *std::max_element(eig_scale_.begin(), eig_scale_.end());
  return (hi * hi) / (lo * lo);
}

bool Cmaes::should_restart(const std::vector<double>& best_history) const {
  if (condition_number() > kMaxCondition) return true;
  if (static_cast<int>(best_history.size()) < kRestartWindow) return false;
  double now = best_history.back();
  double then = best_history[best_history.size() - kRestartWindow];
  return then - now < kRestartTol;  // minimization: improvement = drop
}

std::string Cmaes::to_json() const {
  nlohmann::json j;
  j["dim"] = dim_;
  j["popsize"] = lambda_;
  j["mean"] = mean_;
  j["sigma"] = sigma_;
  j["cov"] = cov_;
  j["p_sigma"] = p_sigma_;
  j["p_c"] = p_c_;
  j["generation"] = generation_;
  return j.dump();
}

Cmaes Cmaes::from_json(const std::string& text) {
  try {
    nlohmann::json j = nlohmann::json::parse(text);
    Cmaes c(j.at("dim").get<int>(),
            j.at("mean").get<std::vector<double>>(), j.at("sigma").get<double>(),
            j.at("popsize").get<int>());
    c.cov_ = j.at("cov").get<std::vector<double>>();
    c.p_sigma_ = j.at("p_sigma").get<std::vector<double>>();
    c.p_c_ = j.at("p_c").get<std::vector<double>>();
    c.generation_ = j.at("generation").get<long>();
    c.eigen_generation_ = -1;
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("cmaes checkpoint: ") + e.what());
  }
}

}  // namespace ndp
