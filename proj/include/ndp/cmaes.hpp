#pragma once

#include <string>
#include <vector>

#include "ndp/rng.hpp"

namespace ndp {

// Covariance Matrix Adaptation Evolution Strategy with an ask/tell interface,
// minimization convention, standard Hansen strategy constants, rank-one and
// rank-mu covariance updates, and cumulative step-size control.
class Cmaes {
 public:
  Cmaes(int dim, std::vector<double> mean0, double sigma0, int popsize);

  // popsize candidate vectors: x = mean + sigma * B * D * z, z ~ N(0, I).
  std::vector<std::vector<double>> ask(Rng& rng);

  // Consumes the fitnesses of the last ask() batch (lower is better).
  // Non-finite entries are replaced by the worst finite value plus one.
  void tell(const std::vector<std::vector<double>>& candidates,
            std::vector<double> fitnesses);

  // True when the best-fitness history has been flat (improvement < 1e-4)
  // over the last 300 generations, or the covariance is degenerate.
  bool should_restart(const std::vector<double>& best_history) const;

  int dim() const { return dim_; }
  int popsize() const { return lambda_; }
  int mu() const { return mu_; }
  long generation() const { return generation_; }
  double sigma() const { return sigma_; }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& covariance() const { return cov_; }  // row-major
  double condition_number() const;

  std::string to_json() const;
  static Cmaes from_json(const std::string& text);

  static constexpr int kRestartWindow = 300;
  static constexpr double kRestartTol = 1e-4;
  static constexpr double kMaxCondition = 1e14;

 private:
  Cmaes() = default;
  void refresh_eigen_if_stale();
  void eigen_decompose();

  int dim_ = 0;
  int lambda_ = 0;
  int mu_ = 0;
  std::vector<double> weights_;
  double mu_eff_ = 0.0;
  double c_sigma_ = 0.0, d_sigma_ = 0.0;
  double c_c_ = 0.0, c_1_ = 0.0, c_mu_ = 0.0;
  double chi_n_ = 0.0;

  std::vector<double> mean_;
  double sigma_ = 0.0;
  std::vector<double> cov_;      // dim x dim, row-major, symmetric
  std::vector<double> p_sigma_;
  std::vector<double> p_c_;
  long generation_ = 0;

  std::vector<double> eig_basis_;  // B, columns are eigenvectors
  std::vector<double> eig_scale_;  // D, sqrt of eigenvalues
  long eigen_generation_ = -1;
};

}  // namespace ndp
