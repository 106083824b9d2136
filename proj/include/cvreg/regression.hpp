#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>

#include "cvreg/dataset.hpp"
#include "cvreg/kernels.hpp"

namespace cvreg {

struct RegressionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Least squares estimate via column-pivoted QR; throws on rank deficiency.
Eigen::VectorXd ls_estimate(const Dataset& data);

// sigma_hat^2 = ||y - X beta_ls||^2 / n. Requires n > p.
double sigma_hat2(const Dataset& data);

// Regularized least squares fit at one hyper-parameter. Holds the shared
// factorization of G = XtX + sigma2 K^{-1} that every CV cost reuses.
// Immutable after construction except for the lazily computed hat-matrix
// diagonal; compute M_diag() before sharing a FitModel across threads.
class FitModel {
 public:
  FitModel(const Dataset& data, const KernelSpec& spec, const HyperParam& eta,
           double sigma2);

  const Dataset& data() const { return *data_; }
  const KernelSpec& spec() const { return *spec_; }
  const HyperParam& eta() const { return eta_; }
  double sigma2() const { return sigma2_; }
  int n() const { return data_->n(); }
  int p() const { return data_->p(); }

  const Eigen::MatrixXd& K_inv() const { return K_inv_; }
  const Eigen::MatrixXd& G() const { return G_; }
  const Eigen::MatrixXd& G_inv() const { return G_inv_; }
  const Eigen::VectorXd& beta_hat() const { return beta_hat_; }
  const Eigen::VectorXd& y_hat() const { return y_hat_; }
  const Eigen::VectorXd& residual() const { return residual_; }
  double trace_M() const { return trace_M_; }

  // Diagonal of M = X G^{-1} X^T, computed on first use (O(n p^2)).
  const Eigen::VectorXd& M_diag() const;

 private:
  const Dataset* data_;
  const KernelSpec* spec_;
  HyperParam eta_;
  double sigma2_;
  Eigen::MatrixXd K_inv_;
  Eigen::MatrixXd G_;
  Eigen::MatrixXd G_inv_;
  Eigen::VectorXd beta_hat_;
  Eigen::VectorXd y_hat_;
  Eigen::VectorXd residual_;
  double trace_M_;
  mutable std::optional<Eigen::VectorXd> M_diag_;
};

// L_n(eta) = ||X beta - X beta_hat||^2 / n.
double true_loss(const FitModel& fit, const TrueModel& truth);

// Closed-form risk E L_n(eta):
//   (sigma^4 b^T K^{-1} G^{-1} XtX G^{-1} K^{-1} b + sigma^2 Tr((G^{-1}XtX)^2)) / n
double risk(const Dataset& data, const Eigen::VectorXd& beta_true,
            const KernelSpec& spec, const HyperParam& eta, double sigma2);

// Fit = 100 (1 - ||beta_hat - beta|| / ||beta - mean(beta) 1||).
double fit_score(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_true);

}  // namespace cvreg
