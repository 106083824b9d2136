#pragma once

#include <span>
#include <vector>

#include "cvreg/cv.hpp"
#include "cvreg/regression.hpp"

namespace cvreg {

// Limit quantities supplied analytically: Sigma = lim XtX/n, the true
// coefficients, and the noise variance.
struct LimitContext {
  Eigen::MatrixXd Sigma;
  Eigen::VectorXd beta;
  double sigma2 = 1.0;
};

// W(eta) = b^T K^{-1} Sigma^{-1} K^{-1} b - 2 Tr(Sigma^{-1} K^{-1}).
double W_limit(const LimitContext& ctx, const KernelSpec& spec,
               const HyperParam& eta);

// W_n(eta) = n^2 (R_n(eta) - sigma^2 p / n) / sigma^4 via the closed-form risk.
double W_n_transform(const Dataset& data, const Eigen::VectorXd& beta_true,
                     const KernelSpec& spec, const HyperParam& eta,
                     double sigma2);

// n^2 (C_gcv(eta) - sigma_hat^2 (1 + 2p/n + 3p^2/n^2)) / sigma^4; converges
// to W(eta). sigma2 here is the true noise variance used in the scaling.
double gcv_transform(const FitModel& fit);

// Ridge limit optimum sigma^2 Tr(Sigma^{-1}) / (b^T Sigma^{-1} b).
double ridge_eta_star(const LimitContext& ctx);

// Unconstrained-matrix derivative dC_loocv/dK. Finite differences with
// symmetrized probing of K match grad + grad^T, not grad itself.
Eigen::MatrixXd grad_loocv_K(const FitModel& fit);

// dAPE_s/dK; gradients of lkocv/rfcv/hocv are averages of this over splits.
Eigen::MatrixXd grad_ape_K(const FitModel& fit, std::span<const int> s);

// dC/dK for any criterion with a gradient path (loocv, lkocv, rfcv, hocv).
Eigen::MatrixXd grad_criterion_K(const CriterionSpec& c, const FitModel& fit);

// g_i(eta) = Tr(dC/dK * dK/deta_i), the first-order condition residual.
Eigen::VectorXd criterion_gradient_eta(const CriterionSpec& c,
                                       const FitModel& fit);

struct RootSearchBox {
  // Per-parameter bounds in the natural (constrained) coordinates.
  std::vector<std::pair<double, double>> bounds;
  int grid_points_per_dim = 41;
};

// Roots of g(eta) = 0 inside the box, from multi-start damped Newton (finite
// difference Jacobian) seeded at the coarse grid. Returns verified roots.
std::vector<HyperParam> first_order_roots(const CriterionSpec& c,
                                          const Dataset& data,
                                          const KernelSpec& spec,
                                          double sigma2,
                                          const RootSearchBox& box);

}  // namespace cvreg
