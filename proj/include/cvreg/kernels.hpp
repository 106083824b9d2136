#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace cvreg {

// Hyper-parameter vector; the admissible domain is family specific:
//   ridge: eta = [lambda], lambda >= 0 (interior: lambda > 0)
//   tc:    eta = [c, mu],  c >= 0, 0 <= mu <= 1 (interior: c > 0, 0 < mu < 1)
//   fixed: empty
using HyperParam = Eigen::VectorXd;

enum class KernelFamily { ridge, tc, fixed };

std::string to_string(KernelFamily f);
KernelFamily kernel_family_from_string(const std::string& s);

struct KernelSpec {
  KernelFamily family = KernelFamily::ridge;
  int p = 0;
  Eigen::MatrixXd fixed_matrix;  // fixed family only; symmetric PD

  static KernelSpec ridge(int p) { return {KernelFamily::ridge, p, {}}; }
  static KernelSpec tc(int p) { return {KernelFamily::tc, p, {}}; }
  static KernelSpec fixed(Eigen::MatrixXd K);
};

struct KernelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int num_params(const KernelSpec& spec);
bool eta_in_domain(const KernelSpec& spec, const HyperParam& eta);
bool eta_interior(const KernelSpec& spec, const HyperParam& eta);

// K(eta). Throws KernelError when eta is outside the domain or when the
// matrix does not exist (ridge lambda = 0 has no finite K).
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const HyperParam& eta);

// K(eta)^{-1}. For ridge this is lambda*I and exists for any lambda >= 0,
// which is what the regularized normal matrix G needs at the boundary.
// For tc/fixed requires an interior (positive definite) eta.
Eigen::MatrixXd kernel_inverse(const KernelSpec& spec, const HyperParam& eta);

// K(eta)^{-1} V via Cholesky of K; throws on semidefinite K with the
// offending eta in the message.
Eigen::MatrixXd kernel_inverse_times(const KernelSpec& spec,
                                     const HyperParam& eta,
                                     const Eigen::MatrixXd& V);

// Analytic dK/deta_i. tc uses the 0^0 = 1 convention at mu = 0.
Eigen::MatrixXd kernel_derivative(const KernelSpec& spec, const HyperParam& eta,
                                  int param_index);

// Smooth reparameterization mapping the interior of the domain onto R^m
// (log for half-lines, logit for mu), used by the optimizer.
Eigen::VectorXd to_unconstrained(const KernelSpec& spec, const HyperParam& eta);
HyperParam from_unconstrained(const KernelSpec& spec, const Eigen::VectorXd& theta);

}  // namespace cvreg
