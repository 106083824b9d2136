#include "cvreg/regression.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace cvreg {

namespace {

// Rank check threshold: n * eps * s_max, per the usual pivoted-QR convention.
void check_full_rank(const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qr,
                     const Dataset& data) {
  const double smax = qr.matrixR()
                          .topLeftCorner(data.p(), data.p())
                          .diagonal()
                          .cwiseAbs()
                          .maxCoeff();
  const double floor_val = data.n() *
                           std::numeric_limits<double>::epsilon() * smax;
  const double smin = qr.matrixR()
                          .topLeftCorner(data.p(), data.p())
                          .diagonal()
                          .cwiseAbs()
                          .minCoeff();
  if (!(smin > floor_val))
    throw RegressionError("ls_estimate: X is numerically rank deficient");
}

}  // namespace

Eigen::VectorXd ls_estimate(const Dataset& data) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.X);
  check_full_rank(qr, data);
  return qr.solve(data.y);
}

double sigma_hat2(const Dataset& data) {
  if (data.n() <= data.p())
    throw RegressionError("sigma_hat2: requires n > p");
  const Eigen::VectorXd beta_ls = ls_estimate(data);
  return (data.y - data.X * beta_ls).squaredNorm() / data.n();
}

FitModel::FitModel(const Dataset& data, const KernelSpec& spec,
                   const HyperParam& eta, double sigma2)
    : data_(&data), spec_(&spec), eta_(eta), sigma2_(sigma2) {
  if (spec.p != data.p())
    throw RegressionError("rls_fit: kernel dimension does not match data");
  if (sigma2 <= 0.0) throw RegressionError("rls_fit: sigma2 must be > 0");
  K_inv_ = kernel_inverse(spec, eta);
  G_ = data.XtX + sigma2 * K_inv_;
  Eigen::LLT<Eigen::MatrixXd> llt(G_);
  if (llt.info() != Eigen::Success) {
    // G = XtX + sigma2 K^{-1} can only degenerate at boundary eta where the
    // regularizer vanishes and X is rank deficient.
    std::ostringstream os;
    os << "rls_fit: G factorization failed at eta = [";
    for (int i = 0; i < eta.size(); ++i) os << (i ? ", " : "") << eta(i);
    os << "]";
    throw RegressionError(os.str());
  }
  G_inv_ = llt.solve(Eigen::MatrixXd::Identity(spec.p, spec.p));
  beta_hat_ = llt.solve(data.Xty);
  y_hat_ = data.X * beta_hat_;
  residual_ = data.y - y_hat_;
  trace_M_ = (G_inv_ * data.XtX).trace();
}

const Eigen::VectorXd& FitModel::M_diag() const {
  if (!M_diag_) {
    const Eigen::MatrixXd XGi = data_->X * G_inv_;  // n x p
    M_diag_ = (XGi.array() * data_->X.array()).rowwise().sum().matrix();
  }
  return *M_diag_;
}

double true_loss(const FitModel& fit, const TrueModel& truth) {
  return (fit.data().X * (truth.beta - fit.beta_hat())).squaredNorm() /
         fit.n();
}

double risk(const Dataset& data, const Eigen::VectorXd& beta_true,
            const KernelSpec& spec, const HyperParam& eta, double sigma2) {
  const Eigen::MatrixXd K_inv = kernel_inverse(spec, eta);
  const Eigen::MatrixXd G = data.XtX + sigma2 * K_inv;
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success)
    throw RegressionError("risk: G factorization failed");
  // bias: beta - E beta_hat = sigma2 G^{-1} K^{-1} beta
  const Eigen::VectorXd b = llt.solve(K_inv * beta_true);
  const double bias2 = sigma2 * sigma2 * b.dot(data.XtX * b);
  const Eigen::MatrixXd GiXtX = llt.solve(data.XtX);
  const double variance = sigma2 * (GiXtX * GiXtX).trace();
  return (bias2 + variance) / data.n();
}

double fit_score(const Eigen::VectorXd& beta_hat,
                 const Eigen::VectorXd& beta_true) {
  if (beta_true.size() < 2)
    throw RegressionError("fit_score: needs p >= 2");
  const double mean = beta_true.mean();
  const double denom =
      (beta_true.array() - mean).matrix().norm();
  if (denom == 0.0)
    throw RegressionError("fit_score: constant beta has undefined fit");
  return 100.0 * (1.0 - (beta_hat - beta_true).norm() / denom);
}

}  // namespace cvreg
