#include <doctest.h>

#include <cmath>

#include "cvreg/regression.hpp"
#include "test_util.hpp"

using namespace cvreg;

namespace {

// The two-point instance used by several hand-worked values below.
Dataset two_point_instance() {
  Eigen::MatrixXd X(2, 1);
  X << 1.0, 1.0;
  Eigen::VectorXd y(2);
  y << 1.0, 3.0;
  return Dataset(std::move(X), std::move(y));
}

}  // namespace

TEST_CASE("ls_estimate hand value") {
  const Dataset d = two_point_instance();
  CHECK(ls_estimate(d)(0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("ls_estimate recovers noiseless coefficients") {
  const Dataset noisy = cvtest::random_dataset(30, 4, 21);
  const Eigen::VectorXd y_clean = noisy.X * noisy.truth->beta;
  const Dataset d(noisy.X, y_clean, noisy.truth);
  CHECK((ls_estimate(d) - noisy.truth->beta).norm() < 1e-10);
}

TEST_CASE("ls_estimate on stacked identity picks leading y entries") {
  Eigen::MatrixXd X(5, 3);
  X.setZero();
  X.topRows(3) = Eigen::MatrixXd::Identity(3, 3);
  Eigen::VectorXd y(5);
  y << 4, -1, 2, 9, 9;
  const Dataset d(std::move(X), std::move(y));
  const Eigen::VectorXd b = ls_estimate(d);
  CHECK(b(0) == doctest::Approx(4.0));
  CHECK(b(1) == doctest::Approx(-1.0));
  CHECK(b(2) == doctest::Approx(2.0));
}

TEST_CASE("ls_estimate flags rank deficiency") {
  Eigen::MatrixXd X(4, 2);
  X << 1, 2, 2, 4, 3, 6, 4, 8;  // second column = 2x first
  Eigen::VectorXd y(4);
  y << 1, 2, 3, 4;
  const Dataset d(std::move(X), std::move(y));
  CHECK_THROWS_AS(ls_estimate(d), RegressionError);
}

TEST_CASE("sigma_hat2 hand value and noiseless zero") {
  CHECK(sigma_hat2(two_point_instance()) == doctest::Approx(1.0).epsilon(1e-12));

  const Dataset noisy = cvtest::random_dataset(25, 3, 31);
  const Dataset clean(noisy.X, noisy.X * noisy.truth->beta);
  CHECK(sigma_hat2(clean) < 1e-12);
}

TEST_CASE("sigma_hat2 ignores column-space shifts of y") {
  const Dataset d = cvtest::random_dataset(20, 3, 41);
  Eigen::VectorXd delta(3);
  delta << 0.7, -1.3, 2.2;
  const Dataset shifted(d.X, d.y + d.X * delta);
  CHECK(sigma_hat2(shifted) ==
        doctest::Approx(sigma_hat2(d)).epsilon(1e-9));
}

TEST_CASE("regularized fit hand value on the two-point instance") {
  // Unit regularizer weight turns the normal matrix 2 into 3.
  const Dataset d = two_point_instance();
  HyperParam eta(1);
  eta << 1.0;
  FitModel fit(d, KernelSpec::ridge(1), eta, 1.0);
  CHECK(fit.beta_hat()(0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  CHECK(fit.trace_M() == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(fit.M_diag()(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(fit.M_diag()(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("ridge at zero matches least squares") {
  const Dataset d = cvtest::random_dataset(30, 4, 51);
  HyperParam eta(1);
  eta << 0.0;
  FitModel fit(d, KernelSpec::ridge(4), eta, 0.7);
  const Eigen::VectorXd ls = ls_estimate(d);
  CHECK((fit.beta_hat() - ls).norm() / std::max(1.0, ls.norm()) < 1e-10);
}

TEST_CASE("ridge shrinkage is monotone in the penalty") {
  const Dataset d = cvtest::random_dataset(25, 3, 61);
  double prev = 1e300;
  for (double eta_v : {0.01, 0.1, 1.0, 10.0, 100.0, 1e4}) {
    HyperParam eta(1);
    eta << eta_v;
    FitModel fit(d, KernelSpec::ridge(3), eta, 1.0);
    const double norm = fit.beta_hat().norm();
    CHECK(norm <= prev + 1e-12);
    prev = norm;
  }
}

TEST_CASE("hat-matrix diagonal stays in [0, 1) and trace below p") {
  for (int t = 0; t < 20; ++t) {
    const auto inst = cvtest::random_instance(700 + t, t % 2 == 0);
    FitModel fit(inst.data, inst.spec, inst.eta, inst.sigma2);
    CHECK((fit.M_diag().array() >= 0.0).all());
    CHECK((fit.M_diag().array() < 1.0).all());
    CHECK(fit.trace_M() < inst.data.p());
    CHECK(fit.trace_M() >= 0.0);
    CHECK(std::abs(fit.M_diag().sum() - fit.trace_M()) < 1e-9);
  }
}

TEST_CASE("true_loss hand evaluations") {
  const auto inst = cvtest::random_instance(81, false);
  FitModel fit(inst.data, inst.spec, inst.eta, inst.sigma2);
  const auto& truth = *inst.data.truth;
  const double direct =
      (inst.data.X * truth.beta - inst.data.X * fit.beta_hat()).squaredNorm() /
      inst.data.n();
  CHECK(true_loss(fit, truth) == doctest::Approx(direct).epsilon(1e-12));

  // exact recovery scores zero loss
  TrueModel exact{fit.beta_hat(), 1.0, 1.0};
  CHECK(true_loss(fit, exact) == doctest::Approx(0.0));
}

TEST_CASE("risk hand value on the orthogonal scalar design") {
  // X = sqrt(4) e over zeros, coefficient 1, unit noise, unit ridge penalty:
  // bias^2 term 4/25, variance term 16/25, divided by n=4 -> 0.2.
  Eigen::MatrixXd X(4, 1);
  X << 2, 0, 0, 0;
  Eigen::VectorXd beta(1);
  beta << 1.0;
  Eigen::VectorXd y = X * beta;
  const Dataset d(std::move(X), std::move(y));
  HyperParam eta(1);
  eta << 1.0;
  CHECK(risk(d, beta, KernelSpec::ridge(1), eta, 1.0) ==
        doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("risk at zero penalty is sigma2 p / n") {
  const Dataset d = cvtest::random_dataset(30, 4, 91);
  HyperParam eta(1);
  eta << 0.0;
  CHECK(risk(d, d.truth->beta, KernelSpec::ridge(4), eta, d.truth->sigma2) ==
        doctest::Approx(d.truth->sigma2 * 4.0 / 30.0).epsilon(1e-9));
}

TEST_CASE("risk matches a quick monte carlo average") {
  const int n = 25, p = 3, draws = 1000;
  const Dataset base = cvtest::random_dataset(n, p, 101, 0.8);
  const Eigen::VectorXd beta = base.truth->beta;
  const double sigma2 = 0.8;
  HyperParam eta(1);
  eta << 2.0;
  const KernelSpec spec = KernelSpec::ridge(p);
  const double closed = risk(base, beta, spec, eta, sigma2);

  auto rng = make_engine(555);
  std::normal_distribution<double> normal(0.0, std::sqrt(sigma2));
  double mean = 0.0, m2 = 0.0;
  const Eigen::VectorXd signal = base.X * beta;
  for (int t = 1; t <= draws; ++t) {
    Eigen::VectorXd y = signal;
    for (int i = 0; i < n; ++i) y(i) += normal(rng);
    Dataset d(base.X, y);
    FitModel fit(d, spec, eta, sigma2);
    const double loss = (signal - base.X * fit.beta_hat()).squaredNorm() / n;
    const double delta = loss - mean;
    mean += delta / t;
    m2 += delta * (loss - mean);
  }
  const double se = std::sqrt(m2 / (draws - 1) / draws);
  CHECK(std::abs(closed - mean) < 4.0 * se + 1e-12);
}

TEST_CASE("fit_score hand values and guards") {
  Eigen::VectorXd beta(2), zero(2), mean_pred(2);
  beta << 1.0, -1.0;
  zero << 0.0, 0.0;
  CHECK(fit_score(beta, beta) == doctest::Approx(100.0));
  CHECK(fit_score(zero, beta) == doctest::Approx(0.0).epsilon(1e-12));

  Eigen::VectorXd b3(3), bbar(3);
  b3 << 1.0, 2.0, 6.0;
  bbar.setConstant(3.0);  // the mean of b3
  CHECK(fit_score(bbar, b3) == doctest::Approx(0.0).epsilon(1e-12));

  Eigen::VectorXd constant(3);
  constant.setConstant(2.0);
  CHECK_THROWS_AS(fit_score(constant, constant), RegressionError);
  Eigen::VectorXd scalar(1);
  scalar << 1.0;
  CHECK_THROWS_AS(fit_score(scalar, scalar), RegressionError);
}
