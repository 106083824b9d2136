#include <doctest.h>

#include <cmath>

#include "cvreg/asymptotics.hpp"
#include "cvreg/databank.hpp"
#include "test_util.hpp"

using namespace cvreg;

namespace {

// Central finite difference of a cost in the kernel matrix itself, probing
// entry pairs (i,j),(j,i) together so the perturbed matrix stays symmetric.
// The analytic gradients use unconstrained-matrix calculus, so the symmetric
// probe matches grad + grad^T off the diagonal and grad on it.
template <class CostFn>
double fd_check_grad_K(const Eigen::MatrixXd& K, const Eigen::MatrixXd& grad,
                       CostFn&& cost) {
  const int p = static_cast<int>(K.rows());
  double max_err = 0.0;
  for (int i = 0; i < p; ++i) {
    for (int j = i; j < p; ++j) {
      const double h = 1e-5 * std::max(1.0, std::abs(K(i, j)));
      Eigen::MatrixXd Kp = K, Km = K;
      Kp(i, j) += h;
      Km(i, j) -= h;
      if (i != j) {
        Kp(j, i) += h;
        Km(j, i) -= h;
      }
      const double fd = (cost(Kp) - cost(Km)) / (2.0 * h);
      const double an = i == j ? grad(i, i) : grad(i, j) + grad(j, i);
      max_err = std::max(max_err,
                         std::abs(an - fd) / std::max(1.0, std::abs(fd)));
    }
  }
  return max_err;
}

double cost_loocv_at_K(const cvtest::Instance& inst, const Eigen::MatrixXd& K) {
  FitModel fit(inst.data, KernelSpec::fixed(K), HyperParam(0), inst.sigma2);
  return cost_loocv(fit);
}

}  // namespace

TEST_CASE("limit objective hand values for scalar ridge") {
  LimitContext ctx;
  ctx.Sigma = Eigen::MatrixXd::Identity(2, 2);
  ctx.beta = Eigen::VectorXd::Ones(2);
  ctx.sigma2 = 1.0;
  const KernelSpec spec = KernelSpec::ridge(2);
  HyperParam eta(1);
  eta << 1.0;
  CHECK(W_limit(ctx, spec, eta) == doctest::Approx(-2.0).epsilon(1e-12));
  eta << 0.0;  // vanishing penalty: W = 0
  CHECK(W_limit(ctx, spec, eta) == doctest::Approx(0.0));
  eta << 3.0;  // 2*9 - 4*3 = 6
  CHECK(W_limit(ctx, spec, eta) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("finite-n transform hand value on the orthogonal scalar design") {
  Eigen::MatrixXd X(4, 1);
  X << 2, 0, 0, 0;
  Eigen::VectorXd beta(1);
  beta << 1.0;
  const Dataset d(X, X * beta);
  HyperParam eta(1);
  eta << 1.0;
  // risk 0.2, so 16*(0.2 - 1/4) = -0.8
  CHECK(W_n_transform(d, beta, KernelSpec::ridge(1), eta, 1.0) ==
        doctest::Approx(-0.8).epsilon(1e-12));
}

TEST_CASE("finite-n transform approaches the limit on the orthogonal design") {
  Eigen::VectorXd beta(3);
  beta << 1.0, -0.5, 0.25;
  LimitContext ctx{Eigen::MatrixXd::Identity(3, 3), beta, 1.0};
  const KernelSpec spec = KernelSpec::ridge(3);
  HyperParam eta(1);
  eta << 1.7;
  const double w = W_limit(ctx, spec, eta);
  double prev = 1e300;
  for (int n : {100, 400, 1600}) {
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, 3);
    X.topRows(3) = std::sqrt(static_cast<double>(n)) *
                   Eigen::MatrixXd::Identity(3, 3);
    const Dataset d(X, X * beta);
    const double gap = std::abs(W_n_transform(d, beta, spec, eta, 1.0) - w);
    CHECK(gap < prev);
    prev = gap;
  }
}

TEST_CASE("affine transforms preserve the grid argmin") {
  BankConfig cfg;
  cfg.n = 80;
  cfg.p = 4;
  cfg.seed = 33;
  const Dataset d = generate_bank(BankTag::d3, cfg);
  const KernelSpec spec = KernelSpec::ridge(4);
  const double sigma2 = d.truth->sigma2;

  int argmin_cost = -1, argmin_transform = -1, argmin_risk = -1, argmin_wn = -1;
  double best_cost = 1e300, best_tr = 1e300, best_risk = 1e300, best_wn = 1e300;
  for (int g = 0; g < 41; ++g) {
    HyperParam eta(1);
    eta << std::pow(10.0, -2.0 + 4.0 * g / 40.0);
    FitModel fit(d, spec, eta, sigma2);
    const double c = cost_gcv(fit);
    const double tr = gcv_transform(fit);
    if (c < best_cost) best_cost = c, argmin_cost = g;
    if (tr < best_tr) best_tr = tr, argmin_transform = g;
    const double r = risk(d, d.truth->beta, spec, eta, sigma2);
    const double wn = W_n_transform(d, d.truth->beta, spec, eta, sigma2);
    if (r < best_risk) best_risk = r, argmin_risk = g;
    if (wn < best_wn) best_wn = wn, argmin_wn = g;
  }
  CHECK(argmin_cost == argmin_transform);
  CHECK(argmin_risk == argmin_wn);
}

TEST_CASE("ridge limit optimum hand values") {
  LimitContext ctx;
  ctx.Sigma = Eigen::MatrixXd::Identity(2, 2);
  ctx.beta = Eigen::VectorXd::Ones(2);
  ctx.sigma2 = 1.0;
  CHECK(ridge_eta_star(ctx) == doctest::Approx(1.0).epsilon(1e-12));

  ctx.Sigma = Eigen::Vector2d(1.0, 4.0).asDiagonal();
  ctx.sigma2 = 2.0;
  CHECK(ridge_eta_star(ctx) == doctest::Approx(2.0).epsilon(1e-12));

  // quadratic scaling in the coefficients
  LimitContext scaled = ctx;
  scaled.beta *= 3.0;
  CHECK(ridge_eta_star(scaled) ==
        doctest::Approx(ridge_eta_star(ctx) / 9.0).epsilon(1e-12));

  ctx.beta.setZero();
  CHECK_THROWS(ridge_eta_star(ctx));
}

TEST_CASE("loocv kernel gradient matches finite differences") {
  for (int t = 0; t < 8; ++t) {
    const auto inst = cvtest::random_instance(5000 + t, t % 2 == 0);
    const Eigen::MatrixXd K = kernel_matrix(inst.spec, inst.eta);
    FitModel fit(inst.data, KernelSpec::fixed(K), HyperParam(0), inst.sigma2);
    const Eigen::MatrixXd grad = grad_loocv_K(fit);
    CHECK(fd_check_grad_K(K, grad, [&](const Eigen::MatrixXd& Kp) {
            return cost_loocv_at_K(inst, Kp);
          }) < 1e-5);
  }
}

TEST_CASE("block prediction-error kernel gradient matches finite differences") {
  for (int t = 0; t < 8; ++t) {
    const auto inst = cvtest::random_instance(5100 + t, t % 2 == 1);
    const Eigen::MatrixXd K = kernel_matrix(inst.spec, inst.eta);
    FitModel fit(inst.data, KernelSpec::fixed(K), HyperParam(0), inst.sigma2);
    std::vector<int> s{0, 1, 2};
    const Eigen::MatrixXd grad = grad_ape_K(fit, s);
    CHECK(fd_check_grad_K(K, grad, [&](const Eigen::MatrixXd& Kp) {
            FitModel f(inst.data, KernelSpec::fixed(Kp), HyperParam(0),
                       inst.sigma2);
            return ape(f, s);
          }) < 1e-5);
  }
}

TEST_CASE("single-point gradients average to the loocv gradient") {
  const auto inst = cvtest::random_instance(5200, false);
  const Eigen::MatrixXd K = kernel_matrix(inst.spec, inst.eta);
  FitModel fit(inst.data, KernelSpec::fixed(K), HyperParam(0), inst.sigma2);
  Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(K.rows(), K.cols());
  for (int i = 0; i < inst.data.n(); ++i) {
    const std::vector<int> s{i};
    avg += grad_ape_K(fit, s);
  }
  avg /= inst.data.n();
  const Eigen::MatrixXd direct = grad_loocv_K(fit);
  CHECK((avg - direct).norm() / std::max(1.0, direct.norm()) < 1e-9);
}

TEST_CASE("kernel gradients are symmetric for symmetric kernels") {
  const auto inst = cvtest::random_instance(5300, true);
  const Eigen::MatrixXd K = kernel_matrix(inst.spec, inst.eta);
  FitModel fit(inst.data, KernelSpec::fixed(K), HyperParam(0), inst.sigma2);
  const Eigen::MatrixXd g = grad_loocv_K(fit);
  CHECK((g - g.transpose()).norm() / std::max(1.0, g.norm()) < 1e-9);
}

TEST_CASE("traced gradient matches finite differences in eta") {
  for (int t = 0; t < 6; ++t) {
    const auto inst = cvtest::random_instance(5400 + t, t % 2 == 0);
    FitModel fit(inst.data, inst.spec, inst.eta, inst.sigma2);
    const int n = inst.data.n();
    std::vector<CriterionSpec> crits{parse_criterion("loocv")};
    if (n % 2 == 0) crits.push_back(parse_criterion("rfcv:r=2"));
    for (const auto& c : crits) {
      const Eigen::VectorXd g = criterion_gradient_eta(c, fit);
      for (int i = 0; i < inst.eta.size(); ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(inst.eta(i)));
        HyperParam ep = inst.eta, em = inst.eta;
        ep(i) += h;
        em(i) -= h;
        const double fd = (evaluate_criterion(c, inst.data, inst.spec, ep,
                                              inst.sigma2) -
                           evaluate_criterion(c, inst.data, inst.spec, em,
                                              inst.sigma2)) /
                          (2.0 * h);
        CHECK(std::abs(g(i) - fd) / std::max(1.0, std::abs(fd)) < 1e-5);
      }
    }
  }
}

TEST_CASE("first-order roots land near the limit optimum on the wide design") {
  const int n = 1600, p = 5;
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, p);
  X.topRows(p) = std::sqrt(static_cast<double>(n)) *
                 Eigen::MatrixXd::Identity(p, p);
  Eigen::VectorXd beta = Eigen::VectorXd::Ones(p);
  auto rng = make_engine(99);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd y = X * beta;
  for (int i = 0; i < n; ++i) y(i) += normal(rng);
  const Dataset d(X, y, TrueModel{beta, 1.0, 1.0});

  RootSearchBox box;
  box.bounds = {{0.05, 20.0}};
  const auto roots = first_order_roots(parse_criterion("loocv"), d,
                                       KernelSpec::ridge(p), 1.0, box);
  REQUIRE(!roots.empty());
  double best = 1e300;
  for (const auto& r : roots) best = std::min(best, std::abs(r(0) - 1.0));
  CHECK(best < 0.5);
}
