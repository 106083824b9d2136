#include "cvreg/asymptotics.hpp"

#include <algorithm>
#include <cmath>

namespace cvreg {

double W_limit(const LimitContext& ctx, const KernelSpec& spec,
               const HyperParam& eta) {
  const Eigen::MatrixXd K_inv = kernel_inverse(spec, eta);
  Eigen::LLT<Eigen::MatrixXd> sig(ctx.Sigma);
  if (sig.info() != Eigen::Success)
    throw RegressionError("W_limit: Sigma not positive definite");
  const Eigen::MatrixXd Sig_inv =
      sig.solve(Eigen::MatrixXd::Identity(ctx.Sigma.rows(), ctx.Sigma.cols()));
  const Eigen::VectorXd v = K_inv * ctx.beta;
  return v.dot(Sig_inv * v) - 2.0 * (Sig_inv * K_inv).trace();
}

double W_n_transform(const Dataset& data, const Eigen::VectorXd& beta_true,
                     const KernelSpec& spec, const HyperParam& eta,
                     double sigma2) {
  const double n = data.n();
  const double r = risk(data, beta_true, spec, eta, sigma2);
  return n * n * (r - sigma2 * data.p() / n) / (sigma2 * sigma2);
}

double gcv_transform(const FitModel& fit) {
  const double n = fit.n(), p = fit.p();
  const double s2 = fit.sigma2();
  const double shat2 = sigma_hat2(fit.data());
  const double correction = shat2 * (1.0 + 2.0 * p / n + 3.0 * p * p / (n * n));
  return n * n * (cost_gcv(fit) - correction) / (s2 * s2);
}

double ridge_eta_star(const LimitContext& ctx) {
  Eigen::LLT<Eigen::MatrixXd> sig(ctx.Sigma);
  if (sig.info() != Eigen::Success)
    throw RegressionError("ridge_eta_star: Sigma not positive definite");
  const Eigen::MatrixXd Sig_inv =
      sig.solve(Eigen::MatrixXd::Identity(ctx.Sigma.rows(), ctx.Sigma.cols()));
  const double denom = ctx.beta.dot(Sig_inv * ctx.beta);
  if (denom == 0.0)
    throw RegressionError("ridge_eta_star: beta = 0 gives unbounded optimum");
  return ctx.sigma2 * Sig_inv.trace() / denom;
}

Eigen::MatrixXd grad_loocv_K(const FitModel& fit) {
  const int n = fit.n();
  const Eigen::VectorXd& e = fit.residual();
  const Eigen::VectorXd& d = fit.M_diag();
  // A = X G^{-1} K^{-1}, so both terms are A^T (...) A with small middles.
  const Eigen::MatrixXd A = fit.data().X * fit.G_inv() * fit.K_inv();
  const Eigen::ArrayXd one_minus = 1.0 - d.array();
  const Eigen::VectorXd w1 =
      (e.array().square() / one_minus.cube()).matrix();
  const Eigen::VectorXd w2 = (e.array() / one_minus.square()).matrix();
  const double scale = 2.0 * fit.sigma2() / n;
  Eigen::MatrixXd grad =
      scale * (A.transpose() * w1.asDiagonal() * A);
  grad.noalias() -=
      scale * (A.transpose() * w2) * (A.transpose() * fit.data().y).transpose();
  // The rank-one term is not symmetric on its own; report the symmetric part.
  // Traces against symmetric dK/deta_i and symmetric-probe finite differences
  // are unchanged by this.
  return 0.5 * (grad + grad.transpose());
}

Eigen::MatrixXd grad_ape_K(const FitModel& fit, std::span<const int> s) {
  const int k = static_cast<int>(s.size());
  const int p = fit.p();
  const Eigen::MatrixXd& X = fit.data().X;

  Eigen::MatrixXd Xs(k, p);
  Eigen::VectorXd es(k);
  for (int i = 0; i < k; ++i) {
    Xs.row(i) = X.row(s[i]);
    es(i) = fit.residual()(s[i]);
  }

  // Z_s^{-1} applications via G_sc = G - X_s^T X_s (Woodbury form of iden5).
  const Eigen::MatrixXd Gsc = fit.G() - Xs.transpose() * Xs;
  Eigen::LLT<Eigen::MatrixXd> llt(Gsc);
  if (llt.info() != Eigen::Success)
    throw RegressionError("grad_ape_K: training-side G not positive definite");
  auto z_inv_apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return v + Xs * llt.solve(Xs.transpose() * v);
  };

  const Eigen::VectorXd z1 = z_inv_apply(es);        // Z^{-1} e_s
  const Eigen::VectorXd z2 = z_inv_apply(z1);        // Z^{-2} e_s
  const Eigen::MatrixXd B = fit.K_inv() * fit.G_inv() * Xs.transpose();  // p x k
  const Eigen::VectorXd XtyGiKi =
      fit.K_inv() * fit.G_inv() * fit.data().Xty;    // K^{-1} G^{-1} X^T y
  const double scale = 2.0 * fit.sigma2() / k;
  Eigen::MatrixXd grad = scale * (B * z2) * (B * z1).transpose();
  grad.noalias() -= scale * (B * z2) * XtyGiKi.transpose();
  return 0.5 * (grad + grad.transpose());
}

Eigen::MatrixXd grad_criterion_K(const CriterionSpec& c, const FitModel& fit) {
  switch (c.type) {
    case CriterionSpec::Type::loocv:
      return grad_loocv_K(fit);
    case CriterionSpec::Type::lkocv: {
      // Exact enumeration only; the sampled estimator has no single gradient.
      const int n = fit.n(), k = c.k;
      double total = 1.0;
      for (int i = 1; i <= k; ++i)
        total *= static_cast<double>(n - k + i) / i;
      if (total > kLkocvEnumerationCap)
        throw SplitError("grad lkocv: subset count exceeds enumeration cap");
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(fit.p(), fit.p());
      std::vector<int> s(k);
      for (int i = 0; i < k; ++i) s[i] = i;
      long count = 0;
      while (true) {
        acc += grad_ape_K(fit, s);
        ++count;
        int i = k - 1;
        while (i >= 0 && s[i] == n - k + i) --i;
        if (i < 0) break;
        ++s[i];
        for (int j = i + 1; j < k; ++j) s[j] = s[j - 1] + 1;
      }
      return acc / static_cast<double>(count);
    }
    case CriterionSpec::Type::rfcv: {
      const auto blocks = rfold_blocks(fit.n(), c.r);
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(fit.p(), fit.p());
      for (const auto& b : blocks) acc += grad_ape_K(fit, b);
      return acc / static_cast<double>(c.r);
    }
    case CriterionSpec::Type::hocv: {
      const auto blocks = rfold_blocks(fit.n(), c.r);
      return grad_ape_K(fit, blocks.at(c.block));
    }
    default:
      throw std::invalid_argument(
          "grad_criterion_K: criterion has no gradient path");
  }
}

Eigen::VectorXd criterion_gradient_eta(const CriterionSpec& c,
                                       const FitModel& fit) {
  const Eigen::MatrixXd grad = grad_criterion_K(c, fit);
  const int m = num_params(fit.spec());
  Eigen::VectorXd g(m);
  for (int i = 0; i < m; ++i)
    g(i) = (grad * kernel_derivative(fit.spec(), fit.eta(), i)).trace();
  return g;
}

namespace {

Eigen::VectorXd gradient_at(const CriterionSpec& c, const Dataset& data,
                            const KernelSpec& spec, double sigma2,
                            const HyperParam& eta) {
  FitModel fit(data, spec, eta, sigma2);
  return criterion_gradient_eta(c, fit);
}

}  // namespace

std::vector<HyperParam> first_order_roots(const CriterionSpec& c,
                                          const Dataset& data,
                                          const KernelSpec& spec,
                                          double sigma2,
                                          const RootSearchBox& box) {
  const int m = num_params(spec);
  if (static_cast<int>(box.bounds.size()) != m)
    throw std::invalid_argument("first_order_roots: box dimension mismatch");

  // Coarse grid in unconstrained coordinates.
  std::vector<std::vector<double>> axes(m);
  for (int i = 0; i < m; ++i) {
    HyperParam lo_eta = HyperParam::Zero(m), hi_eta = HyperParam::Zero(m);
    for (int j = 0; j < m; ++j) {
      lo_eta(j) = box.bounds[j].first;
      hi_eta(j) = box.bounds[j].second;
    }
    const double lo = to_unconstrained(spec, lo_eta)(i);
    const double hi = to_unconstrained(spec, hi_eta)(i);
    const int count = std::max(2, box.grid_points_per_dim);
    for (int t = 0; t < count; ++t)
      axes[i].push_back(lo + (hi - lo) * t / (count - 1));
  }

  std::vector<Eigen::VectorXd> grid;
  std::vector<int> index(m, 0);
  while (true) {
    Eigen::VectorXd theta(m);
    for (int i = 0; i < m; ++i) theta(i) = axes[i][index[i]];
    grid.push_back(theta);
    int i = 0;
    while (i < m && ++index[i] == static_cast<int>(axes[i].size())) {
      index[i] = 0;
      ++i;
    }
    if (i == m) break;
  }

  auto g_of_theta = [&](const Eigen::VectorXd& theta) {
    return gradient_at(c, data, spec, sigma2, from_unconstrained(spec, theta));
  };

  if (m == 1) {
    // One parameter: bracket sign changes of g along the grid and bisect.
    // More robust than Newton here because g decays toward zero at the large
    // end of the axis (dK/deta vanishes), which strands descent starts.
    std::vector<double> theta_v, g_v;
    for (const auto& theta : grid) {
      try {
        const double g = g_of_theta(theta)(0);
        if (std::isfinite(g)) {
          theta_v.push_back(theta(0));
          g_v.push_back(g);
        }
      } catch (const std::exception&) {
      }
    }
    std::vector<HyperParam> roots;
    for (std::size_t i = 0; i + 1 < theta_v.size(); ++i) {
      if (g_v[i] == 0.0) {
        roots.push_back(from_unconstrained(
            spec, Eigen::VectorXd::Constant(1, theta_v[i])));
        continue;
      }
      if (g_v[i] * g_v[i + 1] >= 0.0) continue;
      double lo = theta_v[i], hi = theta_v[i + 1];
      double g_lo = g_v[i];
      for (int iter = 0; iter < 200 && hi - lo > 1e-12 * (1.0 + std::abs(lo));
           ++iter) {
        const double mid = 0.5 * (lo + hi);
        double g_mid;
        try {
          g_mid = g_of_theta(Eigen::VectorXd::Constant(1, mid))(0);
        } catch (const std::exception&) {
          break;
        }
        if (g_mid == 0.0) {
          lo = hi = mid;
          break;
        }
        if (g_lo * g_mid < 0.0) {
          hi = mid;
        } else {
          lo = mid;
          g_lo = g_mid;
        }
      }
      const double theta_root = 0.5 * (lo + hi);
      const HyperParam root =
          from_unconstrained(spec, Eigen::VectorXd::Constant(1, theta_root));
      const bool duplicate =
          std::any_of(roots.begin(), roots.end(), [&](const HyperParam& r) {
            return std::abs(to_unconstrained(spec, r)(0) - theta_root) < 1e-4;
          });
      if (!duplicate) roots.push_back(root);
    }
    return roots;
  }

  // Typical gradient magnitude on the grid sets the verification scale.
  double grid_scale = 0.0;
  std::vector<std::pair<double, Eigen::VectorXd>> starts;
  for (const auto& theta : grid) {
    Eigen::VectorXd g;
    try {
      g = g_of_theta(theta);
    } catch (const std::exception&) {
      continue;
    }
    const double norm = g.norm();
    if (!std::isfinite(norm)) continue;
    grid_scale = std::max(grid_scale, norm);
    starts.emplace_back(norm, theta);
  }
  if (starts.empty()) return {};
  std::sort(starts.begin(), starts.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  const double tol = 1e-8 * (1.0 + grid_scale);

  std::vector<HyperParam> roots;
  const int n_starts = std::min<std::size_t>(starts.size(), 8);
  for (int si = 0; si < n_starts; ++si) {
    Eigen::VectorXd theta = starts[si].second;
    bool converged = false;
    for (int iter = 0; iter < 100; ++iter) {
      Eigen::VectorXd g;
      try {
        g = g_of_theta(theta);
      } catch (const std::exception&) {
        break;
      }
      if (g.norm() <= tol) {
        converged = true;
        break;
      }
      // Finite-difference Jacobian in theta.
      Eigen::MatrixXd J(m, m);
      const double h = 1e-5;
      bool ok = true;
      for (int j = 0; j < m; ++j) {
        Eigen::VectorXd tp = theta, tm = theta;
        tp(j) += h;
        tm(j) -= h;
        try {
          J.col(j) = (g_of_theta(tp) - g_of_theta(tm)) / (2.0 * h);
        } catch (const std::exception&) {
          ok = false;
          break;
        }
      }
      if (!ok) break;
      Eigen::VectorXd step = J.fullPivLu().solve(-g);
      if (!step.allFinite()) break;
      // Damped line search on ||g||.
      double alpha = 1.0;
      const double g0 = g.norm();
      bool advanced = false;
      for (int ls = 0; ls < 12; ++ls, alpha *= 0.5) {
        Eigen::VectorXd cand = theta + alpha * step;
        try {
          if (g_of_theta(cand).norm() < g0) {
            theta = cand;
            advanced = true;
            break;
          }
        } catch (const std::exception&) {
        }
      }
      if (!advanced) break;
    }
    if (!converged) continue;
    const HyperParam root = from_unconstrained(spec, theta);
    const bool duplicate =
        std::any_of(roots.begin(), roots.end(), [&](const HyperParam& r) {
          return (to_unconstrained(spec, r) - theta).norm() < 1e-4;
        });
    if (!duplicate) roots.push_back(root);
  }
  return roots;
}

}  // namespace cvreg
