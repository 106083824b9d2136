#include "cvreg/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cvreg {

namespace {

std::vector<double> logspace(double lo, double hi, int count) {
  std::vector<double> v(count);
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < count; ++i)
    v[i] = a + (b - a) * i / (count - 1);
  return v;
}

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a(i) < b(i)) return true;
    if (a(i) > b(i)) return false;
  }
  return false;
}

// Nelder-Mead with standard coefficients; stops when the simplex diameter
// drops below tol. Dimension is 1 or 2 here, so no restarts are needed.
std::pair<Eigen::VectorXd, double> nelder_mead(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x0, double init_step, double tol, int max_iter) {
  const int d = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> x(d + 1, x0);
  std::vector<double> fx(d + 1);
  for (int i = 0; i < d; ++i) x[i + 1](i) += init_step;
  for (int i = 0; i <= d; ++i) fx[i] = f(x[i]);

  const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
  for (int iter = 0; iter < max_iter; ++iter) {
    std::vector<int> order(d + 1);
    for (int i = 0; i <= d; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return fx[a] < fx[b]; });
    std::vector<Eigen::VectorXd> xs(d + 1);
    std::vector<double> fs(d + 1);
    for (int i = 0; i <= d; ++i) {
      xs[i] = x[order[i]];
      fs[i] = fx[order[i]];
    }
    x.swap(xs);
    fx.swap(fs);

    double diameter = 0.0;
    for (int i = 1; i <= d; ++i)
      diameter = std::max(diameter, (x[i] - x[0]).norm());
    if (diameter < tol) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < d; ++i) centroid += x[i];
    centroid /= d;

    const Eigen::VectorXd xr = centroid + alpha * (centroid - x[d]);
    const double fr = f(xr);
    if (fr < fx[0]) {
      const Eigen::VectorXd xe = centroid + gamma * (xr - centroid);
      const double fe = f(xe);
      if (fe < fr) {
        x[d] = xe;
        fx[d] = fe;
      } else {
        x[d] = xr;
        fx[d] = fr;
      }
    } else if (fr < fx[d - 1]) {
      x[d] = xr;
      fx[d] = fr;
    } else {
      const Eigen::VectorXd xc = centroid + rho * (x[d] - centroid);
      const double fc = f(xc);
      if (fc < fx[d]) {
        x[d] = xc;
        fx[d] = fc;
      } else {
        for (int i = 1; i <= d; ++i) {
          x[i] = x[0] + sigma * (x[i] - x[0]);
          fx[i] = f(x[i]);
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i <= d; ++i)
    if (fx[i] < fx[best]) best = i;
  return {x[best], fx[best]};
}

}  // namespace

GridSpec GridSpec::defaults_for(const KernelSpec& spec) {
  GridSpec g;
  switch (spec.family) {
    case KernelFamily::ridge:
      g.axes = {logspace(1e-6, 1e6, 61)};
      break;
    case KernelFamily::tc: {
      g.axes.resize(2);
      g.axes[0] = logspace(1e-4, 1e4, 25);
      const double mu_lo = 0.05, mu_hi = 0.99;
      for (int i = 0; i < 19; ++i) {
        const double mu = mu_lo + (mu_hi - mu_lo) * i / 18.0;
        g.axes[1].push_back(std::log(mu / (1.0 - mu)));
      }
      break;
    }
    case KernelFamily::fixed:
      break;  // nothing to tune
  }
  return g;
}

TuneResult minimize_on_grid(
    const std::function<double(const Eigen::VectorXd&)>& cost_theta,
    const GridSpec& grid,
    const std::function<HyperParam(const Eigen::VectorXd&)>& to_eta,
    bool refine, double refine_tol, int max_iter) {
  const int m = static_cast<int>(grid.axes.size());
  if (m == 0) {
    TuneResult res;
    Eigen::VectorXd theta(0);
    res.eta_hat = to_eta(theta);
    res.cost_at_min = cost_theta(theta);
    res.grid_trace.emplace_back(res.eta_hat, res.cost_at_min);
    return res;
  }

  TuneResult res;
  Eigen::VectorXd best_theta;
  double best_cost = std::numeric_limits<double>::infinity();
  double finite_min = std::numeric_limits<double>::infinity();
  double finite_max = -std::numeric_limits<double>::infinity();
  bool any_finite = false;

  std::vector<int> index(m, 0);
  while (true) {
    Eigen::VectorXd theta(m);
    for (int i = 0; i < m; ++i) theta(i) = grid.axes[i][index[i]];
    double cost;
    try {
      cost = cost_theta(theta);
    } catch (const std::exception&) {
      cost = std::numeric_limits<double>::quiet_NaN();
    }
    res.grid_trace.emplace_back(to_eta(theta), cost);
    if (std::isfinite(cost)) {
      any_finite = true;
      finite_min = std::min(finite_min, cost);
      finite_max = std::max(finite_max, cost);
      if (cost < best_cost ||
          (cost == best_cost && lex_less(theta, best_theta))) {
        best_cost = cost;
        best_theta = theta;
      }
    }
    int i = 0;
    while (i < m && ++index[i] == static_cast<int>(grid.axes[i].size())) {
      index[i] = 0;
      ++i;
    }
    if (i == m) break;
  }
  if (!any_finite)
    throw TuneError("tune: no finite cost anywhere on the grid");

  res.degenerate_flag =
      finite_max - finite_min <=
      1e-14 * std::max(1.0, std::abs(finite_min));

  Eigen::VectorXd theta_hat = best_theta;
  double cost_hat = best_cost;
  if (refine && !res.degenerate_flag) {
    // Initial simplex step: half the local grid spacing.
    double step = 0.0;
    for (int i = 0; i < m; ++i) {
      const auto& ax = grid.axes[i];
      if (ax.size() > 1) step = std::max(step, (ax[1] - ax[0]) * 0.5);
    }
    if (step == 0.0) step = 0.1;
    auto safe_cost = [&](const Eigen::VectorXd& t) {
      try {
        const double c = cost_theta(t);
        return std::isfinite(c) ? c : std::numeric_limits<double>::infinity();
      } catch (const std::exception&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    auto [theta_ref, cost_ref] =
        nelder_mead(safe_cost, best_theta, step, refine_tol, max_iter);
    if (cost_ref <= cost_hat) {
      theta_hat = theta_ref;
      cost_hat = cost_ref;
      res.refined = true;
    }
  }

  // Within one grid step of the box edge counts as boundary convergence.
  for (int i = 0; i < m; ++i) {
    const auto& ax = grid.axes[i];
    if (ax.size() < 2) continue;
    const double step_lo = ax[1] - ax[0];
    const double step_hi = ax[ax.size() - 1] - ax[ax.size() - 2];
    if (theta_hat(i) <= ax.front() + step_lo ||
        theta_hat(i) >= ax.back() - step_hi)
      res.boundary_flag = true;
  }

  res.eta_hat = to_eta(theta_hat);
  res.cost_at_min = cost_hat;
  return res;
}

TuneResult tune(const Dataset& data, const KernelSpec& spec, double sigma2,
                const TuneConfig& cfg) {
  GridSpec grid = cfg.grid;
  if (grid.axes.empty() && num_params(spec) > 0)
    grid = GridSpec::defaults_for(spec);
  auto to_eta = [&](const Eigen::VectorXd& theta) {
    return from_unconstrained(spec, theta);
  };
  auto cost = [&](const Eigen::VectorXd& theta) {
    return evaluate_criterion(cfg.criterion, data, spec,
                              from_unconstrained(spec, theta), sigma2);
  };
  return minimize_on_grid(cost, grid, to_eta, cfg.refine, cfg.refine_tol,
                          cfg.max_iter);
}

}  // namespace cvreg
