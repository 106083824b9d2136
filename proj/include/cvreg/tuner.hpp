#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "cvreg/cv.hpp"

namespace cvreg {

struct TuneError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Coarse grid in the unconstrained coordinates (log / logit). Defaults:
//   ridge: 61 log-spaced lambda in [1e-6, 1e6]
//   tc:    25 log-spaced c in [1e-4, 1e4] x 19 mu in [0.05, 0.99]
struct GridSpec {
  std::vector<std::vector<double>> axes;  // per-dimension theta values, sorted
  static GridSpec defaults_for(const KernelSpec& spec);
};

struct TuneConfig {
  CriterionSpec criterion;
  GridSpec grid;       // empty axes -> family defaults
  bool refine = true;
  double refine_tol = 1e-6;  // simplex diameter in theta coordinates
  int max_iter = 400;
};

struct TuneResult {
  HyperParam eta_hat;
  double cost_at_min = 0.0;
  std::vector<std::pair<HyperParam, double>> grid_trace;
  bool refined = false;
  bool boundary_flag = false;
  bool degenerate_flag = false;  // all finite grid costs equal
};

// Generic minimizer over theta coordinates: grid scan with lexicographic
// tie-break, then Nelder-Mead from the grid minimum. eta_hat in the result is
// the minimizing theta mapped through `to_eta`.
TuneResult minimize_on_grid(
    const std::function<double(const Eigen::VectorXd&)>& cost_theta,
    const GridSpec& grid,
    const std::function<HyperParam(const Eigen::VectorXd&)>& to_eta,
    bool refine, double refine_tol, int max_iter);

TuneResult tune(const Dataset& data, const KernelSpec& spec, double sigma2,
                const TuneConfig& cfg);

}  // namespace cvreg
