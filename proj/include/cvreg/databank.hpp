#pragma once

#include <random>

#include "cvreg/dataset.hpp"

namespace cvreg {

// beta_i = decay_scale * sign_i * decay_base^i for i = 1..p, signs drawn
// uniformly from {+1,-1}. Requires 0 <= decay_base < 1, decay_scale > 0.
Eigen::VectorXd generate_beta(int p, double decay_base, double decay_scale,
                              std::mt19937_64& rng);

// D1: i.i.d. standard Gaussian X, so XtX/n -> I_p.
Dataset generate_d1(const BankConfig& cfg, std::mt19937_64& rng);

// D2: X = U S V^T with random orthonormal factors and a geometric singular
// value spectrum giving cond(XtX) = target_condition, rescaled so the mean
// squared singular value equals n.
Dataset generate_d2(const BankConfig& cfg, std::mt19937_64& rng);

// D3: X = [sqrt(n) I_p; 0], so XtX = n I_p exactly. Row norms grow with n.
Dataset generate_d3(const BankConfig& cfg, std::mt19937_64& rng);

Dataset generate_bank(BankTag tag, const BankConfig& cfg);

}  // namespace cvreg
