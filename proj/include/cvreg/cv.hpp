#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cvreg/regression.hpp"

namespace cvreg {

struct SplitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Contiguous validation blocks s_i = {(i-1)k+1, ..., ik} (0-based internally).
// Requires r to divide n.
std::vector<std::vector<int>> rfold_blocks(int n, int r);

struct SplitScheme {
  enum class Kind { leave_k_out, r_fold, hold_out };
  enum class Mode { exact, sampled };

  Kind kind = Kind::r_fold;
  int k = 1;           // validation size (leave_k_out)
  int r = 0;           // fold count (r_fold, hold_out)
  int block = 0;       // hold_out: which of the r contiguous blocks (0-based)
  Mode mode = Mode::exact;
  long sample_count = 10'000;
  std::uint64_t sample_seed = 0;

  static SplitScheme leave_k_out_exact(int k);
  static SplitScheme leave_k_out_sampled(int k, long sample_count, std::uint64_t seed);
  static SplitScheme r_fold(int r);
  static SplitScheme hold_out(int r, int block = 0);
};

// Subset count cap for exact leave-k-out enumeration.
inline constexpr double kLkocvEnumerationCap = 1e6;

// APE_s = (1/k) || Z_s^{-1} (y_s - X_s beta_hat) ||^2 with
// Z_s = I_k - X_s G^{-1} X_s^T, evaluated from the full-data fit alone.
// Falls back to the literal refit when the factorization degenerates.
double ape(const FitModel& fit, std::span<const int> s);

double cost_gcv(const FitModel& fit);
double cost_loocv(const FitModel& fit);
double cost_rfcv(const FitModel& fit, const SplitScheme& scheme);
double cost_hocv(const FitModel& fit, const SplitScheme& scheme);

struct LkocvResult {
  double mean = 0.0;
  double std_error = 0.0;  // 0 in exact mode
  long subsets = 0;
};

LkocvResult cost_lkocv_detail(const FitModel& fit, const SplitScheme& scheme);
double cost_lkocv(const FitModel& fit, const SplitScheme& scheme);

// Literal training-side RLS estimate beta_hat_{s^c}; the test oracle and the
// numerical fallback. Builds the training normal matrix from scratch.
Eigen::VectorXd refit_oracle(const Dataset& data, const KernelSpec& spec,
                             const HyperParam& eta, double sigma2,
                             std::span<const int> s);

// Criterion identifiers as used by the tuner, harness, and CLI:
//   "gcv", "loocv", "lkocv:k=K", "rfcv:r=R", "hocv:r=R,block=B", "risk"
struct CriterionSpec {
  enum class Type { gcv, loocv, lkocv, rfcv, hocv, risk_oracle };
  Type type = Type::gcv;
  int k = 1;
  int r = 0;
  int block = 0;
  long sample_count = 10'000;
  std::uint64_t sample_seed = 0;
};

CriterionSpec parse_criterion(const std::string& text);
std::string to_string(const CriterionSpec& c);

// Evaluates the criterion's cost at eta. risk_oracle requires data.truth.
double evaluate_criterion(const CriterionSpec& c, const Dataset& data,
                          const KernelSpec& spec, const HyperParam& eta,
                          double sigma2);
double evaluate_criterion(const CriterionSpec& c, const FitModel& fit);

}  // namespace cvreg
