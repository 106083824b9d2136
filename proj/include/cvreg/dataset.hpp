#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>

namespace cvreg {

enum class BankTag { d1, d2, d3, external };

std::string to_string(BankTag tag);
BankTag bank_tag_from_string(const std::string& s);

// Ground truth for synthetic data: the coefficients the bank drew, the noise
// variance actually used, and the realized signal-to-noise ratio.
struct TrueModel {
  Eigen::VectorXd beta;
  double sigma2 = 0.0;
  double snr = 0.0;
};

struct BankConfig {
  int n = 0;
  int p = 0;
  double decay_base = 0.9;
  double decay_scale = 1.0;
  double snr_lo = 1.0;
  double snr_hi = 10.0;
  double target_condition = 1e7;  // D2 only
  std::uint64_t seed = 0;
};

// Immutable after construction; XtX and Xty are cached at build time so that
// repeated fits at different hyper-parameters share them.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::optional<TrueModel> truth;
  BankTag bank_tag = BankTag::external;
  std::optional<BankConfig> config;

  Eigen::MatrixXd XtX;
  Eigen::VectorXd Xty;

  Dataset() = default;
  Dataset(Eigen::MatrixXd X_in, Eigen::VectorXd y_in,
          std::optional<TrueModel> truth_in = std::nullopt,
          BankTag tag = BankTag::external,
          std::optional<BankConfig> cfg = std::nullopt);

  int n() const { return static_cast<int>(X.rows()); }
  int p() const { return static_cast<int>(X.cols()); }
};

}  // namespace cvreg
