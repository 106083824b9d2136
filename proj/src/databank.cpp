#include "cvreg/databank.hpp"

#include <cmath>
#include <stdexcept>

#include "cvreg/rng.hpp"

namespace cvreg {

namespace {

Eigen::VectorXd gaussian_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

Eigen::MatrixXd gaussian_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  // Row-major fill order so the draw sequence is row-by-row.
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

double population_variance(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<double>(v.size());
}

// Draws beta and the SNR, scales the noise so that var(X beta)/sigma2 equals
// the drawn SNR exactly, and assembles the dataset.
Dataset finish_dataset(Eigen::MatrixXd X, const BankConfig& cfg, BankTag tag,
                       std::mt19937_64& rng) {
  Eigen::VectorXd beta =
      generate_beta(cfg.p, cfg.decay_base, cfg.decay_scale, rng);
  if (cfg.snr_lo <= 0 || cfg.snr_hi < cfg.snr_lo)
    throw std::invalid_argument("bank: snr range must satisfy 0 < lo <= hi");
  std::uniform_real_distribution<double> snr_draw(cfg.snr_lo, cfg.snr_hi);
  const double snr =
      cfg.snr_lo == cfg.snr_hi ? cfg.snr_lo : snr_draw(rng);

  const Eigen::VectorXd signal = X * beta;
  double signal_var = population_variance(signal);
  if (signal_var <= 0.0) signal_var = 1.0;  // degenerate beta = 0
  const double sigma2 = signal_var / snr;

  Eigen::VectorXd y =
      signal + std::sqrt(sigma2) * gaussian_vector(cfg.n, rng);
  TrueModel truth{std::move(beta), sigma2, signal_var / sigma2};
  return Dataset(std::move(X), std::move(y), std::move(truth), tag, cfg);
}

void check_shape(const BankConfig& cfg, bool allow_equal) {
  if (cfg.p < 1) throw std::invalid_argument("bank: p must be >= 1");
  if (allow_equal ? cfg.n < cfg.p : cfg.n <= cfg.p)
    throw std::invalid_argument("bank: need n > p");
}

}  // namespace

Eigen::VectorXd generate_beta(int p, double decay_base, double decay_scale,
                              std::mt19937_64& rng) {
  if (decay_base < 0.0 || decay_base >= 1.0)
    throw std::invalid_argument("generate_beta: decay_base must be in [0,1)");
  if (decay_scale <= 0.0)
    throw std::invalid_argument("generate_beta: decay_scale must be > 0");
  std::uniform_int_distribution<int> coin(0, 1);
  Eigen::VectorXd beta(p);
  for (int i = 0; i < p; ++i) {
    const double sign = coin(rng) ? 1.0 : -1.0;
    beta(i) = decay_scale * sign * std::pow(decay_base, i + 1);
  }
  return beta;
}

Dataset generate_d1(const BankConfig& cfg, std::mt19937_64& rng) {
  check_shape(cfg, false);
  return finish_dataset(gaussian_matrix(cfg.n, cfg.p, rng), cfg, BankTag::d1,
                        rng);
}

Dataset generate_d2(const BankConfig& cfg, std::mt19937_64& rng) {
  check_shape(cfg, false);
  if (cfg.target_condition <= 1.0)
    throw std::invalid_argument("generate_d2: target_condition must be > 1");
  const int n = cfg.n, p = cfg.p;

  // Random orthonormal factors from thin QR of Gaussian matrices.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr_u(gaussian_matrix(n, p, rng));
  Eigen::MatrixXd U =
      qr_u.householderQ() * Eigen::MatrixXd::Identity(n, p);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr_v(gaussian_matrix(p, p, rng));
  Eigen::MatrixXd V = qr_v.householderQ();

  // Geometric spectrum with s_max/s_min = sqrt(target_condition), then
  // rescaled so mean(s_i^2) = n and thus XtX/n keeps a fixed limit.
  Eigen::VectorXd s(p);
  const double ratio = std::sqrt(cfg.target_condition);
  for (int i = 0; i < p; ++i) {
    const double t = p == 1 ? 0.0 : static_cast<double>(i) / (p - 1);
    s(i) = std::pow(ratio, -t);
  }
  const double mean_sq = s.array().square().mean();
  s *= std::sqrt(static_cast<double>(n) / mean_sq);

  Eigen::MatrixXd X = U * s.asDiagonal() * V.transpose();
  return finish_dataset(std::move(X), cfg, BankTag::d2, rng);
}

Dataset generate_d3(const BankConfig& cfg, std::mt19937_64& rng) {
  check_shape(cfg, true);
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(cfg.n, cfg.p);
  X.topRows(cfg.p) =
      std::sqrt(static_cast<double>(cfg.n)) *
      Eigen::MatrixXd::Identity(cfg.p, cfg.p);
  return finish_dataset(std::move(X), cfg, BankTag::d3, rng);
}

Dataset generate_bank(BankTag tag, const BankConfig& cfg) {
  auto rng = make_engine(cfg.seed);
  switch (tag) {
    case BankTag::d1: return generate_d1(cfg, rng);
    case BankTag::d2: return generate_d2(cfg, rng);
    case BankTag::d3: return generate_d3(cfg, rng);
    case BankTag::external: break;
  }
  throw std::invalid_argument("generate_bank: external is not a synthetic bank");
}

}  // namespace cvreg
