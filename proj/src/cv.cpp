#include "cvreg/cv.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "cvreg/rng.hpp"

namespace cvreg {

SplitScheme SplitScheme::leave_k_out_exact(int k) {
  SplitScheme s;
  s.kind = Kind::leave_k_out;
  s.k = k;
  s.mode = Mode::exact;
  return s;
}

SplitScheme SplitScheme::leave_k_out_sampled(int k, long sample_count,
                                             std::uint64_t seed) {
  SplitScheme s;
  s.kind = Kind::leave_k_out;
  s.k = k;
  s.mode = Mode::sampled;
  s.sample_count = sample_count;
  s.sample_seed = seed;
  return s;
}

SplitScheme SplitScheme::r_fold(int r) {
  SplitScheme s;
  s.kind = Kind::r_fold;
  s.r = r;
  return s;
}

SplitScheme SplitScheme::hold_out(int r, int block) {
  SplitScheme s;
  s.kind = Kind::hold_out;
  s.r = r;
  s.block = block;
  return s;
}

std::vector<std::vector<int>> rfold_blocks(int n, int r) {
  if (r < 1 || r > n) throw SplitError("rfold_blocks: need 1 <= r <= n");
  if (n % r != 0)
    throw SplitError("rfold_blocks: r must divide n (k a factor of n)");
  const int k = n / r;
  std::vector<std::vector<int>> blocks(r);
  for (int i = 0; i < r; ++i) {
    blocks[i].resize(k);
    std::iota(blocks[i].begin(), blocks[i].end(), i * k);
  }
  return blocks;
}

namespace {

double ape_refit(const FitModel& fit, std::span<const int> s) {
  const Eigen::VectorXd beta_sc =
      refit_oracle(fit.data(), fit.spec(), fit.eta(), fit.sigma2(), s);
  double acc = 0.0;
  for (int idx : s) {
    const double e = fit.data().y(idx) -
                     fit.data().X.row(idx).dot(beta_sc);
    acc += e * e;
  }
  return acc / static_cast<double>(s.size());
}

}  // namespace

double ape(const FitModel& fit, std::span<const int> s) {
  const int k = static_cast<int>(s.size());
  const int n = fit.n(), p = fit.p();
  if (k < 1 || k > n - 1)
    throw SplitError("ape: validation set size must be in [1, n-1]");

  const Eigen::MatrixXd& X = fit.data().X;
  const Eigen::VectorXd& e = fit.residual();

  if (k == 1) {
    // PRESS summand: Z_s is the scalar 1 - M_ii.
    const int i = s[0];
    const double z =
        1.0 - X.row(i).dot((fit.G_inv() * X.row(i).transpose()).col(0));
    if (z > 1e3 * std::numeric_limits<double>::epsilon()) {
      const double u = e(i) / z;
      return u * u;
    }
    std::cerr << "cvreg: ape falling back to refit (degenerate Z_s)\n";
    return ape_refit(fit, s);
  }

  Eigen::MatrixXd Xs(k, p);
  Eigen::VectorXd es(k);
  for (int i = 0; i < k; ++i) {
    Xs.row(i) = X.row(s[i]);
    es(i) = e(s[i]);
  }

  if (k <= p) {
    // Small validation block: invert Z_s = I_k - X_s G^{-1} X_s^T directly.
    Eigen::MatrixXd Zs = Eigen::MatrixXd::Identity(k, k) -
                         Xs * fit.G_inv() * Xs.transpose();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Zs);
    const Eigen::VectorXd u = lu.solve(es);
    const double resid = (Zs * u - es).norm();
    if (std::isfinite(u.squaredNorm()) && resid <= 1e-8 * (1.0 + es.norm()))
      return u.squaredNorm() / k;
    std::cerr << "cvreg: ape falling back to refit (singular Z_s)\n";
    return ape_refit(fit, s);
  }

  // Large block: Z_s^{-1} = I_k + X_s G_{s^c}^{-1} X_s^T with
  // G_{s^c} = G - X_s^T X_s, a p x p solve instead of a k x k one.
  const Eigen::MatrixXd Gsc = fit.G() - Xs.transpose() * Xs;
  Eigen::LLT<Eigen::MatrixXd> llt(Gsc);
  if (llt.info() != Eigen::Success) {
    std::cerr << "cvreg: ape falling back to refit (G_sc not PD)\n";
    return ape_refit(fit, s);
  }
  const Eigen::VectorXd u = es + Xs * llt.solve(Xs.transpose() * es);
  return u.squaredNorm() / k;
}

double cost_gcv(const FitModel& fit) {
  const double tr_ratio = fit.trace_M() / fit.n();
  if (tr_ratio >= 1.0)
    throw RegressionError("cost_gcv: Tr(M) >= n");
  const double denom = (1.0 - tr_ratio) * (1.0 - tr_ratio);
  return fit.residual().squaredNorm() / (fit.n() * denom);
}

double cost_loocv(const FitModel& fit) {
  const Eigen::VectorXd& d = fit.M_diag();
  if ((d.array() >= 1.0).any())
    throw RegressionError("cost_loocv: some M_ii >= 1");
  return ((fit.residual().array() / (1.0 - d.array())).square().sum()) /
         fit.n();
}

double cost_rfcv(const FitModel& fit, const SplitScheme& scheme) {
  if (scheme.kind != SplitScheme::Kind::r_fold)
    throw SplitError("cost_rfcv: scheme is not r_fold");
  const auto blocks = rfold_blocks(fit.n(), scheme.r);
  double acc = 0.0;
  for (const auto& b : blocks) acc += ape(fit, b);
  return acc / scheme.r;
}

double cost_hocv(const FitModel& fit, const SplitScheme& scheme) {
  if (scheme.kind != SplitScheme::Kind::hold_out)
    throw SplitError("cost_hocv: scheme is not hold_out");
  const auto blocks = rfold_blocks(fit.n(), scheme.r);
  if (scheme.block < 0 || scheme.block >= scheme.r)
    throw SplitError("cost_hocv: block index out of range");
  return ape(fit, blocks[scheme.block]);
}

namespace {

double binomial(int n, int k) {
  double v = 1.0;
  for (int i = 1; i <= k; ++i) v *= static_cast<double>(n - k + i) / i;
  return v;
}

// Visits all k-subsets of {0..n-1} in lexicographic order.
template <class F>
void for_each_subset(int n, int k, F&& f) {
  std::vector<int> s(k);
  std::iota(s.begin(), s.end(), 0);
  while (true) {
    f(std::span<const int>(s));
    int i = k - 1;
    while (i >= 0 && s[i] == n - k + i) --i;
    if (i < 0) break;
    ++s[i];
    for (int j = i + 1; j < k; ++j) s[j] = s[j - 1] + 1;
  }
}

}  // namespace

LkocvResult cost_lkocv_detail(const FitModel& fit, const SplitScheme& scheme) {
  if (scheme.kind != SplitScheme::Kind::leave_k_out)
    throw SplitError("cost_lkocv: scheme is not leave_k_out");
  const int n = fit.n(), k = scheme.k;
  if (k < 1 || k > n - 1)
    throw SplitError("cost_lkocv: need 1 <= k <= n-1");

  LkocvResult out;
  if (scheme.mode == SplitScheme::Mode::exact) {
    const double total = binomial(n, k);
    if (total > kLkocvEnumerationCap) {
      std::ostringstream os;
      os << "cost_lkocv: C(" << n << "," << k << ") = " << total
         << " exceeds the enumeration cap " << kLkocvEnumerationCap
         << "; use sampled mode";
      throw SplitError(os.str());
    }
    double acc = 0.0;
    long count = 0;
    for_each_subset(n, k, [&](std::span<const int> s) {
      acc += ape(fit, s);
      ++count;
    });
    out.mean = acc / count;
    out.subsets = count;
    return out;
  }

  // Sampled mode: distinct uniform subsets with the leave-one-out cost as a
  // control variate. Over a uniform random subset the expected mean of the
  // per-point deleted residuals equals the full leave-one-out cost, so
  //   mean_s APE_s = C_loocv + E[APE_s - mean_{i in s} press_i]
  // and only the small coupling residual is sampled. Without this the
  // sampling noise drowns the curvature of the cost in the hyper-parameter
  // at large n, pinning the tuned value to the grid edge.
  const Eigen::ArrayXd press =
      (fit.residual().array() / (1.0 - fit.M_diag().array())).square();
  const double press_mean = press.sum() / n;
  auto rng = make_engine(scheme.sample_seed);
  const bool pack_keys = k <= 4 && n < (1 << 16);
  std::set<std::vector<int>> seen;
  std::set<std::uint64_t> seen_packed;
  std::uniform_int_distribution<int> pick_any(0, n - 1);
  std::vector<int> s(k);
  double mean = 0.0, m2 = 0.0;
  long count = 0;
  const double total = binomial(n, k);
  const long target =
      total <= static_cast<double>(scheme.sample_count)
          ? static_cast<long>(total)
          : scheme.sample_count;
  std::vector<int> pool(n);
  while (count < target) {
    if (k <= 16 && 2 * k <= n) {
      // Rejection sampling of k distinct indices.
      bool distinct = true;
      for (int i = 0; i < k; ++i) {
        s[i] = pick_any(rng);
        for (int j = 0; j < i; ++j)
          if (s[j] == s[i]) distinct = false;
      }
      if (!distinct) continue;
    } else {
      std::iota(pool.begin(), pool.end(), 0);
      for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<int> pick(i, n - 1);
        std::swap(pool[i], pool[pick(rng)]);
      }
      std::copy(pool.begin(), pool.begin() + k, s.begin());
    }
    std::sort(s.begin(), s.end());
    if (pack_keys) {
      std::uint64_t key = 0;
      for (int i = 0; i < k; ++i) key = key << 16 | static_cast<unsigned>(s[i]);
      if (!seen_packed.insert(key).second) continue;
    } else {
      if (!seen.insert(s).second) continue;
    }
    double press_s = 0.0;
    for (int i = 0; i < k; ++i) press_s += press(s[i]);
    const double v = ape(fit, s) - press_s / k;
    ++count;
    const double delta = v - mean;
    mean += delta / count;
    m2 += delta * (v - mean);
  }
  out.mean = press_mean + mean;
  out.subsets = count;
  out.std_error = count > 1 ? std::sqrt(m2 / (count - 1) / count) : 0.0;
  return out;
}

double cost_lkocv(const FitModel& fit, const SplitScheme& scheme) {
  return cost_lkocv_detail(fit, scheme).mean;
}

Eigen::VectorXd refit_oracle(const Dataset& data, const KernelSpec& spec,
                             const HyperParam& eta, double sigma2,
                             std::span<const int> s) {
  const int n = data.n(), p = data.p();
  std::vector<char> in_s(n, 0);
  for (int idx : s) {
    if (idx < 0 || idx >= n) throw SplitError("refit_oracle: index out of range");
    in_s[idx] = 1;
  }
  Eigen::MatrixXd XtX_sc = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd Xty_sc = Eigen::VectorXd::Zero(p);
  for (int i = 0; i < n; ++i) {
    if (in_s[i]) continue;
    XtX_sc.noalias() += data.X.row(i).transpose() * data.X.row(i);
    Xty_sc.noalias() += data.X.row(i).transpose() * data.y(i);
  }
  const Eigen::MatrixXd G_sc = XtX_sc + sigma2 * kernel_inverse(spec, eta);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(G_sc);
  if (ldlt.info() != Eigen::Success)
    throw RegressionError("refit_oracle: training-side G factorization failed");
  return ldlt.solve(Xty_sc);
}

CriterionSpec parse_criterion(const std::string& text) {
  CriterionSpec c;
  auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);

  if (head == "gcv") c.type = CriterionSpec::Type::gcv;
  else if (head == "loocv") c.type = CriterionSpec::Type::loocv;
  else if (head == "lkocv") c.type = CriterionSpec::Type::lkocv;
  else if (head == "rfcv") c.type = CriterionSpec::Type::rfcv;
  else if (head == "hocv") c.type = CriterionSpec::Type::hocv;
  else if (head == "risk") c.type = CriterionSpec::Type::risk_oracle;
  else throw std::invalid_argument("unknown criterion: " + text);

  std::istringstream is(args);
  std::string part;
  while (std::getline(is, part, ',')) {
    auto eq = part.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("bad criterion argument: " + part);
    const std::string key = part.substr(0, eq);
    const long value = std::stol(part.substr(eq + 1));
    if (key == "k") c.k = static_cast<int>(value);
    else if (key == "r") c.r = static_cast<int>(value);
    else if (key == "block") c.block = static_cast<int>(value);
    else if (key == "samples") c.sample_count = value;
    else throw std::invalid_argument("bad criterion key: " + key);
  }
  if ((c.type == CriterionSpec::Type::rfcv ||
       c.type == CriterionSpec::Type::hocv) && c.r < 1)
    throw std::invalid_argument("criterion " + head + " requires r=R");
  return c;
}

std::string to_string(const CriterionSpec& c) {
  std::ostringstream os;
  switch (c.type) {
    case CriterionSpec::Type::gcv: return "gcv";
    case CriterionSpec::Type::loocv: return "loocv";
    case CriterionSpec::Type::risk_oracle: return "risk";
    case CriterionSpec::Type::lkocv:
      os << "lkocv:k=" << c.k;
      return os.str();
    case CriterionSpec::Type::rfcv:
      os << "rfcv:r=" << c.r;
      return os.str();
    case CriterionSpec::Type::hocv:
      os << "hocv:r=" << c.r;
      if (c.block != 0) os << ",block=" << c.block;
      return os.str();
  }
  return "?";
}

double evaluate_criterion(const CriterionSpec& c, const FitModel& fit) {
  switch (c.type) {
    case CriterionSpec::Type::gcv:
      return cost_gcv(fit);
    case CriterionSpec::Type::loocv:
      return cost_loocv(fit);
    case CriterionSpec::Type::lkocv: {
      const double total = binomial(fit.n(), c.k);
      const auto scheme =
          total <= kLkocvEnumerationCap
              ? SplitScheme::leave_k_out_exact(c.k)
              : SplitScheme::leave_k_out_sampled(c.k, c.sample_count,
                                                 c.sample_seed);
      return cost_lkocv(fit, scheme);
    }
    case CriterionSpec::Type::rfcv:
      return cost_rfcv(fit, SplitScheme::r_fold(c.r));
    case CriterionSpec::Type::hocv:
      return cost_hocv(fit, SplitScheme::hold_out(c.r, c.block));
    case CriterionSpec::Type::risk_oracle: {
      if (!fit.data().truth)
        throw RegressionError("risk criterion requires ground truth");
      return risk(fit.data(), fit.data().truth->beta, fit.spec(), fit.eta(),
                  fit.sigma2());
    }
  }
  throw std::invalid_argument("evaluate_criterion: bad type");
}

double evaluate_criterion(const CriterionSpec& c, const Dataset& data,
                          const KernelSpec& spec, const HyperParam& eta,
                          double sigma2) {
  if (c.type == CriterionSpec::Type::risk_oracle) {
    if (!data.truth)
      throw RegressionError("risk criterion requires ground truth");
    return risk(data, data.truth->beta, spec, eta, sigma2);
  }
  FitModel fit(data, spec, eta, sigma2);
  return evaluate_criterion(c, fit);
}

}  // namespace cvreg
