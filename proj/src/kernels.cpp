#include "cvreg/kernels.hpp"

#include <cmath>
#include <sstream>

namespace cvreg {

namespace {

std::string eta_str(const HyperParam& eta) {
  std::ostringstream os;
  os << "[";
  for (int i = 0; i < eta.size(); ++i) os << (i ? ", " : "") << eta(i);
  os << "]";
  return os.str();
}

// mu^e with the 0^0 = 1 convention, keeping K continuous in mu at 0.
double pow0(double mu, double e) {
  if (mu == 0.0 && e == 0.0) return 1.0;
  return std::pow(mu, e);
}

}  // namespace

std::string to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::ridge: return "ridge";
    case KernelFamily::tc: return "tc";
    case KernelFamily::fixed: return "fixed";
  }
  return "ridge";
}

KernelFamily kernel_family_from_string(const std::string& s) {
  if (s == "ridge") return KernelFamily::ridge;
  if (s == "tc") return KernelFamily::tc;
  if (s == "fixed") return KernelFamily::fixed;
  throw std::invalid_argument("unknown kernel family: " + s);
}

KernelSpec KernelSpec::fixed(Eigen::MatrixXd K) {
  if (K.rows() != K.cols())
    throw std::invalid_argument("fixed kernel must be square");
  KernelSpec spec;
  spec.family = KernelFamily::fixed;
  spec.p = static_cast<int>(K.rows());
  spec.fixed_matrix = std::move(K);
  return spec;
}

int num_params(const KernelSpec& spec) {
  switch (spec.family) {
    case KernelFamily::ridge: return 1;
    case KernelFamily::tc: return 2;
    case KernelFamily::fixed: return 0;
  }
  return 0;
}

bool eta_in_domain(const KernelSpec& spec, const HyperParam& eta) {
  if (eta.size() != num_params(spec)) return false;
  switch (spec.family) {
    case KernelFamily::ridge:
      return eta(0) >= 0.0;
    case KernelFamily::tc:
      return eta(0) >= 0.0 && eta(1) >= 0.0 && eta(1) <= 1.0;
    case KernelFamily::fixed:
      return true;
  }
  return false;
}

bool eta_interior(const KernelSpec& spec, const HyperParam& eta) {
  if (eta.size() != num_params(spec)) return false;
  switch (spec.family) {
    case KernelFamily::ridge:
      return eta(0) > 0.0;
    case KernelFamily::tc:
      return eta(0) > 0.0 && eta(1) > 0.0 && eta(1) < 1.0;
    case KernelFamily::fixed:
      return true;
  }
  return false;
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const HyperParam& eta) {
  if (!eta_in_domain(spec, eta))
    throw KernelError("kernel_matrix: eta outside domain " + eta_str(eta));
  const int p = spec.p;
  switch (spec.family) {
    case KernelFamily::ridge: {
      if (eta(0) == 0.0)
        throw KernelError("kernel_matrix: ridge eta = 0 has no finite K");
      return Eigen::MatrixXd::Identity(p, p) / eta(0);
    }
    case KernelFamily::tc: {
      const double c = eta(0), mu = eta(1);
      Eigen::MatrixXd K(p, p);
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
          K(i, j) = c * pow0(mu, std::max(i, j) + 1);
      return K;
    }
    case KernelFamily::fixed:
      return spec.fixed_matrix;
  }
  throw KernelError("kernel_matrix: bad family");
}

Eigen::MatrixXd kernel_inverse(const KernelSpec& spec, const HyperParam& eta) {
  if (!eta_in_domain(spec, eta))
    throw KernelError("kernel_inverse: eta outside domain " + eta_str(eta));
  const int p = spec.p;
  if (spec.family == KernelFamily::ridge)
    return eta(0) * Eigen::MatrixXd::Identity(p, p);
  return kernel_inverse_times(spec, eta, Eigen::MatrixXd::Identity(p, p));
}

Eigen::MatrixXd kernel_inverse_times(const KernelSpec& spec,
                                     const HyperParam& eta,
                                     const Eigen::MatrixXd& V) {
  const Eigen::MatrixXd K = kernel_matrix(spec, eta);
  if (spec.family == KernelFamily::ridge) return eta(0) * V;
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success)
    throw KernelError("kernel_inverse_times: K not positive definite at eta " +
                      eta_str(eta));
  return llt.solve(V);
}

Eigen::MatrixXd kernel_derivative(const KernelSpec& spec, const HyperParam& eta,
                                  int param_index) {
  if (!eta_in_domain(spec, eta))
    throw KernelError("kernel_derivative: eta outside domain " + eta_str(eta));
  if (param_index < 0 || param_index >= num_params(spec))
    throw KernelError("kernel_derivative: bad parameter index");
  const int p = spec.p;
  switch (spec.family) {
    case KernelFamily::ridge: {
      if (eta(0) == 0.0)
        throw KernelError("kernel_derivative: ridge eta = 0");
      return -Eigen::MatrixXd::Identity(p, p) / (eta(0) * eta(0));
    }
    case KernelFamily::tc: {
      const double c = eta(0), mu = eta(1);
      Eigen::MatrixXd D(p, p);
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
          const int e = std::max(i, j) + 1;
          D(i, j) = param_index == 0 ? pow0(mu, e)
                                     : c * e * pow0(mu, e - 1);
        }
      return D;
    }
    case KernelFamily::fixed:
      break;
  }
  throw KernelError("kernel_derivative: fixed kernel has no parameters");
}

Eigen::VectorXd to_unconstrained(const KernelSpec& spec, const HyperParam& eta) {
  if (!eta_interior(spec, eta))
    throw KernelError("to_unconstrained: eta must be interior " + eta_str(eta));
  switch (spec.family) {
    case KernelFamily::ridge: {
      Eigen::VectorXd t(1);
      t(0) = std::log(eta(0));
      return t;
    }
    case KernelFamily::tc: {
      Eigen::VectorXd t(2);
      t(0) = std::log(eta(0));
      t(1) = std::log(eta(1) / (1.0 - eta(1)));
      return t;
    }
    case KernelFamily::fixed:
      return Eigen::VectorXd(0);
  }
  throw KernelError("to_unconstrained: bad family");
}

HyperParam from_unconstrained(const KernelSpec& spec,
                              const Eigen::VectorXd& theta) {
  if (theta.size() != num_params(spec))
    throw KernelError("from_unconstrained: wrong dimension");
  switch (spec.family) {
    case KernelFamily::ridge: {
      HyperParam eta(1);
      eta(0) = std::exp(theta(0));
      return eta;
    }
    case KernelFamily::tc: {
      HyperParam eta(2);
      eta(0) = std::exp(theta(0));
      eta(1) = 1.0 / (1.0 + std::exp(-theta(1)));
      return eta;
    }
    case KernelFamily::fixed:
      return HyperParam(0);
  }
  throw KernelError("from_unconstrained: bad family");
}

}  // namespace cvreg
