#include "cvreg/dataset.hpp"

#include <stdexcept>
#include <utility>

namespace cvreg {

std::string to_string(BankTag tag) {
  switch (tag) {
    case BankTag::d1: return "d1";
    case BankTag::d2: return "d2";
    case BankTag::d3: return "d3";
    case BankTag::external: return "external";
  }
  return "external";
}

BankTag bank_tag_from_string(const std::string& s) {
  if (s == "d1") return BankTag::d1;
  if (s == "d2") return BankTag::d2;
  if (s == "d3") return BankTag::d3;
  if (s == "external") return BankTag::external;
  throw std::invalid_argument("unknown bank tag: " + s);
}

Dataset::Dataset(Eigen::MatrixXd X_in, Eigen::VectorXd y_in,
                 std::optional<TrueModel> truth_in, BankTag tag,
                 std::optional<BankConfig> cfg)
    : X(std::move(X_in)),
      y(std::move(y_in)),
      truth(std::move(truth_in)),
      bank_tag(tag),
      config(std::move(cfg)) {
  if (X.rows() != y.size())
    throw std::invalid_argument("dataset: X rows and y length differ");
  XtX = X.transpose() * X;
  Xty = X.transpose() * y;
}

}  // namespace cvreg
