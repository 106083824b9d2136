#include "cvreg/dataset_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace cvreg {

namespace {

constexpr char kMagic[8] = {'C', 'V', 'R', 'G', 'D', 'S', 'E', 'T'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IoError("dataset file truncated");
  return v;
}

void put_matrix_rowmajor(std::ostream& os, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) put<double>(os, m(i, j));
}

void put_vector(std::ostream& os, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) put<double>(os, v(i));
}

}  // namespace

void write_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kVersion);
  put<std::uint8_t>(os, static_cast<std::uint8_t>(data.bank_tag));
  put<std::uint64_t>(os, static_cast<std::uint64_t>(data.n()));
  put<std::uint64_t>(os, static_cast<std::uint64_t>(data.p()));
  put_matrix_rowmajor(os, data.X);
  put_vector(os, data.y);
  put<std::uint8_t>(os, data.truth.has_value() ? 1 : 0);
  if (data.truth) {
    put_vector(os, data.truth->beta);
    put<double>(os, data.truth->sigma2);
    put<double>(os, data.truth->snr);
  }
  put<std::uint8_t>(os, data.config.has_value() ? 1 : 0);
  if (data.config) {
    const BankConfig& c = *data.config;
    put<std::int64_t>(os, c.n);
    put<std::int64_t>(os, c.p);
    put<double>(os, c.decay_base);
    put<double>(os, c.decay_scale);
    put<double>(os, c.snr_lo);
    put<double>(os, c.snr_hi);
    put<double>(os, c.target_condition);
    put<std::uint64_t>(os, c.seed);
  }
  if (!os) throw IoError("write failed: " + path.string());
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open for reading: " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw IoError("not a cvreg dataset file: " + path.string());
  if (get<std::uint32_t>(is) != kVersion)
    throw IoError("unsupported dataset file version");
  const auto tag = static_cast<BankTag>(get<std::uint8_t>(is));
  const auto n = static_cast<Eigen::Index>(get<std::uint64_t>(is));
  const auto p = static_cast<Eigen::Index>(get<std::uint64_t>(is));
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = get<double>(is);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = get<double>(is);
  std::optional<TrueModel> truth;
  if (get<std::uint8_t>(is)) {
    TrueModel t;
    t.beta.resize(p);
    for (Eigen::Index i = 0; i < p; ++i) t.beta(i) = get<double>(is);
    t.sigma2 = get<double>(is);
    t.snr = get<double>(is);
    truth = std::move(t);
  }
  std::optional<BankConfig> cfg;
  if (get<std::uint8_t>(is)) {
    BankConfig c;
    c.n = static_cast<int>(get<std::int64_t>(is));
    c.p = static_cast<int>(get<std::int64_t>(is));
    c.decay_base = get<double>(is);
    c.decay_scale = get<double>(is);
    c.snr_lo = get<double>(is);
    c.snr_hi = get<double>(is);
    c.target_condition = get<double>(is);
    c.seed = get<std::uint64_t>(is);
    cfg = c;
  }
  return Dataset(std::move(X), std::move(y), std::move(truth), tag,
                 std::move(cfg));
}

Dataset read_external_text(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open for reading: " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (row.size() < 2)
      throw IoError("external data needs at least one regressor column plus y");
    if (!rows.empty() && rows.back().size() != row.size())
      throw IoError("ragged rows in external data file");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("empty external data file");
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(rows[0].size() - 1);
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = rows[i][j];
    y(i) = rows[i][p];
  }
  return Dataset(std::move(X), std::move(y));
}

}  // namespace cvreg
