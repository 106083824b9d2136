#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cvreg/dataset_io.hpp"
#include "cvreg/harness.hpp"
#include "test_util.hpp"

using namespace cvreg;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.bank = BankTag::d1;
  cfg.bank_config.n = 40;
  cfg.bank_config.p = 3;
  cfg.kernel = KernelSpec::ridge(3);
  cfg.criteria = {parse_criterion("gcv"), parse_criterion("loocv"),
                  parse_criterion("rfcv:r=4")};
  cfg.runs = 6;
  cfg.master_seed = 424242;
  return cfg;
}

}  // namespace

TEST_CASE("dataset binary round trip is lossless") {
  const Dataset d = cvtest::random_dataset(12, 3, 77);
  const fs::path path = fs::temp_directory_path() / "cvreg_io_test.bin";
  write_dataset(d, path);
  const Dataset back = read_dataset(path);
  CHECK((back.X - d.X).norm() == 0.0);
  CHECK((back.y - d.y).norm() == 0.0);
  REQUIRE(back.truth.has_value());
  CHECK((back.truth->beta - d.truth->beta).norm() == 0.0);
  CHECK(back.truth->sigma2 == d.truth->sigma2);
  fs::remove(path);
}

TEST_CASE("external text loader takes the last column as the response") {
  const fs::path path = fs::temp_directory_path() / "cvreg_ext_test.txt";
  {
    std::ofstream os(path);
    os << "# comment line\n";
    os << "1.0 2.0 3.5\n";
    os << "4.0 5.0 -1.25\n";
  }
  const Dataset d = read_external_text(path);
  CHECK(d.n() == 2);
  CHECK(d.p() == 2);
  CHECK(d.X(1, 1) == 5.0);
  CHECK(d.y(0) == 3.5);
  CHECK(d.y(1) == -1.25);
  CHECK(!d.truth.has_value());
  fs::remove(path);
}

TEST_CASE("aggregation of a hand-built record set") {
  std::vector<RunRecord> records(4);
  for (int i = 0; i < 4; ++i) {
    records[i].run = i;
    records[i].criterion = "gcv";
  }
  records[0].fit = 80.0;
  records[1].fit = 90.0;
  records[2].fit = 10.0;  // below floor
  records[3].failed = true;
  const auto rows = aggregate_records(records, {"gcv"}, 50.0);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].n_used == 3);
  CHECK(rows[0].n_failed == 1);
  CHECK(rows[0].n_below_floor == 1);
  CHECK(rows[0].mean_fit == doctest::Approx(60.0));
  CHECK(rows[0].median == doctest::Approx(80.0));
}

TEST_CASE("experiment records are complete and deterministic across threads") {
  ExperimentConfig cfg = small_config();
  cfg.parallelism = 1;
  const auto serial = run_experiment(cfg);
  CHECK(serial.records.size() == 6u * 3u);

  cfg.parallelism = 4;
  const auto parallel = run_experiment(cfg);

  const fs::path dir = fs::temp_directory_path() / "cvreg_harness_test";
  fs::create_directories(dir);
  emit_csv(serial, dir / "a.csv");
  emit_csv(parallel, dir / "b.csv");
  emit_aggregate_csv(serial, dir / "a_agg.csv");
  emit_aggregate_csv(parallel, dir / "b_agg.csv");
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(slurp(dir / "a_agg.csv") == slurp(dir / "b_agg.csv"));
  fs::remove_all(dir);
}

TEST_CASE("run csv header is the documented contract") {
  ExperimentConfig cfg = small_config();
  cfg.runs = 1;
  cfg.criteria = {parse_criterion("gcv")};
  const auto res = run_experiment(cfg);
  const fs::path path = fs::temp_directory_path() / "cvreg_header_test.csv";
  emit_csv(res, path);
  std::ifstream is(path);
  std::string header;
  std::getline(is, header);
  CHECK(header == "run,criterion,eta_1,eta_2,fit,cost,flags");
  fs::remove(path);
}

TEST_CASE("aggregate mean equals the mean of per-run fits") {
  const auto res = run_experiment(small_config());
  for (const auto& row : res.aggregate) {
    double sum = 0.0;
    long count = 0;
    for (const auto& rec : res.records) {
      if (rec.criterion != row.criterion || rec.failed || rec.degenerate)
        continue;
      sum += rec.fit;
      ++count;
    }
    REQUIRE(count == row.n_used);
    CHECK(row.mean_fit == doctest::Approx(sum / count).epsilon(1e-12));
  }
}

TEST_CASE("experiment config json round trip") {
  ExperimentConfig cfg = small_config();
  cfg.bank_config.snr_lo = 2.0;
  cfg.bank_config.snr_hi = 6.0;
  cfg.fit_floor = 10.0;
  cfg.refine = false;
  const fs::path path = fs::temp_directory_path() / "cvreg_cfg_test.json";
  {
    std::ofstream os(path);
    os << cfg.to_json();
  }
  const auto back = ExperimentConfig::from_json_file(path);
  CHECK(back.bank == cfg.bank);
  CHECK(back.bank_config.n == cfg.bank_config.n);
  CHECK(back.bank_config.p == cfg.bank_config.p);
  CHECK(back.bank_config.snr_lo == cfg.bank_config.snr_lo);
  CHECK(back.bank_config.snr_hi == cfg.bank_config.snr_hi);
  CHECK(back.kernel.family == cfg.kernel.family);
  REQUIRE(back.criteria.size() == cfg.criteria.size());
  CHECK(to_string(back.criteria[2]) == "rfcv:r=4");
  CHECK(back.runs == cfg.runs);
  CHECK(back.master_seed == cfg.master_seed);
  CHECK(back.fit_floor == cfg.fit_floor);
  CHECK(back.refine == cfg.refine);
  fs::remove(path);
}

TEST_CASE("invalid experiment configs are rejected") {
  ExperimentConfig cfg = small_config();
  cfg.runs = 0;
  CHECK_THROWS(run_experiment(cfg));
  cfg = small_config();
  cfg.criteria.clear();
  CHECK_THROWS(run_experiment(cfg));
}
