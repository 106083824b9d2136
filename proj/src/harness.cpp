#include "cvreg/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "cvreg/rng.hpp"

namespace cvreg {

namespace {

using nlohmann::json;

int resolve_parallelism(int requested) {
  if (const char* env = std::getenv("CVREG_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Type-7 (linear interpolation) quantile of a sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::nan("");
  const double pos = q * (sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - lo;
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

RunRecord run_one(const ExperimentConfig& cfg, int run, const Dataset& data,
                  const CriterionSpec& criterion) {
  RunRecord rec;
  rec.run = run;
  rec.criterion = to_string(criterion);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    // Synthetic banks carry the exact noise variance; use it directly.
    const double sigma2 = data.truth ? data.truth->sigma2 : sigma_hat2(data);
    TuneConfig tc;
    tc.criterion = criterion;
    // The sampled-lkocv subset stream must be tied to the run, not the thread.
    tc.criterion.sample_seed = derive_seed(cfg.master_seed, 0x10000u + run);
    tc.refine = cfg.refine;
    const TuneResult tr = tune(data, cfg.kernel, sigma2, tc);
    rec.eta_hat = tr.eta_hat;
    rec.cost = tr.cost_at_min;
    rec.boundary = tr.boundary_flag;
    rec.degenerate = tr.degenerate_flag;
    FitModel fit(data, cfg.kernel, tr.eta_hat, sigma2);
    if (!data.truth)
      throw RegressionError("experiment run without ground truth");
    rec.fit = fit_score(fit.beta_hat(), data.truth->beta);
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.flags = "failed";
  }
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (!rec.failed) {
    std::vector<std::string> flags;
    if (rec.boundary) flags.push_back("boundary");
    if (rec.degenerate) flags.push_back("degenerate");
    for (std::size_t i = 0; i < flags.size(); ++i)
      rec.flags += (i ? ";" : "") + flags[i];
  }
  return rec;
}

}  // namespace

std::vector<AggregateRow> aggregate_records(
    const std::vector<RunRecord>& records,
    const std::vector<std::string>& criteria, double fit_floor) {
  std::vector<AggregateRow> rows;
  for (const auto& name : criteria) {
    AggregateRow row;
    row.criterion = name;
    std::vector<double> fits;
    for (const auto& rec : records) {
      if (rec.criterion != name) continue;
      if (rec.failed || rec.degenerate) {
        ++row.n_failed;
        continue;
      }
      fits.push_back(rec.fit);
      if (rec.fit < fit_floor) ++row.n_below_floor;
    }
    row.n_used = static_cast<long>(fits.size());
    if (!fits.empty()) {
      double sum = 0.0;
      for (double f : fits) sum += f;
      row.mean_fit = sum / fits.size();
      std::sort(fits.begin(), fits.end());
      row.median = quantile_sorted(fits, 0.5);
      row.q1 = quantile_sorted(fits, 0.25);
      row.q3 = quantile_sorted(fits, 0.75);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.runs < 1) throw std::invalid_argument("experiment: runs must be >= 1");
  if (cfg.criteria.empty())
    throw std::invalid_argument("experiment: criteria must be non-empty");

  ExperimentResult result;
  result.config = cfg;
  const std::size_t cells = static_cast<std::size_t>(cfg.runs) * cfg.criteria.size();
  result.records.resize(cells);

  const int threads = resolve_parallelism(cfg.parallelism);
  std::atomic<int> next_run{0};
  auto worker = [&]() {
    for (;;) {
      const int run = next_run.fetch_add(1);
      if (run >= cfg.runs) break;
      BankConfig bank = cfg.bank_config;
      bank.seed = derive_seed(cfg.master_seed, run);
      const Dataset data = generate_bank(cfg.bank, bank);
      for (std::size_t c = 0; c < cfg.criteria.size(); ++c)
        result.records[run * cfg.criteria.size() + c] =
            run_one(cfg, run, data, cfg.criteria[c]);
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<std::string> names;
  for (const auto& c : cfg.criteria) names.push_back(to_string(c));
  result.aggregate = aggregate_records(result.records, names, cfg.fit_floor);
  return result;
}

void emit_csv(const ExperimentResult& result,
              const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "run,criterion,eta_1,eta_2,fit,cost,flags\n";
  for (const auto& rec : result.records) {
    os << rec.run << ',' << rec.criterion << ',';
    os << (rec.eta_hat.size() > 0 ? fmt_double(rec.eta_hat(0)) : "") << ',';
    os << (rec.eta_hat.size() > 1 ? fmt_double(rec.eta_hat(1)) : "") << ',';
    if (rec.failed)
      os << ",," << rec.flags << '\n';
    else
      os << fmt_double(rec.fit) << ',' << fmt_double(rec.cost) << ','
         << rec.flags << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

void emit_aggregate_csv(const ExperimentResult& result,
                        const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "criterion,mean_fit,median,q1,q3,n_below_floor,n_used,n_failed\n";
  for (const auto& row : result.aggregate) {
    os << row.criterion << ',' << fmt_double(row.mean_fit) << ','
       << fmt_double(row.median) << ',' << fmt_double(row.q1) << ','
       << fmt_double(row.q3) << ',' << row.n_below_floor << ',' << row.n_used
       << ',' << row.n_failed << '\n';
  }
}

void emit_plotdata(const ExperimentResult& result,
                   const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  std::vector<std::string> names;
  for (const auto& c : result.config.criteria) names.push_back(to_string(c));
  for (std::size_t i = 0; i < names.size(); ++i)
    os << (i ? "," : "") << names[i];
  os << '\n';
  for (int run = 0; run < result.config.runs; ++run) {
    for (std::size_t c = 0; c < names.size(); ++c) {
      const auto& rec = result.records[run * names.size() + c];
      if (c) os << ',';
      if (!rec.failed) os << fmt_double(rec.fit);
    }
    os << '\n';
  }
}

void emit_manifest(const ExperimentResult& result,
                   const std::filesystem::path& path) {
  json j;
  j["config"] = json::parse(result.config.to_json());
  j["version"] = "cvreg 1.0.0";
  const auto now = std::chrono::system_clock::now();
  j["timestamp_unix"] =
      std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch())
          .count();
  std::ofstream os(path);
  os << j.dump(2) << '\n';
}

ExperimentConfig ExperimentConfig::from_json_file(
    const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read config " + path.string());
  json j = json::parse(is);
  ExperimentConfig cfg;
  cfg.bank = bank_tag_from_string(j.at("bank").get<std::string>());
  cfg.bank_config.n = j.at("n").get<int>();
  cfg.bank_config.p = j.at("p").get<int>();
  if (j.contains("decay_base"))
    cfg.bank_config.decay_base = j["decay_base"].get<double>();
  if (j.contains("decay_scale"))
    cfg.bank_config.decay_scale = j["decay_scale"].get<double>();
  if (j.contains("snr_range")) {
    cfg.bank_config.snr_lo = j["snr_range"].at(0).get<double>();
    cfg.bank_config.snr_hi = j["snr_range"].at(1).get<double>();
  }
  if (j.contains("target_condition"))
    cfg.bank_config.target_condition = j["target_condition"].get<double>();
  const std::string family = j.at("kernel").get<std::string>();
  cfg.kernel.family = kernel_family_from_string(family);
  cfg.kernel.p = cfg.bank_config.p;
  for (const auto& c : j.at("criteria"))
    cfg.criteria.push_back(parse_criterion(c.get<std::string>()));
  cfg.runs = j.at("runs").get<int>();
  cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
  if (j.contains("parallelism")) cfg.parallelism = j["parallelism"].get<int>();
  if (j.contains("fit_floor")) cfg.fit_floor = j["fit_floor"].get<double>();
  if (j.contains("refine")) cfg.refine = j["refine"].get<bool>();
  return cfg;
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["bank"] = cvreg::to_string(bank);
  j["n"] = bank_config.n;
  j["p"] = bank_config.p;
  j["decay_base"] = bank_config.decay_base;
  j["decay_scale"] = bank_config.decay_scale;
  j["snr_range"] = {bank_config.snr_lo, bank_config.snr_hi};
  j["target_condition"] = bank_config.target_condition;
  j["kernel"] = cvreg::to_string(kernel.family);
  std::vector<std::string> names;
  for (const auto& c : criteria) names.push_back(cvreg::to_string(c));
  j["criteria"] = names;
  j["runs"] = runs;
  j["master_seed"] = master_seed;
  j["parallelism"] = parallelism;
  j["fit_floor"] = fit_floor;
  j["refine"] = refine;
  return j.dump();
}

}  // namespace cvreg
