#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cvreg/databank.hpp"
#include "cvreg/tuner.hpp"

namespace cvreg {

struct ExperimentConfig {
  BankTag bank = BankTag::d1;
  BankConfig bank_config;
  KernelSpec kernel;
  std::vector<CriterionSpec> criteria;
  int runs = 100;
  std::uint64_t master_seed = 1;
  int parallelism = 0;  // 0 -> hardware_concurrency, overridable by CVREG_THREADS
  double fit_floor = 0.0;  // "below display floor" bookkeeping threshold
  bool refine = true;

  static ExperimentConfig from_json_file(const std::filesystem::path& path);
  std::string to_json() const;
};

struct RunRecord {
  int run = 0;
  std::string criterion;
  HyperParam eta_hat;
  double fit = 0.0;
  double cost = 0.0;
  double wall_seconds = 0.0;
  bool boundary = false;
  bool degenerate = false;
  bool failed = false;
  std::string flags;  // semicolon-joined flag names, empty when clean
};

struct AggregateRow {
  std::string criterion;
  double mean_fit = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  long n_below_floor = 0;
  long n_used = 0;
  long n_failed = 0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RunRecord> records;  // runs x criteria, run-major order
  std::vector<AggregateRow> aggregate;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Long-format CSV: run,criterion,eta_1,eta_2,fit,cost,flags
void emit_csv(const ExperimentResult& result, const std::filesystem::path& path);
// Aggregate CSV: criterion,mean_fit,median,q1,q3,n_below_floor,n_used,n_failed
void emit_aggregate_csv(const ExperimentResult& result,
                        const std::filesystem::path& path);
// One column of fit values per criterion, for external boxplot tooling.
void emit_plotdata(const ExperimentResult& result,
                   const std::filesystem::path& path);
void emit_manifest(const ExperimentResult& result,
                   const std::filesystem::path& path);

std::vector<AggregateRow> aggregate_records(const std::vector<RunRecord>& records,
                                            const std::vector<std::string>& criteria,
                                            double fit_floor);

}  // namespace cvreg
