// Command-line front end: generate data banks, tune a criterion on a dataset
// file, run Monte Carlo experiments, and run the verification suites.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>
#include <random>

#include "cvreg/asymptotics.hpp"
#include "cvreg/databank.hpp"
#include "cvreg/dataset_io.hpp"
#include "cvreg/harness.hpp"
#include "cvreg/rng.hpp"
#include "cvreg/tuner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int cmd_generate(const std::string& bank, int n, int p, std::uint64_t seed,
                 double decay_base, double target_condition,
                 const std::string& out) {
  cvreg::BankConfig cfg;
  cfg.n = n;
  cfg.p = p;
  cfg.seed = seed;
  cfg.decay_base = decay_base;
  cfg.target_condition = target_condition;
  const cvreg::Dataset data =
      cvreg::generate_bank(cvreg::bank_tag_from_string(bank), cfg);
  cvreg::write_dataset(data, out);
  std::cout << "wrote " << out << " (n=" << data.n() << ", p=" << data.p()
            << ", bank=" << cvreg::to_string(data.bank_tag)
            << ", sigma2=" << data.truth->sigma2 << ")\n";
  return 0;
}

int cmd_tune(const std::string& data_path, const std::string& kernel,
             const std::string& criterion, const std::string& sigma2_arg,
             const std::string& out) {
  const cvreg::Dataset data =
      data_path.ends_with(".txt") ? cvreg::read_external_text(data_path)
                                  : cvreg::read_dataset(data_path);
  cvreg::KernelSpec spec;
  spec.family = cvreg::kernel_family_from_string(kernel);
  spec.p = data.p();

  double sigma2;
  if (sigma2_arg == "auto")
    sigma2 = data.truth ? data.truth->sigma2 : cvreg::sigma_hat2(data);
  else
    sigma2 = std::stod(sigma2_arg);

  cvreg::TuneConfig cfg;
  cfg.criterion = cvreg::parse_criterion(criterion);
  const cvreg::TuneResult res = cvreg::tune(data, spec, sigma2, cfg);

  json j;
  j["criterion"] = criterion;
  j["kernel"] = kernel;
  j["sigma2"] = sigma2;
  j["eta_hat"] = std::vector<double>(res.eta_hat.data(),
                                     res.eta_hat.data() + res.eta_hat.size());
  j["cost_at_min"] = res.cost_at_min;
  j["refined"] = res.refined;
  j["boundary_flag"] = res.boundary_flag;
  j["degenerate_flag"] = res.degenerate_flag;
  json trace = json::array();
  for (const auto& [eta, cost] : res.grid_trace) {
    json row;
    row["eta"] = std::vector<double>(eta.data(), eta.data() + eta.size());
    row["cost"] = cost;
    trace.push_back(row);
  }
  j["grid_trace"] = trace;

  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::ofstream os(out);
    os << j.dump(2) << '\n';
    std::cout << "wrote " << out << '\n';
  }
  return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
  const auto cfg = cvreg::ExperimentConfig::from_json_file(config_path);
  const auto result = cvreg::run_experiment(cfg);
  fs::create_directories(out_dir);
  cvreg::emit_csv(result, fs::path(out_dir) / "runs.csv");
  cvreg::emit_aggregate_csv(result, fs::path(out_dir) / "aggregate.csv");
  cvreg::emit_plotdata(result, fs::path(out_dir) / "plotdata.csv");
  cvreg::emit_manifest(result, fs::path(out_dir) / "manifest.json");
  for (const auto& row : result.aggregate)
    std::cout << row.criterion << ": mean fit " << row.mean_fit << " (n_used "
              << row.n_used << ", failed " << row.n_failed << ")\n";
  std::cout << "wrote CSVs to " << out_dir << '\n';
  return 0;
}

struct VerifyRow {
  std::string name;
  double max_err;
  double threshold;
  bool pass;
};

// Identity and gradient spot checks on random small instances; the full
// suites live in the test binaries, this is the user-facing smoke check.
int cmd_verify(const std::string& out_csv, int instances, std::uint64_t seed) {
  std::vector<VerifyRow> rows;
  double id_err = 0.0, iden5_err = 0.0, grad_loocv_err = 0.0, grad_ape_err = 0.0;

  for (int t = 0; t < instances; ++t) {
    auto rng = cvreg::make_engine(cvreg::derive_seed(seed, t));
    std::uniform_int_distribution<int> n_draw(10, 40), p_draw(1, 5);
    const int n = n_draw(rng);
    const int p = p_draw(rng);
    cvreg::BankConfig bcfg;
    bcfg.n = n;
    bcfg.p = p;
    bcfg.seed = cvreg::derive_seed(seed, 1000 + t);
    const cvreg::Dataset data = cvreg::generate_d1(bcfg, rng);

    const bool use_tc = t % 2 == 0 && p >= 1;
    cvreg::KernelSpec spec = use_tc ? cvreg::KernelSpec::tc(p)
                                    : cvreg::KernelSpec::ridge(p);
    std::uniform_real_distribution<double> unit(0.1, 0.9);
    cvreg::HyperParam eta;
    if (use_tc) {
      eta.resize(2);
      eta << std::exp(unit(rng) * 4.0 - 2.0), unit(rng);
    } else {
      eta.resize(1);
      eta << std::exp(unit(rng) * 4.0 - 2.0);
    }
    const double sigma2 = data.truth->sigma2;
    cvreg::FitModel fit(data, spec, eta, sigma2);

    // identity vs refit on one random block split
    const int r = n % 4 == 0 ? 4 : (n % 2 == 0 ? 2 : 1);
    if (r > 1) {
      const auto blocks = cvreg::rfold_blocks(n, r);
      for (const auto& b : blocks) {
        const double lhs = cvreg::ape(fit, b);
        const auto beta_sc =
            cvreg::refit_oracle(data, spec, eta, sigma2, b);
        double acc = 0.0;
        for (int idx : b) {
          const double e = data.y(idx) - data.X.row(idx).dot(beta_sc);
          acc += e * e;
        }
        const double rhs = acc / b.size();
        id_err = std::max(id_err, std::abs(lhs - rhs) / std::max(1.0, rhs));

        // iden5 as a matrix identity
        Eigen::MatrixXd Xs(b.size(), p);
        for (std::size_t i = 0; i < b.size(); ++i) Xs.row(i) = data.X.row(b[i]);
        const Eigen::MatrixXd Zs =
            Eigen::MatrixXd::Identity(b.size(), b.size()) -
            Xs * fit.G_inv() * Xs.transpose();
        Eigen::MatrixXd XtX_sc = data.XtX - Xs.transpose() * Xs;
        const Eigen::MatrixXd Gsc = XtX_sc + sigma2 * fit.K_inv();
        const Eigen::MatrixXd rhs5 =
            Eigen::MatrixXd::Identity(b.size(), b.size()) +
            Xs * Gsc.llt().solve(Xs.transpose());
        const Eigen::MatrixXd lhs5 = Zs.partialPivLu().inverse();
        iden5_err = std::max(iden5_err,
                             (lhs5 - rhs5).norm() / std::max(1.0, rhs5.norm()));
      }
    }

    // traced gradient vs finite differences in eta
    for (const char* crit : {"loocv", "rfcv"}) {
      cvreg::CriterionSpec c;
      if (std::string(crit) == "loocv") {
        c = cvreg::parse_criterion("loocv");
      } else {
        if (n % 2 != 0) continue;
        c = cvreg::parse_criterion("rfcv:r=2");
      }
      const Eigen::VectorXd g = cvreg::criterion_gradient_eta(c, fit);
      for (int i = 0; i < eta.size(); ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(eta(i)));
        cvreg::HyperParam ep = eta, em = eta;
        ep(i) += h;
        em(i) -= h;
        const double fp = cvreg::evaluate_criterion(c, data, spec, ep, sigma2);
        const double fm = cvreg::evaluate_criterion(c, data, spec, em, sigma2);
        const double fd = (fp - fm) / (2.0 * h);
        const double err =
            std::abs(g(i) - fd) / std::max(1.0, std::abs(fd));
        if (std::string(crit) == "loocv")
          grad_loocv_err = std::max(grad_loocv_err, err);
        else
          grad_ape_err = std::max(grad_ape_err, err);
      }
    }
  }

  rows.push_back({"ape_identity_vs_refit", id_err, 1e-9, id_err <= 1e-9});
  rows.push_back({"zs_inverse_identity", iden5_err, 1e-9, iden5_err <= 1e-9});
  rows.push_back({"grad_loocv_vs_fd", grad_loocv_err, 1e-5,
                  grad_loocv_err <= 1e-5});
  rows.push_back({"grad_rfcv_vs_fd", grad_ape_err, 1e-5, grad_ape_err <= 1e-5});

  bool all_pass = true;
  std::ofstream csv;
  if (!out_csv.empty()) {
    csv.open(out_csv);
    csv << "check,max_err,threshold,pass\n";
  }
  for (const auto& row : rows) {
    std::cout << (row.pass ? "PASS" : "FAIL") << "  " << row.name
              << "  max_err=" << row.max_err << "  (<= " << row.threshold
              << ")\n";
    if (csv.is_open())
      csv << row.name << ',' << row.max_err << ',' << row.threshold << ','
          << (row.pass ? 1 : 0) << '\n';
    all_pass = all_pass && row.pass;
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"regularized least squares with CV hyper-parameter tuning"};
  app.require_subcommand(1);

  // generate
  std::string bank = "d1", out_file = "dataset.bin";
  int n = 300, p = 50;
  std::uint64_t seed = 1;
  double decay_base = 0.9, target_condition = 1e7;
  auto* gen = app.add_subcommand("generate", "generate a synthetic data bank");
  gen->add_option("--bank", bank, "d1|d2|d3")->required();
  gen->add_option("--n", n)->required();
  gen->add_option("--p", p)->required();
  gen->add_option("--seed", seed);
  gen->add_option("--decay-base", decay_base);
  gen->add_option("--target-condition", target_condition);
  gen->add_option("--out", out_file)->required();

  // tune
  std::string data_path, kernel = "tc", criterion = "gcv",
              sigma2_arg = "auto", tune_out;
  auto* tn = app.add_subcommand("tune", "tune a criterion on a dataset file");
  tn->add_option("--data", data_path)->required();
  tn->add_option("--kernel", kernel, "ridge|tc");
  tn->add_option("--criterion", criterion,
                 "gcv|loocv|lkocv:k=K|rfcv:r=R|hocv:r=R,block=B|risk");
  tn->add_option("--sigma2", sigma2_arg, "auto or a value");
  tn->add_option("--out", tune_out, "write result JSON here");

  // simulate
  std::string config_path, out_dir = "out";
  auto* sim = app.add_subcommand("simulate", "run a Monte Carlo experiment");
  sim->add_option("--config", config_path)->required();
  sim->add_option("--out", out_dir)->required();

  // verify
  std::string verify_csv;
  int verify_instances = 25;
  std::uint64_t verify_seed = 7;
  auto* ver = app.add_subcommand("verify", "run identity/gradient spot checks");
  ver->add_option("--out", verify_csv, "also write a CSV table");
  ver->add_option("--instances", verify_instances);
  ver->add_option("--seed", verify_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen)
      return cmd_generate(bank, n, p, seed, decay_base, target_condition,
                          out_file);
    if (*tn) return cmd_tune(data_path, kernel, criterion, sigma2_arg, tune_out);
    if (*sim) return cmd_simulate(config_path, out_dir);
    if (*ver) return cmd_verify(verify_csv, verify_instances, verify_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
