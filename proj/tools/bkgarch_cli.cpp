// bkgarch: GARCH simulation and Bahadur-Kiefer remainder experiments.
//
// Exit codes: 0 success, 2 usage error, 3 numeric/stationarity error, 4 I/O error.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "bkgarch/bahadur.hpp"
#include "bkgarch/error.hpp"
#include "bkgarch/garch.hpp"
#include "bkgarch/harness.hpp"
#include "bkgarch/marginal.hpp"
#include "bkgarch/plot.hpp"

namespace fs = std::filesystem;
using namespace bkgarch;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

struct ModelOptions {
  double delta = 1.0;
  std::vector<double> beta;
  std::vector<double> alpha{0.0};
  std::string family = "gaussian";
  double df = 0.0;

  GarchParams params() const {
    GarchParams p{delta, beta, alpha};
    p.validate();
    return p;
  }
  InnovationModel innovation() const { return InnovationModel::from_spec(family, df); }
};

void add_model_options(CLI::App* app, ModelOptions& m) {
  app->add_option("--delta", m.delta, "Constant term delta > 0")->capture_default_str();
  app->add_option("--beta", m.beta, "GARCH coefficients beta_1..beta_p (comma separated)")
      ->delimiter(',');
  app->add_option("--alpha", m.alpha, "ARCH coefficients alpha_1..alpha_q (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  app->add_option("--family", m.family, "Innovation family")
      ->check(CLI::IsMember({"gaussian", "student_t"}))
      ->capture_default_str();
  app->add_option("--df", m.df, "Degrees of freedom for student_t (> 4)");
}

void print_json(const nlohmann::json& j) { std::cout << j.dump(2) << "\n"; }

nlohmann::json to_json(const BkResult& r) {
  const auto rc = rate_constants(r.n);
  return {{"n", r.n},
          {"seed", r.seed},
          {"r_uniform", r.r_uniform},
          {"r_general", r.r_general},
          {"r_general_full", r.r_general_full},
          {"sup_beta", r.sup_beta},
          {"oscillation", r.oscillation},
          {"lil", r.lil},
          {"rates",
           {{"r_n", rc.r_n}, {"b_n", rc.b_n}, {"b_n_star", rc.b_n_star}, {"lambda_n", rc.lambda_n}}}};
}

fs::path default_output_dir() {
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return "bkgarch-out";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GARCH simulation, stationarity diagnostics and Bahadur-Kiefer remainder experiments",
               "bkgarch"};
  app.require_subcommand(1);

  // simulate
  ModelOptions sim_model;
  std::size_t sim_n = 1000;
  std::size_t sim_burn = kDefaultBurnIn;
  std::uint64_t sim_seed = 1;
  std::string sim_out;
  bool sim_force = false;
  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate a GARCH(p,q) path to CSV");
  add_model_options(simulate_cmd, sim_model);
  simulate_cmd->add_option("--n", sim_n, "Path length")->capture_default_str();
  simulate_cmd->add_option("--burn-in", sim_burn, "Discarded warm-up steps")->capture_default_str();
  simulate_cmd->add_option("--seed", sim_seed, "Random seed")->capture_default_str();
  simulate_cmd->add_option("--out", sim_out, "Output CSV (index,x,sigma2)")->required();
  simulate_cmd->add_flag("--allow-nonstationary", sim_force, "Skip the stationarity check");

  // lyapunov
  ModelOptions lya_model;
  std::size_t lya_iter = kStationarityIterations;
  std::uint64_t lya_seed = kStationaritySeed;
  auto* lyapunov_cmd = app.add_subcommand("lyapunov", "Estimate the top Lyapunov exponent");
  add_model_options(lyapunov_cmd, lya_model);
  lyapunov_cmd->add_option("--iterations", lya_iter, "Product length (>= 1000)")->capture_default_str();
  lyapunov_cmd->add_option("--seed", lya_seed, "Random seed")->capture_default_str();

  // coeffs
  ModelOptions coef_model;
  std::size_t coef_m = 50;
  auto* coeffs_cmd = app.add_subcommand("coeffs", "ARCH(infinity) coefficients");
  add_model_options(coeffs_cmd, coef_model);
  coeffs_cmd->add_option("--m", coef_m, "Number of coefficients")->capture_default_str();

  // marginal
  ModelOptions mar_model;
  std::size_t mar_draws = kDefaultMarginalDraws;
  std::size_t mar_gap = kDefaultMarginalGap;
  std::uint64_t mar_seed = 1;
  std::size_t mar_burn = kDefaultBurnIn;
  std::string mar_dump;
  std::string mar_out;
  auto* marginal_cmd = app.add_subcommand("marginal", "Build the stationary marginal model");
  add_model_options(marginal_cmd, mar_model);
  marginal_cmd->add_option("-M,--draws", mar_draws, "Number of sigma draws (>= 10000)")->capture_default_str();
  marginal_cmd->add_option("--gap", mar_gap, "Thinning gap between draws")->capture_default_str();
  marginal_cmd->add_option("--seed", mar_seed, "Random seed")->capture_default_str();
  marginal_cmd->add_option("--burn-in", mar_burn, "Discarded warm-up steps")->capture_default_str();
  marginal_cmd->add_option("--dump", mar_dump, "Write the table as CSV (x,F,f)");
  marginal_cmd->add_option("--out", mar_out, "Write the binary model file");

  // bk
  std::string bk_path;
  std::string bk_marginal;
  std::vector<double> bk_interval{0.05, 0.95};
  std::string bk_grid = "candidates";
  std::string bk_out;
  auto* bk_cmd = app.add_subcommand("bk", "Bahadur-Kiefer remainder of a path");
  bk_cmd->add_option("--path", bk_path, "Path CSV from simulate")->required();
  bk_cmd->add_option("--marginal", bk_marginal, "Marginal model file")->required();
  bk_cmd->add_option("--interval", bk_interval, "Working interval lo hi")
      ->expected(2)
      ->capture_default_str();
  bk_cmd->add_option("--grid", bk_grid, "Sup search policy")
      ->check(CLI::IsMember({"candidates", "dense"}))
      ->capture_default_str();
  bk_cmd->add_option("--out", bk_out, "Result JSON (stdout when omitted)");

  // experiment
  std::string exp_config;
  std::optional<std::size_t> exp_threads;
  std::string exp_out_dir;
  ModelOptions exp_model;
  std::vector<std::size_t> exp_grid;
  std::size_t exp_reps = 1;
  std::uint64_t exp_master = 1;
  std::vector<double> exp_interval{0.05, 0.95};
  std::size_t exp_draws = kDefaultMarginalDraws;
  std::size_t exp_gap = kDefaultMarginalGap;
  std::optional<std::uint64_t> exp_marginal_seed;
  std::size_t exp_burn = kDefaultBurnIn;
  auto* experiment_cmd =
      app.add_subcommand("experiment", "Run a replicated remainder experiment over an n grid");
  auto* cfg_opt = experiment_cmd->add_option("--config", exp_config, "INI experiment config");
  experiment_cmd->add_option("--threads", exp_threads, "Worker threads");
  experiment_cmd->add_option("--out-dir", exp_out_dir,
                             std::string("Output directory (default: config, then $") +
                                 kOutputDirEnv + ", then bkgarch-out)");
  add_model_options(experiment_cmd, exp_model);
  auto* grid_opt = experiment_cmd->add_option("--n-grid", exp_grid, "Sample sizes (comma separated)")
                       ->delimiter(',');
  experiment_cmd->add_option("--replications", exp_reps, "Replications per n")->capture_default_str();
  experiment_cmd->add_option("--master-seed", exp_master, "Master seed")->capture_default_str();
  experiment_cmd->add_option("--interval", exp_interval, "Working interval lo hi")
      ->expected(2)
      ->capture_default_str();
  experiment_cmd->add_option("--draws", exp_draws, "Marginal sigma draws")->capture_default_str();
  experiment_cmd->add_option("--gap", exp_gap, "Marginal thinning gap")->capture_default_str();
  experiment_cmd->add_option("--marginal-seed", exp_marginal_seed, "Marginal seed (derived when omitted)");
  experiment_cmd->add_option("--burn-in", exp_burn, "Discarded warm-up steps")->capture_default_str();
  cfg_opt->excludes(grid_opt);

  // summarize
  std::string sum_in;
  std::string sum_out;
  auto* summarize_cmd = app.add_subcommand("summarize", "Summarize a results CSV");
  summarize_cmd->add_option("--in", sum_in, "results.csv")->required();
  summarize_cmd->add_option("--out", sum_out, "Summary JSON (stdout when omitted)");

  // plot
  std::string plot_in;
  std::string plot_kind = "loglog-rate";
  bool plot_reference = true;
  std::string plot_stat = "r_general";
  std::string plot_out;
  auto* plot_cmd = app.add_subcommand("plot", "Render a summary as an SVG figure");
  plot_cmd->add_option("--in", plot_in, "Summary JSON")->required();
  plot_cmd->add_option("--kind", plot_kind, "Figure kind")
      ->check(CLI::IsMember({"loglog-rate", "ratio", "diagnostics"}))
      ->capture_default_str();
  plot_cmd->add_flag("--reference-slope,!--no-reference-slope", plot_reference,
                     "Draw the slope -1/4 reference line");
  plot_cmd->add_option("--statistic", plot_stat, "Statistic to plot")
      ->check(CLI::IsMember({"r_uniform", "r_general", "r_general_full"}))
      ->capture_default_str();
  plot_cmd->add_option("--out", plot_out, "Output SVG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*simulate_cmd) {
      const auto path = simulate(sim_model.params(), sim_model.innovation(), sim_n, sim_burn,
                                 sim_seed, sim_force);
      write_path_csv(path, sim_out);
    } else if (*lyapunov_cmd) {
      const auto v = is_stationary(lya_model.params(), lya_model.innovation(), lya_iter, lya_seed);
      nlohmann::json j{{"iterations", v.estimate.iterations},
                       {"std_error", v.estimate.std_error},
                       {"verdict", to_string(v.verdict)}};
      if (std::isfinite(v.estimate.gamma_hat)) {
        j["gamma_hat"] = v.estimate.gamma_hat;
      } else {
        j["gamma_hat"] = "-inf";
      }
      print_json(j);
    } else if (*coeffs_cmd) {
      const auto c = arch_infinity_coeffs(coef_model.params(), coef_m);
      print_json({{"a", c.a}, {"b", c.b}});
    } else if (*marginal_cmd) {
      if (mar_dump.empty() && mar_out.empty()) {
        throw InvalidArgument("marginal needs --out and/or --dump");
      }
      const auto m = MarginalModel::build(mar_model.params(), mar_model.innovation(), mar_draws,
                                          mar_gap, mar_seed, mar_burn);
      std::vector<std::pair<fs::path, fs::path>> staged;
      try {
        if (!mar_out.empty()) {
          staged.emplace_back(mar_out + ".partial", mar_out);
          m.save(staged.back().first);
        }
        if (!mar_dump.empty()) {
          staged.emplace_back(mar_dump + ".partial", mar_dump);
          m.dump_grid(staged.back().first);
        }
      } catch (...) {
        std::error_code ec;
        for (const auto& [tmp, dst] : staged) fs::remove(tmp, ec);
        throw;
      }
      for (const auto& [tmp, dst] : staged) fs::rename(tmp, dst);
    } else if (*bk_cmd) {
      const auto path = read_path_csv(bk_path);
      const auto m = MarginalModel::load(bk_marginal);
      const auto policy = bk_grid == "dense" ? GridPolicy::dense : GridPolicy::candidates;
      const auto r = bk_remainder(path, m, Interval{bk_interval[0], bk_interval[1]}, policy);
      auto j = to_json(r);
      j["interval"] = bk_interval;
      if (bk_out.empty()) {
        print_json(j);
      } else {
        write_file_atomic(bk_out, j.dump(2) + "\n");
      }
    } else if (*experiment_cmd) {
      ExperimentConfig config;
      if (!exp_config.empty()) {
        config = load_config(exp_config);
      } else {
        if (exp_grid.empty()) throw InvalidArgument("experiment needs --config or --n-grid");
        config.params = exp_model.params();
        config.innovation_family = exp_model.family;
        config.innovation_df = exp_model.df;
        config.n_grid = exp_grid;
        config.replications = exp_reps;
        config.master_seed = exp_master;
        config.interval = {exp_interval[0], exp_interval[1]};
        config.marginal.draws = exp_draws;
        config.marginal.gap = exp_gap;
        config.marginal.seed = exp_marginal_seed;
        config.burn_in = exp_burn;
        config.output_dir = default_output_dir();
      }
      if (!exp_out_dir.empty()) config.output_dir = exp_out_dir;
      if (exp_threads) config.threads = *exp_threads;
      config.validate();
      const auto result = run_experiment(config);
      std::cout << "wrote " << result.rows.size() << " rows to " << result.csv_path.string()
                << "\n";
      if (result.summary.contains("exponent")) {
        std::cout << "fitted exponent (r_general): " << result.summary["exponent"] << "\n";
      }
    } else if (*summarize_cmd) {
      const auto summary = summarize(fs::path(sum_in));
      if (sum_out.empty()) {
        print_json(summary);
      } else {
        write_file_atomic(sum_out, summary.dump(2) + "\n");
      }
    } else if (*plot_cmd) {
      plot({plot_in, parse_plot_kind(plot_kind), plot_reference, plot_stat, plot_out});
    }
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
