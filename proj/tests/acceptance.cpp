// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. Artifacts go to argv[1] (default
// ./acceptance-out).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "bkgarch/bahadur.hpp"
#include "bkgarch/empirical.hpp"
#include "bkgarch/garch.hpp"
#include "bkgarch/harness.hpp"
#include "bkgarch/marginal.hpp"
#include "oracles.hpp"

using namespace bkgarch;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& detail, double seconds) {
  std::printf("criterion %d: %s  %s  (%.1fs)\n", id, pass ? "PASS" : "FAIL", detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++failures;
}

template <class F>
void criterion(int id, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool pass = false;
  try {
    pass = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(id, pass, detail, secs);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const std::vector<std::size_t> kGrid{1 << 12, 1 << 14, 1 << 16};

std::size_t threads() { return std::max(1u, std::thread::hardware_concurrency()); }

ExperimentConfig iid_config(const fs::path& out) {
  ExperimentConfig c;
  c.params = {1.0, {}, {0.0}};
  c.n_grid = kGrid;
  c.replications = 200;
  c.master_seed = 20240601;
  c.output_dir = out;
  c.threads = threads();
  return c;
}

ExperimentConfig garch_config(const fs::path& out) {
  ExperimentConfig c;
  c.params = {0.1, {0.8}, {0.1}};
  c.n_grid = kGrid;
  c.replications = 100;
  c.master_seed = 20240602;
  c.output_dir = out;
  c.threads = threads();
  return c;
}

// max/min of a per-n summary value
double spread(const nlohmann::json& summary, const std::function<double(const nlohmann::json&)>& get) {
  double lo = HUGE_VAL, hi = -HUGE_VAL;
  for (const auto& e : summary["per_n"]) {
    lo = std::min(lo, get(e));
    hi = std::max(hi, get(e));
  }
  return hi / lo;
}

std::string per_n(const nlohmann::json& summary, const std::function<double(const nlohmann::json&)>& get) {
  std::string s = "[";
  for (const auto& e : summary["per_n"]) s += (s.size() > 1 ? " " : "") + fmt("%.4g", get(e));
  return s + "]";
}

struct ScalarOracle {
  double mean, se;
};

ScalarOracle scalar_oracle(double beta, double alpha, std::size_t draws, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> normal;
  double s = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double e = normal(eng);
    const double l = std::log(beta + alpha * e * e);
    s += l;
    ss += l * l;
  }
  const double n = static_cast<double>(draws);
  const double m = s / n;
  return {m, std::sqrt((ss / n - m * m) / n)};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::current_path() / "acceptance-out";
  fs::create_directories(root);
  std::printf("acceptance artifacts in %s, %zu worker threads\n", root.string().c_str(), threads());

  nlohmann::json iid_summary;
  nlohmann::json garch_summary;

  criterion(1, [&](std::string& d) {
    const auto res = run_experiment(iid_config(root / "c1"));
    iid_summary = res.summary;
    const double e = res.summary["fits"]["r_uniform"]["exponent"];
    d = "r_uniform exponent " + fmt("%.4f", e) + " in [-0.33, -0.17]; medians " +
        per_n(res.summary, [](const auto& x) { return x["r_uniform"]["median"].template get<double>(); });
    return e >= -0.33 && e <= -0.17;
  });

  criterion(2, [&](std::string& d) {
    const auto res = run_experiment(garch_config(root / "c2"));
    garch_summary = res.summary;
    const double e = res.summary["fits"]["r_general"]["exponent"];
    const double s = spread(res.summary, [](const auto& x) {
      return x["ratios"]["r_general_over_r_n"].template get<double>();
    });
    d = "r_general exponent " + fmt("%.4f", e) + " in [-0.33, -0.17]; ratio to r_n " +
        per_n(res.summary, [](const auto& x) { return x["ratios"]["r_general_over_r_n"].template get<double>(); }) +
        " spread " + fmt("%.3f", s) + " < 2.5";
    return e >= -0.33 && e <= -0.17 && s < 2.5;
  });

  criterion(3, [&](std::string& d) {
    const InnovationModel gauss = InnovationModel::gaussian();
    struct Case {
      double beta, alpha;
      std::vector<Stationarity> ok;
    };
    const std::vector<Case> cases{{0.8, 0.1, {Stationarity::stationary}},
                                  {0.5, 0.4, {Stationarity::stationary, Stationarity::inconclusive}},
                                  {1.2, 0.5, {Stationarity::non_stationary}}};
    bool pass = true;
    std::uint64_t seed = 1;
    for (const auto& c : cases) {
      const GarchParams g{1.0, {c.beta}, {c.alpha}};
      const auto est = lyapunov_exponent(g, gauss, 1'000'000, 0x5eed1a9);
      const auto o = scalar_oracle(c.beta, c.alpha, 10'000'000, 1000 + seed++);
      const double z = std::abs(est.gamma_hat - o.mean) / std::hypot(est.std_error, o.se);
      const auto verdict = is_stationary(g, gauss).verdict;
      const bool v_ok = std::find(c.ok.begin(), c.ok.end(), verdict) != c.ok.end();
      pass = pass && z < 3.0 && v_ok;
      d += fmt("(%.1f,", c.beta) + fmt("%.1f): ", c.alpha) + fmt("gamma %.5f ", est.gamma_hat) +
           fmt("oracle %.5f ", o.mean) + fmt("z %.2f ", z) + to_string(verdict) + "; ";
    }
    return pass;
  });

  criterion(4, [&](std::string& d) {
    const InnovationModel gauss = InnovationModel::gaussian();
    double worst_coeff = 0.0;
    double worst_path = 0.0;
    for (double beta : {0.1, 0.5, 0.8, 0.9}) {
      const double alpha = std::min(0.09, 0.95 - beta);
      const GarchParams g{0.1, {beta}, {alpha}};
      const auto c = arch_infinity_coeffs(g, 200);
      worst_coeff = std::max(worst_coeff, std::abs(c.a - 0.1 / (1 - beta)));
      for (std::size_t i = 1; i <= 200; ++i) {
        worst_coeff = std::max(worst_coeff,
                               std::abs(c.b[i - 1] - alpha * std::pow(beta, static_cast<double>(i - 1))));
      }
      const auto path = simulate(g, gauss, 5000, 2000, 77);
      for (std::size_t k = 200; k < path.size(); ++k) {
        double s2 = c.a;
        for (std::size_t i = 1; i <= 200; ++i) s2 += c.b[i - 1] * path.x[k - i] * path.x[k - i];
        worst_path = std::max(worst_path, std::abs(s2 - path.sigma2[k]) / path.sigma2[k]);
      }
    }
    d = "max coefficient error " + fmt("%.2e", worst_coeff) + " < 1e-12; max relative path error " +
        fmt("%.2e", worst_path) + " < 1e-8";
    return worst_coeff < 1e-12 && worst_path < 1e-8;
  });

  criterion(5, [&](std::string& d) {
    if (garch_summary.is_null()) throw std::runtime_error("criterion 2 run unavailable");
    const auto get_star = [](const auto& x) { return x["ratios"]["oscillation_over_b_n_star"].template get<double>(); };
    const auto get_bn = [](const auto& x) { return x["ratios"]["oscillation_over_b_n"].template get<double>(); };
    const double s = spread(garch_summary, get_star);
    d = "median oscillation / b_n_star " + per_n(garch_summary, get_star) + " spread " + fmt("%.3f", s) +
        " < 3; (oscillation / b_n " + per_n(garch_summary, get_bn) + fmt(" spread %.3f)", spread(garch_summary, get_bn));
    return s < 3.0;
  });

  criterion(6, [&](std::string& d) {
    if (garch_summary.is_null()) throw std::runtime_error("criterion 2 run unavailable");
    const auto get = [](const auto& x) { return x["lil"]["median"].template get<double>(); };
    const double s = spread(garch_summary, get);
    double hi = 0.0;
    for (const auto& e : garch_summary["per_n"]) hi = std::max(hi, get(e));
    d = "median lil " + per_n(garch_summary, get) + " spread " + fmt("%.3f", s) + " < 2, max " +
        fmt("%.3f", hi) + " < 3";
    return s < 2.0 && hi < 3.0;
  });

  criterion(7, [&](std::string& d) {
    const GarchParams g{0.1, {0.8}, {0.1}};
    const InnovationModel gauss = InnovationModel::gaussian();
    const double r3 = inverse_sigma_variance(simulate_blocks(g, gauss, 1000, 200, 701));
    const double r4 = inverse_sigma_variance(simulate_blocks(g, gauss, 10'000, 200, 702));
    const double f = std::max(r3, r4) / std::min(r3, r4);
    d = "ratio at 1e3 " + fmt("%.4f", r3) + ", at 1e4 " + fmt("%.4f", r4) + ", factor " + fmt("%.3f", f) + " < 2";
    return r3 > 0.0 && r4 > 0.0 && f < 2.0;
  });

  criterion(8, [&](std::string& d) {
    std::mt19937_64 eng(8888);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const InnovationModel gauss = InnovationModel::gaussian();
    const RealFunction cdf = [&](double x) { return gauss.cdf(x); };
    const RealFunction q = [&](double y) { return gauss.quantile(y); };
    const RealFunction dens = [&](double x) { return gauss.pdf(x); };
    double worst = 0.0;
    std::size_t mismatches = 0;
    for (int inst = 0; inst < 1000; ++inst) {
      const std::size_t n = 16 + eng() % 985;
      std::vector<double> x(n);
      for (auto& v : x) v = q(unif(eng));
      if (inst % 4 == 0) {
        for (auto& v : x) v = std::round(v * 8.0) / 8.0;  // ties
      }
      const SortedSample s(x);
      for (int k = 0; k < 5; ++k) {
        const double t = q(unif(eng));
        const double y = std::max(unif(eng), 1e-9);
        mismatches += ecdf(s, t) != oracle::ecdf(x, t);
        mismatches += equantile(s, y) != oracle::equantile(x, y);
      }
      const auto ep = empirical_process(s, cdf, {});
      worst = std::max(worst, std::abs(ep.sup_abs / std::sqrt(static_cast<double>(n)) - oracle::ks(x, cdf)));
      std::vector<double> u(n);
      std::transform(x.begin(), x.end(), u.begin(), cdf);
      auto su = u;
      std::sort(su.begin(), su.end());
      worst = std::max(worst, std::abs(uniform_remainder(su) - oracle::uniform_remainder(u)));
      const auto sx = s.values();
      worst = std::max(worst, std::abs(general_remainder(sx, su, q, dens, 0.05, 0.95) -
                                       oracle::general_remainder(x, u, q, dens, 0.05, 0.95)));
    }
    const std::size_t n = 100'000;
    const GarchParams iid{1.0, {}, {0.0}};
    const auto m = MarginalModel::build(iid, gauss, kDefaultMarginalDraws, 1, 31);
    const auto u = pit(simulate(iid, gauss, n, 0, 32), m);
    const double ks = oracle::ks(u, [](double t) { return t; });
    const double crit = 1.63 / std::sqrt(static_cast<double>(n));
    d = fmt("1000 instances: %.0f exact-count mismatches, ", static_cast<double>(mismatches)) +
        "max process/remainder deviation " + fmt("%.2e", worst) + " <= 1e-12; PIT KS " + fmt("%.5f", ks) +
        " < " + fmt("%.5f", crit);
    return mismatches == 0 && worst <= 1e-12 && ks < crit;
  });

  criterion(9, [&](std::string& d) {
    if (!fs::exists(root / "c1" / "results.csv")) throw std::runtime_error("criterion 1 run unavailable");
    run_experiment(iid_config(root / "c9"));
    const auto a = slurp(root / "c1" / "results.csv");
    const auto b = slurp(root / "c9" / "results.csv");
    d = "rerun of criterion 1: " + std::to_string(a.size()) + " bytes, " + (a == b ? "identical" : "different");
    return !a.empty() && a == b;
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
