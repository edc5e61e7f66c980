#include "bkgarch/harness.hpp"

#include <algorithm>
#include <atomic>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "bkgarch/error.hpp"
#include "bkgarch/rng.hpp"

namespace bkgarch {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& text, const std::string& what) {
  const std::string s = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw InvalidArgument("cannot parse " + what + " from '" + text + "'");
  }
  return value;
}

std::vector<double> parse_doubles(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(parse_number<double>(item, what));
  return out;
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  return out;
}

// Quantile with linear interpolation between order statistics.
double quantile_of(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

void ExperimentConfig::validate() const {
  params.validate();
  (void)innovation();
  if (n_grid.empty()) throw InvalidArgument("n_grid must not be empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 16) throw InvalidArgument("every n in n_grid must be >= 16");
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) {
      throw InvalidArgument("n_grid must be strictly increasing");
    }
  }
  if (replications < 1) throw InvalidArgument("replications must be >= 1");
  if (!(interval.lo > 0.0 && interval.lo < interval.hi && interval.hi < 1.0)) {
    throw InvalidArgument("interval must satisfy 0 < lo < hi < 1");
  }
  if (marginal.draws < 10'000) throw InvalidArgument("marginal draws must be >= 10^4");
  if (marginal.gap == 0) throw InvalidArgument("marginal gap must be positive");
  if (threads < 1) throw InvalidArgument("threads must be >= 1");
}

InnovationModel ExperimentConfig::innovation() const {
  return InnovationModel::from_spec(innovation_family, innovation_df);
}

std::uint64_t ExperimentConfig::marginal_seed() const {
  return marginal.seed.value_or(cell_seed(master_seed, 0, -1));
}

std::uint64_t cell_seed(std::uint64_t master_seed, std::size_t n, std::int64_t rep) {
  return mix_seed(master_seed, n, static_cast<std::uint64_t>(rep));
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(file.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw IoError("cannot read config " + file.string() + ": " + e.message());
  }

  static const std::map<std::string, std::set<std::string>> allowed = {
      {"garch", {"delta", "beta", "alpha"}},
      {"innovation", {"family", "df"}},
      {"experiment", {"n_grid", "replications", "master_seed", "interval", "burn_in", "threads"}},
      {"marginal", {"draws", "gap", "seed"}},
      {"output", {"dir"}},
  };
  for (const auto& [section, body] : tree) {
    const auto it = allowed.find(section);
    if (it == allowed.end() || body.empty()) {
      throw InvalidArgument("unknown config section or top-level key '" + section + "'");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.contains(key)) {
        throw InvalidArgument("unknown config key '" + section + "." + key + "'");
      }
    }
  }

  auto get = [&](const std::string& path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) return trim(*v);
    return std::nullopt;
  };

  ExperimentConfig c;
  const auto delta = get("garch.delta");
  const auto alpha = get("garch.alpha");
  if (!delta || !alpha) throw InvalidArgument("config needs garch.delta and garch.alpha");
  c.params.delta = parse_number<double>(*delta, "garch.delta");
  c.params.alpha = parse_doubles(*alpha, "garch.alpha");
  if (auto v = get("garch.beta")) c.params.beta = parse_doubles(*v, "garch.beta");

  if (auto v = get("innovation.family")) c.innovation_family = *v;
  if (auto v = get("innovation.df")) c.innovation_df = parse_number<double>(*v, "innovation.df");

  const auto grid = get("experiment.n_grid");
  if (!grid) throw InvalidArgument("config needs experiment.n_grid");
  for (const auto& item : split_list(*grid)) {
    c.n_grid.push_back(parse_number<std::size_t>(item, "experiment.n_grid"));
  }
  if (auto v = get("experiment.replications")) {
    c.replications = parse_number<std::size_t>(*v, "experiment.replications");
  }
  if (auto v = get("experiment.master_seed")) {
    c.master_seed = parse_number<std::uint64_t>(*v, "experiment.master_seed");
  }
  if (auto v = get("experiment.interval")) {
    const auto iv = parse_doubles(*v, "experiment.interval");
    if (iv.size() != 2) throw InvalidArgument("experiment.interval needs two values");
    c.interval = {iv[0], iv[1]};
  }
  if (auto v = get("experiment.burn_in")) {
    c.burn_in = parse_number<std::size_t>(*v, "experiment.burn_in");
  }
  if (auto v = get("experiment.threads")) {
    c.threads = parse_number<std::size_t>(*v, "experiment.threads");
  }
  if (auto v = get("marginal.draws")) c.marginal.draws = parse_number<std::size_t>(*v, "marginal.draws");
  if (auto v = get("marginal.gap")) c.marginal.gap = parse_number<std::size_t>(*v, "marginal.gap");
  if (auto v = get("marginal.seed")) c.marginal.seed = parse_number<std::uint64_t>(*v, "marginal.seed");
  if (auto v = get("output.dir")) {
    c.output_dir = *v;
  } else if (const char* env = std::getenv(kOutputDirEnv); env && *env) {
    c.output_dir = env;
  } else {
    c.output_dir = "bkgarch-out";
  }
  c.validate();
  return c;
}

std::string config_to_ini(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "[garch]\n"
      << "delta = " << format_double(c.params.delta) << "\n"
      << "beta = " << join(c.params.beta) << "\n"
      << "alpha = " << join(c.params.alpha) << "\n\n"
      << "[innovation]\n"
      << "family = " << c.innovation_family << "\n"
      << "df = " << format_double(c.innovation_df) << "\n\n"
      << "[experiment]\n"
      << "n_grid = ";
  for (std::size_t i = 0; i < c.n_grid.size(); ++i) out << (i ? ", " : "") << c.n_grid[i];
  out << "\nreplications = " << c.replications << "\n"
      << "master_seed = " << c.master_seed << "\n"
      << "interval = " << format_double(c.interval.lo) << ", " << format_double(c.interval.hi)
      << "\n"
      << "burn_in = " << c.burn_in << "\n"
      << "threads = " << c.threads << "\n\n"
      << "[marginal]\n"
      << "draws = " << c.marginal.draws << "\n"
      << "gap = " << c.marginal.gap << "\n"
      << "seed = " << c.marginal_seed() << "\n\n"
      << "[output]\n"
      << "dir = " << c.output_dir.string() << "\n";
  return out.str();
}

ResultRow run_cell(const ExperimentConfig& config, const MarginalModel& marginal, std::size_t n,
                   std::size_t rep) {
  const std::uint64_t seed = cell_seed(config.master_seed, n, static_cast<std::int64_t>(rep));
  // Stationarity was checked once for the whole experiment.
  const PathSample path = simulate(config.params, config.innovation(), n, config.burn_in, seed,
                                   /*allow_nonstationary=*/true);
  return {rep, bk_remainder(path, marginal, config.interval)};
}

std::string format_csv_row(const ResultRow& row) {
  const auto& r = row.result;
  std::ostringstream out;
  out.precision(17);
  out << r.n << ',' << row.rep << ',' << r.seed << ',' << r.r_uniform << ',' << r.r_general << ','
      << r.sup_beta << ',' << r.oscillation << ',' << r.lil << ',' << r.r_general_full;
  return out.str();
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open results file " + file.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != kCsvHeader) {
    throw IoError("results file " + file.string() + " has an unexpected header");
  }
  std::vector<ResultRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_list(line);
    if (fields.size() != 9) {
      throw IoError("malformed row at line " + std::to_string(lineno) + " of " + file.string());
    }
    try {
      ResultRow row;
      row.result.n = parse_number<std::size_t>(fields[0], "n");
      row.rep = parse_number<std::size_t>(fields[1], "rep");
      row.result.seed = parse_number<std::uint64_t>(fields[2], "seed");
      double* targets[] = {&row.result.r_uniform, &row.result.r_general, &row.result.sup_beta,
                           &row.result.oscillation, &row.result.lil, &row.result.r_general_full};
      for (std::size_t k = 0; k < 6; ++k) {
        *targets[k] = parse_number<double>(fields[3 + k], "statistic");
        if (!std::isfinite(*targets[k]) || *targets[k] < 0.0) {
          throw InvalidArgument("statistic must be finite and nonnegative");
        }
      }
      if (row.result.n < 16) throw InvalidArgument("n must be >= 16");
      rows.push_back(row);
    } catch (const InvalidArgument& e) {
      throw IoError("malformed row at line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

void write_file_atomic(const std::filesystem::path& file, const std::string& contents) {
  const auto tmp = std::filesystem::path(file.string() + ".partial");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << contents;
    if (!out) {
      std::filesystem::remove(tmp);
      throw IoError("failed writing " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, file);
}

nlohmann::json summarize(const std::vector<ResultRow>& rows) {
  using nlohmann::json;
  struct Stat {
    const char* name;
    double BkResult::*field;
  };
  static const Stat stats[] = {
      {"r_uniform", &BkResult::r_uniform},     {"r_general", &BkResult::r_general},
      {"r_general_full", &BkResult::r_general_full}, {"sup_beta", &BkResult::sup_beta},
      {"oscillation", &BkResult::oscillation}, {"lil", &BkResult::lil},
  };

  std::map<std::size_t, std::vector<const BkResult*>> by_n;
  for (const auto& row : rows) by_n[row.result.n].push_back(&row.result);

  json summary;
  summary["n_values"] = json::array();
  summary["per_n"] = json::array();
  std::map<std::string, std::vector<std::pair<std::size_t, double>>> medians;

  for (const auto& [n, results] : by_n) {
    summary["n_values"].push_back(n);
    const auto rc = rate_constants(n);
    json entry;
    entry["n"] = n;
    entry["count"] = results.size();
    std::map<std::string, double> med;
    for (const auto& s : stats) {
      std::vector<double> values;
      values.reserve(results.size());
      for (const auto* r : results) values.push_back(r->*(s.field));
      med[s.name] = quantile_of(values, 0.5);
      entry[s.name] = {{"median", med[s.name]},
                       {"q1", quantile_of(values, 0.25)},
                       {"q3", quantile_of(values, 0.75)}};
      medians[s.name].emplace_back(n, med[s.name]);
    }
    entry["rates"] = {{"r_n", rc.r_n},
                      {"b_n", rc.b_n},
                      {"b_n_star", rc.b_n_star},
                      {"lambda_n", rc.lambda_n},
                      {"sqrt_loglog_n", std::sqrt(std::log(std::log(static_cast<double>(n))))}};
    entry["ratios"] = {
        {"r_uniform_over_r_n", med["r_uniform"] / rc.r_n},
        {"r_general_over_r_n", med["r_general"] / rc.r_n},
        {"r_general_full_over_r_n", med["r_general_full"] / rc.r_n},
        {"oscillation_over_b_n_star", med["oscillation"] / rc.b_n_star},
        {"oscillation_over_b_n", med["oscillation"] / rc.b_n},
        {"sup_beta_over_sqrt_loglog_n", med["sup_beta"] / entry["rates"]["sqrt_loglog_n"].get<double>()},
    };
    summary["per_n"].push_back(entry);
  }

  if (by_n.size() >= 3) {
    json fits;
    for (const char* name : {"r_uniform", "r_general", "r_general_full"}) {
      const auto fit = rate_fit(medians[name]);
      fits[name] = {{"exponent", fit.exponent}, {"intercept", fit.intercept}};
    }
    summary["fits"] = fits;
    summary["statistic"] = "r_general";
    summary["exponent"] = fits["r_general"]["exponent"];
    summary["intercept"] = fits["r_general"]["intercept"];
  } else {
    summary["note"] = "insufficient n values for a rate fit (need at least 3)";
  }
  return summary;
}

nlohmann::json summarize(const std::filesystem::path& csv_file) {
  const auto rows = read_results_csv(csv_file);
  if (rows.empty()) throw IoError("results file " + csv_file.string() + " has no rows");
  return summarize(rows);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const MarginalModel* prebuilt) {
  namespace fs = std::filesystem;
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const InnovationModel innovation = config.innovation();

  const auto verdict = is_stationary(config.params, innovation);
  if (verdict.verdict != Stationarity::stationary) {
    throw NonStationaryError("experiment parameters are not stationary (verdict " +
                             to_string(verdict.verdict) + ")");
  }

  // Cell seeds must never reuse the marginal seed.
  const std::uint64_t marginal_seed = config.marginal_seed();
  for (std::size_t n : config.n_grid) {
    for (std::size_t rep = 0; rep < config.replications; ++rep) {
      if (cell_seed(config.master_seed, n, static_cast<std::int64_t>(rep)) == marginal_seed) {
        throw InvalidArgument("a cell seed collides with the marginal seed");
      }
    }
  }

  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec || !fs::is_directory(config.output_dir)) {
    throw IoError("cannot create output directory " + config.output_dir.string());
  }
  const fs::path csv_path = config.output_dir / "results.csv";
  const fs::path partial = config.output_dir / "results.csv.partial";
  std::ofstream csv(partial, std::ios::binary | std::ios::trunc);
  if (!csv) throw IoError("cannot write to output directory " + config.output_dir.string());
  csv << kCsvHeader << '\n';

  std::optional<MarginalModel> built;
  if (!prebuilt) {
    built.emplace(MarginalModel::build(config.params, innovation, config.marginal.draws,
                                       config.marginal.gap, marginal_seed, config.burn_in));
  }
  const MarginalModel& marginal = prebuilt ? *prebuilt : *built;
  if (!(marginal.params() == config.params) || !(marginal.innovation() == innovation)) {
    throw InvalidArgument("prebuilt marginal model does not match the experiment parameters");
  }

  struct Cell {
    std::size_t n;
    std::size_t rep;
  };
  std::vector<Cell> cells;
  for (std::size_t n : config.n_grid) {
    for (std::size_t rep = 0; rep < config.replications; ++rep) cells.push_back({n, rep});
  }

  std::vector<std::optional<ResultRow>> slots(cells.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex mu;
  std::size_t written = 0;
  std::exception_ptr error;

  auto worker = [&] {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= cells.size() || failed.load()) return;
      try {
        ResultRow row = run_cell(config, marginal, cells[idx].n, cells[idx].rep);
        std::lock_guard lock(mu);
        slots[idx] = row;
        while (written < slots.size() && slots[written]) {
          csv << format_csv_row(*slots[written]) << '\n';
          ++written;
        }
        csv.flush();
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        failed = true;
        return;
      }
    }
  };

  const std::size_t width = std::max<std::size_t>(1, std::min(config.threads, cells.size()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < width; ++t) pool.emplace_back(worker);
    worker();
  }
  csv.close();
  if (error || !csv) {
    fs::remove(partial, ec);
    if (error) std::rethrow_exception(error);
    throw IoError("failed writing " + partial.string());
  }
  fs::rename(partial, csv_path);

  ExperimentResult result;
  result.config = config;
  result.csv_path = csv_path;
  result.rows.reserve(slots.size());
  for (auto& s : slots) result.rows.push_back(*s);
  result.summary = summarize(result.rows);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  write_file_atomic(config.output_dir / "summary.json", result.summary.dump(2) + "\n");
  nlohmann::json info;
  info["config"] = config_to_ini(config);
  info["wall_seconds"] = result.wall_seconds;
  info["threads"] = width;
  info["rows"] = result.rows.size();
  info["stationarity"] = {{"verdict", to_string(verdict.verdict)},
                          {"gamma_hat", verdict.estimate.gamma_hat},
                          {"std_error", verdict.estimate.std_error}};
  if (!std::isfinite(verdict.estimate.gamma_hat)) info["stationarity"]["gamma_hat"] = "-inf";
  write_file_atomic(config.output_dir / "run_info.json", info.dump(2) + "\n");
  return result;
}

}  // namespace bkgarch
