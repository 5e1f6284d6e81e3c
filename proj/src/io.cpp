#include "pseudopost/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace pseudopost {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double value) {
  char buffer[32];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  (void)ec;
  return std::string(buffer, ptr);
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  return in;
}

double parse_field(const std::string& field, std::size_t line_no) {
  const char* begin = field.data();
  const char* end = begin + field.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t' || *(end - 1) == '\r')) --end;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("malformed numeric field '" + field + "' at row " + std::to_string(line_no));
  }
  return value;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

// ---------------------------------------------------------------------------
// Dataset CSV

void write_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out = open_out(path);
  for (Eigen::Index k = 0; k < data.dim(); ++k) out << "x" << (k + 1) << ",";
  out << "y\n";
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index k = 0; k < data.dim(); ++k) out << format_double(data.xs(i, k)) << ",";
    out << format_double(data.ys[i]) << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty dataset file: " + path);
  const std::size_t n_cols = split_csv(line).size();
  if (n_cols < 1) throw ConfigError("dataset header has no columns: " + path);

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    if (fields.size() != n_cols) {
      throw ConfigError("row " + std::to_string(line_no) + " has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(n_cols));
    }
    std::vector<double> row;
    row.reserve(n_cols);
    for (const auto& field : fields) row.push_back(parse_field(field, line_no));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("dataset has no observations: " + path);

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(n_cols - 1);
  Matrix xs(n, d);
  Vector ys(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) xs(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    ys[i] = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)];
  }
  return Dataset(std::move(xs), std::move(ys));
}

// ---------------------------------------------------------------------------
// SurrogateFit JSON

json fit_to_json(const SurrogateFit& fit) {
  return {{"beta", std::vector<double>(fit.beta.data(), fit.beta.data() + fit.beta.size())},
          {"n_fit", fit.n_fit},
          {"residual_variance", fit.residual_variance},
          {"gram_condition", fit.gram_condition}};
}

SurrogateFit fit_from_json(const json& j) {
  SurrogateFit fit;
  const auto beta = j.at("beta").get<std::vector<double>>();
  fit.beta = Eigen::Map<const Vector>(beta.data(), static_cast<Eigen::Index>(beta.size()));
  fit.n_fit = j.at("n_fit").get<Eigen::Index>();
  fit.residual_variance = j.at("residual_variance").get<double>();
  fit.gram_condition = j.at("gram_condition").get<double>();
  return fit;
}

void write_fit_json(const SurrogateFit& fit, const std::string& path) {
  std::ofstream out = open_out(path);
  out << fit_to_json(fit).dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

SurrogateFit read_fit_json(const std::string& path) {
  return fit_from_json(read_json_file(path));
}

// ---------------------------------------------------------------------------
// Particles

namespace {

// The worker-count hint is omitted: results are invariant to it, and the
// serialized artifact must be too.
json calibration_to_json(const CalibrationConfig& config) {
  return {{"n_theta", config.n_theta},
          {"batch_size", config.batch_size},
          {"bandwidth", config.bandwidth},
          {"seed", config.seed}};
}

}  // namespace

json particles_to_json(const WeightedParticleSet& ps) {
  json particles = json::array();
  for (Eigen::Index j = 0; j < ps.size(); ++j) {
    json theta = json::array();
    for (Eigen::Index k = 0; k < ps.thetas.cols(); ++k) theta.push_back(ps.thetas(j, k));
    particles.push_back({{"theta", std::move(theta)},
                         {"R", ps.batch_residuals[j]},
                         {"log_w", ps.log_unnorm_weights[j]},
                         {"w", ps.weights[j]}});
  }
  return {{"config", calibration_to_json(ps.config)},
          {"degenerate_weights", ps.degenerate_weights},
          {"particles", std::move(particles)}};
}

WeightedParticleSet particles_from_json(const json& j) {
  WeightedParticleSet ps;
  ps.config = calibration_from_json(j.at("config"));
  ps.degenerate_weights = j.at("degenerate_weights").get<bool>();
  const auto& particles = j.at("particles");
  const auto n = static_cast<Eigen::Index>(particles.size());
  if (n < 1) throw ConfigError("particle file holds no particles");
  const auto p = static_cast<Eigen::Index>(particles.front().at("theta").size());
  ps.thetas.resize(n, p);
  ps.batch_residuals.resize(n);
  ps.log_unnorm_weights.resize(n);
  ps.weights.resize(n);
  for (Eigen::Index idx = 0; idx < n; ++idx) {
    const auto& entry = particles[static_cast<std::size_t>(idx)];
    const auto theta = entry.at("theta").get<std::vector<double>>();
    for (Eigen::Index k = 0; k < p; ++k) ps.thetas(idx, k) = theta[static_cast<std::size_t>(k)];
    ps.batch_residuals[idx] = entry.at("R").get<double>();
    ps.log_unnorm_weights[idx] = entry.at("log_w").get<double>();
    ps.weights[idx] = entry.at("w").get<double>();
  }
  return ps;
}

void write_particles_json(const WeightedParticleSet& ps, const std::string& path) {
  std::ofstream out = open_out(path);
  out << particles_to_json(ps).dump() << "\n";
  if (!out) throw IoError("write failed: " + path);
}

void write_particles_csv(const WeightedParticleSet& ps, const std::string& path) {
  std::ofstream out = open_out(path);
  for (Eigen::Index k = 0; k < ps.thetas.cols(); ++k) out << "theta_" << (k + 1) << ",";
  out << "R,log_w,w\n";
  for (Eigen::Index j = 0; j < ps.size(); ++j) {
    for (Eigen::Index k = 0; k < ps.thetas.cols(); ++k) out << format_double(ps.thetas(j, k)) << ",";
    out << format_double(ps.batch_residuals[j]) << "," << format_double(ps.log_unnorm_weights[j])
        << "," << format_double(ps.weights[j]) << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Chain

void write_chain_csv(const Chain& chain, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "iter";
  for (Eigen::Index k = 0; k < chain.samples.cols(); ++k) out << ",theta_" << (k + 1);
  out << ",log_target,accepted\n";
  for (Eigen::Index i = 0; i < chain.samples.rows(); ++i) {
    out << i;
    for (Eigen::Index k = 0; k < chain.samples.cols(); ++k) {
      out << "," << format_double(chain.samples(i, k));
    }
    out << "," << format_double(chain.log_target_trace[i]) << ","
        << static_cast<int>(chain.accepted[static_cast<std::size_t>(i)]) << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

json chain_summary_to_json(const ChainSummary& summary, double acceptance_rate) {
  json cov = json::array();
  for (Eigen::Index i = 0; i < summary.cov.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < summary.cov.cols(); ++k) row.push_back(summary.cov(i, k));
    cov.push_back(std::move(row));
  }
  json quantiles = json::array();
  for (Eigen::Index i = 0; i < summary.quantiles.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < summary.quantiles.cols(); ++k) {
      row.push_back(summary.quantiles(i, k));
    }
    quantiles.push_back(std::move(row));
  }
  return {{"mean",
           std::vector<double>(summary.mean.data(), summary.mean.data() + summary.mean.size())},
          {"cov", std::move(cov)},
          {"quantile_levels",
           std::vector<double>(summary.quantile_levels.data(),
                               summary.quantile_levels.data() + summary.quantile_levels.size())},
          {"quantiles", std::move(quantiles)},
          {"acceptance_rate", acceptance_rate}};
}

// ---------------------------------------------------------------------------
// Scan

void write_scan_csv(const IdentifiedSetScan& scan, const std::string& path) {
  std::ofstream out = open_out(path);
  for (Eigen::Index k = 0; k < scan.grid.cols(); ++k) out << "theta_" << (k + 1) << ",";
  out << "mu_hat,mu_sq,member\n";
  std::vector<bool> member(static_cast<std::size_t>(scan.grid.rows()), false);
  for (const Eigen::Index idx : scan.members) member[static_cast<std::size_t>(idx)] = true;
  for (Eigen::Index i = 0; i < scan.grid.rows(); ++i) {
    for (Eigen::Index k = 0; k < scan.grid.cols(); ++k) out << format_double(scan.grid(i, k)) << ",";
    out << format_double(scan.mu_hat[i]) << "," << format_double(scan.mu_sq[i]) << ","
        << (member[static_cast<std::size_t>(i)] ? 1 : 0) << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Reports

json report_to_json(const ExperimentReport& report) {
  json tables = json::object();
  for (const auto& [name, table] : report.tables) {
    tables[name] = {{"columns", table.columns}, {"data", table.data}};
  }
  return {{"name", report.name},
          {"inputs", report.inputs},
          {"metrics", report.metrics},
          {"pass_flags", report.pass_flags},
          {"tables", std::move(tables)}};
}

void write_report(const ExperimentReport& report, const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  const fs::path dir(out_dir);
  {
    std::ofstream out = open_out((dir / (report.name + "_report.json")).string());
    out << report_to_json(report).dump(2) << "\n";
    if (!out) throw IoError("write failed in " + out_dir);
  }
  for (const auto& [name, table] : report.tables) {
    std::ofstream out = open_out((dir / (report.name + "_" + name + ".csv")).string());
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      out << table.columns[c] << (c + 1 < table.columns.size() ? "," : "\n");
    }
    const std::size_t rows = table.data.empty() ? 0 : table.data.front().size();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < table.data.size(); ++c) {
        out << format_double(table.data[c][r]) << (c + 1 < table.data.size() ? "," : "\n");
      }
    }
    if (!out) throw IoError("write failed in " + out_dir);
  }
}

// ---------------------------------------------------------------------------
// Configs

ParsedModelConfig model_from_json(const json& j) {
  ParsedModelConfig parsed;
  const std::string kind = j.at("model").get<std::string>();
  if (kind == "toy") {
    auto model = std::make_unique<ToyModel>(
        j.value("prior_sd", 5.0), j.value("logx_sd", 0.5), j.value("noise_sd", 1.0),
        j.value("logx_mean_div", 5.0));
    parsed.model = std::move(model);
  } else if (kind == "linear_gaussian") {
    const auto vec = [&](const char* key) {
      const auto values = j.at(key).get<std::vector<double>>();
      return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()))
          .eval();
    };
    const Vector a = vec("a");
    const Vector x_mean = vec("x_mean");
    Vector x_slope = Vector::Zero(x_mean.size());
    if (j.contains("x_slope")) x_slope = vec("x_slope");
    Vector hetero = Vector::Zero(a.size());
    if (j.contains("noise_log_var_slope")) hetero = vec("noise_log_var_slope");
    const auto cov_rows = j.at("x_cov").get<std::vector<std::vector<double>>>();
    Matrix x_cov(static_cast<Eigen::Index>(cov_rows.size()),
                 static_cast<Eigen::Index>(cov_rows.empty() ? 0 : cov_rows.front().size()));
    for (Eigen::Index r = 0; r < x_cov.rows(); ++r) {
      if (static_cast<Eigen::Index>(cov_rows[static_cast<std::size_t>(r)].size()) != x_cov.cols()) {
        throw ConfigError("model config: x_cov rows have uneven lengths");
      }
      for (Eigen::Index c = 0; c < x_cov.cols(); ++c) {
        x_cov(r, c) = cov_rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      }
    }
    parsed.model = std::make_unique<LinearGaussianModel>(
        a, j.value("b", 0.0), x_slope, x_mean, x_cov, j.value("noise_sd", 1.0), hetero,
        j.value("prior_sd", 1.0));
  } else {
    throw ConfigError("model config: unknown model '" + kind + "'");
  }

  if (j.contains("theta_true")) {
    const auto values = j.at("theta_true").get<std::vector<double>>();
    parsed.theta_true =
        Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
    if (parsed.theta_true.size() != parsed.model->param_dim()) {
      throw ConfigError("model config: theta_true dimension mismatch");
    }
  } else {
    parsed.theta_true = Vector::Zero(parsed.model->param_dim());
  }
  parsed.n_obs = j.value("n_obs", Eigen::Index{0});
  parsed.seed = j.value("seed", std::uint64_t{0});
  return parsed;
}

ParsedModelConfig read_model_config(const std::string& path) {
  return model_from_json(read_json_file(path));
}

CalibrationConfig calibration_from_json(const json& j) {
  CalibrationConfig config;
  config.n_theta = j.at("n_theta").get<Eigen::Index>();
  config.batch_size = j.at("batch_size").get<Eigen::Index>();
  config.bandwidth = j.at("bandwidth").get<double>();
  config.seed = j.value("seed", std::uint64_t{0});
  config.max_parallel = j.value("max_parallel", 0);
  if (config.n_theta < 1) throw ConfigError("calibration config: n_theta must be >= 1");
  if (config.batch_size < 1) throw ConfigError("calibration config: batch_size must be >= 1");
  if (!(config.bandwidth > 0.0)) throw ConfigError("calibration config: bandwidth must be > 0");
  return config;
}

CalibrationConfig read_calibration_config(const std::string& path) {
  return calibration_from_json(read_json_file(path));
}

MhConfig mh_from_json(const json& j) {
  MhConfig config;
  config.n_iter = j.value("n_iter", Eigen::Index{40000});
  config.burn_in = j.value("burn_in", Eigen::Index{5000});
  config.step_sd = j.value("step_sd", 0.1);
  config.seed = j.value("seed", std::uint64_t{0});
  std::vector<double> init = j.value("init", std::vector<double>{0.0, 0.0});
  config.init = Eigen::Map<const Vector>(init.data(), static_cast<Eigen::Index>(init.size()));
  if (config.burn_in < 0 || config.burn_in >= config.n_iter) {
    throw ConfigError("mh config: burn_in must be smaller than n_iter");
  }
  if (!(config.step_sd > 0.0)) throw ConfigError("mh config: step_sd must be > 0");
  return config;
}

ParsedMhConfig read_mh_config(const std::string& path) {
  const json j = read_json_file(path);
  return {mh_from_json(j), j.value("tune", false)};
}

json read_json_file(const std::string& path) {
  std::ifstream in = open_in(path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

void write_text_atomic(const std::string& text, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out = open_out(tmp);
    out << text;
    if (!out) throw IoError("write failed: " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed: " + path + " (" + ec.message() + ")");
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
  const json j = {{"command", manifest.command},
                  {"config_hash", manifest.config_hash},
                  {"seed", manifest.seed},
                  {"artifacts", manifest.artifacts},
                  {"wall_clock_seconds", manifest.wall_clock_seconds},
                  {"library_version", manifest.library_version}};
  write_text_atomic(j.dump(2) + "\n", path);
}

}  // namespace pseudopost
