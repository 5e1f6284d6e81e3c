// Command-line front end: dataset generation, surrogate fitting, calibration
// runs, the exact-posterior reference chain, and the scripted studies.
//
// Exit codes: 0 success, 1 study pass-flag failure, 2 usage/config error,
// 3 I/O failure, 4 numerically degenerate design.

#include <chrono>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pseudopost/engine.hpp"
#include "pseudopost/experiments.hpp"
#include "pseudopost/io.hpp"
#include "pseudopost/reference_mcmc.hpp"

namespace pp = pseudopost;
using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 0;
};

double elapsed_seconds(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void emit_manifest(const std::string& command, const json& effective_config, std::uint64_t seed,
                   std::vector<std::string> artifacts, double wall_clock,
                   const std::string& path) {
  pp::RunManifest manifest;
  manifest.command = command;
  manifest.config_hash = pp::fnv1a64(effective_config.dump());
  manifest.seed = seed;
  manifest.artifacts = std::move(artifacts);
  manifest.wall_clock_seconds = wall_clock;
  manifest.library_version = pp::kLibraryVersion;
  pp::write_manifest(manifest, path);
}

int cmd_simulate(const CommonFlags& flags) {
  const auto start = std::chrono::steady_clock::now();
  json config = pp::read_json_file(flags.config_path);
  if (flags.seed_given) config["seed"] = flags.seed;
  pp::ParsedModelConfig parsed = pp::model_from_json(config);
  if (parsed.n_obs < 1) throw pp::ConfigError("simulate: n_obs must be at least 1");

  pp::RngStream stream = pp::RngStream::substream(parsed.seed, pp::stream_domain::kObserved);
  const pp::Dataset data =
      generate_observed(*parsed.model, parsed.theta_true, parsed.n_obs, stream);
  pp::write_dataset_csv(data, flags.out_path);

  emit_manifest("simulate", config, parsed.seed, {flags.out_path}, elapsed_seconds(start),
                flags.out_path + ".manifest.json");
  std::cout << "wrote " << data.n() << " observations to " << flags.out_path << "\n";
  return 0;
}

int cmd_fit(const std::string& data_path, const std::string& out_path) {
  const auto start = std::chrono::steady_clock::now();
  const pp::Dataset data = pp::read_dataset_csv(data_path);
  const pp::SurrogateFit fit = pp::fit_ols(data);
  pp::write_fit_json(fit, out_path);

  emit_manifest("fit", {{"data", data_path}}, 0, {out_path}, elapsed_seconds(start),
                out_path + ".manifest.json");
  std::cout << "beta =";
  for (Eigen::Index k = 0; k < fit.beta.size(); ++k) std::cout << " " << fit.beta[k];
  std::cout << "\n";
  return 0;
}

int cmd_calibrate(const std::string& fit_path, const std::string& model_path,
                  const std::string& calib_path, const CommonFlags& flags) {
  const auto start = std::chrono::steady_clock::now();
  const pp::SurrogateFit fit = pp::read_fit_json(fit_path);
  const json model_json = pp::read_json_file(model_path);
  pp::ParsedModelConfig parsed = pp::model_from_json(model_json);

  json calib_json = pp::read_json_file(calib_path);
  if (flags.seed_given) calib_json["seed"] = flags.seed;
  if (flags.threads > 0) calib_json["max_parallel"] = flags.threads;
  const pp::CalibrationConfig config = pp::calibration_from_json(calib_json);

  const pp::WeightedParticleSet ps = pp::run_calibration(*parsed.model, fit, config);
  const std::string json_path = flags.out_path + ".json";
  const std::string csv_path = flags.out_path + ".csv";
  pp::write_particles_json(ps, json_path);
  pp::write_particles_csv(ps, csv_path);

  json hashed_calib = calib_json;
  hashed_calib.erase("max_parallel");  // scheduling hint, never affects output
  const json effective = {{"fit", pp::fit_to_json(fit)},
                          {"model", model_json},
                          {"calibration", hashed_calib}};
  emit_manifest("calibrate", effective, config.seed, {json_path, csv_path},
                elapsed_seconds(start), flags.out_path + ".manifest.json");
  std::cout << "ess=" << pp::format_double(pp::effective_sample_size(ps))
            << " degenerate_weights=" << (ps.degenerate_weights ? 1 : 0) << "\n";
  return 0;
}

int cmd_reference(const std::string& data_path, const std::string& mh_path,
                  const CommonFlags& flags) {
  const auto start = std::chrono::steady_clock::now();
  const pp::Dataset data = pp::read_dataset_csv(data_path);

  json mh_json = pp::read_json_file(mh_path);
  if (flags.seed_given) mh_json["seed"] = flags.seed;
  pp::ParsedMhConfig parsed{pp::mh_from_json(mh_json), mh_json.value("tune", false)};

  const pp::ToyPosterior target(data);
  if (parsed.tune) parsed.config.step_sd = pp::tune_step_sd(target, parsed.config);
  const pp::Chain chain = pp::rwmh(target, parsed.config);

  const std::string csv_path = flags.out_path + ".csv";
  const std::string summary_path = flags.out_path + "_summary.json";
  pp::write_chain_csv(chain, csv_path);
  {
    std::ofstream out(summary_path);
    if (!out) throw pp::IoError("cannot open for writing: " + summary_path);
    out << pp::chain_summary_to_json(pp::chain_summary(chain), chain.acceptance_rate).dump(2)
        << "\n";
  }

  const json effective = {{"data", data_path}, {"mh", mh_json}};
  emit_manifest("reference", effective, parsed.config.seed, {csv_path, summary_path},
                elapsed_seconds(start), flags.out_path + ".manifest.json");
  std::cout << "kept " << chain.samples.rows()
            << " samples, acceptance_rate=" << pp::format_double(chain.acceptance_rate) << "\n";
  return 0;
}

struct ExperimentFlags {
  std::string name;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_given = false;
  double tau = 0.0;
  bool tau_given = false;
  Eigen::Index n_theta = 0;
  Eigen::Index batch_size = 0;
  Eigen::Index n_obs = 0;
  Eigen::Index reps = 0;
  int threads = 0;
};

int cmd_experiment(const ExperimentFlags& flags) {
  const auto start = std::chrono::steady_clock::now();
  pp::ExperimentReport report;
  if (flags.name == "toy") {
    pp::ToyExperimentOptions opts;
    if (flags.seed_given) opts.seed = flags.seed;
    if (flags.tau_given) opts.tau_override = flags.tau;
    if (flags.n_theta > 0) opts.n_theta = flags.n_theta;
    if (flags.batch_size > 0) opts.batch_size = flags.batch_size;
    if (flags.n_obs > 0) opts.n_obs = flags.n_obs;
    opts.max_parallel = flags.threads;
    report = pp::toy_experiment(opts);
  } else if (flags.name == "two-stage") {
    pp::TwoStageOptions opts;
    if (flags.seed_given) opts.seed = flags.seed;
    if (flags.tau_given) opts.tau = flags.tau;
    if (flags.reps > 0) opts.replications = flags.reps;
    opts.max_parallel = flags.threads;
    report = pp::two_stage_study(opts);
  } else if (flags.name == "stability") {
    pp::StabilityOptions opts;
    if (flags.seed_given) opts.seed = flags.seed;
    if (flags.tau_given) opts.tau = flags.tau;
    if (flags.n_theta > 0) opts.n_theta = flags.n_theta;
    if (flags.batch_size > 0) opts.batch_size = flags.batch_size;
    if (flags.reps > 0) opts.replications = flags.reps;
    opts.max_parallel = flags.threads;
    report = pp::stability_study(opts);
  } else if (flags.name == "concentration") {
    pp::ConcentrationOptions opts;
    if (flags.seed_given) opts.seed = flags.seed;
    if (flags.n_theta > 0) opts.n_theta = flags.n_theta;
    opts.max_parallel = flags.threads;
    report = pp::concentration_study(opts);
  } else if (flags.name == "nonunbiasedness") {
    pp::NonUnbiasednessOptions opts;
    if (flags.seed_given) opts.seed = flags.seed;
    if (flags.tau_given) opts.tau = flags.tau;
    report = pp::nonunbiasedness_check(opts);
  } else {
    throw pp::ConfigError("unknown experiment '" + flags.name +
                          "'; expected toy, two-stage, stability, concentration or "
                          "nonunbiasedness");
  }

  pp::write_report(report, flags.out_dir);
  emit_manifest("experiment " + flags.name, report.inputs,
                report.inputs.value("seed", std::uint64_t{0}),
                {flags.out_dir + "/" + report.name + "_report.json"}, elapsed_seconds(start),
                flags.out_dir + "/" + report.name + "_manifest.json");

  for (const auto& [key, ok] : report.pass_flags) {
    std::cout << key << "=" << (ok ? "pass" : "FAIL") << "\n";
  }
  return report.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regression-projection pseudo-posterior toolkit"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string data_path, fit_path, model_path, calib_path, mh_path;
  ExperimentFlags exp_flags;

  auto* simulate = app.add_subcommand("simulate", "Generate an observed dataset CSV");
  simulate->add_option("--config", flags.config_path, "Model config JSON")->required();
  simulate->add_option("--out", flags.out_path, "Output CSV path")->required();
  auto* sim_seed = simulate->add_option("--seed", flags.seed, "Seed override");

  auto* fit = app.add_subcommand("fit", "Fit the least-squares projection");
  fit->add_option("--data", data_path, "Dataset CSV")->required();
  fit->add_option("--out", flags.out_path, "Output fit JSON")->required();

  auto* calibrate = app.add_subcommand("calibrate", "Run a kernel-weighted calibration");
  calibrate->add_option("--fit", fit_path, "Fit JSON")->required();
  calibrate->add_option("--model", model_path, "Model config JSON")->required();
  calibrate->add_option("--calib", calib_path, "Calibration config JSON")->required();
  calibrate->add_option("--out", flags.out_path, "Output path prefix")->required();
  auto* cal_seed = calibrate->add_option("--seed", flags.seed, "Seed override");
  calibrate->add_option("--threads", flags.threads, "Worker thread hint");

  auto* reference = app.add_subcommand("reference", "Random-walk reference chain (toy model)");
  reference->add_option("--data", data_path, "Dataset CSV")->required();
  reference->add_option("--mh", mh_path, "Chain config JSON")->required();
  reference->add_option("--out", flags.out_path, "Output path prefix")->required();
  auto* ref_seed = reference->add_option("--seed", flags.seed, "Seed override");

  auto* experiment = app.add_subcommand("experiment", "Run a scripted study");
  experiment->add_option("name", exp_flags.name, "Study name")->required();
  experiment->add_option("--out", exp_flags.out_dir, "Output directory");
  auto* exp_seed = experiment->add_option("--seed", exp_flags.seed, "Seed override");
  auto* exp_tau = experiment->add_option("--tau", exp_flags.tau, "Bandwidth override");
  experiment->add_option("--n-theta", exp_flags.n_theta, "Parameter draw count");
  experiment->add_option("--batch-size", exp_flags.batch_size, "Simulated pairs per draw");
  experiment->add_option("--n-obs", exp_flags.n_obs, "Observed sample size");
  experiment->add_option("--reps", exp_flags.reps, "Replication count");
  experiment->add_option("--threads", exp_flags.threads, "Worker thread hint");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  flags.seed_given = sim_seed->count() > 0 || cal_seed->count() > 0 || ref_seed->count() > 0;
  exp_flags.seed_given = exp_seed->count() > 0;
  exp_flags.tau_given = exp_tau->count() > 0;

  try {
    if (simulate->parsed()) return cmd_simulate(flags);
    if (fit->parsed()) return cmd_fit(data_path, flags.out_path);
    if (calibrate->parsed()) return cmd_calibrate(fit_path, model_path, calib_path, flags);
    if (reference->parsed()) return cmd_reference(data_path, mh_path, flags);
    if (experiment->parsed()) return cmd_experiment(exp_flags);
  } catch (const pp::SingularDesign& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const pp::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
