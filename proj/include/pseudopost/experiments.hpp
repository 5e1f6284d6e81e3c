#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pseudopost/engine.hpp"
#include "pseudopost/population.hpp"
#include "pseudopost/reference_mcmc.hpp"

namespace pseudopost {

// Column-oriented numeric table for plot-ready export.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;  // one vector per column

  void add_column(const std::string& name, std::vector<double> values);
};

// Everything a study produced: configs and seeds in `inputs`, named scalars in
// `metrics`, raw numbers in `tables`, and the auditable verdicts in
// `pass_flags` (each one recomputable from the tables).
struct ExperimentReport {
  std::string name;
  nlohmann::json inputs;
  std::map<std::string, double> metrics;
  std::map<std::string, Table> tables;
  std::map<std::string, bool> pass_flags;

  bool all_passed() const;
};

// Reference model instances used across the population-level studies.
// Homoscedastic: p = d = 1, residual mean theta - 0.5 and unit residual
// variance under the analytic projection limit at theta_true = 0.5.
LinearGaussianModel make_homoscedastic_study_model();
// Heteroscedastic: residual mean theta and residual variance exp(0.5 theta)
// under the projection limit at theta_true = 0.
LinearGaussianModel make_heteroscedastic_study_model();
double homoscedastic_theta_true();
double heteroscedastic_theta_true();

struct ToyExperimentOptions {
  std::uint64_t seed = 20240501;
  Vector theta_true;                 // defaults to (2, 2)
  Eigen::Index n_obs = 200;
  Eigen::Index n_theta = 50000;
  Eigen::Index batch_size = 50;
  double tau_override = 0.0;         // <= 0 picks the pilot bandwidth
  Eigen::Index mh_iters = 40000;
  Eigen::Index mh_burn_in = 5000;
  Eigen::Index pilot_draws = 200;
  Eigen::Index scan_sims = 500;      // pairs per moment estimate
  Eigen::Index prior_baseline = 2000;
  double mode_ball_radius = 1.0;
  int max_parallel = 0;
};

// End-to-end nonlinear-model study: observed data at theta_true, one OLS
// projection, kernel-weighted calibration, and an exact-posterior random-walk
// reference. Reports manifold, mode-coverage and spread diagnostics.
ExperimentReport toy_experiment(const ToyExperimentOptions& opts);

struct TwoStageOptions {
  std::uint64_t seed = 7071;
  std::vector<Eigen::Index> n_theta_grid{1000, 10000, 100000};
  std::vector<Eigen::Index> batch_grid{1, 10, 100, 1000};
  Eigen::Index batch_for_n_axis = 10;
  double tau = 1.0;
  double h_threshold = 1.0;  // h = 1{theta > h_threshold}
  Eigen::Index replications = 20;
  Eigen::Index quad_points = 4000;
  int max_parallel = 0;
};

// Convergence along both axes: the empirical functional toward its fixed
// batch-size population value as n_theta grows, and the population value
// toward its infinite-batch limit, with the explicit rate bound checked at
// every batch size.
ExperimentReport two_stage_study(const TwoStageOptions& opts);

struct StabilityOptions {
  std::uint64_t seed = 90210;
  std::vector<Eigen::Index> n_obs_grid{50, 200, 2000, 20000};
  Eigen::Index replications = 20;
  Eigen::Index n_theta = 20000;
  Eigen::Index batch_size = 10;
  double tau = 0.5;
  double h_threshold = 1.0;
  int max_parallel = 0;
};

// Swaps the estimated projection for its analytic limit under matched
// simulation seeds and tracks how the functional difference shrinks with the
// observed sample size.
ExperimentReport stability_study(const StabilityOptions& opts);

struct ConcentrationOptions {
  std::uint64_t seed = 11235;
  Eigen::Index schedule_len = 8;       // step k uses batch 4^k, bandwidth 2^{-k/2}
  // Explicit (batch, bandwidth) schedule; overrides schedule_len when set.
  // Must have strictly increasing batch * bandwidth^2.
  std::vector<std::pair<Eigen::Index, double>> schedule;
  double epsilon = 0.0324;             // target set {mu^2 < epsilon}
  double fixed_tau = 0.5;              // control bandwidth
  Eigen::Index n_theta = 100000;
  Eigen::Index quad_points = 8000;
  int max_parallel = 0;
};

// Mass of the low-discrepancy set along a batch/bandwidth schedule, by
// quadrature and by simulation, against a fixed-bandwidth control.
ExperimentReport concentration_study(const ConcentrationOptions& opts);

struct NonUnbiasednessOptions {
  std::uint64_t seed = 314159;
  Eigen::Index m_small = 1;
  Eigen::Index m_large = 10000;
  double tau = 1.0;
  double quad_tolerance = 1e-4;
  Eigen::Index quad_points = 4000;
  bool zero_variance_variant = false;  // replaces the model with a v == 0 one
};

// Exhibits a half-space indicator whose finite-batch functional differs from
// the infinite-batch one, and shows the gap vanish at large batch size.
ExperimentReport nonunbiasedness_check(const NonUnbiasednessOptions& opts);

}  // namespace pseudopost
