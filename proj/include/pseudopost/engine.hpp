#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pseudopost/simulators.hpp"

namespace pseudopost {

// Reproducibility contract for one calibration run.
struct CalibrationConfig {
  Eigen::Index n_theta = 1;     // number of parameter draws
  Eigen::Index batch_size = 1;  // simulated pairs per draw
  double bandwidth = 1.0;       // kernel scale applied to batch residual means
  std::uint64_t seed = 0;
  int max_parallel = 0;         // hint; 0 resolves from env / hardware
};

// Self-normalized weighted parameter sample. Row j of `thetas` carries the
// j-th prior draw; weights sum to one.
struct WeightedParticleSet {
  Matrix thetas;             // n_theta x p
  Vector batch_residuals;    // R_j
  Vector log_unnorm_weights; // -R_j^2 / (2 tau^2)
  Vector weights;            // normalized
  CalibrationConfig config;
  bool degenerate_weights = false;  // every unnormalized weight underflowed

  Eigen::Index size() const { return weights.size(); }
};

struct SummaryEntry {
  double target_mean = 0.0;
  double bandwidth = 1.0;
};
using SummarySpec = std::vector<SummaryEntry>;

// Mean residual of a simulated batch under `fit`.
double batch_residual(const SurrogateFit& fit, const std::vector<std::pair<Vector, double>>& batch);

// -r^2 / (2 tau^2)
double kernel_log_weight(double r, double tau);

// Normalizes log weights through log-sum-exp; invariant to adding a constant.
Vector self_normalize(const Vector& log_weights);

// Draws n_theta parameters, simulates a fresh batch per draw, and weights by
// the Gaussian kernel on the batch residual mean. Output depends only on
// (model, fit, config), never on the parallel schedule.
WeightedParticleSet run_calibration(const SimulatorModel& model, const SurrogateFit& fit,
                                    const CalibrationConfig& config);

// Weighted expectation sum_j w_j h(theta_j).
double expectation(const WeightedParticleSet& ps, const std::function<double(const Vector&)>& h);

// 1 / sum_j w_j^2, in [1, n_theta].
double effective_sample_size(const WeightedParticleSet& ps);

// Sum over summaries k of -(mean_k - target_k)^2 / (2 tau_k^2).
double multi_summary_log_weight(const Vector& batch_means, const SummarySpec& spec);

}  // namespace pseudopost
