#pragma once

#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "pseudopost/rng.hpp"
#include "pseudopost/surrogate.hpp"

namespace pseudopost {

// Mean and variance of the residual Y - beta'(1, X) at a fixed parameter.
struct MomentProfile {
  double mu = 0.0;
  double v = 0.0;
};

// Forward simulator: a prior over parameters plus a conditional (X, Y)
// sampler. Implementations are immutable after construction and deterministic
// given (theta, stream state), so draws can run concurrently.
class SimulatorModel {
 public:
  virtual ~SimulatorModel() = default;

  virtual Eigen::Index param_dim() const = 0;
  virtual Eigen::Index covariate_dim() const = 0;

  // One independent draw from the prior.
  virtual Vector draw_prior(RngStream& stream) const = 0;

  // One (x, y) pair from p(x|theta) p(y|x,theta).
  virtual std::pair<Vector, double> simulate_pair(const Vector& theta, RngStream& stream) const = 0;

  // Mean residual over a fresh batch of `batch_size` pairs. The default draws
  // every pair from its own member substream; models with a tractable
  // batch-mean law may sample it directly.
  virtual double sample_batch_residual(const SurrogateFit& fit, const Vector& theta,
                                       Eigen::Index batch_size, const StreamFamily& streams) const;
};

// Batch residual mean by explicit pair simulation, one substream per pair.
// Kept as a free function so estimators that must not rely on any model
// shortcut can call it directly.
double pairwise_batch_residual(const SimulatorModel& model, const SurrogateFit& fit,
                               const Vector& theta, Eigen::Index batch_size,
                               const StreamFamily& streams);

// Two-parameter nonlinear model:
//   theta ~ N(0, prior_sd^2 I_2)
//   log X | theta ~ N(theta_1 / logx_mean_div, logx_sd^2)   (so X > 0 a.s.)
//   Y | X, theta ~ N(theta_1 log X + theta_0 X, noise_sd^2)
class ToyModel final : public SimulatorModel {
 public:
  double prior_sd = 5.0;
  double logx_sd = 0.5;
  double noise_sd = 1.0;
  double logx_mean_div = 5.0;

  ToyModel() = default;
  ToyModel(double prior_sd_in, double logx_sd_in, double noise_sd_in, double logx_mean_div_in = 5.0);

  Eigen::Index param_dim() const override { return 2; }
  Eigen::Index covariate_dim() const override { return 1; }
  Vector draw_prior(RngStream& stream) const override;
  std::pair<Vector, double> simulate_pair(const Vector& theta, RngStream& stream) const override;
};

// theta_1 * log(x) + theta_0 * x; throws NonPositiveCovariate for x <= 0.
double conditional_mean_toy(const Vector& theta, double x);

// Analytic oracle model with closed-form residual moments:
//   theta ~ N(0, prior_sd^2 I_p)
//   X ~ N(x_mean, x_cov)
//   Y = a'theta + b + x_slope'X + eps,
//   eps ~ N(0, noise_sd^2 * exp(noise_log_var_slope'theta)).
class LinearGaussianModel final : public SimulatorModel {
 public:
  Vector a;                   // p
  double b = 0.0;
  Vector x_slope;             // d
  Vector x_mean;              // d
  Matrix x_cov;               // d x d, symmetric PSD
  double noise_sd = 1.0;
  Vector noise_log_var_slope; // p; zero means homoscedastic
  double prior_sd = 1.0;

  LinearGaussianModel(Vector a_in, double b_in, Vector x_slope_in, Vector x_mean_in,
                      Matrix x_cov_in, double noise_sd_in, Vector noise_log_var_slope_in,
                      double prior_sd_in);

  Eigen::Index param_dim() const override { return a.size(); }
  Eigen::Index covariate_dim() const override { return x_mean.size(); }
  Vector draw_prior(RngStream& stream) const override;
  std::pair<Vector, double> simulate_pair(const Vector& theta, RngStream& stream) const override;

  // The batch mean of residuals is exactly Gaussian here, so it is sampled in
  // one draw from its own law instead of simulating batch_size pairs.
  double sample_batch_residual(const SurrogateFit& fit, const Vector& theta,
                               Eigen::Index batch_size, const StreamFamily& streams) const override;

  double noise_variance(const Vector& theta) const;
  const Matrix& x_cov_sqrt() const { return x_cov_sqrt_; }

 private:
  Matrix x_cov_sqrt_;  // factor S with S S' = x_cov
};

// Exact residual mean and variance of the linear-Gaussian model under `fit`.
MomentProfile analytic_mu_v(const LinearGaussianModel& model, const Vector& theta,
                            const SurrogateFit& fit);

// Probability limit of the OLS fit when observations are generated at
// theta_true: slopes equal x_slope, intercept a'theta_true + b.
SurrogateFit analytic_beta_limit(const LinearGaussianModel& model, const Vector& theta_true);

// n_obs independent pairs at theta_true, drawn sequentially from `stream`.
Dataset generate_observed(const SimulatorModel& model, const Vector& theta_true,
                          Eigen::Index n_obs, RngStream& stream);

}  // namespace pseudopost
