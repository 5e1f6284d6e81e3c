#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pseudopost/simulators.hpp"

namespace pseudopost {

// Expected kernel weight when the batch residual mean is Gaussian with mean
// profile.mu and variance profile.v / m:
//   sqrt(tau^2 / (tau^2 + s^2)) * exp(-mu^2 / (2 (tau^2 + s^2))),  s^2 = v/m.
double l_m_gaussian(const MomentProfile& profile, Eigen::Index m, double tau);

// Zero-simulation-noise limit exp(-mu^2 / (2 tau^2)).
double l_infinity(double mu, double tau);

// Uniform bound e^{-1/2} v_sup / (tau^2 m) on |l_m_gaussian - l_infinity|.
double uniform_gap_bound(double v_sup, double tau, Eigen::Index m);

struct WeightEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

// Monte Carlo estimate of the expected kernel weight at theta: averages
// exp(-R^2 / (2 tau^2)) over n_rep independent batches of m pairs. Always
// simulates pairs explicitly so it stays an independent check on any
// closed-form route.
WeightEstimate mc_weight_estimate(const SimulatorModel& model, const Vector& theta,
                                  const SurrogateFit& fit, Eigen::Index m, double tau,
                                  Eigen::Index n_rep, std::uint64_t seed);

// Sample mean and unbiased sample variance of a residual vector.
MomentProfile moment_profile_from_residuals(const Vector& residuals);

// Estimates (mu, v) at theta from n_sim simulated pairs drawn sequentially.
MomentProfile estimate_moment_profile(const SimulatorModel& model, const Vector& theta,
                                      const SurrogateFit& fit, Eigen::Index n_sim,
                                      RngStream& stream);

// Prior-weighted quadrature over a parameter box: weights hold prior density
// times cell volume (midpoint rule), so sum(weights * f) approximates
// integral of f(theta) p(theta) d theta.
struct Quadrature {
  Matrix points;   // N x p
  Vector weights;  // N
};

// Tensor-product midpoint grid over [-half_width_sds, half_width_sds] prior
// standard deviations per coordinate, with N(0, prior_sd^2 I) density weights.
Quadrature gaussian_prior_quadrature(Eigen::Index dim, double prior_sd,
                                     Eigen::Index points_per_dim, double half_width_sds = 8.0);

// Integral of the weight function against the prior: sum_i w_i L_i.
double quadrature_normalizer(const Quadrature& quad, const Vector& weight_values);

// Quadrature analogue of the weighted posterior functional:
//   sum_i h_i p_i L_i / sum_i p_i L_i.
// Throws ZeroNormalizer when every weight vanishes numerically.
double phi_functional(const Quadrature& quad, const Vector& weight_values, const Vector& h_values);
double phi_functional(const Quadrature& quad,
                      const std::function<double(const Vector&)>& weight_fn,
                      const std::function<double(const Vector&)>& h);

// Grid scan for the set of parameters whose estimated squared residual mean
// sits below tolerance.
struct IdentifiedSetScan {
  Matrix grid;       // N x p
  Vector mu_hat;     // estimated residual means
  Vector v_hat;      // estimated residual variances
  Vector mu_sq;      // mu_hat^2
  double tolerance = 0.0;
  std::vector<Eigen::Index> members;  // indices with mu_sq <= tolerance
};

// Estimates mu at every grid point from n_sim pairs (per-point substreams,
// parallel across points). A negative tolerance selects the default noise
// floor 9 * max_i(v_hat_i) / n_sim, i.e. three standard errors of the mean
// estimator, squared.
IdentifiedSetScan scan_identified_set(const SimulatorModel& model, const SurrogateFit& fit,
                                      const Matrix& grid, Eigen::Index n_sim, double tolerance,
                                      std::uint64_t seed, int max_parallel = 0);

// Inputs for the computable factor of the population mass-ratio bound.
struct ConcentrationBoundParams {
  double eta = 0.0;    // separation gap outside the target neighborhood
  double v_max = 0.0;  // residual-variance upper bound
  double v_min = 0.0;  // residual-variance lower bound
  double tau = 0.0;
  Eigen::Index m = 1;
};

// exp(-eta / (4 (tau^2 + v_max/m))). Requires m tau^2 >= coupling_k; below
// that the prefactor control behind the bound fails, so CouplingViolated is
// thrown.
double laplace_ratio_envelope(const ConcentrationBoundParams& params, double coupling_k = 1.0);

}  // namespace pseudopost
