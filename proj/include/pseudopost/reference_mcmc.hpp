#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pseudopost/rng.hpp"
#include "pseudopost/surrogate.hpp"

namespace pseudopost {

struct MhConfig {
  Eigen::Index n_iter = 40000;
  Eigen::Index burn_in = 5000;
  double step_sd = 0.1;
  Vector init;  // chain start, e.g. the prior mean
  std::uint64_t seed = 0;
};

// Post-burn-in samples of a single random-walk chain.
struct Chain {
  Matrix samples;                      // (n_iter - burn_in) x p
  Vector log_target_trace;             // log target at each kept sample
  std::vector<std::uint8_t> accepted;  // per kept iteration
  double acceptance_rate = 0.0;        // over all n_iter proposals
};

// N(0, prior_sd^2 I) log density.
double toy_log_prior(const Vector& theta, double prior_sd = 5.0);

// sum_i log N(y_i | theta_1 log x_i + theta_0 x_i, 1); requires all x_i > 0.
double toy_log_likelihood(const Vector& theta, const Dataset& data);

// Log posterior of the toy model with data-derived vectors cached, so one
// evaluation costs a few length-n dot products instead of n log calls.
class ToyPosterior {
 public:
  explicit ToyPosterior(const Dataset& data, double prior_sd = 5.0);
  double operator()(const Vector& theta) const;

 private:
  Vector x_, lnx_, y_;
  double prior_sd_;
};

using LogTargetFn = std::function<double(const Vector&)>;

// Random-walk Metropolis-Hastings with isotropic Gaussian proposals of
// standard deviation step_sd; accepts with probability min(1, exp(delta)).
Chain rwmh(const LogTargetFn& log_target, const MhConfig& config);

// Pilot-run step-size search targeting an acceptance rate in [lo, hi].
double tune_step_sd(const LogTargetFn& log_target, const MhConfig& config,
                    double accept_lo = 0.2, double accept_hi = 0.4);

struct ChainSummary {
  Vector mean;
  Matrix cov;
  Vector quantile_levels;
  Matrix quantiles;  // p x levels
};

ChainSummary chain_summary(const Chain& chain);

}  // namespace pseudopost
