#include "pseudopost/reference_mcmc.hpp"

#include <algorithm>
#include <cmath>

namespace pseudopost {

namespace {
constexpr double kLogTwoPi = 1.8378770664093454836;
}

double toy_log_prior(const Vector& theta, double prior_sd) {
  if (theta.size() != 2) throw DimensionMismatch("toy_log_prior: parameter must have dimension 2");
  const double var = prior_sd * prior_sd;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    acc += -0.5 * std::log(2.0 * M_PI * var) - theta[k] * theta[k] / (2.0 * var);
  }
  return acc;
}

double toy_log_likelihood(const Vector& theta, const Dataset& data) {
  if (theta.size() != 2) {
    throw DimensionMismatch("toy_log_likelihood: parameter must have dimension 2");
  }
  if (data.dim() != 1) {
    throw DimensionMismatch("toy_log_likelihood: dataset must have one covariate");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double x = data.xs(i, 0);
    if (!(x > 0.0)) {
      throw NonPositiveCovariate("toy_log_likelihood: covariates must be positive");
    }
    const double mean = theta[1] * std::log(x) + theta[0] * x;
    const double gap = data.ys[i] - mean;
    acc += -0.5 * kLogTwoPi - 0.5 * gap * gap;
  }
  return acc;
}

ToyPosterior::ToyPosterior(const Dataset& data, double prior_sd)
    : x_(data.xs.col(0)), lnx_(data.xs.col(0).array().log()), y_(data.ys), prior_sd_(prior_sd) {
  if (data.dim() != 1) {
    throw DimensionMismatch("toy posterior: dataset must have one covariate");
  }
  if (!(data.xs.col(0).minCoeff() > 0.0)) {
    throw NonPositiveCovariate("toy posterior: covariates must be positive");
  }
}

double ToyPosterior::operator()(const Vector& theta) const {
  if (theta.size() != 2) throw DimensionMismatch("toy posterior: parameter must have dimension 2");
  const double n = static_cast<double>(y_.size());
  const double rss = (y_ - theta[1] * lnx_ - theta[0] * x_).squaredNorm();
  return toy_log_prior(theta, prior_sd_) - 0.5 * n * kLogTwoPi - 0.5 * rss;
}

Chain rwmh(const LogTargetFn& log_target, const MhConfig& config) {
  if (config.init.size() < 1) throw ConfigError("rwmh: init point required");
  if (!(config.step_sd > 0.0)) throw ConfigError("rwmh: step_sd must be positive");
  if (config.burn_in < 0 || config.burn_in >= config.n_iter) {
    throw ConfigError("rwmh: burn_in must be smaller than n_iter");
  }

  const Eigen::Index dim = config.init.size();
  const Eigen::Index kept = config.n_iter - config.burn_in;

  double current_lt = log_target(config.init);
  if (!std::isfinite(current_lt)) {
    throw NonFiniteValue("rwmh: log target not finite at the initial point");
  }

  Chain chain;
  chain.samples.resize(kept, dim);
  chain.log_target_trace.resize(kept);
  chain.accepted.resize(static_cast<std::size_t>(kept), 0);

  RngStream stream = RngStream::substream(config.seed, stream_domain::kMcmc);
  Vector current = config.init;
  Eigen::Index accepted_total = 0;

  for (Eigen::Index it = 0; it < config.n_iter; ++it) {
    const Vector proposal = current + config.step_sd * stream.normal_vector(dim);
    const double proposal_lt = log_target(proposal);
    // Symmetric proposal: accept iff log u < delta. A -inf proposal target is
    // always rejected; delta >= 0 is always accepted.
    const double u = stream.uniform01();
    const bool accept = std::isfinite(proposal_lt) && std::log(u) < proposal_lt - current_lt;
    if (accept) {
      current = proposal;
      current_lt = proposal_lt;
      ++accepted_total;
    }
    if (it >= config.burn_in) {
      const Eigen::Index row = it - config.burn_in;
      chain.samples.row(row) = current.transpose();
      chain.log_target_trace[row] = current_lt;
      chain.accepted[static_cast<std::size_t>(row)] = accept ? 1 : 0;
    }
  }
  chain.acceptance_rate =
      static_cast<double>(accepted_total) / static_cast<double>(config.n_iter);
  return chain;
}

double tune_step_sd(const LogTargetFn& log_target, const MhConfig& config, double accept_lo,
                    double accept_hi) {
  double step = config.step_sd;
  for (int round = 0; round < 24; ++round) {
    MhConfig pilot = config;
    pilot.n_iter = 600;
    pilot.burn_in = 100;
    pilot.step_sd = step;
    pilot.seed = mix_key(config.seed, 0xF17A + static_cast<std::uint64_t>(round));
    const double acc = rwmh(log_target, pilot).acceptance_rate;
    if (acc >= accept_lo && acc <= accept_hi) return step;
    step *= acc > accept_hi ? 2.0 : 0.5;
  }
  return step;
}

ChainSummary chain_summary(const Chain& chain) {
  const Eigen::Index n = chain.samples.rows();
  if (n < 1) throw EmptyChain("chain_summary: empty chain");
  const Eigen::Index dim = chain.samples.cols();

  ChainSummary summary;
  summary.mean = chain.samples.colwise().mean();
  const Matrix centered = chain.samples.rowwise() - summary.mean.transpose();
  summary.cov = n > 1 ? Matrix(centered.transpose() * centered / static_cast<double>(n - 1))
                      : Matrix(Matrix::Zero(dim, dim));

  summary.quantile_levels.resize(7);
  summary.quantile_levels << 0.005, 0.025, 0.25, 0.5, 0.75, 0.975, 0.995;
  summary.quantiles.resize(dim, summary.quantile_levels.size());
  std::vector<double> sorted(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < dim; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) sorted[static_cast<std::size_t>(i)] = chain.samples(i, k);
    std::sort(sorted.begin(), sorted.end());
    for (Eigen::Index q = 0; q < summary.quantile_levels.size(); ++q) {
      const double pos = summary.quantile_levels[q] * static_cast<double>(n - 1);
      const auto lo = static_cast<Eigen::Index>(std::floor(pos));
      const auto hi = std::min(lo + 1, n - 1);
      const double frac = pos - static_cast<double>(lo);
      summary.quantiles(k, q) = (1.0 - frac) * sorted[static_cast<std::size_t>(lo)] +
                                frac * sorted[static_cast<std::size_t>(hi)];
    }
  }
  return summary;
}

}  // namespace pseudopost
