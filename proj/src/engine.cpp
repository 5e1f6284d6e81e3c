#include "pseudopost/engine.hpp"

#include <cfloat>
#include <cmath>

#include "pseudopost/parallel.hpp"

namespace pseudopost {

namespace {

// Neumaier-compensated sum; keeps normalization tight for large n.
double compensated_sum(const Vector& values) {
  double sum = 0.0;
  double comp = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double v = values[i];
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

void validate(const CalibrationConfig& config) {
  if (config.n_theta < 1) throw ConfigError("calibration: n_theta must be at least 1");
  if (config.batch_size < 1) throw ConfigError("calibration: batch_size must be at least 1");
  if (!(config.bandwidth > 0.0)) {
    throw NonPositiveBandwidth("calibration: bandwidth must be positive");
  }
}

}  // namespace

double batch_residual(const SurrogateFit& fit,
                      const std::vector<std::pair<Vector, double>>& batch) {
  if (batch.empty()) throw EmptyBatch("batch_residual: empty batch");
  double sum = 0.0;
  for (const auto& [x, y] : batch) sum += residual(fit, x, y);
  return sum / static_cast<double>(batch.size());
}

double kernel_log_weight(double r, double tau) {
  if (!(tau > 0.0)) throw NonPositiveBandwidth("kernel_log_weight: bandwidth must be positive");
  return -(r * r) / (2.0 * tau * tau);
}

Vector self_normalize(const Vector& log_weights) {
  if (log_weights.size() == 0) throw EmptyInput("self_normalize: empty input");
  if (!log_weights.allFinite()) throw NonFiniteValue("self_normalize: non-finite log weight");
  const double shift = log_weights.maxCoeff();
  Vector weights = (log_weights.array() - shift).exp();
  weights /= compensated_sum(weights);
  // Second pass scrubs the residual rounding of the first.
  weights /= compensated_sum(weights);
  return weights;
}

WeightedParticleSet run_calibration(const SimulatorModel& model, const SurrogateFit& fit,
                                    const CalibrationConfig& config) {
  validate(config);
  if (fit.covariate_dim() != model.covariate_dim()) {
    throw DimensionMismatch("calibration: fit covariate dimension does not match the model");
  }

  const Eigen::Index n = config.n_theta;
  WeightedParticleSet ps;
  ps.config = config;
  ps.thetas.resize(n, model.param_dim());
  ps.batch_residuals.resize(n);
  ps.log_unnorm_weights.resize(n);

  const int threads = resolve_threads(config.max_parallel);
  parallel_for_index(n, threads, [&](std::int64_t j) {
    const auto ju = static_cast<std::uint64_t>(j);
    RngStream prior_stream = RngStream::substream(config.seed, stream_domain::kPrior, ju);
    const Vector theta = model.draw_prior(prior_stream);
    const StreamFamily batch_streams{config.seed, stream_domain::kBatch, ju};
    const double r = model.sample_batch_residual(fit, theta, config.batch_size, batch_streams);
    ps.thetas.row(j) = theta.transpose();
    ps.batch_residuals[j] = r;
    ps.log_unnorm_weights[j] = kernel_log_weight(r, config.bandwidth);
  });

  // All-underflow is survivable (log-sum-exp still normalizes); flag it.
  ps.degenerate_weights = ps.log_unnorm_weights.maxCoeff() < std::log(DBL_MIN);
  ps.weights = self_normalize(ps.log_unnorm_weights);
  return ps;
}

double expectation(const WeightedParticleSet& ps,
                   const std::function<double(const Vector&)>& h) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < ps.size(); ++j) {
    const double hj = h(ps.thetas.row(j).transpose());
    if (!std::isfinite(hj)) throw NonFiniteValue("expectation: h is not finite at a particle");
    acc += ps.weights[j] * hj;
  }
  return acc;
}

double effective_sample_size(const WeightedParticleSet& ps) {
  return 1.0 / ps.weights.squaredNorm();
}

double multi_summary_log_weight(const Vector& batch_means, const SummarySpec& spec) {
  if (batch_means.size() != static_cast<Eigen::Index>(spec.size())) {
    throw LengthMismatch("multi_summary_log_weight: " + std::to_string(batch_means.size()) +
                         " means for " + std::to_string(spec.size()) + " summaries");
  }
  double acc = 0.0;
  for (Eigen::Index k = 0; k < batch_means.size(); ++k) {
    const auto& entry = spec[static_cast<std::size_t>(k)];
    if (!(entry.bandwidth > 0.0)) {
      throw NonPositiveBandwidth("multi_summary_log_weight: bandwidth must be positive");
    }
    const double gap = batch_means[k] - entry.target_mean;
    acc += -(gap * gap) / (2.0 * entry.bandwidth * entry.bandwidth);
  }
  return acc;
}

}  // namespace pseudopost
