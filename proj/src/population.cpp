#include "pseudopost/population.hpp"

#include <cmath>

#include "pseudopost/engine.hpp"
#include "pseudopost/parallel.hpp"

namespace pseudopost {

double l_m_gaussian(const MomentProfile& profile, Eigen::Index m, double tau) {
  if (!(tau > 0.0)) throw NonPositiveBandwidth("l_m_gaussian: bandwidth must be positive");
  if (m < 1) throw ConfigError("l_m_gaussian: batch size must be at least 1");
  if (profile.v < 0.0) throw ConfigError("l_m_gaussian: negative variance");
  const double s2 = profile.v / static_cast<double>(m);
  const double t2 = tau * tau;
  return std::sqrt(t2 / (t2 + s2)) * std::exp(-(profile.mu * profile.mu) / (2.0 * (t2 + s2)));
}

double l_infinity(double mu, double tau) {
  if (!(tau > 0.0)) throw NonPositiveBandwidth("l_infinity: bandwidth must be positive");
  return std::exp(-(mu * mu) / (2.0 * tau * tau));
}

double uniform_gap_bound(double v_sup, double tau, Eigen::Index m) {
  if (!(tau > 0.0)) throw NonPositiveBandwidth("uniform_gap_bound: bandwidth must be positive");
  if (m < 1) throw ConfigError("uniform_gap_bound: batch size must be at least 1");
  if (v_sup < 0.0) throw ConfigError("uniform_gap_bound: negative variance bound");
  return std::exp(-0.5) * v_sup / (tau * tau * static_cast<double>(m));
}

WeightEstimate mc_weight_estimate(const SimulatorModel& model, const Vector& theta,
                                  const SurrogateFit& fit, Eigen::Index m, double tau,
                                  Eigen::Index n_rep, std::uint64_t seed) {
  if (n_rep < 2) throw ConfigError("mc_weight_estimate: needs at least 2 replications");
  if (!(tau > 0.0)) throw NonPositiveBandwidth("mc_weight_estimate: bandwidth must be positive");
  double mean = 0.0;
  double m2 = 0.0;
  for (Eigen::Index rep = 0; rep < n_rep; ++rep) {
    const StreamFamily streams{seed, stream_domain::kWeightMc, static_cast<std::uint64_t>(rep)};
    const double r = pairwise_batch_residual(model, fit, theta, m, streams);
    const double w = std::exp(kernel_log_weight(r, tau));
    const double delta = w - mean;
    mean += delta / static_cast<double>(rep + 1);
    m2 += delta * (w - mean);
  }
  const double variance = m2 / static_cast<double>(n_rep - 1);
  return {mean, std::sqrt(variance / static_cast<double>(n_rep))};
}

MomentProfile moment_profile_from_residuals(const Vector& residuals) {
  const Eigen::Index n = residuals.size();
  if (n < 2) throw ConfigError("moment profile: needs at least 2 residuals");
  MomentProfile out;
  out.mu = residuals.mean();
  out.v = (residuals.array() - out.mu).square().sum() / static_cast<double>(n - 1);
  return out;
}

MomentProfile estimate_moment_profile(const SimulatorModel& model, const Vector& theta,
                                      const SurrogateFit& fit, Eigen::Index n_sim,
                                      RngStream& stream) {
  if (n_sim < 2) throw ConfigError("estimate_moment_profile: needs at least 2 simulations");
  Vector residuals(n_sim);
  for (Eigen::Index i = 0; i < n_sim; ++i) {
    const auto [x, y] = model.simulate_pair(theta, stream);
    residuals[i] = residual(fit, x, y);
  }
  return moment_profile_from_residuals(residuals);
}

Quadrature gaussian_prior_quadrature(Eigen::Index dim, double prior_sd,
                                     Eigen::Index points_per_dim, double half_width_sds) {
  if (dim < 1 || points_per_dim < 2) {
    throw ConfigError("quadrature: needs dim >= 1 and at least 2 points per dimension");
  }
  if (!(prior_sd > 0.0) || !(half_width_sds > 0.0)) {
    throw ConfigError("quadrature: prior sd and half width must be positive");
  }
  const double half_width = half_width_sds * prior_sd;
  const double cell = 2.0 * half_width / static_cast<double>(points_per_dim);
  Vector axis(points_per_dim);
  for (Eigen::Index i = 0; i < points_per_dim; ++i) {
    axis[i] = -half_width + (static_cast<double>(i) + 0.5) * cell;
  }
  const double log_norm = -0.5 * std::log(2.0 * M_PI * prior_sd * prior_sd);

  Eigen::Index total = 1;
  for (Eigen::Index k = 0; k < dim; ++k) total *= points_per_dim;

  Quadrature quad;
  quad.points.resize(total, dim);
  quad.weights.resize(total);
  std::vector<Eigen::Index> odometer(static_cast<std::size_t>(dim), 0);
  for (Eigen::Index row = 0; row < total; ++row) {
    double log_density = 0.0;
    for (Eigen::Index k = 0; k < dim; ++k) {
      const double t = axis[odometer[static_cast<std::size_t>(k)]];
      quad.points(row, k) = t;
      log_density += log_norm - (t * t) / (2.0 * prior_sd * prior_sd);
    }
    quad.weights[row] = std::exp(log_density) * std::pow(cell, static_cast<double>(dim));
    for (Eigen::Index k = 0; k < dim; ++k) {
      auto& digit = odometer[static_cast<std::size_t>(k)];
      if (++digit < points_per_dim) break;
      digit = 0;
    }
  }
  return quad;
}

double quadrature_normalizer(const Quadrature& quad, const Vector& weight_values) {
  if (weight_values.size() != quad.weights.size()) {
    throw LengthMismatch("quadrature_normalizer: value count does not match grid");
  }
  return (quad.weights.array() * weight_values.array()).sum();
}

double phi_functional(const Quadrature& quad, const Vector& weight_values,
                      const Vector& h_values) {
  if (weight_values.size() != quad.weights.size() || h_values.size() != quad.weights.size()) {
    throw LengthMismatch("phi_functional: value count does not match grid");
  }
  // Same reduction shape for both sums, so h == 1 yields exactly one.
  const double normalizer = (quad.weights.array() * weight_values.array()).sum();
  if (!(normalizer > 0.0)) {
    throw ZeroNormalizer("phi_functional: weight function vanishes on the whole grid");
  }
  const double numerator = (quad.weights.array() * weight_values.array() * h_values.array()).sum();
  return numerator / normalizer;
}

double phi_functional(const Quadrature& quad,
                      const std::function<double(const Vector&)>& weight_fn,
                      const std::function<double(const Vector&)>& h) {
  const Eigen::Index n = quad.weights.size();
  Vector weight_values(n);
  Vector h_values(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector point = quad.points.row(i).transpose();
    weight_values[i] = weight_fn(point);
    h_values[i] = h(point);
  }
  return phi_functional(quad, weight_values, h_values);
}

IdentifiedSetScan scan_identified_set(const SimulatorModel& model, const SurrogateFit& fit,
                                      const Matrix& grid, Eigen::Index n_sim, double tolerance,
                                      std::uint64_t seed, int max_parallel) {
  if (grid.rows() < 1) throw EmptyInput("scan_identified_set: empty grid");
  const Eigen::Index n = grid.rows();

  IdentifiedSetScan scan;
  scan.grid = grid;
  scan.mu_hat.resize(n);
  scan.v_hat.resize(n);
  scan.mu_sq.resize(n);

  const int threads = resolve_threads(max_parallel);
  parallel_for_index(n, threads, [&](std::int64_t i) {
    RngStream stream =
        RngStream::substream(seed, stream_domain::kScan, static_cast<std::uint64_t>(i));
    const MomentProfile profile =
        estimate_moment_profile(model, grid.row(i).transpose(), fit, n_sim, stream);
    scan.mu_hat[i] = profile.mu;
    scan.v_hat[i] = profile.v;
    scan.mu_sq[i] = profile.mu * profile.mu;
  });

  scan.tolerance =
      tolerance >= 0.0 ? tolerance : 9.0 * scan.v_hat.maxCoeff() / static_cast<double>(n_sim);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (scan.mu_sq[i] <= scan.tolerance) scan.members.push_back(i);
  }
  return scan;
}

double laplace_ratio_envelope(const ConcentrationBoundParams& params, double coupling_k) {
  if (!(params.tau > 0.0)) {
    throw NonPositiveBandwidth("laplace_ratio_envelope: bandwidth must be positive");
  }
  if (!(params.eta > 0.0) || params.v_min < 0.0 || params.v_max < params.v_min ||
      params.m < 1) {
    throw ConfigError("laplace_ratio_envelope: invalid bound parameters");
  }
  const double coupling = static_cast<double>(params.m) * params.tau * params.tau;
  if (coupling < coupling_k) {
    throw CouplingViolated("laplace_ratio_envelope: m tau^2 = " + std::to_string(coupling) +
                           " below required " + std::to_string(coupling_k));
  }
  const double spread = params.tau * params.tau + params.v_max / static_cast<double>(params.m);
  return std::exp(-params.eta / (4.0 * spread));
}

}  // namespace pseudopost
