#include "pseudopost/simulators.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace pseudopost {

double pairwise_batch_residual(const SimulatorModel& model, const SurrogateFit& fit,
                               const Vector& theta, Eigen::Index batch_size,
                               const StreamFamily& streams) {
  if (batch_size < 1) throw EmptyBatch("batch residual: batch size must be at least 1");
  double sum = 0.0;
  for (Eigen::Index m = 0; m < batch_size; ++m) {
    RngStream s = streams.stream(static_cast<std::uint64_t>(m));
    const auto [x, y] = model.simulate_pair(theta, s);
    sum += residual(fit, x, y);
  }
  return sum / static_cast<double>(batch_size);
}

double SimulatorModel::sample_batch_residual(const SurrogateFit& fit, const Vector& theta,
                                             Eigen::Index batch_size,
                                             const StreamFamily& streams) const {
  return pairwise_batch_residual(*this, fit, theta, batch_size, streams);
}

// ---------------------------------------------------------------------------
// ToyModel

ToyModel::ToyModel(double prior_sd_in, double logx_sd_in, double noise_sd_in,
                   double logx_mean_div_in)
    : prior_sd(prior_sd_in),
      logx_sd(logx_sd_in),
      noise_sd(noise_sd_in),
      logx_mean_div(logx_mean_div_in) {
  if (prior_sd < 0.0 || logx_sd < 0.0 || noise_sd < 0.0 || logx_mean_div <= 0.0) {
    throw ConfigError("toy model: scale parameters must be nonnegative, divisor positive");
  }
}

Vector ToyModel::draw_prior(RngStream& stream) const {
  Vector theta(2);
  theta[0] = prior_sd * stream.normal();
  theta[1] = prior_sd * stream.normal();
  return theta;
}

std::pair<Vector, double> ToyModel::simulate_pair(const Vector& theta, RngStream& stream) const {
  if (theta.size() != 2) {
    throw DimensionMismatch("toy model: parameter must have dimension 2");
  }
  const double lnx = theta[1] / logx_mean_div + logx_sd * stream.normal();
  const double x = std::exp(lnx);
  const double y = theta[1] * lnx + theta[0] * x + noise_sd * stream.normal();
  Vector xv(1);
  xv[0] = x;
  return {xv, y};
}

double conditional_mean_toy(const Vector& theta, double x) {
  if (theta.size() != 2) {
    throw DimensionMismatch("conditional_mean_toy: parameter must have dimension 2");
  }
  if (!(x > 0.0)) {
    throw NonPositiveCovariate("conditional_mean_toy: covariate must be positive");
  }
  return theta[1] * std::log(x) + theta[0] * x;
}

// ---------------------------------------------------------------------------
// LinearGaussianModel

namespace {

// Symmetric PSD square root; tolerates semidefinite covariances.
Matrix psd_sqrt(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, eig.eigenvalues().maxCoeff())) {
    throw ConfigError("linear-Gaussian model: covariate covariance is not PSD");
  }
  return eig.eigenvectors() *
         eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace

LinearGaussianModel::LinearGaussianModel(Vector a_in, double b_in, Vector x_slope_in,
                                         Vector x_mean_in, Matrix x_cov_in, double noise_sd_in,
                                         Vector noise_log_var_slope_in, double prior_sd_in)
    : a(std::move(a_in)),
      b(b_in),
      x_slope(std::move(x_slope_in)),
      x_mean(std::move(x_mean_in)),
      x_cov(std::move(x_cov_in)),
      noise_sd(noise_sd_in),
      noise_log_var_slope(std::move(noise_log_var_slope_in)),
      prior_sd(prior_sd_in) {
  const Eigen::Index d = x_mean.size();
  if (x_slope.size() != d || x_cov.rows() != d || x_cov.cols() != d) {
    throw DimensionMismatch("linear-Gaussian model: covariate blocks disagree on dimension");
  }
  if (noise_log_var_slope.size() != a.size()) {
    throw DimensionMismatch("linear-Gaussian model: noise slope must match parameter dimension");
  }
  if (noise_sd < 0.0 || prior_sd < 0.0) {
    throw ConfigError("linear-Gaussian model: standard deviations must be nonnegative");
  }
  x_cov_sqrt_ = psd_sqrt(x_cov);
}

double LinearGaussianModel::noise_variance(const Vector& theta) const {
  return noise_sd * noise_sd * std::exp(noise_log_var_slope.dot(theta));
}

Vector LinearGaussianModel::draw_prior(RngStream& stream) const {
  return prior_sd * stream.normal_vector(a.size());
}

std::pair<Vector, double> LinearGaussianModel::simulate_pair(const Vector& theta,
                                                             RngStream& stream) const {
  if (theta.size() != a.size()) {
    throw DimensionMismatch("linear-Gaussian model: parameter dimension mismatch");
  }
  const Vector x = x_mean + x_cov_sqrt_ * stream.normal_vector(x_mean.size());
  const double eps = std::sqrt(noise_variance(theta)) * stream.normal();
  const double y = a.dot(theta) + b + x_slope.dot(x) + eps;
  return {x, y};
}

double LinearGaussianModel::sample_batch_residual(const SurrogateFit& fit, const Vector& theta,
                                                  Eigen::Index batch_size,
                                                  const StreamFamily& streams) const {
  if (batch_size < 1) throw EmptyBatch("batch residual: batch size must be at least 1");
  const MomentProfile moments = analytic_mu_v(*this, theta, fit);
  RngStream s = streams.stream(0);
  return moments.mu + std::sqrt(moments.v / static_cast<double>(batch_size)) * s.normal();
}

MomentProfile analytic_mu_v(const LinearGaussianModel& model, const Vector& theta,
                            const SurrogateFit& fit) {
  if (theta.size() != model.param_dim()) {
    throw DimensionMismatch("analytic_mu_v: parameter dimension mismatch");
  }
  if (fit.covariate_dim() != model.covariate_dim()) {
    throw DimensionMismatch("analytic_mu_v: fit covariate dimension mismatch");
  }
  // Residual Z = a'theta + b - beta_0 + (x_slope - beta_s)'X + eps with
  // X Gaussian, so mean and variance follow from the affine transform.
  const Vector slope_gap = model.x_slope - fit.beta.tail(fit.covariate_dim());
  MomentProfile out;
  out.mu = model.a.dot(theta) + model.b - fit.beta[0] + slope_gap.dot(model.x_mean);
  out.v = slope_gap.dot(model.x_cov * slope_gap) + model.noise_variance(theta);
  return out;
}

SurrogateFit analytic_beta_limit(const LinearGaussianModel& model, const Vector& theta_true) {
  if (theta_true.size() != model.param_dim()) {
    throw DimensionMismatch("analytic_beta_limit: parameter dimension mismatch");
  }
  SurrogateFit fit;
  fit.beta = Vector(model.covariate_dim() + 1);
  fit.beta[0] = model.a.dot(theta_true) + model.b;
  fit.beta.tail(model.covariate_dim()) = model.x_slope;
  fit.n_fit = 0;
  fit.residual_variance = model.noise_variance(theta_true);
  fit.gram_condition = 1.0;
  return fit;
}

Dataset generate_observed(const SimulatorModel& model, const Vector& theta_true,
                          Eigen::Index n_obs, RngStream& stream) {
  if (n_obs < 1) throw ConfigError("generate_observed: n_obs must be at least 1");
  Matrix xs(n_obs, model.covariate_dim());
  Vector ys(n_obs);
  for (Eigen::Index i = 0; i < n_obs; ++i) {
    const auto [x, y] = model.simulate_pair(theta_true, stream);
    xs.row(i) = x.transpose();
    ys[i] = y;
  }
  return Dataset(std::move(xs), std::move(ys));
}

}  // namespace pseudopost
