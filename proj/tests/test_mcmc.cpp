#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pseudopost/reference_mcmc.hpp"
#include "pseudopost/simulators.hpp"

using namespace pseudopost;

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

Dataset toy_dataset(std::uint64_t seed, Eigen::Index n) {
  const ToyModel model;
  Vector theta(2);
  theta << 2.0, 2.0;
  RngStream stream(seed);
  return generate_observed(model, theta, n, stream);
}

// Independent oracle: with Gaussian prior and unit observation noise the toy
// posterior is an exact 2-d Gaussian. Solve it with explicit 2x2 algebra.
struct ConjugatePosterior {
  Vector mean;
  Matrix cov;
};

ConjugatePosterior conjugate_toy_posterior(const Dataset& data, double prior_sd) {
  double p00 = 1.0 / (prior_sd * prior_sd), p11 = 1.0 / (prior_sd * prior_sd);
  double p01 = 0.0, b0 = 0.0, b1 = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double x = data.xs(i, 0);
    const double lx = std::log(x);
    const double y = data.ys[i];
    p00 += x * x;
    p11 += lx * lx;
    p01 += x * lx;
    b0 += x * y;
    b1 += lx * y;
  }
  const double det = p00 * p11 - p01 * p01;
  ConjugatePosterior post;
  post.mean = Vector(2);
  post.mean << (p11 * b0 - p01 * b1) / det, (p00 * b1 - p01 * b0) / det;
  post.cov = Matrix(2, 2);
  post.cov << p11 / det, -p01 / det, -p01 / det, p00 / det;
  return post;
}

// Effective standard error of a chain mean from 20 batch means.
double batch_means_se(const Vector& samples) {
  const Eigen::Index batches = 20;
  const Eigen::Index size = samples.size() / batches;
  Vector means(batches);
  for (Eigen::Index b = 0; b < batches; ++b) means[b] = samples.segment(b * size, size).mean();
  const double grand = means.mean();
  const double var = (means.array() - grand).square().sum() / static_cast<double>(batches - 1);
  return std::sqrt(var / static_cast<double>(batches));
}

}  // namespace

TEST_CASE("toy_log_prior") {
  Vector zero = Vector::Zero(2);
  CHECK(toy_log_prior(zero) == doctest::Approx(-std::log(2.0 * M_PI * 25.0)).epsilon(1e-14));

  Vector one_sd(2);
  one_sd << 5.0, 0.0;
  CHECK(toy_log_prior(one_sd) - toy_log_prior(zero) == doctest::Approx(-0.5).epsilon(1e-14));

  Vector theta(2), neg(2);
  theta << 1.7, -3.2;
  neg = -theta;
  CHECK(toy_log_prior(theta) == toy_log_prior(neg));

  CHECK_THROWS_AS(toy_log_prior(Vector::Zero(3)), DimensionMismatch);
}

TEST_CASE("toy_log_likelihood") {
  Vector theta(2);
  theta << 1.2, -0.4;

  Matrix xs(1, 1);
  xs << 1.0;  // log x = 0, so the mean is theta_0
  Vector ys(1);
  ys << theta[0];
  CHECK(toy_log_likelihood(theta, Dataset(xs, ys)) ==
        doctest::Approx(-0.5 * kLogTwoPi).epsilon(1e-14));

  ys << theta[0] + 1.0;
  CHECK(toy_log_likelihood(theta, Dataset(xs, ys)) ==
        doctest::Approx(-0.5 * kLogTwoPi - 0.5).epsilon(1e-14));

  // Additivity over observations.
  const Dataset data = toy_dataset(4, 25);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    acc += toy_log_likelihood(theta, Dataset(data.xs.row(i), data.ys.segment(i, 1)));
  }
  CHECK(toy_log_likelihood(theta, data) == doctest::Approx(acc).epsilon(1e-12));

  Matrix bad(1, 1);
  bad << -1.0;
  CHECK_THROWS_AS(toy_log_likelihood(theta, Dataset(bad, ys)), NonPositiveCovariate);
}

TEST_CASE("ToyPosterior equals prior plus likelihood") {
  const Dataset data = toy_dataset(8, 40);
  const ToyPosterior target(data);
  Vector theta(2);
  theta << 0.7, 1.9;
  CHECK(target(theta) ==
        doctest::Approx(toy_log_prior(theta) + toy_log_likelihood(theta, data)).epsilon(1e-12));
}

TEST_CASE("rwmh accepts every uphill proposal") {
  // Flat target: delta is always zero, so acceptance is certain.
  const auto flat = [](const Vector&) { return 0.0; };
  MhConfig config;
  config.n_iter = 500;
  config.burn_in = 0;
  config.step_sd = 1.0;
  config.init = Vector::Zero(1);
  config.seed = 9;
  const Chain chain = rwmh(flat, config);
  CHECK(chain.acceptance_rate == 1.0);
  for (const auto flag : chain.accepted) CHECK(flag == 1);
}

TEST_CASE("rwmh samples a standard normal") {
  const auto target = [](const Vector& t) { return -0.5 * t.squaredNorm(); };
  MhConfig config;
  config.n_iter = 100000;
  config.burn_in = 2000;
  config.step_sd = 2.0;
  config.init = Vector::Zero(1);
  config.seed = 1234;
  const Chain chain = rwmh(target, config);

  const Vector samples = chain.samples.col(0);
  const double se = batch_means_se(samples);
  CHECK(std::abs(samples.mean()) < 4.0 * se);
  const double var =
      (samples.array() - samples.mean()).square().sum() / static_cast<double>(samples.size() - 1);
  CHECK(var == doctest::Approx(1.0).epsilon(0.10));
  CHECK(chain.acceptance_rate > 0.05);
  CHECK(chain.acceptance_rate < 0.95);
}

TEST_CASE("rwmh is deterministic under a fixed seed") {
  const auto target = [](const Vector& t) { return -0.5 * t.squaredNorm(); };
  MhConfig config;
  config.n_iter = 3000;
  config.burn_in = 500;
  config.step_sd = 1.5;
  config.init = Vector::Zero(2);
  config.seed = 77;
  const Chain a = rwmh(target, config);
  const Chain b = rwmh(target, config);
  CHECK((a.samples.array() == b.samples.array()).all());
  CHECK((a.log_target_trace.array() == b.log_target_trace.array()).all());
  CHECK(a.acceptance_rate == b.acceptance_rate);
  CHECK(a.samples.rows() == 2500);
}

TEST_CASE("rwmh validates its configuration") {
  const auto target = [](const Vector& t) { return -0.5 * t.squaredNorm(); };
  MhConfig config;
  config.init = Vector::Zero(1);
  config.n_iter = 100;
  config.burn_in = 100;
  CHECK_THROWS_AS(rwmh(target, config), ConfigError);
  config.burn_in = 10;
  config.step_sd = 0.0;
  CHECK_THROWS_AS(rwmh(target, config), ConfigError);

  config.step_sd = 1.0;
  const auto bad = [](const Vector&) { return -std::numeric_limits<double>::infinity(); };
  CHECK_THROWS_AS(rwmh(bad, config), NonFiniteValue);
}

TEST_CASE("chain histogram matches the target density") {
  const auto target = [](const Vector& t) { return -0.5 * t.squaredNorm(); };
  MhConfig config;
  config.n_iter = 110000;
  config.burn_in = 10000;
  config.step_sd = 2.4;
  config.init = Vector::Zero(1);
  config.seed = 31;
  const Chain chain = rwmh(target, config);

  // 40 interior bins over [-4, 4] plus the two tails.
  const int bins = 40;
  Vector counts = Vector::Zero(bins + 2);
  for (Eigen::Index i = 0; i < chain.samples.rows(); ++i) {
    const double t = chain.samples(i, 0);
    if (t < -4.0) {
      counts[0] += 1.0;
    } else if (t >= 4.0) {
      counts[bins + 1] += 1.0;
    } else {
      counts[1 + static_cast<int>((t + 4.0) / 0.2)] += 1.0;
    }
  }
  counts /= static_cast<double>(chain.samples.rows());

  const auto gauss_cdf = [](double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); };
  double tv = std::abs(counts[0] - gauss_cdf(-4.0));
  for (int k = 0; k < bins; ++k) {
    const double lo = -4.0 + 0.2 * k;
    const double expected = gauss_cdf(lo + 0.2) - gauss_cdf(lo);
    tv += std::abs(counts[1 + k] - expected);
  }
  tv += std::abs(counts[bins + 1] - gauss_cdf(-4.0));
  tv *= 0.5;
  CHECK(tv < 0.05);
}

TEST_CASE("acceptance rate falls as the step grows") {
  const Dataset data = toy_dataset(15, 200);
  const ToyPosterior target(data);
  MhConfig config;
  config.n_iter = 4000;
  config.burn_in = 500;
  config.init = Vector::Zero(2);
  config.seed = 5;

  double previous = 1.1;
  for (const double step : {0.05, 0.5, 5.0}) {
    config.step_sd = step;
    const double acc = rwmh(target, config).acceptance_rate;
    CHECK(acc < previous);
    previous = acc;
  }
}

TEST_CASE("chain mean and covariance match the conjugate oracle") {
  const Dataset data = toy_dataset(23, 120);
  const ConjugatePosterior oracle = conjugate_toy_posterior(data, 5.0);

  const ToyPosterior target(data);
  MhConfig config;
  config.n_iter = 60000;
  config.burn_in = 5000;
  config.init = Vector::Zero(2);
  config.seed = 404;
  config.step_sd = tune_step_sd(target, config);
  const Chain chain = rwmh(target, config);
  CHECK(chain.acceptance_rate >= 0.1);
  CHECK(chain.acceptance_rate <= 0.55);

  for (Eigen::Index k = 0; k < 2; ++k) {
    const double se = batch_means_se(chain.samples.col(k));
    CHECK(std::abs(chain.samples.col(k).mean() - oracle.mean[k]) < 5.0 * se);
  }
  const ChainSummary summary = chain_summary(chain);
  CHECK((summary.cov - oracle.cov).norm() / oracle.cov.norm() < 0.2);
}

TEST_CASE("chain_summary statistics") {
  Chain chain;
  chain.samples = Matrix(2, 2);
  chain.samples << 0.0, 0.0, 2.0, 2.0;
  chain.log_target_trace = Vector::Zero(2);
  chain.accepted = {1, 1};
  const ChainSummary summary = chain_summary(chain);
  CHECK(summary.mean[0] == doctest::Approx(1.0));
  CHECK(summary.mean[1] == doctest::Approx(1.0));

  Chain constant;
  constant.samples = Matrix::Constant(10, 2, 3.5);
  constant.log_target_trace = Vector::Zero(10);
  constant.accepted.assign(10, 0);
  const ChainSummary cs = chain_summary(constant);
  CHECK(cs.mean[0] == doctest::Approx(3.5));
  CHECK(cs.cov.norm() == doctest::Approx(0.0));
  CHECK(cs.quantiles(0, 3) == doctest::Approx(3.5));

  Chain empty;
  empty.samples = Matrix(0, 2);
  CHECK_THROWS_AS(chain_summary(empty), EmptyChain);
}

TEST_CASE("chain_summary covariance of a 2-d standard-normal chain is near identity") {
  const auto target = [](const Vector& t) { return -0.5 * t.squaredNorm(); };
  MhConfig config;
  config.n_iter = 80000;
  config.burn_in = 5000;
  config.step_sd = 1.7;
  config.init = Vector::Zero(2);
  config.seed = 2025;
  const ChainSummary summary = chain_summary(rwmh(target, config));
  CHECK((summary.cov - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.1);
  CHECK(summary.mean.cwiseAbs().maxCoeff() < 0.1);
  // Median tracks the mean for a symmetric target.
  CHECK(std::abs(summary.quantiles(0, 3) - summary.mean[0]) < 0.05);
}
