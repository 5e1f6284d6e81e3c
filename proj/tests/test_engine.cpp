#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "pseudopost/engine.hpp"
#include "pseudopost/experiments.hpp"
#include "pseudopost/population.hpp"

using namespace pseudopost;

namespace {

SurrogateFit fit_with(std::initializer_list<double> coeffs) {
  SurrogateFit fit;
  fit.beta = Vector(static_cast<Eigen::Index>(coeffs.size()));
  Eigen::Index i = 0;
  for (const double c : coeffs) fit.beta[i++] = c;
  return fit;
}

// y == beta'(1, x) by construction, so every batch residual is exactly zero.
LinearGaussianModel zero_residual_model() {
  Vector a(1), x_slope(1), x_mean(1), hetero(1);
  a << 0.0;
  x_slope << 0.7;
  x_mean << 0.2;
  hetero << 0.0;
  Matrix x_cov(1, 1);
  x_cov << 1.3;
  return LinearGaussianModel(a, 0.5, x_slope, x_mean, x_cov, 0.0, hetero, 1.0);
}

bool bitwise_equal(const WeightedParticleSet& a, const WeightedParticleSet& b) {
  return (a.thetas.array() == b.thetas.array()).all() &&
         (a.batch_residuals.array() == b.batch_residuals.array()).all() &&
         (a.log_unnorm_weights.array() == b.log_unnorm_weights.array()).all() &&
         (a.weights.array() == b.weights.array()).all() &&
         a.degenerate_weights == b.degenerate_weights;
}

}  // namespace

TEST_CASE("batch_residual averages pointwise residuals") {
  const SurrogateFit fit = fit_with({1.0, 2.0});
  Vector x(1);
  x << 1.0;

  std::vector<std::pair<Vector, double>> exact = {{x, 3.0}};  // y == beta'(1,x)
  CHECK(batch_residual(fit, exact) == 0.0);

  std::vector<std::pair<Vector, double>> single = {{x, 5.0}};
  CHECK(batch_residual(fit, single) == doctest::Approx(2.0));

  // Residuals 1, 2, 6 at x = 1 (projection value 3).
  std::vector<std::pair<Vector, double>> three = {{x, 4.0}, {x, 5.0}, {x, 9.0}};
  CHECK(batch_residual(fit, three) == doctest::Approx(3.0));

  CHECK_THROWS_AS(batch_residual(fit, {}), EmptyBatch);
}

TEST_CASE("kernel_log_weight") {
  CHECK(kernel_log_weight(0.0, 2.5) == 0.0);
  CHECK(kernel_log_weight(2.5, 2.5) == doctest::Approx(-0.5));
  CHECK(kernel_log_weight(3.0 * 0.7, 0.7) == doctest::Approx(-4.5));
  CHECK_THROWS_AS(kernel_log_weight(1.0, 0.0), NonPositiveBandwidth);
  CHECK_THROWS_AS(kernel_log_weight(1.0, -1.0), NonPositiveBandwidth);
}

TEST_CASE("self_normalize") {
  Vector equal = Vector::Constant(8, -3.7);
  const Vector w = self_normalize(equal);
  for (Eigen::Index i = 0; i < w.size(); ++i) CHECK(w[i] == doctest::Approx(0.125).epsilon(1e-14));

  Vector two(2);
  two << 0.0, -std::log(3.0);
  const Vector w2 = self_normalize(two);
  CHECK(w2[0] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(w2[1] == doctest::Approx(0.25).epsilon(1e-14));

  Vector shifted(3), plain(3);
  shifted << -1000.0, -1002.0, -1001.0;
  plain << 0.0, -2.0, -1.0;
  const Vector ws = self_normalize(shifted);
  const Vector wp = self_normalize(plain);
  CHECK((ws.array() == wp.array()).all());

  CHECK_THROWS_AS(self_normalize(Vector(0)), EmptyInput);
  Vector bad(2);
  bad << 0.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(self_normalize(bad), NonFiniteValue);
}

TEST_CASE("effective_sample_size") {
  WeightedParticleSet ps;
  ps.weights = Vector::Constant(50, 0.02);
  CHECK(effective_sample_size(ps) == doctest::Approx(50.0).epsilon(1e-12));

  ps.weights = Vector::Zero(10);
  ps.weights[3] = 1.0;
  CHECK(effective_sample_size(ps) == doctest::Approx(1.0));

  ps.weights = Vector(3);
  ps.weights << 0.5, 0.25, 0.25;
  CHECK(effective_sample_size(ps) == doctest::Approx(1.0 / 0.375).epsilon(1e-12));
}

TEST_CASE("multi_summary_log_weight") {
  SummarySpec spec = {{1.0, 0.5}, {-2.0, 2.0}};
  Vector on_target(2);
  on_target << 1.0, -2.0;
  CHECK(multi_summary_log_weight(on_target, spec) == 0.0);

  SummarySpec one = {{3.0, 0.8}};
  Vector off(1);
  off << 3.8;
  CHECK(multi_summary_log_weight(off, one) == doctest::Approx(-0.5));

  Vector both(2);
  both << 1.5, 0.0;  // each summary off by its own bandwidth
  CHECK(multi_summary_log_weight(both, spec) == doctest::Approx(-1.0));

  Vector wrong(3);
  CHECK_THROWS_AS(multi_summary_log_weight(wrong, spec), LengthMismatch);
}

TEST_CASE("run_calibration produces a normalized particle set") {
  const ToyModel model;
  RngStream fit_stream(5);
  Vector theta_true(2);
  theta_true << 2.0, 2.0;
  const Dataset data = generate_observed(model, theta_true, 100, fit_stream);
  const SurrogateFit fit = fit_ols(data);

  CalibrationConfig config;
  config.n_theta = 5000;
  config.batch_size = 20;
  config.bandwidth = 5.0;
  config.seed = 808;
  const WeightedParticleSet ps = run_calibration(model, fit, config);

  CHECK(ps.size() == 5000);
  CHECK(std::abs(ps.weights.sum() - 1.0) < 1e-12);
  CHECK(ps.weights.minCoeff() >= 0.0);
  CHECK(ps.weights.maxCoeff() <= 1.0);
  CHECK(effective_sample_size(ps) >= 1.0);
  for (Eigen::Index j = 0; j < 50; ++j) {
    CHECK(ps.log_unnorm_weights[j] ==
          kernel_log_weight(ps.batch_residuals[j], config.bandwidth));
  }
}

TEST_CASE("zero-residual construction yields uniform weights") {
  const LinearGaussianModel model = zero_residual_model();
  const SurrogateFit fit = fit_with({0.5, 0.7});
  CalibrationConfig config;
  config.n_theta = 1000;
  config.batch_size = 4;
  config.bandwidth = 1.0;
  config.seed = 17;
  const WeightedParticleSet ps = run_calibration(model, fit, config);
  CHECK((ps.batch_residuals.array() == 0.0).all());
  CHECK((ps.weights.array() - 1.0 / 1000.0).abs().maxCoeff() < 1e-15);
}

TEST_CASE("calibration output is schedule independent") {
  const ToyModel model;
  const SurrogateFit fit = fit_with({0.4, 1.9});
  CalibrationConfig config;
  config.n_theta = 2000;
  config.batch_size = 5;
  config.bandwidth = 2.0;
  config.seed = 4242;

  config.max_parallel = 1;
  const WeightedParticleSet serial = run_calibration(model, fit, config);
  config.max_parallel = 4;
  const WeightedParticleSet four = run_calibration(model, fit, config);
  config.max_parallel = 8;
  const WeightedParticleSet eight = run_calibration(model, fit, config);

  CHECK(bitwise_equal(serial, four));
  CHECK(bitwise_equal(serial, eight));

  // And reruns are bit-identical.
  const WeightedParticleSet again = run_calibration(model, fit, config);
  CHECK(bitwise_equal(eight, again));
}

TEST_CASE("huge bandwidth recovers uniform weights") {
  const ToyModel model;
  const SurrogateFit fit = fit_with({0.0, 1.0});
  CalibrationConfig config;
  config.n_theta = 4000;
  config.batch_size = 10;
  config.bandwidth = 1.0;
  config.seed = 5150;
  const WeightedParticleSet pilot = run_calibration(model, fit, config);

  config.bandwidth = 1e6 * pilot.batch_residuals.cwiseAbs().maxCoeff();
  const WeightedParticleSet flat = run_calibration(model, fit, config);
  const double n = static_cast<double>(config.n_theta);
  CHECK((flat.weights.array() - 1.0 / n).abs().maxCoeff() < 1e-6);
}

TEST_CASE("all-underflow weights are flagged but still normalized") {
  // Constant residual 1e6 with unit bandwidth underflows every weight.
  Vector a(1), x_slope(1), x_mean(1), hetero(1);
  a << 0.0;
  x_slope << 0.0;
  x_mean << 0.0;
  hetero << 0.0;
  Matrix x_cov(1, 1);
  x_cov << 0.0;
  const LinearGaussianModel model(a, 1e6, x_slope, x_mean, x_cov, 0.0, hetero, 1.0);
  const SurrogateFit fit = fit_with({0.0, 0.0});

  CalibrationConfig config;
  config.n_theta = 64;
  config.batch_size = 1;
  config.bandwidth = 1.0;
  config.seed = 3;
  const WeightedParticleSet ps = run_calibration(model, fit, config);
  CHECK(ps.degenerate_weights);
  CHECK(std::abs(ps.weights.sum() - 1.0) < 1e-12);
  CHECK((ps.weights.array() - 1.0 / 64.0).abs().maxCoeff() < 1e-15);
}

TEST_CASE("expectation handles constants and symmetry") {
  WeightedParticleSet ps;
  ps.thetas = Matrix(4, 1);
  ps.thetas << -2.0, -1.0, 1.0, 2.0;
  ps.weights = Vector::Constant(4, 0.25);
  ps.batch_residuals = Vector::Zero(4);
  ps.log_unnorm_weights = Vector::Zero(4);

  CHECK(expectation(ps, [](const Vector&) { return 1.0; }) == doctest::Approx(1.0));
  CHECK(expectation(ps, [](const Vector&) { return -7.5; }) == doctest::Approx(-7.5));
  CHECK(expectation(ps, [](const Vector& t) { return t[0] > 0.0 ? 1.0 : 0.0; }) ==
        doctest::Approx(0.5));
  CHECK_THROWS_AS(
      expectation(ps, [](const Vector&) { return std::numeric_limits<double>::infinity(); }),
      NonFiniteValue);
}

TEST_CASE("invalid calibration configs are rejected") {
  const ToyModel model;
  const SurrogateFit fit = fit_with({0.0, 1.0});
  CalibrationConfig config;
  config.n_theta = 10;
  config.batch_size = 0;
  CHECK_THROWS_AS(run_calibration(model, fit, config), ConfigError);
  config.batch_size = 1;
  config.bandwidth = 0.0;
  CHECK_THROWS_AS(run_calibration(model, fit, config), NonPositiveBandwidth);
  config.bandwidth = 1.0;
  config.n_theta = 0;
  CHECK_THROWS_AS(run_calibration(model, fit, config), ConfigError);

  const SurrogateFit wrong = fit_with({0.0, 1.0, 2.0});
  config.n_theta = 10;
  CHECK_THROWS_AS(run_calibration(model, wrong, config), DimensionMismatch);
}

TEST_CASE("weighted expectations converge to the population functional") {
  // Paired comparison of the absolute error at the smallest and largest
  // particle counts, on an analytic model with a quadrature reference.
  const LinearGaussianModel model = make_homoscedastic_study_model();
  Vector theta_star(1);
  theta_star << homoscedastic_theta_true();
  const SurrogateFit fit = analytic_beta_limit(model, theta_star);

  const double tau = 1.0;
  const Eigen::Index batch = 10;
  const Quadrature quad = gaussian_prior_quadrature(1, model.prior_sd, 4000, 8.0);
  Vector lm(quad.weights.size()), h_values(quad.weights.size());
  for (Eigen::Index i = 0; i < quad.weights.size(); ++i) {
    lm[i] = l_m_gaussian(analytic_mu_v(model, quad.points.row(i).transpose(), fit), batch, tau);
    h_values[i] = quad.points(i, 0) > 1.0 ? 1.0 : 0.0;
  }
  const double phi_m = phi_functional(quad, lm, h_values);
  const auto h = [](const Vector& t) { return t[0] > 1.0 ? 1.0 : 0.0; };

  int improved = 0;
  const int reps = 20;
  for (int rep = 0; rep < reps; ++rep) {
    double err_small = 0.0, err_large = 0.0;
    for (const Eigen::Index n : {Eigen::Index{1000}, Eigen::Index{10000}, Eigen::Index{100000}}) {
      CalibrationConfig config;
      config.n_theta = n;
      config.batch_size = batch;
      config.bandwidth = tau;
      config.seed = mix_key(0xC0FFEE, static_cast<std::uint64_t>(rep * 31 + n));
      const double err = std::abs(expectation(run_calibration(model, fit, config), h) - phi_m);
      if (n == 1000) err_small = err;
      if (n == 100000) err_large = err;
    }
    if (err_large < err_small) ++improved;
  }
  CHECK(improved >= 18);
}
