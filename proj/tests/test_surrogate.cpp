#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "pseudopost/rng.hpp"
#include "pseudopost/surrogate.hpp"

using namespace pseudopost;

namespace {

// Independent oracle: solve the normal equations (X'X) beta = X'y with an
// explicit cofactor inverse. No shared code with the library solver.
double det_cofactor(const std::vector<std::vector<double>>& m) {
  const std::size_t n = m.size();
  if (n == 1) return m[0][0];
  double acc = 0.0;
  double sign = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<std::vector<double>> minor(n - 1, std::vector<double>(n - 1));
    for (std::size_t r = 1; r < n; ++r) {
      std::size_t mc = 0;
      for (std::size_t cc = 0; cc < n; ++cc) {
        if (cc == c) continue;
        minor[r - 1][mc++] = m[r][cc];
      }
    }
    acc += sign * m[0][c] * det_cofactor(minor);
    sign = -sign;
  }
  return acc;
}

std::vector<double> oracle_normal_equations(const Dataset& data) {
  const std::size_t q = static_cast<std::size_t>(data.dim()) + 1;
  const std::size_t n = static_cast<std::size_t>(data.n());
  std::vector<std::vector<double>> gram(q, std::vector<double>(q, 0.0));
  std::vector<double> xty(q, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(q, 1.0);
    for (std::size_t k = 1; k < q; ++k) {
      row[k] = data.xs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k - 1));
    }
    for (std::size_t r = 0; r < q; ++r) {
      xty[r] += row[r] * data.ys[static_cast<Eigen::Index>(i)];
      for (std::size_t c = 0; c < q; ++c) gram[r][c] += row[r] * row[c];
    }
  }
  const double det = det_cofactor(gram);
  // Cramer's rule column replacement.
  std::vector<double> beta(q, 0.0);
  for (std::size_t k = 0; k < q; ++k) {
    std::vector<std::vector<double>> replaced = gram;
    for (std::size_t r = 0; r < q; ++r) replaced[r][k] = xty[r];
    beta[k] = det_cofactor(replaced) / det;
  }
  return beta;
}

Dataset random_dataset(RngStream& stream, Eigen::Index n, Eigen::Index d, double noise_sd) {
  Matrix xs(n, d);
  Vector ys(n);
  Vector coef(d + 1);
  for (Eigen::Index k = 0; k <= d; ++k) coef[k] = 2.0 * stream.normal();
  for (Eigen::Index i = 0; i < n; ++i) {
    double y = coef[0];
    for (Eigen::Index k = 0; k < d; ++k) {
      xs(i, k) = 3.0 * stream.normal();
      y += coef[k + 1] * xs(i, k);
    }
    ys[i] = y + noise_sd * stream.normal();
  }
  return Dataset(std::move(xs), std::move(ys));
}

double abs_scale(const Vector& v) { return std::max(1e-30, v.cwiseAbs().maxCoeff()); }

}  // namespace

TEST_CASE("augment prepends the intercept entry") {
  CHECK(augment(Vector(0)).size() == 1);
  CHECK(augment(Vector(0))[0] == 1.0);

  Vector one(1);
  one << 3.0;
  const Vector a1 = augment(one);
  CHECK(a1[0] == 1.0);
  CHECK(a1[1] == 3.0);

  Vector two(2);
  two << 2.0, -1.0;
  const Vector a2 = augment(two);
  CHECK(a2[0] == 1.0);
  CHECK(a2[1] == 2.0);
  CHECK(a2[2] == -1.0);
}

TEST_CASE("fit_ols interpolates two points exactly") {
  Matrix xs(2, 1);
  xs << 0.0, 1.0;
  Vector ys(2);
  ys << 1.0, 3.0;
  const SurrogateFit fit = fit_ols(Dataset(xs, ys));
  CHECK(fit.beta[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.beta[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.residual_variance == 0.0);  // n == d+1 convention
  CHECK(fit.n_fit == 2);
}

TEST_CASE("fit_ols recovers noiseless linear data") {
  Matrix xs(5, 1);
  xs << -2.0, -1.0, 0.5, 1.0, 3.0;
  Vector ys = 2.0 + 3.0 * xs.col(0).array();
  const SurrogateFit fit = fit_ols(Dataset(xs, ys));
  CHECK(fit.beta[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.beta[1] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(fit.residual_variance == doctest::Approx(0.0).epsilon(1e-18));
}

TEST_CASE("fit_ols matches the cofactor normal-equation oracle on noisy data") {
  RngStream stream(9001);
  Matrix xs(50, 1);
  Vector ys(50);
  for (Eigen::Index i = 0; i < 50; ++i) {
    xs(i, 0) = 4.0 * stream.normal();
    ys[i] = 1.0 + 0.5 * xs(i, 0) + 0.3 * stream.normal();
  }
  const Dataset data(xs, ys);
  const SurrogateFit fit = fit_ols(data);
  const auto oracle = oracle_normal_equations(data);
  CHECK(std::abs(fit.beta[0] - oracle[0]) < 1e-10);
  CHECK(std::abs(fit.beta[1] - oracle[1]) < 1e-10);
}

TEST_CASE("fit_ols agrees with the oracle across dimensions") {
  RngStream stream(424242);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index d = trial % 4;  // 0..3
    const Eigen::Index n = 5 + static_cast<Eigen::Index>(stream.uniform01() * 95.0);
    if (n < d + 2) continue;
    const Dataset data = random_dataset(stream, n, d, 0.5);
    const SurrogateFit fit = fit_ols(data);
    const auto oracle = oracle_normal_equations(data);
    for (Eigen::Index k = 0; k <= d; ++k) {
      const double scale = std::max(1.0, std::abs(oracle[static_cast<std::size_t>(k)]));
      CHECK(std::abs(fit.beta[k] - oracle[static_cast<std::size_t>(k)]) < 1e-8 * scale);
    }
  }
}

TEST_CASE("fitted residuals are orthogonal to the design") {
  RngStream stream(77);
  for (int trial = 0; trial < 25; ++trial) {
    const Eigen::Index d = 1 + trial % 3;
    const Eigen::Index n = 10 + static_cast<Eigen::Index>(stream.uniform01() * 90.0);
    const Dataset data = random_dataset(stream, n, d, 1.0);
    const SurrogateFit fit = fit_ols(data);
    Vector resid(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      resid[i] = residual(fit, data.xs.row(i).transpose(), data.ys[i]);
    }
    const double y_scale = abs_scale(data.ys);
    CHECK(std::abs(resid.sum()) <= 1e-8 * static_cast<double>(n) * y_scale);
    for (Eigen::Index k = 0; k < d; ++k) {
      const double x_scale = abs_scale(data.xs.col(k));
      CHECK(std::abs(resid.dot(data.xs.col(k))) <=
            1e-8 * static_cast<double>(n) * x_scale * y_scale);
    }
  }
}

TEST_CASE("refitting on fitted values returns the same coefficients") {
  RngStream stream(31337);
  const Dataset data = random_dataset(stream, 60, 2, 1.5);
  const SurrogateFit fit = fit_ols(data);
  Vector fitted(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    fitted[i] = data.ys[i] - residual(fit, data.xs.row(i).transpose(), data.ys[i]);
  }
  const SurrogateFit refit = fit_ols(Dataset(data.xs, fitted));
  CHECK((refit.beta - fit.beta).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(refit.residual_variance < 1e-18);
}

TEST_CASE("adding a constant to y shifts only the intercept") {
  RngStream stream(555);
  const Dataset data = random_dataset(stream, 40, 2, 1.0);
  const SurrogateFit fit = fit_ols(data);
  const double c = 7.25;
  const SurrogateFit shifted = fit_ols(Dataset(data.xs, data.ys.array() + c));
  CHECK(std::abs(shifted.beta[0] - fit.beta[0] - c) < 1e-10);
  CHECK((shifted.beta.tail(2) - fit.beta.tail(2)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("residual evaluates y minus the projected value") {
  SurrogateFit fit;
  fit.beta = Vector(2);
  fit.beta << 1.0, 2.0;
  Vector x(1);
  x << 1.0;
  CHECK(residual(fit, x, 5.0) == doctest::Approx(2.0));
  x << 2.0;
  CHECK(residual(fit, x, 5.0) == doctest::Approx(0.0));

  SurrogateFit zero;
  zero.beta = Vector::Zero(3);
  Vector x2(2);
  x2 << -4.0, 9.0;
  CHECK(residual(zero, x2, 3.25) == 3.25);

  CHECK_THROWS_AS(residual(fit, x2, 1.0), DimensionMismatch);
}

TEST_CASE("degenerate designs are rejected") {
  // Too few observations.
  Matrix xs(2, 2);
  xs << 1.0, 2.0, 3.0, 4.0;
  Vector ys(2);
  ys << 1.0, 2.0;
  CHECK_THROWS_AS(fit_ols(Dataset(xs, ys)), SingularDesign);

  // Duplicated column.
  Matrix dup(10, 2);
  RngStream stream(8);
  for (Eigen::Index i = 0; i < 10; ++i) {
    dup(i, 0) = stream.normal();
    dup(i, 1) = dup(i, 0);
  }
  Vector y2(10);
  for (Eigen::Index i = 0; i < 10; ++i) y2[i] = stream.normal();
  CHECK_THROWS_AS(fit_ols(Dataset(dup, y2)), SingularDesign);

  // Mismatched row counts.
  CHECK_THROWS_AS(Dataset(Matrix::Zero(3, 1), Vector::Zero(2)), DimensionMismatch);
}

TEST_CASE("gram condition is reported") {
  RngStream stream(2024);
  const Dataset data = random_dataset(stream, 30, 1, 1.0);
  const SurrogateFit fit = fit_ols(data);
  CHECK(fit.gram_condition >= 1.0);
  CHECK(std::isfinite(fit.gram_condition));
}
