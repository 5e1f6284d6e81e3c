#include "pseudopost/surrogate.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace pseudopost {

Dataset::Dataset(Matrix xs_in, Vector ys_in) : xs(std::move(xs_in)), ys(std::move(ys_in)) {
  if (xs.rows() != ys.size()) {
    throw DimensionMismatch("dataset: xs has " + std::to_string(xs.rows()) + " rows but ys has " +
                            std::to_string(ys.size()) + " entries");
  }
  if (ys.size() < 1) throw EmptyInput("dataset: needs at least one observation");
}

Vector augment(const Vector& x) {
  Vector row(x.size() + 1);
  row[0] = 1.0;
  row.tail(x.size()) = x;
  return row;
}

namespace {

Matrix augmented_design(const Dataset& data) {
  Matrix design(data.n(), data.dim() + 1);
  design.col(0).setOnes();
  design.rightCols(data.dim()) = data.xs;
  return design;
}

// Condition number of the (small, symmetric PSD) Gram matrix via its
// eigenvalues; infinity when the smallest one is not strictly positive.
double gram_condition_number(const Matrix& gram) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (hi <= 0.0) return std::numeric_limits<double>::infinity();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace

SurrogateFit fit_ols(const Dataset& data, double condition_limit) {
  const Eigen::Index n = data.n();
  const Eigen::Index q = data.dim() + 1;
  if (n < q) {
    throw SingularDesign("fit_ols: " + std::to_string(n) + " observations cannot identify " +
                         std::to_string(q) + " coefficients");
  }

  const Matrix design = augmented_design(data);
  const Matrix gram = design.transpose() * design;
  const double condition = gram_condition_number(gram);
  if (!(condition <= condition_limit)) {
    throw SingularDesign("fit_ols: Gram condition " + std::to_string(condition) +
                         " exceeds limit " + std::to_string(condition_limit));
  }

  SurrogateFit fit;
  fit.beta = design.householderQr().solve(data.ys);
  fit.n_fit = n;
  fit.gram_condition = condition;

  const Vector resid = data.ys - design * fit.beta;
  fit.residual_variance =
      n > q ? resid.squaredNorm() / static_cast<double>(n - q) : 0.0;
  return fit;
}

double residual(const SurrogateFit& fit, const Vector& x, double y) {
  if (x.size() != fit.covariate_dim()) {
    throw DimensionMismatch("residual: covariate has dimension " + std::to_string(x.size()) +
                            ", fit expects " + std::to_string(fit.covariate_dim()));
  }
  return y - fit.beta[0] - fit.beta.tail(x.size()).dot(x);
}

}  // namespace pseudopost
