#pragma once

#include <Eigen/Core>

#include "pseudopost/errors.hpp"

namespace pseudopost {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Paired observations (x_i, y_i); row i of `xs` is the i-th covariate vector.
struct Dataset {
  Matrix xs;  // n x d
  Vector ys;  // n

  Dataset() = default;
  Dataset(Matrix xs_in, Vector ys_in);

  Eigen::Index n() const { return ys.size(); }
  Eigen::Index dim() const { return xs.cols(); }
};

// Least-squares projection of Y on (1, X), plus fit diagnostics.
struct SurrogateFit {
  Vector beta;  // length d+1, intercept first
  Eigen::Index n_fit = 0;
  double residual_variance = 0.0;
  double gram_condition = 1.0;

  Eigen::Index covariate_dim() const { return beta.size() - 1; }
};

// (1, x_1, ..., x_d)
Vector augment(const Vector& x);

// Fits ys on augmented xs by QR. Throws SingularDesign when n < d+1 or when
// the Gram matrix X'X has condition number above `condition_limit`.
SurrogateFit fit_ols(const Dataset& data, double condition_limit = 1e12);

// y - beta'(1, x)
double residual(const SurrogateFit& fit, const Vector& x, double y);

}  // namespace pseudopost
