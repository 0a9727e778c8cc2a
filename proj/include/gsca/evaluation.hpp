#pragma once

#include <vector>

#include "gsca/simulation.hpp"
#include "gsca/solver.hpp"

namespace gsca {

struct EvalReport {
  double rmse_theta = 0.0;
  double rmse_theta1 = 0.0;
  double rmse_theta2 = 0.0;
  double rmse_mu = 0.0;
  double rmse_z = 0.0;
  double rmse_z1 = 0.0;
  double rmse_z2 = 0.0;
  Index rank_hat = 0;
  double sigma2_hat = 0.0;
  VectorXd singular_values;
};

/// Relative squared error ||T - E||_F^2 / ||T||_F^2. Works for vectors too.
double rmse(const MatrixXd& truth, const MatrixXd& estimate);

/// Number of values above rel_tol * max(values); 0 when the maximum is 0.
Index estimated_rank(const VectorXd& singular_values, double rel_tol = kRelativeRankTol);

EvalReport evaluate_fit(const ModelFit& fit, const SimGroundTruth& truth);

/// Same metrics for an estimate given directly as (mu, Z); sigma2_hat is left
/// at 0 and the rank is read from Z's singular values.
EvalReport evaluate_estimate(const VectorXd& mu_hat, const MatrixXd& z_hat,
                             const SimGroundTruth& truth);

}  // namespace gsca
