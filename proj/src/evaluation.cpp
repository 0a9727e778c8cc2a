#include "gsca/evaluation.hpp"

#include "gsca/linalg.hpp"

namespace gsca {

double rmse(const MatrixXd& truth, const MatrixXd& estimate) {
  if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols())
    throw std::invalid_argument("rmse: shape mismatch");
  const double denom = truth.squaredNorm();
  if (!(denom > 0.0)) throw std::invalid_argument("rmse: truth has zero norm");
  return (truth - estimate).squaredNorm() / denom;
}

Index estimated_rank(const VectorXd& singular_values, double rel_tol) {
  if (singular_values.size() == 0) return 0;
  const double top = singular_values.maxCoeff();
  if (!(top > 0.0)) return 0;
  return (singular_values.array() > rel_tol * top).count();
}

EvalReport evaluate_estimate(const VectorXd& mu_hat, const MatrixXd& z_hat,
                             const SimGroundTruth& truth) {
  const Index j1 = truth.j1();
  const Index j2 = truth.j2();
  if (z_hat.rows() != truth.rows() || z_hat.cols() != j1 + j2 || mu_hat.size() != j1 + j2)
    throw std::invalid_argument("estimate does not match the ground-truth dimensions");

  const MatrixXd theta_hat = add_offset(mu_hat, z_hat);
  EvalReport r;
  r.rmse_theta = rmse(truth.theta(), theta_hat);
  r.rmse_theta1 = rmse(truth.theta1, theta_hat.leftCols(j1));
  r.rmse_theta2 = rmse(truth.theta2, theta_hat.rightCols(j2));
  r.rmse_mu = rmse(truth.mu, mu_hat);
  r.rmse_z = rmse(truth.z, z_hat);
  r.rmse_z1 = rmse(truth.z.leftCols(j1), z_hat.leftCols(j1));
  r.rmse_z2 = rmse(truth.z.rightCols(j2), z_hat.rightCols(j2));
  r.singular_values = singular_values(z_hat);
  r.rank_hat = estimated_rank(r.singular_values);
  return r;
}

EvalReport evaluate_fit(const ModelFit& fit, const SimGroundTruth& truth) {
  EvalReport r = evaluate_estimate(fit.mu, fit.z, truth);
  r.rank_hat = estimated_rank(fit.singular_values);
  r.singular_values = fit.singular_values;
  r.sigma2_hat = fit.sigma2;
  return r;
}

}  // namespace gsca
