#pragma once

#include "gsca/data.hpp"

namespace gsca {

enum class LinkKind { Logit, Probit };

/// phi(theta): logistic function or standard normal CDF. The result is kept
/// inside the open interval (0, 1) by a machine-epsilon guard.
double inverse_link(LinkKind kind, double theta);

/// Negative log-likelihood of one Bernoulli observation x in {0,1} with
/// natural parameter theta. Computed in log-sum-exp form, so it stays finite
/// for arbitrarily large |theta|.
double bernoulli_nll(LinkKind kind, double x, double theta);

/// d/dtheta of bernoulli_nll.
double bernoulli_nll_derivative(LinkKind kind, double x, double theta);

/// f1: masked Bernoulli negative log-likelihood of the binary block.
double binary_nll(const MatrixXd& x1, const MatrixXd& theta1, const MatrixXd& q1,
                  LinkKind kind = LinkKind::Logit);

/// f2: (1/2 sigma2) ||Q2 .* (X2 - Theta2)||_F^2 + (|Q2|_0 / 2) log(2 pi sigma2).
double quantitative_nll(const MatrixXd& x2, const MatrixXd& theta2, double sigma2,
                        const MatrixXd& q2);

/// f1 + f2 with Theta = [Theta1 Theta2].
double joint_nll(const CoupledData& data, const MatrixXd& theta, double sigma2,
                 LinkKind kind = LinkKind::Logit);

/// Q1 .* df1/dTheta1.
MatrixXd grad_f1(const MatrixXd& x1, const MatrixXd& theta1, const MatrixXd& q1,
                 LinkKind kind = LinkKind::Logit);

/// Q2 .* (Theta2 - X2) / sigma2.
MatrixXd grad_f2(const MatrixXd& x2, const MatrixXd& theta2, const MatrixXd& q2,
                 double sigma2);

/// Upper bound on the per-entry curvature of f1 and f2.
/// Logit: max(0.25, 1/sigma2). Probit: max(1, 1/sigma2).
double lipschitz_bound(LinkKind kind, double sigma2);

}  // namespace gsca
