#include "gsca/links_losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace gsca {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
// log of the smallest positive normal double; floor for log-probabilities
// whose erfc has underflowed.
const double kLogFloor = std::log(std::numeric_limits<double>::min());

// log(1 + exp(t)) without overflow.
double softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

// 1 / (1 + exp(-t)) without overflow, unclamped.
double expit(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// log Phi(t) for the standard normal CDF.
double log_normal_cdf(double t) {
  const double p = 0.5 * std::erfc(-t / std::numbers::sqrt2);
  return p > 0.0 ? std::log(p) : kLogFloor;
}

double log_normal_pdf(double t) {
  return -0.5 * t * t - 0.5 * std::log(2.0 * std::numbers::pi);
}

void check_same_shape(const MatrixXd& a, const MatrixXd& b, const MatrixXd& q) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || q.rows() != a.rows() ||
      q.cols() != a.cols())
    throw std::invalid_argument("shape mismatch between data, parameters and mask");
}

}  // namespace

double inverse_link(LinkKind kind, double theta) {
  if (!std::isfinite(theta)) throw std::invalid_argument("inverse_link: non-finite theta");
  const double p = kind == LinkKind::Logit ? expit(theta)
                                            : 0.5 * std::erfc(-theta / std::numbers::sqrt2);
  return std::clamp(p, kEps, 1.0 - kEps);
}

double bernoulli_nll(LinkKind kind, double x, double theta) {
  // For x = 1 the loss is -log phi(theta); for x = 0 it is -log phi(-theta)
  // since both links are symmetric.
  const double signed_theta = x != 0.0 ? theta : -theta;
  if (kind == LinkKind::Logit) return softplus(-signed_theta);
  return -log_normal_cdf(signed_theta);
}

double bernoulli_nll_derivative(LinkKind kind, double x, double theta) {
  if (kind == LinkKind::Logit) return x != 0.0 ? -expit(-theta) : expit(theta);
  // phi'(t) (Phi(t) - x) / (Phi(t) (1 - Phi(t))) reduces to the inverse Mills
  // ratio on the side selected by x.
  const double signed_theta = x != 0.0 ? theta : -theta;
  const double mills = std::exp(log_normal_pdf(signed_theta) - log_normal_cdf(signed_theta));
  return x != 0.0 ? -mills : mills;
}

double binary_nll(const MatrixXd& x1, const MatrixXd& theta1, const MatrixXd& q1,
                  LinkKind kind) {
  check_same_shape(x1, theta1, q1);
  double total = 0.0;
  for (Index j = 0; j < x1.cols(); ++j)
    for (Index i = 0; i < x1.rows(); ++i)
      if (q1(i, j) != 0.0) total += bernoulli_nll(kind, x1(i, j), theta1(i, j));
  return total;
}

double quantitative_nll(const MatrixXd& x2, const MatrixXd& theta2, double sigma2,
                        const MatrixXd& q2) {
  check_same_shape(x2, theta2, q2);
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
  const double rss = (q2.array() * (x2 - theta2).array()).square().sum();
  const double n = q2.sum();
  return rss / (2.0 * sigma2) + 0.5 * n * std::log(2.0 * std::numbers::pi * sigma2);
}

double joint_nll(const CoupledData& data, const MatrixXd& theta, double sigma2,
                 LinkKind kind) {
  if (theta.rows() != data.rows() || theta.cols() != data.cols())
    throw std::invalid_argument("Theta shape does not match data");
  return binary_nll(data.x1(), theta.leftCols(data.j1()), data.q1(), kind) +
         quantitative_nll(data.x2(), theta.rightCols(data.j2()), sigma2, data.q2());
}

MatrixXd grad_f1(const MatrixXd& x1, const MatrixXd& theta1, const MatrixXd& q1,
                 LinkKind kind) {
  check_same_shape(x1, theta1, q1);
  MatrixXd g(x1.rows(), x1.cols());
  for (Index j = 0; j < x1.cols(); ++j)
    for (Index i = 0; i < x1.rows(); ++i)
      g(i, j) = q1(i, j) != 0.0 ? bernoulli_nll_derivative(kind, x1(i, j), theta1(i, j)) : 0.0;
  return g;
}

MatrixXd grad_f2(const MatrixXd& x2, const MatrixXd& theta2, const MatrixXd& q2,
                 double sigma2) {
  check_same_shape(x2, theta2, q2);
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
  return (q2.array() * (theta2 - x2).array() / sigma2).matrix();
}

double lipschitz_bound(LinkKind kind, double sigma2) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
  const double curvature = kind == LinkKind::Logit ? 0.25 : 1.0;
  return std::max(curvature, 1.0 / sigma2);
}

}  // namespace gsca
