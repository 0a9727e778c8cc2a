#include "gsca/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "gsca/linalg.hpp"

namespace gsca {

MatrixXd ModelFit::theta() const { return add_offset(mu, z); }

void FitConfig::validate() const {
  penalty.validate();
  if (!(eps_f > 0.0)) throw std::invalid_argument("eps_f must be positive");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
  if (!(sigma2_floor >= 0.0)) throw std::invalid_argument("sigma2_floor must be nonnegative");
}

MatrixXd majorization_target(const MatrixXd& theta, const MatrixXd& grads, double lipschitz) {
  if (theta.rows() != grads.rows() || theta.cols() != grads.cols())
    throw std::invalid_argument("gradient shape does not match Theta");
  if (!(lipschitz > 0.0)) throw std::invalid_argument("L must be positive");
  return theta - grads / lipschitz;
}

VectorXd update_mu(const MatrixXd& h) { return column_means(h); }

ZUpdate update_z(const MatrixXd& h, const VectorXd& weights, double lipschitz) {
  if (!(lipschitz > 0.0)) throw std::invalid_argument("L must be positive");
  SvtResult svt = weighted_svt(column_center(h), weights, 1.0 / lipschitz);
  return ZUpdate{std::move(svt.matrix), std::move(svt.singular_values)};
}

ZUpdate update_z_exact_rank(const MatrixXd& h, Index rank) {
  const Index n = std::min(h.rows(), h.cols());
  if (rank < 0 || rank > n) throw std::invalid_argument("rank out of range");
  SpectralShrink res =
      spectral_shrink(column_center(h), [rank](Index r, double s) { return r < rank ? s : 0.0; });
  return ZUpdate{std::move(res.matrix), std::move(res.values)};
}

double update_sigma2(const MatrixXd& x2, const MatrixXd& theta2, const MatrixXd& q2) {
  if (x2.rows() != theta2.rows() || x2.cols() != theta2.cols() || q2.rows() != x2.rows() ||
      q2.cols() != x2.cols())
    throw std::invalid_argument("shape mismatch in sigma2 update");
  const double n = q2.sum();
  if (n <= 0.0) throw std::invalid_argument("no observed quantitative entries");
  return (q2.array() * (x2 - theta2).array()).square().sum() / n;
}

double penalized_objective(const CoupledData& data, const VectorXd& mu, const MatrixXd& z,
                           const VectorXd& z_singular_values, double sigma2,
                           const PenaltySpec& penalty, LinkKind link) {
  return joint_nll(data, add_offset(mu, z), sigma2, link) +
         spectral_penalty(penalty, z_singular_values);
}

Decomposition decompose_z(const MatrixXd& z, Index j1, double rank_tol) {
  if (j1 < 0 || j1 > z.cols()) throw std::invalid_argument("j1 out of range");
  const ThinSvd svd = thin_svd(z);
  Index rank = 0;
  while (rank < svd.s.size() && svd.s[rank] > rank_tol) ++rank;

  const double sqrt_rows = std::sqrt(static_cast<double>(z.rows()));
  Decomposition out;
  out.a = sqrt_rows * svd.u.leftCols(rank);
  const MatrixXd b = svd.v.leftCols(rank) * svd.s.head(rank).asDiagonal() / sqrt_rows;
  out.b1 = b.topRows(j1);
  out.b2 = b.bottomRows(z.cols() - j1);
  out.singular_values = svd.s.head(rank);
  return out;
}

namespace {

using ZStep = std::function<ZUpdate(const MatrixXd& h, const VectorXd& xi, double lipschitz)>;

ModelFit run_mm(const CoupledData& data, const FitConfig& config, const ZStep& z_step,
                const PenaltySpec& objective_penalty) {
  config.validate();
  const Index rows = data.rows();
  const Index cols = data.cols();
  const Index j1 = data.j1();
  const Index n_sv = std::min(rows, cols);
  if (data.observed_quantitative() == 0)
    throw std::invalid_argument("no observed quantitative entries");

  VectorXd mu;
  MatrixXd z;
  double sigma2 = 1.0;
  VectorXd xi;
  if (config.warm_start) {
    const ModelFit& init = *config.warm_start;
    if (init.z.rows() != rows || init.z.cols() != cols || init.mu.size() != cols)
      throw std::invalid_argument("warm start has the wrong dimensions");
    mu = init.mu;
    z = init.z;
    sigma2 = init.sigma2 > 0.0 ? init.sigma2 : 1.0;
    xi = init.singular_values.size() == n_sv ? init.singular_values : singular_values(z);
  } else {
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    z = MatrixXd::NullaryExpr(rows, cols, [&]() { return unif(rng); });
    mu = VectorXd::Zero(cols);
    sigma2 = 1.0;
    xi = singular_values(z);
  }

  const auto objective = [&](const VectorXd& m, const MatrixXd& zz, const VectorXd& s,
                             double s2) {
    return penalized_objective(data, m, zz, s, s2, objective_penalty, config.link);
  };

  ModelFit fit;
  MatrixXd theta = add_offset(mu, z);
  double f_prev = objective(mu, z, xi, sigma2);
  if (!std::isfinite(f_prev)) throw NumericError("objective is not finite at the initial point");
  fit.loss_trace.push_back(f_prev);

  for (int iter = 1; iter <= config.max_iter; ++iter) {
    const MatrixXd grads =
        hcat(grad_f1(data.x1(), theta.leftCols(j1), data.q1(), config.link),
             grad_f2(data.x2(), theta.rightCols(data.j2()), data.q2(), sigma2));
    const double lipschitz = lipschitz_bound(config.link, sigma2);
    const MatrixXd h = majorization_target(theta, grads, lipschitz);

    mu = update_mu(h);
    ZUpdate zu = z_step(h, xi, lipschitz);
    z = std::move(zu.z);
    xi = std::move(zu.singular_values);
    theta = add_offset(mu, z);
    if (!theta.allFinite()) throw NumericError("parameters diverged to non-finite values");

    const double s2 = update_sigma2(data.x2(), theta.rightCols(data.j2()), data.q2());
    fit.iterations = iter;
    if (s2 < config.sigma2_floor || s2 <= 0.0) {
      sigma2 = s2;
      fit.warned_saturated = true;
      if (s2 > 0.0) fit.loss_trace.push_back(objective(mu, z, xi, sigma2));
      break;
    }
    sigma2 = s2;

    const double f = objective(mu, z, xi, sigma2);
    if (!std::isfinite(f)) throw NumericError("objective became non-finite");
    fit.loss_trace.push_back(f);
    if ((f_prev - f) / std::abs(f_prev) <= config.eps_f) {
      fit.converged = true;
      break;
    }
    f_prev = f;
  }

  std::sort(xi.data(), xi.data() + xi.size(), std::greater<>());
  const double rank_tol = xi.size() > 0 ? kRelativeRankTol * xi[0] : 0.0;
  Decomposition dec = decompose_z(z, j1, rank_tol);
  fit.mu = std::move(mu);
  fit.z = std::move(z);
  fit.sigma2 = sigma2;
  fit.singular_values = std::move(xi);
  fit.a = std::move(dec.a);
  fit.b1 = std::move(dec.b1);
  fit.b2 = std::move(dec.b2);
  return fit;
}

}  // namespace

ModelFit fit_gsca(const CoupledData& data, const FitConfig& config) {
  const PenaltySpec& penalty = config.penalty;
  const ZStep step = [&penalty](const MatrixXd& h, const VectorXd& xi, double lipschitz) {
    return update_z(h, supergradients(penalty, xi), lipschitz);
  };
  return run_mm(data, config, step, penalty);
}

ModelFit fit_exact_rank(const CoupledData& data, Index rank, const FitConfig& config) {
  if (rank < 1 || rank >= std::min(data.rows(), data.cols()))
    throw std::invalid_argument("exact rank must satisfy 1 <= R < min(I, J)");
  const ZStep step = [rank](const MatrixXd& h, const VectorXd&, double) {
    return update_z_exact_rank(h, rank);
  };
  return run_mm(data, config, step, PenaltySpec{PenaltyFamily::Nuclear, 0.0, 1.0});
}

}  // namespace gsca
