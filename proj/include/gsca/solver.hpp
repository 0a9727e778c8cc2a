#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gsca/data.hpp"
#include "gsca/links_losses.hpp"
#include "gsca/penalties.hpp"

namespace gsca {

/// Relative tolerance used to read the rank of Z from its singular values.
inline constexpr double kRelativeRankTol = 1e-7;

/// Estimated GSCA parameters, Theta = 1 mu^T + Z with Z = A [B1 B2]^T.
struct ModelFit {
  VectorXd mu;
  MatrixXd z;
  double sigma2 = 1.0;
  /// All min(I, J) singular values of Z, nonincreasing, zeros included.
  VectorXd singular_values;
  MatrixXd a;
  MatrixXd b1;
  MatrixXd b2;
  /// Objective at the starting point followed by one value per iteration.
  std::vector<double> loss_trace;
  int iterations = 0;
  bool converged = false;
  bool warned_saturated = false;

  MatrixXd theta() const;
  Index rank() const { return a.cols(); }
  double final_loss() const { return loss_trace.empty() ? 0.0 : loss_trace.back(); }
};

struct FitConfig {
  PenaltySpec penalty;
  LinkKind link = LinkKind::Logit;
  double eps_f = 1e-8;
  int max_iter = 10000;
  double sigma2_floor = 0.05;
  std::uint64_t seed = 1;
  /// Start from these parameters instead of the random initialization.
  std::optional<ModelFit> warm_start;

  void validate() const;
};

/// H = Theta - (1/L) (Q .* grad f(Theta)); `grads` must already be masked.
MatrixXd majorization_target(const MatrixXd& theta, const MatrixXd& grads, double lipschitz);

/// Column means of H.
VectorXd update_mu(const MatrixXd& h);

struct ZUpdate {
  MatrixXd z;
  VectorXd singular_values;
};

/// Weighted singular value thresholding of J H with thresholds w_r / L.
/// `weights` are supergradients (lambda included) at the previous singular values.
ZUpdate update_z(const MatrixXd& h, const VectorXd& weights, double lipschitz);

/// Best rank-R approximation of J H.
ZUpdate update_z_exact_rank(const MatrixXd& h, Index rank);

/// ||Q2 .* (X2 - Theta2)||_F^2 / |Q2|_0
double update_sigma2(const MatrixXd& x2, const MatrixXd& theta2, const MatrixXd& q2);

/// Penalized objective f1 + f2 + sum_r g(xi_r(Z)).
double penalized_objective(const CoupledData& data, const VectorXd& mu, const MatrixXd& z,
                           const VectorXd& z_singular_values, double sigma2,
                           const PenaltySpec& penalty, LinkKind link);

struct Decomposition {
  MatrixXd a;
  MatrixXd b1;
  MatrixXd b2;
  VectorXd singular_values;
};

/// Z = A [B1 B2]^T with A^T A = I * Identity, keeping singular values above
/// `rank_tol` (absolute). B1 takes the first `j1` rows of B.
Decomposition decompose_z(const MatrixXd& z, Index j1, double rank_tol);

/// Majorization-minimization fit of the penalized model.
ModelFit fit_gsca(const CoupledData& data, const FitConfig& config);

/// Same iteration with the Z step replaced by an R-truncated SVD and no
/// penalty in the objective. Requires 1 <= rank < min(I, J).
ModelFit fit_exact_rank(const CoupledData& data, Index rank, const FitConfig& config);

}  // namespace gsca
