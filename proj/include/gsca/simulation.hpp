#pragma once

#include <cstdint>
#include <vector>

#include "gsca/data.hpp"

namespace gsca {

/// How the quantitative scale factor c2 is calibrated.
enum class NoiseEnergy {
  /// I * J2 * sigma2, the expected ||E2||_F^2.
  Expected,
  /// ||E2||_F^2 of the sampled noise.
  Realized,
};

struct SimParams {
  Index rows = 160;
  Index j1 = 410;
  Index j2 = 1000;
  Index rank = 10;
  double snr1 = 1.0;
  double snr2 = 1.0;
  double sigma2 = 1.0;
  /// Logit-scale column offsets of the binary block (length j1).
  VectorXd mu1;
  /// Column means of the quantitative block (length j2).
  VectorXd mu2;
  std::uint64_t seed = 1;
  NoiseEnergy snr2_energy = NoiseEnergy::Expected;

  void validate() const;
};

/// Expected ||E1||_F^2 for standard logistic noise: I * J1 * pi^2 / 3.
double expected_logistic_noise_energy(Index rows, Index cols);

/// Logit of marginal probabilities, clamped to [1/(2I), 1 - 1/(2I)] first.
VectorXd binary_offsets_from_marginals(const VectorXd& marginals, Index rows);

/// Marginal probabilities drawn from Beta(2, 28), mean about 0.067, as a
/// stand-in for an imbalanced binary data set.
VectorXd synthetic_binary_marginals(Index j1, std::uint64_t seed);

/// Quantitative column means drawn from N(0, 1).
VectorXd gaussian_offsets(Index j2, std::uint64_t seed);

/// Simulation parameters of the imbalanced binary / Gaussian benchmark:
/// 160 x (410 + 1000), rank 10, SNR 1 in both blocks, sigma2 = 1,
/// mu1 from synthetic marginals and mu2 ~ N(0, 1).
SimParams benchmark_params(std::uint64_t seed);

struct SimGroundTruth {
  MatrixXd x1;
  MatrixXd x2;
  /// Latent quantitative version of X1; X1 = 1[X1* > 0].
  MatrixXd x1_star;
  MatrixXd e1;
  MatrixXd e2;
  MatrixXd theta1;
  MatrixXd theta2;
  /// Offsets after the column means of Z have been moved into them.
  VectorXd mu;
  /// Column-centered low-rank part [Z1 Z2].
  MatrixXd z;
  MatrixXd u;
  MatrixXd v1;
  MatrixXd v2;
  VectorXd d;
  double c1 = 0.0;
  double c2 = 0.0;
  double sigma2 = 1.0;
  /// ||U D1 V1^T||^2 / (I J1 pi^2/3).
  double snr1 = 0.0;
  /// ||U D2 V2^T||^2 / ||E2||^2.
  double snr2 = 0.0;

  Index rows() const { return x1.rows(); }
  Index j1() const { return x1.cols(); }
  Index j2() const { return x2.cols(); }
  VectorXd d1() const { return c1 * d; }
  VectorXd d2() const { return c2 * d; }
  MatrixXd theta() const { return hcat(theta1, theta2); }

  CoupledData data() const { return CoupledData::fully_observed(x1, x2); }

  /// Keeps only the listed binary columns in every binary-block quantity.
  SimGroundTruth select_binary_columns(const std::vector<Index>& kept) const;
};

SimGroundTruth simulate_coupled(const SimParams& params);

struct ColumnFilter {
  MatrixXd x1;
  MatrixXd q1;
  std::vector<Index> kept;
};

/// Removes binary columns whose observed entries are all identical.
ColumnFilter drop_uninformative_binary_columns(const MatrixXd& x1, const MatrixXd& q1);

struct ScaEstimate {
  MatrixXd theta;
  VectorXd mu;
  MatrixXd z;
};

/// PCA on [X1* X2]: column means plus the rank-R truncated SVD of the centered
/// concatenation.
ScaEstimate sca_full_information(const MatrixXd& x1_star, const MatrixXd& x2, Index rank);

}  // namespace gsca
