#include "gsca/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "gsca/linalg.hpp"

namespace gsca {

namespace {

// Independent engine per purpose, all derived from the user seed.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint32_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    purpose};
  return std::mt19937_64(seq);
}

enum Stream : std::uint32_t { kFactors = 1, kQuantNoise = 2, kBinaryNoise = 3, kBinaryOffsets = 4,
              kQuantOffsets = 5 };

MatrixXd standard_normal(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  return MatrixXd::NullaryExpr(rows, cols, [&]() { return normal(rng); });
}

// Orthonormal columns from Gaussian draws; redraws in the (probability zero)
// event of a numerically rank-deficient sample.
MatrixXd random_orthonormal(Index rows, Index cols, std::mt19937_64& rng) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    const MatrixXd g = standard_normal(rows, cols, rng);
    Eigen::HouseholderQR<MatrixXd> qr(g);
    const VectorXd diag = qr.matrixQR().diagonal().head(cols).cwiseAbs();
    if (cols > 0 && diag.minCoeff() <= 1e-10 * diag.maxCoeff()) continue;
    return qr.householderQ() * MatrixXd::Identity(rows, cols);
  }
  throw NumericError("could not draw a full-rank factor matrix");
}

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

void SimParams::validate() const {
  if (rows < 2 || j1 < 1 || j2 < 1) throw std::invalid_argument("invalid dimensions");
  if (rank < 1 || rank > std::min({rows - 1, j1, j2}))
    throw std::invalid_argument("rank must satisfy 1 <= R <= min(I - 1, J1, J2)");
  if (!(snr1 > 0.0) || !(snr2 > 0.0)) throw std::invalid_argument("SNRs must be positive");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
  if (mu1.size() != j1) throw std::invalid_argument("mu1 must have length J1");
  if (mu2.size() != j2) throw std::invalid_argument("mu2 must have length J2");
  if (!mu1.allFinite() || !mu2.allFinite()) throw std::invalid_argument("offsets must be finite");
}

double expected_logistic_noise_energy(Index rows, Index cols) {
  return static_cast<double>(rows) * static_cast<double>(cols) * std::numbers::pi *
         std::numbers::pi / 3.0;
}

VectorXd binary_offsets_from_marginals(const VectorXd& marginals, Index rows) {
  const double lo = 1.0 / (2.0 * static_cast<double>(rows));
  VectorXd out(marginals.size());
  for (Index j = 0; j < marginals.size(); ++j) {
    if (!(marginals[j] >= 0.0 && marginals[j] <= 1.0))
      throw std::invalid_argument("marginal probabilities must lie in [0, 1]");
    out[j] = logit(std::clamp(marginals[j], lo, 1.0 - lo));
  }
  return out;
}

VectorXd synthetic_binary_marginals(Index j1, std::uint64_t seed) {
  std::mt19937_64 rng = make_stream(seed, kBinaryOffsets);
  std::gamma_distribution<double> shape_a(2.0, 1.0);
  std::gamma_distribution<double> shape_b(28.0, 1.0);
  VectorXd p(j1);
  for (Index j = 0; j < j1; ++j) {
    const double a = shape_a(rng);
    const double b = shape_b(rng);
    p[j] = a / (a + b);
  }
  return p;
}

VectorXd gaussian_offsets(Index j2, std::uint64_t seed) {
  std::mt19937_64 rng = make_stream(seed, kQuantOffsets);
  return standard_normal(j2, 1, rng);
}

SimParams benchmark_params(std::uint64_t seed) {
  SimParams params;
  params.seed = seed;
  params.mu1 = binary_offsets_from_marginals(synthetic_binary_marginals(params.j1, seed),
                                             params.rows);
  params.mu2 = gaussian_offsets(params.j2, seed);
  return params;
}

SimGroundTruth simulate_coupled(const SimParams& params) {
  params.validate();
  const Index rows = params.rows;
  const Index j1 = params.j1;
  const Index j2 = params.j2;
  const Index rank = params.rank;

  SimGroundTruth truth;
  truth.sigma2 = params.sigma2;

  std::mt19937_64 factors = make_stream(params.seed, kFactors);
  truth.u = random_orthonormal(rows, rank, factors);
  truth.v1 = random_orthonormal(j1, rank, factors);
  truth.v2 = random_orthonormal(j2, rank, factors);
  truth.d = standard_normal(rank, 1, factors).cwiseAbs();
  std::sort(truth.d.data(), truth.d.data() + rank, std::greater<>());

  std::mt19937_64 quant_noise = make_stream(params.seed, kQuantNoise);
  truth.e2 = std::sqrt(params.sigma2) * standard_normal(rows, j2, quant_noise);

  // ||U (c D) V^T||_F = c ||D|| because U and V have orthonormal columns.
  const double d_norm2 = truth.d.squaredNorm();
  const double noise1 = expected_logistic_noise_energy(rows, j1);
  const double noise2 = params.snr2_energy == NoiseEnergy::Expected
                            ? static_cast<double>(rows * j2) * params.sigma2
                            : truth.e2.squaredNorm();
  truth.c1 = std::sqrt(params.snr1 * noise1 / d_norm2);
  truth.c2 = std::sqrt(params.snr2 * noise2 / d_norm2);

  const MatrixXd z1 = truth.u * truth.d1().asDiagonal() * truth.v1.transpose();
  const MatrixXd z2 = truth.u * truth.d2().asDiagonal() * truth.v2.transpose();
  truth.theta1 = add_offset(params.mu1, z1);
  truth.theta2 = add_offset(params.mu2, z2);
  truth.snr1 = z1.squaredNorm() / noise1;
  truth.snr2 = z2.squaredNorm() / truth.e2.squaredNorm();

  // Thresholding the latent X1* = Theta1 + E1 with standard logistic E1 is a
  // Bernoulli(phi(Theta1)) draw.
  std::mt19937_64 binary_noise = make_stream(params.seed, kBinaryNoise);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  truth.e1 = MatrixXd::NullaryExpr(rows, j1, [&]() {
    double v = unif(binary_noise);
    while (v <= 0.0) v = unif(binary_noise);
    return logit(v);
  });
  truth.x1_star = truth.theta1 + truth.e1;
  truth.x1 = (truth.x1_star.array() > 0.0).cast<double>().matrix();
  truth.x2 = truth.theta2 + truth.e2;

  MatrixXd z = hcat(z1, z2);
  const VectorXd shift = column_means(z);
  truth.z = z.rowwise() - shift.transpose();
  truth.mu.resize(j1 + j2);
  truth.mu << params.mu1, params.mu2;
  truth.mu += shift;
  return truth;
}

SimGroundTruth SimGroundTruth::select_binary_columns(const std::vector<Index>& kept) const {
  const Index j1_old = j1();
  for (Index j : kept)
    if (j < 0 || j >= j1_old) throw std::invalid_argument("binary column index out of range");
  const auto n = static_cast<Index>(kept.size());
  const Eigen::Map<const Eigen::Matrix<Index, Eigen::Dynamic, 1>> idx(kept.data(), n);

  SimGroundTruth out = *this;
  out.x1 = x1(Eigen::all, idx);
  out.x1_star = x1_star(Eigen::all, idx);
  out.e1 = e1(Eigen::all, idx);
  out.theta1 = theta1(Eigen::all, idx);
  out.z = hcat(z(Eigen::all, idx), z.rightCols(j2()));
  out.mu.resize(n + j2());
  out.mu << mu(idx), mu.tail(j2());
  return out;
}

ColumnFilter drop_uninformative_binary_columns(const MatrixXd& x1, const MatrixXd& q1) {
  if (q1.rows() != x1.rows() || q1.cols() != x1.cols())
    throw std::invalid_argument("mask shape does not match X1");
  ColumnFilter out;
  for (Index j = 0; j < x1.cols(); ++j) {
    bool seen0 = false;
    bool seen1 = false;
    for (Index i = 0; i < x1.rows(); ++i) {
      if (q1(i, j) == 0.0) continue;
      (x1(i, j) != 0.0 ? seen1 : seen0) = true;
    }
    if (seen0 && seen1) out.kept.push_back(j);
  }
  const auto n = static_cast<Index>(out.kept.size());
  const Eigen::Map<const Eigen::Matrix<Index, Eigen::Dynamic, 1>> idx(out.kept.data(), n);
  out.x1 = x1(Eigen::all, idx);
  out.q1 = q1(Eigen::all, idx);
  return out;
}

ScaEstimate sca_full_information(const MatrixXd& x1_star, const MatrixXd& x2, Index rank) {
  const MatrixXd x = hcat(x1_star, x2);
  if (rank < 0 || rank > std::min(x.rows(), x.cols()))
    throw std::invalid_argument("rank out of range");
  ScaEstimate out;
  out.mu = column_means(x);
  if (rank == 0) {
    out.z = MatrixXd::Zero(x.rows(), x.cols());
  } else {
    const ThinSvd svd = thin_svd(column_center(x));
    out.z = svd.u.leftCols(rank) * svd.s.head(rank).asDiagonal() *
            svd.v.leftCols(rank).transpose();
  }
  out.theta = add_offset(out.mu, out.z);
  return out;
}

}  // namespace gsca
