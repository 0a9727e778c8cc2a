#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "gsca/solver.hpp"

namespace gsca {

/// Element-wise fold labels for K-fold missing-value cross-validation.
/// Entries that are missing in the data carry the label -1.
struct FoldAssignment {
  Eigen::MatrixXi fold_of_entry;  // I x (J1 + J2)
  Index j1 = 0;
  int k = 0;

  /// Observed entries outside fold f, split into (Q1, Q2).
  std::pair<MatrixXd, MatrixXd> training_masks(int f) const;
  /// Entries of fold f, split into (Q1, Q2).
  std::pair<MatrixXd, MatrixXd> holdout_masks(int f) const;
  Index fold_size(int f) const;
};

/// Wrapped-diagonal folds: the t-th observed entry (in row order) of column j
/// goes to fold (t + p_j) mod K. Offsets are drawn per block so that fold
/// sizes differ by at most one and no row or column with two or more observed
/// entries sits in a single fold. Throws after 100 unsuccessful draws.
FoldAssignment diagonal_folds(const CoupledData& data, int k, std::uint64_t seed);

/// Folds for one block with caller-supplied column offsets, no validation.
Eigen::MatrixXi diagonal_folds_with_offsets(const MatrixXd& mask, int k,
                                            const std::vector<int>& offsets);

/// True when every row and column with at least two observed entries spans
/// two or more folds.
bool folds_cover_rows_and_columns(const Eigen::MatrixXi& folds);

/// lambda * n_observed / (I * J)
double effective_lambda(double lambda, Index n_observed, Index rows, Index cols);

enum class CvMode {
  /// Each fold starts from the previous fold's fit, evaluated in order.
  WarmSequential,
  /// Every fold starts from the random initialization; folds run concurrently.
  ColdParallel,
};

struct CvFoldRecord {
  double lambda = 0.0;
  int fold = 0;
  /// Held-out negative log-likelihood per held-out entry, +inf when saturated.
  double error = 0.0;
  Index heldout = 0;
  Index rank = 0;
  int iterations = 0;
  bool saturated = false;
};

struct CvEvaluation {
  double mean = 0.0;
  double se = 0.0;
  double mean_rank = 0.0;
  std::vector<CvFoldRecord> folds;
  /// Fit of the last fold, used to warm-start whatever comes next.
  ModelFit last_fit;
};

/// Mean held-out scaled negative log-likelihood over the folds.
/// `config.penalty.lambda` is the full-data lambda; each fold uses its
/// effective lambda. `config.warm_start` seeds the first fold in warm mode.
CvEvaluation cv_error(const CoupledData& data, const FoldAssignment& folds,
                      const FitConfig& config, CvMode mode = CvMode::WarmSequential);

/// Scaled held-out negative log-likelihood of given parameters on a mask.
double heldout_error(const CoupledData& data, const MatrixXd& theta, double sigma2,
                     const MatrixXd& h1, const MatrixXd& h2, LinkKind link);

struct LambdaBounds {
  double lambda_max = 0.0;  // smallest lambda found with rank <= 1
  double lambda_min = 0.0;  // lambda at which the fit is (nearly) saturated
};

/// Doubling / halving search with low-precision fits.
LambdaBounds find_lambda_bounds(const CoupledData& data, const FitConfig& config,
                                double search_eps = 1e-2, double start = 1.0);

/// n log-spaced values from hi down to lo.
std::vector<double> log_spaced_descending(double hi, double lo, int n);

struct GridSpec {
  int n_lambda = 30;
  std::optional<double> lambda_max;
  std::optional<double> lambda_min;
  int k = 7;
  std::uint64_t fold_seed = 1;
  double search_eps = 1e-2;
  CvMode mode = CvMode::WarmSequential;
  /// Called with (grid index, full-data refit) after each lambda.
  std::function<void(std::size_t, const ModelFit&)> on_refit;
};

struct CvResult {
  std::vector<double> lambda_grid;
  std::vector<double> cv_error;
  std::vector<double> cv_se;
  std::vector<double> rank_cv;
  std::vector<Index> rank_refit;
  double best_lambda = 0.0;
  std::size_t best_index = 0;
  std::vector<CvFoldRecord> log;
  /// Full-data fit at best_lambda, initialized from the CV fit.
  ModelFit refit;
};

CvResult lambda_path(const CoupledData& data, const FitConfig& config, const GridSpec& grid);

}  // namespace gsca
