#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gsca/evaluation.hpp"
#include "gsca/model_selection.hpp"
#include "gsca/simulation.hpp"
#include "gsca/solver.hpp"

namespace gsca {

/// Simulated data set with the uninformative binary columns already removed
/// from both the data and the ground truth.
struct Benchmark {
  SimParams params;
  SimGroundTruth truth;
  std::vector<Index> kept;

  CoupledData data() const { return truth.data(); }
};

Benchmark prepare_benchmark(const SimParams& params);

/// Scaled negative log-likelihood of the data under the true Theta and sigma2.
double bayes_error(const SimGroundTruth& truth, LinkKind link = LinkKind::Logit);

/// Singular values of the noise [E1 E2].
VectorXd noise_singular_values(const SimGroundTruth& truth);

struct PathOptions {
  int n_lambda = 30;
  double eps_f = 1e-8;
  int max_iter = 10000;
  double search_eps = 1e-2;
  std::optional<double> lambda_max;
  std::optional<double> lambda_min;
  LinkKind link = LinkKind::Logit;
  std::uint64_t seed = 1;
};

struct PathPoint {
  double lambda = 0.0;
  EvalReport report;
  int iterations = 0;
  bool converged = false;
  bool saturated = false;
};

/// Descending lambda path scored against the ground truth. Convex penalties
/// warm-start each lambda from the previous fit; concave ones start cold.
struct RmsePath {
  PenaltySpec penalty;
  double lambda_max = 0.0;
  double lambda_min = 0.0;
  /// One point per grid value, down to and including the first saturated fit.
  std::vector<PathPoint> points;
  /// Index of the point with minimum RMSE(Theta).
  std::size_t best = 0;
  ModelFit best_fit;

  const PathPoint& best_point() const { return points.at(best); }
};

RmsePath rmse_path(const CoupledData& data, const SimGroundTruth& truth, const PenaltySpec& penalty,
                   const PathOptions& options = {});

/// Full-information SCA with the rank chosen by minimum RMSE(Theta).
struct FullInformation {
  Index rank = 0;
  EvalReport report;
};

FullInformation best_full_information(const SimGroundTruth& truth, Index max_rank = 30);

/// Progress sink; receives one line per completed unit of work.
using ProgressFn = std::function<void(const std::string&)>;

struct MethodResult {
  std::string method;
  std::uint64_t seed = 0;
  double lambda = 0.0;  // 0 for the full-information baseline
  EvalReport report;
};

/// Best-lambda results for L1, L0.1, SCAD(5), GDP(1) and the full-information
/// baseline on each seed.
std::vector<MethodResult> run_table2(const std::vector<std::uint64_t>& seeds,
                                     const PathOptions& options, const ProgressFn& progress = {});

struct OverfitRun {
  double eps_f = 0.0;
  ModelFit fit;
  double max_abs_b1 = 0.0;
};

/// Exact-rank fits from one shared initialization, one per stopping tolerance.
std::vector<OverfitRun> run_overfit(const CoupledData& data, Index rank,
                                    const std::vector<double>& eps, std::uint64_t seed,
                                    int max_iter);

struct ExperimentOptions {
  std::filesystem::path out_dir = ".";
  std::vector<std::uint64_t> seeds{1, 2, 3};
  PathOptions path;
  /// Used by the cross-validation experiments.
  double cv_eps_f = 1e-5;
  int k = 7;
  std::uint64_t fold_seed = 1;
  /// Number of SNR levels in the SNR sweep.
  int n_snr = 20;
  ProgressFn progress;
};

const std::vector<std::string>& experiment_ids();

/// Runs one reproduction sweep and writes `<id>.csv` (plus auxiliary files)
/// into options.out_dir. Returns the path of the main table.
std::filesystem::path run_experiment(const std::string& id, const ExperimentOptions& options);

}  // namespace gsca
