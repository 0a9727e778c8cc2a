#include "gsca/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <random>
#include <sstream>

#include "gsca/linalg.hpp"

namespace gsca {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXi block_folds(const MatrixXd& mask, int k, std::mt19937_64& rng) {
  const Index cols = mask.cols();
  std::vector<Index> counts(static_cast<std::size_t>(cols));
  for (Index j = 0; j < cols; ++j) counts[j] = static_cast<Index>(mask.col(j).sum());

  std::vector<Index> order(static_cast<std::size_t>(cols));
  for (Index j = 0; j < cols; ++j) order[j] = j;
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_int_distribution<int> offset_dist(0, k - 1);

  // Columns whose count is not a multiple of K place their surplus entries in
  // a window of folds starting at the offset; chaining the windows keeps the
  // fold totals within one of each other.
  std::vector<int> offsets(static_cast<std::size_t>(cols));
  int next = offset_dist(rng);
  for (Index j : order) {
    if (counts[j] % k == 0) {
      offsets[j] = offset_dist(rng);
    } else {
      offsets[j] = next;
      next = static_cast<int>((next + counts[j]) % k);
    }
  }
  return diagonal_folds_with_offsets(mask, k, offsets);
}

bool balanced(const Eigen::MatrixXi& folds, int k) {
  std::vector<Index> sizes(static_cast<std::size_t>(k), 0);
  for (Index j = 0; j < folds.cols(); ++j)
    for (Index i = 0; i < folds.rows(); ++i)
      if (folds(i, j) >= 0) ++sizes[folds(i, j)];
  const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
  return *hi - *lo <= 1;
}

template <typename Line>
bool line_covered(const Line& line) {
  int first = -1;
  Index observed = 0;
  for (Index t = 0; t < line.size(); ++t) {
    const int f = line(t);
    if (f < 0) continue;
    ++observed;
    if (first < 0) {
      first = f;
    } else if (f != first) {
      return true;
    }
  }
  return observed < 2;
}

}  // namespace

Eigen::MatrixXi diagonal_folds_with_offsets(const MatrixXd& mask, int k,
                                            const std::vector<int>& offsets) {
  if (k < 1) throw std::invalid_argument("K must be positive");
  if (static_cast<Index>(offsets.size()) != mask.cols())
    throw std::invalid_argument("one offset per column required");
  Eigen::MatrixXi folds = Eigen::MatrixXi::Constant(mask.rows(), mask.cols(), -1);
  for (Index j = 0; j < mask.cols(); ++j) {
    Index t = 0;
    for (Index i = 0; i < mask.rows(); ++i) {
      if (mask(i, j) == 0.0) continue;
      folds(i, j) = static_cast<int>((t + offsets[j]) % k);
      ++t;
    }
  }
  return folds;
}

bool folds_cover_rows_and_columns(const Eigen::MatrixXi& folds) {
  for (Index i = 0; i < folds.rows(); ++i)
    if (!line_covered(folds.row(i))) return false;
  for (Index j = 0; j < folds.cols(); ++j)
    if (!line_covered(folds.col(j))) return false;
  return true;
}

FoldAssignment diagonal_folds(const CoupledData& data, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("K must be at least 2");
  if (data.observed_binary() < k || data.observed_quantitative() < k)
    throw std::invalid_argument("K exceeds the number of observed entries in a block");

  std::mt19937_64 rng(seed);
  const auto draw = [&](const MatrixXd& mask, const char* name) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      Eigen::MatrixXi f = block_folds(mask, k, rng);
      if (balanced(f, k) && folds_cover_rows_and_columns(f)) return f;
    }
    throw std::runtime_error(std::string("could not build diagonal folds for the ") + name +
                             " block after 100 attempts");
  };
  const Eigen::MatrixXi f1 = draw(data.q1(), "binary");
  const Eigen::MatrixXi f2 = draw(data.q2(), "quantitative");

  FoldAssignment out;
  out.k = k;
  out.j1 = data.j1();
  out.fold_of_entry.resize(data.rows(), data.cols());
  out.fold_of_entry << f1, f2;
  return out;
}

std::pair<MatrixXd, MatrixXd> FoldAssignment::training_masks(int f) const {
  const MatrixXd m =
      (fold_of_entry.array() >= 0 && fold_of_entry.array() != f).cast<double>().matrix();
  return {m.leftCols(j1), m.rightCols(m.cols() - j1)};
}

std::pair<MatrixXd, MatrixXd> FoldAssignment::holdout_masks(int f) const {
  const MatrixXd m = (fold_of_entry.array() == f).cast<double>().matrix();
  return {m.leftCols(j1), m.rightCols(m.cols() - j1)};
}

Index FoldAssignment::fold_size(int f) const { return (fold_of_entry.array() == f).count(); }

double effective_lambda(double lambda, Index n_observed, Index rows, Index cols) {
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("dimensions must be positive");
  if (n_observed < 0 || n_observed > rows * cols)
    throw std::invalid_argument("observed count out of range");
  return lambda * static_cast<double>(n_observed) /
         (static_cast<double>(rows) * static_cast<double>(cols));
}

double heldout_error(const CoupledData& data, const MatrixXd& theta, double sigma2,
                     const MatrixXd& h1, const MatrixXd& h2, LinkKind link) {
  const double count = h1.sum() + h2.sum();
  if (count <= 0.0) throw std::invalid_argument("empty hold-out set");
  const double nll = binary_nll(data.x1(), theta.leftCols(data.j1()), h1, link) +
                     quantitative_nll(data.x2(), theta.rightCols(data.j2()), sigma2, h2);
  return nll / count;
}

CvEvaluation cv_error(const CoupledData& data, const FoldAssignment& folds,
                      const FitConfig& config, CvMode mode) {
  if (folds.fold_of_entry.rows() != data.rows() || folds.fold_of_entry.cols() != data.cols())
    throw std::invalid_argument("fold assignment does not match the data");

  const auto run_fold = [&](int f, std::optional<ModelFit> init) {
    auto [t1, t2] = folds.training_masks(f);
    auto [h1, h2] = folds.holdout_masks(f);
    const CoupledData train = data.with_masks(std::move(t1), std::move(t2));
    FitConfig fold_config = config;
    fold_config.penalty.lambda =
        effective_lambda(config.penalty.lambda, train.observed(), data.rows(), data.cols());
    fold_config.warm_start = std::move(init);
    ModelFit fit = fit_gsca(train, fold_config);

    CvFoldRecord rec;
    rec.lambda = config.penalty.lambda;
    rec.fold = f;
    rec.heldout = static_cast<Index>(h1.sum() + h2.sum());
    rec.rank = fit.rank();
    rec.iterations = fit.iterations;
    rec.saturated = fit.warned_saturated;
    rec.error = fit.warned_saturated
                    ? kInf
                    : heldout_error(data, fit.theta(), fit.sigma2, h1, h2, config.link);
    return std::make_pair(rec, std::move(fit));
  };

  CvEvaluation out;
  if (mode == CvMode::WarmSequential) {
    std::optional<ModelFit> init = config.warm_start;
    for (int f = 0; f < folds.k; ++f) {
      auto [rec, fit] = run_fold(f, std::move(init));
      out.folds.push_back(rec);
      init = fit;
      out.last_fit = std::move(fit);
    }
  } else {
    std::vector<std::future<std::pair<CvFoldRecord, ModelFit>>> jobs;
    for (int f = 0; f < folds.k; ++f)
      jobs.push_back(std::async(std::launch::async, run_fold, f, std::nullopt));
    for (auto& job : jobs) {
      auto [rec, fit] = job.get();
      out.folds.push_back(rec);
      out.last_fit = std::move(fit);
    }
  }

  const auto n = static_cast<double>(out.folds.size());
  double sum = 0.0;
  double rank_sum = 0.0;
  for (const auto& rec : out.folds) {
    sum += rec.error;
    rank_sum += static_cast<double>(rec.rank);
  }
  out.mean = sum / n;
  out.mean_rank = rank_sum / n;
  if (std::isfinite(out.mean) && out.folds.size() > 1) {
    double ss = 0.0;
    for (const auto& rec : out.folds) ss += (rec.error - out.mean) * (rec.error - out.mean);
    out.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  } else {
    out.se = std::isfinite(out.mean) ? 0.0 : kInf;
  }
  return out;
}

LambdaBounds find_lambda_bounds(const CoupledData& data, const FitConfig& config,
                                double search_eps, double start) {
  if (!(start > 0.0)) throw std::invalid_argument("search start must be positive");
  FitConfig probe = config;
  probe.eps_f = search_eps;
  probe.warm_start.reset();
  const Index full_rank = std::min(data.rows(), data.cols()) - 1;
  const auto fit_at = [&](double lambda) {
    probe.penalty.lambda = lambda;
    return fit_gsca(data, probe);
  };

  std::ostringstream trail;
  constexpr int kMaxSteps = 60;
  double lambda = start;
  LambdaBounds bounds;

  ModelFit fit = fit_at(lambda);
  trail << "lambda=" << lambda << " rank=" << fit.rank() << "; ";
  if (fit.rank() <= 1 && !fit.warned_saturated) {
    // Shrink until the rank exceeds one; the last value with rank <= 1 is the top.
    double last_ok = lambda;
    int steps = 0;
    for (; steps < kMaxSteps; ++steps) {
      lambda /= 2.0;
      fit = fit_at(lambda);
      trail << "lambda=" << lambda << " rank=" << fit.rank() << "; ";
      if (fit.rank() > 1 || fit.warned_saturated) break;
      last_ok = lambda;
    }
    if (steps == kMaxSteps) throw std::runtime_error("lambda bound search failed: " + trail.str());
    bounds.lambda_max = last_ok;
  } else {
    int steps = 0;
    for (; steps < kMaxSteps; ++steps) {
      lambda *= 2.0;
      fit = fit_at(lambda);
      trail << "lambda=" << lambda << " rank=" << fit.rank() << "; ";
      if (fit.rank() <= 1 && !fit.warned_saturated) break;
    }
    if (steps == kMaxSteps) throw std::runtime_error("lambda bound search failed: " + trail.str());
    bounds.lambda_max = lambda;
  }

  lambda = bounds.lambda_max;
  int steps = 0;
  for (; steps < kMaxSteps; ++steps) {
    lambda /= 2.0;
    fit = fit_at(lambda);
    trail << "lambda=" << lambda << " rank=" << fit.rank()
          << (fit.warned_saturated ? " saturated" : "") << "; ";
    if (fit.rank() >= full_rank || fit.warned_saturated) break;
  }
  if (steps == kMaxSteps) throw std::runtime_error("lambda bound search failed: " + trail.str());
  bounds.lambda_min = lambda;
  return bounds;
}

std::vector<double> log_spaced_descending(double hi, double lo, int n) {
  if (n < 1) throw std::invalid_argument("grid needs at least one point");
  if (!(hi > 0.0) || !(lo > 0.0)) throw std::invalid_argument("grid bounds must be positive");
  std::vector<double> grid(static_cast<std::size_t>(n));
  if (n == 1) {
    grid[0] = hi;
    return grid;
  }
  const double a = std::log(hi);
  const double b = std::log(lo);
  for (int t = 0; t < n; ++t) grid[t] = std::exp(a + (b - a) * t / (n - 1));
  grid.front() = hi;
  grid.back() = lo;
  return grid;
}

CvResult lambda_path(const CoupledData& data, const FitConfig& config, const GridSpec& grid) {
  double hi = 0.0;
  double lo = 0.0;
  if (grid.lambda_max && (grid.lambda_min || grid.n_lambda == 1)) {
    hi = *grid.lambda_max;
    lo = grid.lambda_min.value_or(hi);
  } else {
    const LambdaBounds b = find_lambda_bounds(data, config, grid.search_eps);
    hi = grid.lambda_max.value_or(b.lambda_max);
    lo = grid.lambda_min.value_or(b.lambda_min);
  }
  if (lo > hi) std::swap(lo, hi);

  const FoldAssignment folds = diagonal_folds(data, grid.k, grid.fold_seed);
  CvResult result;
  result.lambda_grid = log_spaced_descending(hi, lo, grid.n_lambda);

  // A singular value that is zero at one lambda gets the largest weight of a
  // concave penalty at the next, so chaining along lambda would freeze the rank.
  // Concave paths restart every lambda from the seeded initialization; the
  // folds within a lambda are still chained.
  const bool chain_lambdas = is_convex(config.penalty);
  std::optional<ModelFit> warm = config.warm_start;
  double best_error = std::numeric_limits<double>::infinity();
  for (double lambda : result.lambda_grid) {
    FitConfig cfg = config;
    cfg.penalty.lambda = lambda;
    const bool first = result.cv_error.empty();
    cfg.warm_start =
        grid.mode == CvMode::WarmSequential && (chain_lambdas || first) ? warm : std::nullopt;
    CvEvaluation ev = cv_error(data, folds, cfg, grid.mode);

    FitConfig refit_cfg = config;
    refit_cfg.penalty.lambda =
        effective_lambda(lambda, data.observed(), data.rows(), data.cols());
    refit_cfg.warm_start = ev.last_fit;
    ModelFit refit = fit_gsca(data, refit_cfg);

    result.cv_error.push_back(ev.mean);
    result.cv_se.push_back(ev.se);
    result.rank_cv.push_back(ev.mean_rank);
    result.rank_refit.push_back(refit.rank());
    result.log.insert(result.log.end(), ev.folds.begin(), ev.folds.end());
    warm = std::move(ev.last_fit);
    const std::size_t index = result.cv_error.size() - 1;
    if (grid.on_refit) grid.on_refit(index, refit);
    if (index == 0 || ev.mean < best_error) {
      best_error = ev.mean;
      result.best_index = index;
      result.refit = std::move(refit);
    }
  }
  result.best_lambda = result.lambda_grid[result.best_index];
  return result;
}

}  // namespace gsca
