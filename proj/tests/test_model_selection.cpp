#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "gsca/model_selection.hpp"
#include "test_util.hpp"

using namespace gsca;

namespace {

FitConfig gdp_config(double lambda, double eps = 1e-6) {
  FitConfig c;
  c.penalty = PenaltySpec::make(PenaltyFamily::Gdp, lambda, 1.0);
  c.eps_f = eps;
  return c;
}

std::vector<Index> fold_sizes(const Eigen::MatrixXi& folds, int k) {
  std::vector<Index> s(static_cast<std::size_t>(k), 0);
  for (Index i = 0; i < folds.size(); ++i)
    if (folds(i) >= 0) ++s[folds(i)];
  return s;
}

}  // namespace

TEST(EffectiveLambda, Examples) {
  EXPECT_DOUBLE_EQ(effective_lambda(10.0, 12, 3, 4), 10.0);
  EXPECT_DOUBLE_EQ(effective_lambda(10.0, 6, 3, 4), 5.0);
  EXPECT_EQ(effective_lambda(10.0, 0, 3, 4), 0.0);
  // Training set of a 7-fold split on a fully observed 160 x 1410 block.
  EXPECT_NEAR(effective_lambda(1.0, 193371, 160, 1410), 193371.0 / 225600.0, 1e-15);
  EXPECT_THROW(effective_lambda(1.0, 13, 3, 4), std::invalid_argument);
  EXPECT_THROW(effective_lambda(1.0, -1, 3, 4), std::invalid_argument);
  EXPECT_THROW(effective_lambda(1.0, 0, 0, 4), std::invalid_argument);
}

TEST(EffectiveLambda, CraftedMasks) {
  // Ten masks with known observed counts on a 4 x 5 grid.
  for (int n = 0; n < 10; ++n) {
    MatrixXd q = MatrixXd::Zero(4, 5);
    const Index count = 2 * n;
    for (Index t = 0; t < count; ++t) q(t % 4, t / 4) = 1.0;
    const Index observed = static_cast<Index>(q.sum());
    ASSERT_EQ(observed, count);
    EXPECT_DOUBLE_EQ(effective_lambda(3.0, observed, 4, 5), 3.0 * count / 20.0);
  }
}

TEST(DiagonalFolds, SevenBySevenWrapsDiagonals) {
  const MatrixXd mask = MatrixXd::Ones(7, 7);
  const std::vector<int> offsets = {0, 1, 2, 3, 4, 5, 6};
  const Eigen::MatrixXi f = diagonal_folds_with_offsets(mask, 7, offsets);
  for (Index i = 0; i < 7; ++i)
    for (Index j = 0; j < 7; ++j) EXPECT_EQ(f(i, j), (i + j) % 7);
  // Every fold holds exactly one entry per row and column.
  for (int k = 0; k < 7; ++k) {
    for (Index i = 0; i < 7; ++i) EXPECT_EQ((f.row(i).array() == k).count(), 1);
    for (Index j = 0; j < 7; ++j) EXPECT_EQ((f.col(j).array() == k).count(), 1);
  }
  EXPECT_TRUE(folds_cover_rows_and_columns(f));
}

TEST(DiagonalFolds, MissingEntriesAreSkipped) {
  MatrixXd mask = MatrixXd::Ones(4, 2);
  mask(1, 0) = 0.0;
  const Eigen::MatrixXi f = diagonal_folds_with_offsets(mask, 3, {1, 0});
  EXPECT_EQ(f(0, 0), 1);
  EXPECT_EQ(f(1, 0), -1);
  EXPECT_EQ(f(2, 0), 2);
  EXPECT_EQ(f(3, 0), 0);
  EXPECT_EQ(f(3, 1), 0);
  EXPECT_THROW(diagonal_folds_with_offsets(mask, 3, {1}), std::invalid_argument);
}

TEST(DiagonalFolds, CoverageDetection) {
  Eigen::MatrixXi f(2, 2);
  f << 0, 1, 0, 1;  // each column sits in a single fold
  EXPECT_FALSE(folds_cover_rows_and_columns(f));
  f << 0, 1, 1, 0;
  EXPECT_TRUE(folds_cover_rows_and_columns(f));
  f << 0, -1, -1, 1;  // lines with fewer than two observed entries are exempt
  EXPECT_TRUE(folds_cover_rows_and_columns(f));
}

TEST(DiagonalFolds, TwoFoldBalance) {
  const CoupledData data =
      CoupledData::fully_observed(MatrixXd::Zero(4, 2), MatrixXd::Zero(4, 2));
  const FoldAssignment f = diagonal_folds(data, 2, 3);
  EXPECT_EQ(f.fold_size(0), 8);
  EXPECT_EQ(f.fold_size(1), 8);
  EXPECT_TRUE(folds_cover_rows_and_columns(f.fold_of_entry));
}

TEST(DiagonalFolds, Invariants) {
  const SimGroundTruth t = test::small_truth(3, 23, 17, 29, 3);
  MatrixXd q1 = MatrixXd::Ones(23, 17), q2 = MatrixXd::Ones(23, 29);
  q1(4, 2) = 0.0;
  q2(0, 0) = 0.0;
  q2(10, 28) = 0.0;
  const CoupledData data(t.x1, t.x2, q1, q2);
  const FoldAssignment f = diagonal_folds(data, 7, 11);
  const MatrixXd mask = data.mask();
  for (Index i = 0; i < mask.size(); ++i) EXPECT_EQ(f.fold_of_entry(i) < 0, mask(i) == 0.0);

  const Eigen::MatrixXi b1 = f.fold_of_entry.leftCols(17);
  const Eigen::MatrixXi b2 = f.fold_of_entry.rightCols(29);
  for (const Eigen::MatrixXi& b : {b1, b2}) {
    const auto s = fold_sizes(b, 7);
    EXPECT_LE(*std::max_element(s.begin(), s.end()) - *std::min_element(s.begin(), s.end()), 1);
    EXPECT_TRUE(folds_cover_rows_and_columns(b));
  }

  Index total = 0;
  for (int k = 0; k < 7; ++k) {
    auto [t1, t2] = f.training_masks(k);
    auto [h1, h2] = f.holdout_masks(k);
    EXPECT_EQ((t1 + h1 - q1).norm(), 0.0);
    EXPECT_EQ((t2 + h2 - q2).norm(), 0.0);
    total += f.fold_size(k);
  }
  EXPECT_EQ(total, data.observed());

  EXPECT_EQ(diagonal_folds(data, 7, 11).fold_of_entry, f.fold_of_entry);
  EXPECT_NE(diagonal_folds(data, 7, 12).fold_of_entry, f.fold_of_entry);
}

TEST(DiagonalFolds, RejectsBadK) {
  const CoupledData data = test::small_truth(1).data();
  EXPECT_THROW(diagonal_folds(data, 1, 1), std::invalid_argument);
  const CoupledData tiny =
      CoupledData::fully_observed(MatrixXd::Zero(2, 1), MatrixXd::Zero(2, 3));
  EXPECT_THROW(diagonal_folds(tiny, 3, 1), std::invalid_argument);
}

TEST(LogSpaced, Examples) {
  const std::vector<double> g = log_spaced_descending(100.0, 1.0, 3);
  ASSERT_EQ(g.size(), 3u);
  EXPECT_EQ(g[0], 100.0);
  EXPECT_NEAR(g[1], 10.0, 1e-12);
  EXPECT_EQ(g[2], 1.0);
  EXPECT_EQ(log_spaced_descending(5.0, 1.0, 1), std::vector<double>{5.0});
  EXPECT_THROW(log_spaced_descending(5.0, 0.0, 3), std::invalid_argument);
  EXPECT_THROW(log_spaced_descending(5.0, 1.0, 0), std::invalid_argument);
}

TEST(HeldoutError, Examples) {
  const CoupledData data(MatrixXd::Ones(2, 1), MatrixXd::Zero(2, 1), MatrixXd::Ones(2, 1),
                         MatrixXd::Ones(2, 1));
  const MatrixXd theta = MatrixXd::Zero(2, 2);
  MatrixXd first = MatrixXd::Zero(2, 1);
  first(0, 0) = 1.0;
  // One binary entry: -log(1/2).
  EXPECT_NEAR(heldout_error(data, theta, 1.0, first, MatrixXd::Zero(2, 1), LinkKind::Logit),
              std::log(2.0), 1e-15);
  // Binary and Gaussian entries, sigma2 = 1/(2 pi) so the Gaussian term vanishes.
  EXPECT_NEAR(heldout_error(data, theta, 1.0 / (2 * M_PI), MatrixXd::Ones(2, 1),
                            MatrixXd::Ones(2, 1), LinkKind::Logit),
              std::log(2.0) / 2.0, 1e-15);
  EXPECT_THROW(heldout_error(data, theta, 1.0, MatrixXd::Zero(2, 1), MatrixXd::Zero(2, 1),
                             LinkKind::Logit),
               std::invalid_argument);
}

TEST(CvError, HeldOutValuesNeverReachTheFit) {
  const SimGroundTruth t = test::small_truth(4);
  const CoupledData data = t.data();
  const FoldAssignment folds = diagonal_folds(data, 5, 2);
  auto [t1, t2] = folds.training_masks(0);
  auto [h1, h2] = folds.holdout_masks(0);

  MatrixXd x1 = t.x1, x2 = t.x2;
  for (Index i = 0; i < x1.size(); ++i)
    if (h1(i) == 1.0) x1(i) = 1.0 - x1(i);
  for (Index i = 0; i < x2.size(); ++i)
    if (h2(i) == 1.0) x2(i) = 1e3;

  const FitConfig c = gdp_config(25.0);
  const ModelFit a = fit_gsca(CoupledData(t.x1, t.x2, t1, t2), c);
  const ModelFit b = fit_gsca(CoupledData(x1, x2, t1, t2), c);
  EXPECT_EQ(a.z, b.z);
  EXPECT_EQ(a.mu, b.mu);
  EXPECT_EQ(a.sigma2, b.sigma2);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
}

TEST(CvError, DeterministicAndAccountsForEveryEntry) {
  const CoupledData data = test::small_truth(5).data();
  const FoldAssignment folds = diagonal_folds(data, 4, 9);
  // Folds train on 3/4 of the entries, so their effective lambda is smaller.
  const FitConfig c = gdp_config(40.0);
  const CvEvaluation a = cv_error(data, folds, c);
  const CvEvaluation b = cv_error(data, folds, c);
  ASSERT_EQ(a.folds.size(), 4u);
  Index heldout = 0;
  for (std::size_t f = 0; f < a.folds.size(); ++f) {
    heldout += a.folds[f].heldout;
    EXPECT_EQ(a.folds[f].error, b.folds[f].error);
    EXPECT_TRUE(std::isfinite(a.folds[f].error));
    EXPECT_GT(a.folds[f].error, 0.0);
  }
  EXPECT_EQ(heldout, data.observed());
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_GE(a.se, 0.0);

  const CvEvaluation p = cv_error(data, folds, c, CvMode::ColdParallel);
  const CvEvaluation q = cv_error(data, folds, c, CvMode::ColdParallel);
  EXPECT_EQ(p.mean, q.mean);
}

TEST(CvError, SaturatedFoldsScoreInfinity) {
  const CoupledData data = test::small_truth(6).data();
  const FoldAssignment folds = diagonal_folds(data, 3, 1);
  const CvEvaluation ev = cv_error(data, folds, gdp_config(0.0, 1e-4));
  for (const auto& rec : ev.folds) {
    EXPECT_TRUE(rec.saturated);
    EXPECT_TRUE(std::isinf(rec.error));
  }
  EXPECT_TRUE(std::isinf(ev.mean));
}

TEST(LambdaPath, SinglePointGrid) {
  const CoupledData data = test::small_truth(7).data();
  GridSpec grid;
  grid.n_lambda = 1;
  grid.lambda_max = 30.0;
  grid.k = 4;
  std::size_t calls = 0;
  grid.on_refit = [&](std::size_t i, const ModelFit&) {
    EXPECT_EQ(i, 0u);
    ++calls;
  };
  const CvResult r = lambda_path(data, gdp_config(1.0), grid);
  ASSERT_EQ(r.lambda_grid.size(), 1u);
  EXPECT_EQ(r.lambda_grid[0], 30.0);
  EXPECT_EQ(r.best_index, 0u);
  EXPECT_EQ(r.best_lambda, 30.0);
  EXPECT_EQ(r.log.size(), 4u);
  EXPECT_EQ(calls, 1u);
}

TEST(LambdaPath, PicksMinimumAndIsDeterministic) {
  const CoupledData data = test::small_truth(8).data();
  GridSpec grid;
  grid.n_lambda = 5;
  grid.lambda_max = 60.0;
  grid.lambda_min = 3.0;
  grid.k = 4;
  const CvResult a = lambda_path(data, gdp_config(1.0), grid);
  const CvResult b = lambda_path(data, gdp_config(1.0), grid);
  ASSERT_EQ(a.cv_error.size(), 5u);
  EXPECT_EQ(a.cv_error, b.cv_error);
  EXPECT_EQ(a.best_index, b.best_index);
  for (double e : a.cv_error) EXPECT_GE(e, a.cv_error[a.best_index]);
  EXPECT_EQ(a.log.size(), 20u);
  for (std::size_t i = 1; i < a.lambda_grid.size(); ++i)
    EXPECT_LT(a.lambda_grid[i], a.lambda_grid[i - 1]);
}

TEST(LambdaBounds, BracketTheInterestingRange) {
  const CoupledData data = test::small_truth(9).data();
  FitConfig c = gdp_config(1.0);
  const LambdaBounds b = find_lambda_bounds(data, c);
  EXPECT_GT(b.lambda_max, b.lambda_min);
  c.eps_f = 1e-2;
  c.penalty.lambda = b.lambda_max;
  EXPECT_LE(fit_gsca(data, c).rank(), 1);
  c.penalty.lambda = b.lambda_min;
  const ModelFit low = fit_gsca(data, c);
  EXPECT_TRUE(low.warned_saturated || low.rank() >= 19);
}
