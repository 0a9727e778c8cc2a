// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any selected criterion fails.
//
//   acceptance                 all criteria
//   acceptance --only 1,2,9    a subset
//   acceptance --seeds 1,2,3   seeds for the full-scale penalty comparison

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gsca/experiments.hpp"
#include "gsca/linalg.hpp"
#include "gsca/model_selection.hpp"
#include "gsca/penalties.hpp"
#include "gsca/simulation.hpp"
#include "gsca/solver.hpp"

using namespace gsca;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

void detail(const std::string& line) { std::cout << "    " << line << std::endl; }

struct Outcome {
  bool pass = false;
  std::string summary;
};

MatrixXd random_matrix(Index r, Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  MatrixXd m(r, c);
  for (Index i = 0; i < m.size(); ++i) m(i) = n(rng);
  return m;
}

SimParams small_params(std::uint64_t seed) {
  SimParams p;
  p.rows = 20;
  p.j1 = 15;
  p.j2 = 25;
  p.rank = 3;
  p.seed = seed;
  p.mu1 = VectorXd::Constant(p.j1, -0.5);
  p.mu2 = gaussian_offsets(p.j2, seed);
  return p;
}

// ---------------------------------------------------------------------------

Outcome gradients() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> theta(-5.0, 5.0);
  std::bernoulli_distribution coin(0.5);
  const double h = 1e-5;
  double worst = 0.0;
  const auto rel = [](double g, double fd) { return std::abs(g - fd) / std::max(1.0, std::abs(fd)); };
  for (int i = 0; i < 50; ++i) {
    const MatrixXd one = MatrixXd::Ones(1, 1);
    const double x = coin(rng) ? 1.0 : 0.0;
    const double t = theta(rng);
    for (LinkKind k : {LinkKind::Logit, LinkKind::Probit}) {
      const double fd = (bernoulli_nll(k, x, t + h) - bernoulli_nll(k, x, t - h)) / (2 * h);
      const double g = grad_f1(MatrixXd::Constant(1, 1, x), MatrixXd::Constant(1, 1, t), one, k)(0, 0);
      worst = std::max(worst, rel(g, fd));
    }
    const double y = theta(rng), s2 = 0.5 + std::abs(theta(rng));
    const auto f2 = [&](double v) {
      return quantitative_nll(MatrixXd::Constant(1, 1, y), MatrixXd::Constant(1, 1, v), s2, one);
    };
    const double fd = (f2(t + h) - f2(t - h)) / (2 * h);
    const double g = grad_f2(MatrixXd::Constant(1, 1, y), MatrixXd::Constant(1, 1, t), one, s2)(0, 0);
    worst = std::max(worst, rel(g, fd));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-6 && secs < 1.0,
          "max relative error " + fmt(worst, 3) + " over 50 points, " + fmt(secs, 3) + " s"};
}

Outcome monotonicity() {
  const auto t0 = Clock::now();
  // Strengths that leave a few components on the 20 x 40 instances.
  const std::vector<PenaltySpec> specs = {PenaltySpec::make(PenaltyFamily::Nuclear, 9.0),
                                          PenaltySpec::make(PenaltyFamily::Lq, 150.0, 0.1),
                                          PenaltySpec::make(PenaltyFamily::Scad, 9.0, 5.0),
                                          PenaltySpec::make(PenaltyFamily::Gdp, 25.0, 1.0)};
  int violations = 0;
  int fits = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const CoupledData data = simulate_coupled(small_params(seed)).data();
    for (const PenaltySpec& spec : specs) {
      FitConfig c;
      c.penalty = spec;
      c.seed = seed;
      const ModelFit fit = fit_gsca(data, c);
      ++fits;
      for (std::size_t k = 1; k < fit.loss_trace.size(); ++k) {
        const double prev = fit.loss_trace[k - 1];
        const double rise = (fit.loss_trace[k] - prev) / std::abs(prev);
        worst = std::max(worst, rise);
        if (rise > 1e-9) {
          ++violations;
          detail("seed " + std::to_string(seed) + " " + spec.label() + " iteration " +
                 std::to_string(k) + ": relative increase " + fmt(rise, 3));
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  return {violations == 0 && secs < 30.0,
          std::to_string(fits) + " fits, " + std::to_string(violations) +
              " violations, largest relative increase " + fmt(worst, 3) + ", " + fmt(secs, 3) + " s"};
}

// 0.5 ||Z - JH||^2 + (1/L) sum_r w_r xi_r(Z)
double linearized_objective(const MatrixXd& z, const MatrixXd& jh, const VectorXd& w, double l) {
  const VectorXd s = singular_values(z);
  return 0.5 * (z - jh).squaredNorm() + w.head(s.size()).dot(s) / l;
}

Outcome svt_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n;
  const PenaltySpec gdp = PenaltySpec::make(PenaltyFamily::Gdp, 1.0, 1.0);
  const double lipschitz = 2.0;
  int beaten = 0;
  for (int t = 0; t < 20; ++t) {
    const MatrixXd h = random_matrix(6, 5, rng);
    const MatrixXd jh = column_center(h);
    const VectorXd w = supergradients(gdp, singular_values(jh));
    const ZUpdate u = update_z(h, w, lipschitz);
    const double best = linearized_objective(u.z, jh, w, lipschitz);
    for (int p = 0; p < 1000; ++p) {
      const double scale = std::pow(10.0, -3.0 + (p % 4));
      const MatrixXd probe = u.z + scale * random_matrix(6, 5, rng);
      if (linearized_objective(probe, jh, w, lipschitz) < best - 1e-12) ++beaten;
    }
  }

  // Diagonal inputs: H = [D; -D] is column-centered with singular values sqrt(2) d.
  double diag_err = 0.0;
  for (int t = 0; t < 20; ++t) {
    VectorXd d(4);
    for (Index r = 0; r < 4; ++r) d[r] = 0.1 + 5.0 * std::abs(n(rng));
    std::sort(d.data(), d.data() + 4, std::greater<>());
    VectorXd w(4);
    for (Index r = 0; r < 4; ++r) w[r] = std::abs(n(rng));
    std::sort(w.data(), w.data() + 4);
    MatrixXd h = MatrixXd::Zero(8, 4);
    h.topRows(4).diagonal() = d;
    h.bottomRows(4).diagonal() = -d;
    const ZUpdate u = update_z(h, w, lipschitz);
    MatrixXd expected = MatrixXd::Zero(8, 4);
    for (Index r = 0; r < 4; ++r) {
      const double s = std::max(std::sqrt(2.0) * d[r] - w[r] / lipschitz, 0.0) / std::sqrt(2.0);
      expected(r, r) = s;
      expected(r + 4, r) = -s;
    }
    diag_err = std::max(diag_err, (u.z - expected).cwiseAbs().maxCoeff());

    MatrixXd m = MatrixXd::Zero(5, 4);
    m.diagonal() = d;
    const SvtResult plain = weighted_svt(m, w, 1.0 / lipschitz);
    MatrixXd soft = MatrixXd::Zero(5, 4);
    soft.diagonal() = (d - w / lipschitz).cwiseMax(0.0);
    diag_err = std::max(diag_err, (plain.matrix - soft).cwiseAbs().maxCoeff());
  }
  const double secs = seconds_since(t0);
  return {beaten == 0 && diag_err <= 1e-10 && secs < 10.0,
          std::to_string(beaten) + " of 20000 perturbations beat the update, diagonal max error " +
              fmt(diag_err, 3) + ", " + fmt(secs, 3) + " s"};
}

// ---------------------------------------------------------------------------
// Full-scale (160 x 1410) penalty comparison, shared by criteria 4 and 5.

struct FamilyRun {
  std::string label;
  double rmse_theta = 0.0;
  Index rank = 0;
  double lambda = 0.0;
  VectorXd singular_values;
};

struct SeedRun {
  std::uint64_t seed = 0;
  VectorXd true_singular_values;
  std::map<std::string, FamilyRun> families;
  FullInformation full;
};

const std::vector<PenaltySpec>& table_specs() {
  static const std::vector<PenaltySpec> specs = {
      PenaltySpec::make(PenaltyFamily::Nuclear, 1.0), PenaltySpec::make(PenaltyFamily::Lq, 1.0, 0.1),
      PenaltySpec::make(PenaltyFamily::Scad, 1.0, 5.0), PenaltySpec::make(PenaltyFamily::Gdp, 1.0, 1.0)};
  return specs;
}

struct Comparison {
  std::vector<SeedRun> seeds;
  double seconds = 0.0;
};

const Comparison& comparison(const std::vector<std::uint64_t>& seeds) {
  static std::optional<Comparison> cached;
  if (cached) return *cached;
  const auto t0 = Clock::now();
  Comparison c;
  for (std::uint64_t seed : seeds) {
    const Benchmark bm = prepare_benchmark(benchmark_params(seed));
    SeedRun run;
    run.seed = seed;
    run.true_singular_values = singular_values(bm.truth.z);
    for (const PenaltySpec& spec : table_specs()) {
      const RmsePath path = rmse_path(bm.data(), bm.truth, spec);
      FamilyRun f;
      f.label = spec.label();
      f.rmse_theta = path.best_point().report.rmse_theta;
      f.rank = path.best_point().report.rank_hat;
      f.lambda = path.best_point().lambda;
      f.singular_values = path.best_fit.singular_values;
      std::cerr << "[" << fmt(seconds_since(t0), 5) << " s] seed " << seed << " " << f.label
                << ": RMSE(Theta) " << f.rmse_theta << " rank " << f.rank << std::endl;
      run.families[spec.label()] = f;
    }
    run.full = best_full_information(bm.truth);
    c.seeds.push_back(std::move(run));
  }
  c.seconds = seconds_since(t0);
  cached = std::move(c);
  return *cached;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome table2(const std::vector<std::uint64_t>& seeds) {
  const Comparison& c = comparison(seeds);
  std::map<std::string, std::vector<double>> rmse, rank;
  for (const SeedRun& s : c.seeds) {
    std::string line = "seed " + std::to_string(s.seed) + ":";
    for (const auto& [label, f] : s.families) {
      line += " " + label + " " + fmt(f.rmse_theta) + " (rank " + std::to_string(f.rank) + ")";
      rmse[label].push_back(f.rmse_theta);
      rank[label].push_back(static_cast<double>(f.rank));
    }
    line += "; full information " + fmt(s.full.report.rmse_theta) + " (rank " +
            std::to_string(s.full.rank) + ")";
    detail(line);
  }
  const auto mean = [](const std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
  };
  const double gdp = mean(rmse["GDP(1)"]), lq = mean(rmse["L0.1"]), scad = mean(rmse["SCAD(5)"]),
               l1 = mean(rmse["L1"]);
  const double gdp_rank = median(rank["GDP(1)"]), lq_rank = median(rank["L0.1"]);

  std::vector<std::string> failed;
  if (!(gdp <= 0.08)) failed.push_back("GDP RMSE");
  if (gdp_rank != 9.0) failed.push_back("GDP rank");
  if (!(lq <= 0.08)) failed.push_back("L0.1 RMSE");
  if (lq_rank != 9.0) failed.push_back("L0.1 rank");
  if (!(l1 >= 0.14 && l1 <= 0.23)) failed.push_back("L1 RMSE");
  if (!(scad > gdp && scad < l1)) failed.push_back("SCAD ordering");
  if (!(c.seconds <= 7200.0)) failed.push_back("runtime");

  std::string summary = "mean RMSE(Theta) GDP " + fmt(gdp) + " L0.1 " + fmt(lq) + " SCAD " +
                        fmt(scad) + " L1 " + fmt(l1) + "; median rank GDP " + fmt(gdp_rank) +
                        " L0.1 " + fmt(lq_rank) + "; " + fmt(c.seconds, 5) + " s";
  for (std::size_t i = 0; i < failed.size(); ++i)
    summary += (i ? ", " : "; failed: ") + failed[i];
  return {failed.empty(), summary};
}

Outcome singular_value_recovery(const std::vector<std::uint64_t>& seeds) {
  const Comparison& c = comparison(seeds);
  int good = 0;
  for (const SeedRun& s : c.seeds) {
    const VectorXd& truth = s.true_singular_values;
    const auto within = [&](const VectorXd& est) {
      for (Index r = 0; r < 9; ++r)
        if (std::abs(est[r] - truth[r]) > 0.1 * truth[r]) return false;
      return true;
    };
    const bool gdp = within(s.families.at("GDP(1)").singular_values);
    const bool lq = within(s.families.at("L0.1").singular_values);
    const VectorXd& l1 = s.families.at("L1").singular_values;
    bool under = true;
    for (Index r = 0; r < 9; ++r) under = under && l1[r] < truth[r];
    const VectorXd& scad = s.families.at("SCAD(5)").singular_values;
    bool over = false;
    for (Index r = 0; r < 3; ++r) over = over || scad[r] > truth[r];
    const bool ok = gdp && lq && under && over;
    good += ok;

    std::string line = "seed " + std::to_string(s.seed) + (ok ? " ok" : " not ok") + ": GDP " +
                       (gdp ? "within" : "outside") + " 10%, L0.1 " + (lq ? "within" : "outside") +
                       " 10%, L1 " + (under ? "below" : "not below") + " truth, SCAD " +
                       (over ? "above" : "not above") + " truth in top 3";
    detail(line);
    std::string table = "  r: truth / GDP / L0.1 / L1 / SCAD";
    for (Index r = 0; r < 10; ++r)
      table += " | " + std::to_string(r + 1) + ": " + fmt(truth[r], 3) + " / " +
               fmt(s.families.at("GDP(1)").singular_values[r], 3) + " / " +
               fmt(s.families.at("L0.1").singular_values[r], 3) + " / " + fmt(l1[r], 3) + " / " +
               fmt(scad[r], 3);
    detail(table);
  }
  const int need = static_cast<int>(c.seeds.size()) / 2 + 1;
  return {good >= need, std::to_string(good) + " of " + std::to_string(c.seeds.size()) +
                            " seeds reproduce the singular value pattern (need " +
                            std::to_string(need) + ")"};
}

Outcome snr_sweep(std::uint64_t seed) {
  const auto t0 = Clock::now();
  std::vector<double> snrs = log_spaced_descending(100.0, 0.1, 5);
  std::reverse(snrs.begin(), snrs.end());
  bool dominated = true;
  std::vector<double> z1;
  for (double snr : snrs) {
    SimParams params = benchmark_params(seed);
    params.snr1 = snr;
    params.snr2 = snr;
    const Benchmark bm = prepare_benchmark(params);
    const RmsePath gdp = rmse_path(bm.data(), bm.truth, PenaltySpec::make(PenaltyFamily::Gdp, 1.0, 1.0));
    const RmsePath l1 = rmse_path(bm.data(), bm.truth, PenaltySpec::make(PenaltyFamily::Nuclear, 1.0));
    const EvalReport& g = gdp.best_point().report;
    const EvalReport& n = l1.best_point().report;
    dominated = dominated && g.rmse_theta <= n.rmse_theta;
    z1.push_back(g.rmse_z1);
    detail("SNR " + fmt(snr) + ": GDP RMSE(Theta) " + fmt(g.rmse_theta) + " RMSE(Z1) " +
           fmt(g.rmse_z1) + " rank " + std::to_string(g.rank_hat) + "; L1 RMSE(Theta) " +
           fmt(n.rmse_theta) + " rank " + std::to_string(n.rank_hat));
  }
  const auto argmin = std::min_element(z1.begin(), z1.end()) - z1.begin();
  const bool interior = argmin > 0 && argmin + 1 < static_cast<long>(z1.size());
  return {dominated && interior,
          std::string("GDP ") + (dominated ? "<=" : "not <=") + " L1 at every SNR; RMSE(Z1) minimum at SNR " +
              fmt(snrs[argmin]) + (interior ? " (interior)" : " (endpoint)") + "; " +
              fmt(seconds_since(t0), 5) + " s"};
}

Outcome cv_behavior(std::uint64_t seed) {
  const auto t0 = Clock::now();
  const Benchmark bm = prepare_benchmark(benchmark_params(seed));
  FitConfig cfg;
  cfg.penalty = PenaltySpec::make(PenaltyFamily::Gdp, 1.0, 1.0);
  cfg.eps_f = 1e-5;
  GridSpec grid;
  grid.k = 7;
  const CvResult cv = lambda_path(bm.data(), cfg, grid);
  const double bayes = bayes_error(bm.truth);
  const double best = cv.cv_error[cv.best_index];
  const double se = cv.cv_se[cv.best_index];
  for (std::size_t i = 0; i < cv.lambda_grid.size(); ++i)
    detail("lambda " + fmt(cv.lambda_grid[i]) + ": CV error " + fmt(cv.cv_error[i], 6) + " +- " +
           fmt(cv.cv_se[i], 3) + ", refit rank " + std::to_string(cv.rank_refit[i]) +
           (i == cv.best_index ? "  <- selected" : ""));
  const bool rank_ok = cv.refit.rank() == 9;
  const bool close = std::abs(best - bayes) <= se;
  return {rank_ok && close,
          "selected lambda " + fmt(cv.best_lambda) + ", refit rank " + std::to_string(cv.refit.rank()) +
              ", CV error " + fmt(best, 6) + " +- " + fmt(se, 3) + ", Bayes error " + fmt(bayes, 6) +
              "; " + fmt(seconds_since(t0), 5) + " s"};
}

Outcome overfitting(std::uint64_t seed) {
  const auto t0 = Clock::now();
  const Benchmark bm = prepare_benchmark(benchmark_params(seed));
  const std::vector<OverfitRun> runs = run_overfit(bm.data(), 3, {1e-5, 1e-8}, 1, 100000);
  const OverfitRun& loose = runs.at(0);
  const OverfitRun& tight = runs.at(1);
  const double ratio = tight.max_abs_b1 / loose.max_abs_b1;
  return {ratio >= 2.0 && tight.fit.iterations > loose.fit.iterations,
          "max|B1| " + fmt(loose.max_abs_b1) + " -> " + fmt(tight.max_abs_b1) + " (x" + fmt(ratio, 3) +
              "), iterations " + std::to_string(loose.fit.iterations) + " -> " +
              std::to_string(tight.fit.iterations) + "; " + fmt(seconds_since(t0), 5) + " s"};
}

Outcome holdout_integrity() {
  const auto t0 = Clock::now();
  int compared = 0;
  int identical = 0;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 50.0);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const SimGroundTruth t = simulate_coupled(small_params(seed));
    const CoupledData data = t.data();
    const FoldAssignment folds = diagonal_folds(data, 5, seed);
    FitConfig cfg;
    cfg.penalty = PenaltySpec::make(PenaltyFamily::Gdp, 25.0, 1.0);
    cfg.eps_f = 1e-6;
    for (int f = 0; f < folds.k; ++f) {
      auto [t1, t2] = folds.training_masks(f);
      auto [h1, h2] = folds.holdout_masks(f);
      MatrixXd x1 = t.x1, x2 = t.x2;
      for (Index i = 0; i < x1.size(); ++i)
        if (h1(i) == 1.0) x1(i) = 1.0 - x1(i);
      for (Index i = 0; i < x2.size(); ++i)
        if (h2(i) == 1.0) x2(i) += n(rng);
      const ModelFit a = fit_gsca(CoupledData(t.x1, t.x2, t1, t2), cfg);
      const ModelFit b = fit_gsca(CoupledData(x1, x2, t1, t2), cfg);
      ++compared;
      identical += a.z == b.z && a.mu == b.mu && a.sigma2 == b.sigma2 && a.loss_trace == b.loss_trace;
    }
  }
  const double secs = seconds_since(t0);
  return {identical == compared && secs < 5.0,
          std::to_string(identical) + " of " + std::to_string(compared) +
              " fold fits bit-identical after perturbing held-out entries, " + fmt(secs, 3) + " s"};
}

Outcome lambda_rescaling() {
  const auto t0 = Clock::now();
  int exact = 0;
  // lambda = I * J makes every effective value the observed count itself.
  for (int m = 0; m < 10; ++m) {
    const Index rows = 4 + m, cols = 5 + 2 * m;
    MatrixXd q = MatrixXd::Zero(rows, cols);
    const Index want = 3 * m + 1;
    for (Index t = 0; t < want; ++t) q((t * 7) % rows, (t * 3) % cols) = 1.0;
    const Index observed = static_cast<Index>(q.sum());
    const double lambda = static_cast<double>(rows * cols);
    exact += effective_lambda(lambda, observed, rows, cols) == static_cast<double>(observed) &&
             effective_lambda(2.0 * lambda, observed, rows, cols) == 2.0 * observed;
  }
  const double secs = seconds_since(t0);
  return {exact == 10 && secs < 1.0,
          std::to_string(exact) + " of 10 masks give exact effective lambda, " + fmt(secs, 3) + " s"};
}

std::vector<int> parse_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string only;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  app.add_option("--only", only, "comma-separated criterion numbers");
  app.add_option("--seeds", seeds, "seeds for the full-scale comparison")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  std::set<int> selected;
  if (only.empty()) {
    for (int i = 1; i <= 10; ++i) selected.insert(i);
  } else {
    for (int i : parse_list(only)) selected.insert(i);
  }

  const std::map<int, std::pair<std::string, std::function<Outcome()>>> criteria = {
      {1, {"gradient correctness", gradients}},
      {2, {"MM monotonicity", monotonicity}},
      {3, {"weighted SVT optimality", svt_oracle}},
      {4, {"penalty comparison at full scale", [&] { return table2(seeds); }}},
      {5, {"singular value recovery", [&] { return singular_value_recovery(seeds); }}},
      {6, {"SNR sweep", [&] { return snr_sweep(seeds.front()); }}},
      {7, {"cross-validation behavior", [&] { return cv_behavior(seeds.front()); }}},
      {8, {"overfitting with exact rank", [&] { return overfitting(seeds.front()); }}},
      {9, {"hold-out integrity", holdout_integrity}},
      {10, {"lambda rescaling", lambda_rescaling}},
  };

  int failures = 0;
  for (const auto& [id, entry] : criteria) {
    if (!selected.count(id)) continue;
    Outcome o;
    try {
      o = entry.second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << entry.first
              << "): " << o.summary << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
