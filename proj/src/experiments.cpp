#include "gsca/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "gsca/io.hpp"
#include "gsca/linalg.hpp"

namespace gsca {

namespace {

void report(const ProgressFn& progress, const std::string& line) {
  if (progress) progress(line);
}

std::vector<double> log_spaced_ascending(double lo, double hi, int n) {
  std::vector<double> v = log_spaced_descending(hi, lo, n);
  std::reverse(v.begin(), v.end());
  return v;
}

// Small CSV writer for tidy result tables.
class Table {
 public:
  Table(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t c = 0; c < header.size(); ++c) out_ << (c ? "," : "") << header[c];
    out_ << '\n';
  }

  Table& operator<<(double v) { return cell(format_double(v)); }
  Table& operator<<(Index v) { return cell(std::to_string(v)); }
  Table& operator<<(int v) { return cell(std::to_string(v)); }
  Table& operator<<(std::uint64_t v) { return cell(std::to_string(v)); }
  Table& operator<<(bool v) { return cell(v ? "1" : "0"); }
  Table& operator<<(const std::string& v) { return cell(v); }
  Table& operator<<(const char* v) { return cell(v); }

  void end_row() {
    out_ << '\n';
    first_ = true;
  }

 private:
  Table& cell(const std::string& text) {
    if (!first_) out_ << ',';
    out_ << text;
    first_ = false;
    return *this;
  }

  std::ofstream out_;
  bool first_ = true;
};

std::vector<PenaltySpec> table2_penalties() {
  return {PenaltySpec::make(PenaltyFamily::Nuclear, 1.0), PenaltySpec::make(PenaltyFamily::Lq, 1.0),
          PenaltySpec::make(PenaltyFamily::Scad, 1.0), PenaltySpec::make(PenaltyFamily::Gdp, 1.0)};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

std::string describe(const std::string& what, const EvalReport& r) {
  return what + ": RMSE(Theta)=" + fmt(r.rmse_theta) + " RMSE(mu)=" + fmt(r.rmse_mu) +
         " RMSE(Z)=" + fmt(r.rmse_z) + " rank=" + std::to_string(r.rank_hat);
}

void write_path_rows(Table& t, const RmsePath& path) {
  for (std::size_t p = 0; p < path.points.size(); ++p) {
    const PathPoint& pt = path.points[p];
    t << pt.lambda << pt.report.rmse_theta << pt.report.rmse_mu << pt.report.rmse_z
      << pt.report.sigma2_hat << pt.report.rank_hat << pt.iterations << pt.saturated
      << (p == path.best);
    t.end_row();
  }
}

fs::path table2(const ExperimentOptions& o) {
  const auto results = run_table2(o.seeds, o.path, o.progress);
  const fs::path out = o.out_dir / "table2.csv";
  Table t(out, {"method", "seed", "lambda", "rmse_theta", "rmse_theta1", "rmse_theta2", "rmse_mu",
                "rmse_z", "rank", "sigma2"});
  for (const MethodResult& r : results) {
    t << r.method << r.seed << r.lambda << r.report.rmse_theta << r.report.rmse_theta1
      << r.report.rmse_theta2 << r.report.rmse_mu << r.report.rmse_z << r.report.rank_hat
      << r.report.sigma2_hat;
    t.end_row();
  }
  return out;
}

fs::path fig3(const ExperimentOptions& o) {
  const Benchmark bm = prepare_benchmark(benchmark_params(o.seeds.at(0)));
  const RmsePath path =
      rmse_path(bm.data(), bm.truth, PenaltySpec::make(PenaltyFamily::Nuclear, 1.0), o.path);
  report(o.progress, describe("L1 best lambda " + fmt(path.best_point().lambda),
                              path.best_point().report));
  const fs::path out = o.out_dir / "fig3.csv";
  Table t(out, {"lambda", "rmse_theta", "rmse_mu", "rmse_z", "sigma2", "rank", "iterations",
                "saturated", "best"});
  write_path_rows(t, path);
  return out;
}

fs::path fig4(const ExperimentOptions& o) {
  const Benchmark bm = prepare_benchmark(benchmark_params(o.seeds.at(0)));
  const std::vector<std::pair<PenaltyFamily, std::vector<double>>> sweeps = {
      {PenaltyFamily::Lq, {0.1, 0.3, 0.5, 0.7, 0.9, 1.0}},
      {PenaltyFamily::Scad, {2.5, 5.0, 10.0, 20.0, 50.0}},
      {PenaltyFamily::Gdp, {0.1, 0.3, 1.0, 3.0, 10.0, 30.0}},
  };
  const fs::path out = o.out_dir / "fig4.csv";
  Table t(out, {"family", "hyper", "lambda", "rmse_theta", "rmse_mu", "rmse_z", "rank"});
  for (const auto& [family, values] : sweeps) {
    for (double hyper : values) {
      const PenaltySpec spec{family, 1.0, hyper};
      const RmsePath path = rmse_path(bm.data(), bm.truth, spec, o.path);
      const PathPoint& b = path.best_point();
      report(o.progress, describe(spec.label(), b.report));
      t << to_string(family) << hyper << b.lambda << b.report.rmse_theta << b.report.rmse_mu
        << b.report.rmse_z << b.report.rank_hat;
      t.end_row();
    }
  }
  return out;
}

fs::path fig5(const ExperimentOptions& o) {
  constexpr Index kShown = 15;
  const Benchmark bm = prepare_benchmark(benchmark_params(o.seeds.at(0)));
  const fs::path out = o.out_dir / "fig5.csv";
  Table t(out, {"series", "index", "value"});
  const auto emit = [&](const std::string& series, const VectorXd& sv) {
    for (Index r = 0; r < std::min<Index>(kShown, sv.size()); ++r) {
      t << series << (r + 1) << sv[r];
      t.end_row();
    }
  };
  for (const PenaltySpec& spec : table2_penalties()) {
    const RmsePath path = rmse_path(bm.data(), bm.truth, spec, o.path);
    report(o.progress, describe(spec.label(), path.best_point().report));
    emit(spec.label(), path.best_fit.singular_values);
  }
  emit("full information", best_full_information(bm.truth).report.singular_values);
  emit("true", singular_values(bm.truth.z));
  emit("noise", noise_singular_values(bm.truth));
  return out;
}

fs::path fig7(const ExperimentOptions& o) {
  const std::vector<double> snrs = log_spaced_ascending(0.1, 100.0, o.n_snr);
  const fs::path out = o.out_dir / "fig7.csv";
  Table t(out, {"snr", "method", "lambda", "rmse_theta", "rmse_mu", "rmse_z", "rmse_z1",
                "rmse_z2", "rank"});
  const std::vector<PenaltySpec> specs = {PenaltySpec::make(PenaltyFamily::Nuclear, 1.0),
                                          PenaltySpec::make(PenaltyFamily::Lq, 1.0),
                                          PenaltySpec::make(PenaltyFamily::Gdp, 1.0)};
  const auto row = [&](double snr, const std::string& method, double lambda, const EvalReport& r) {
    t << snr << method << lambda << r.rmse_theta << r.rmse_mu << r.rmse_z << r.rmse_z1 << r.rmse_z2
      << r.rank_hat;
    t.end_row();
  };
  for (double snr : snrs) {
    SimParams params = benchmark_params(o.seeds.at(0));
    params.snr1 = snr;
    params.snr2 = snr;
    const Benchmark bm = prepare_benchmark(params);
    for (const PenaltySpec& spec : specs) {
      const RmsePath path = rmse_path(bm.data(), bm.truth, spec, o.path);
      report(o.progress, describe("SNR " + fmt(snr) + " " + spec.label(), path.best_point().report));
      row(snr, spec.label(), path.best_point().lambda, path.best_point().report);
    }
    const FullInformation fi = best_full_information(bm.truth);
    row(snr, "full information", 0.0, fi.report);
  }
  return out;
}

GridSpec cv_grid(const ExperimentOptions& o) {
  GridSpec grid;
  grid.n_lambda = o.path.n_lambda;
  grid.lambda_max = o.path.lambda_max;
  grid.lambda_min = o.path.lambda_min;
  grid.k = o.k;
  grid.fold_seed = o.fold_seed;
  grid.search_eps = o.path.search_eps;
  return grid;
}

FitConfig cv_config(const ExperimentOptions& o, const PenaltySpec& spec) {
  FitConfig cfg;
  cfg.penalty = spec;
  cfg.link = o.path.link;
  cfg.eps_f = o.cv_eps_f;
  cfg.max_iter = o.path.max_iter;
  cfg.seed = o.path.seed;
  return cfg;
}

fs::path fig8(const ExperimentOptions& o) {
  const Benchmark bm = prepare_benchmark(benchmark_params(o.seeds.at(0)));
  const CoupledData data = bm.data();
  PathOptions popt = o.path;
  popt.eps_f = o.cv_eps_f;
  const fs::path out = o.out_dir / "fig8.csv";
  Table t(out, {"gamma", "min_rmse_theta", "lambda_rmse", "min_cv_error", "cv_se", "lambda_cv"});
  for (double gamma : {0.1, 0.3, 1.0, 3.0, 10.0, 30.0}) {
    const PenaltySpec spec{PenaltyFamily::Gdp, 1.0, gamma};
    const RmsePath path = rmse_path(data, bm.truth, spec, popt);
    const CvResult cv = lambda_path(data, cv_config(o, spec), cv_grid(o));
    report(o.progress, "GDP(" + fmt(gamma) + "): min RMSE(Theta)=" +
                           fmt(path.best_point().report.rmse_theta) +
                           " min CV error=" + fmt(cv.cv_error[cv.best_index]));
    t << gamma << path.best_point().report.rmse_theta << path.best_point().lambda
      << cv.cv_error[cv.best_index] << cv.cv_se[cv.best_index] << cv.best_lambda;
    t.end_row();
  }
  return out;
}

fs::path fig9(const ExperimentOptions& o) {
  const Benchmark bm = prepare_benchmark(benchmark_params(o.seeds.at(0)));
  const CoupledData data = bm.data();
  GridSpec grid = cv_grid(o);
  std::map<std::size_t, EvalReport> reports;
  grid.on_refit = [&](std::size_t i, const ModelFit& fit) { reports[i] = evaluate_fit(fit, bm.truth); };
  const CvResult cv = lambda_path(data, cv_config(o, PenaltySpec::make(PenaltyFamily::Gdp, 1.0)), grid);
  const double bayes = bayes_error(bm.truth, o.path.link);
  report(o.progress, "best lambda " + fmt(cv.best_lambda) + " CV error " +
                         fmt(cv.cv_error[cv.best_index]) + " +- " + fmt(cv.cv_se[cv.best_index]) +
                         " Bayes error " + fmt(bayes) + " refit rank " +
                         std::to_string(cv.refit.rank()));

  write_json(o.out_dir / "fig9_cv.json", to_json(cv));
  append_cv_log(o.out_dir / "fig9_cv_log.csv", cv.log);
  const fs::path out = o.out_dir / "fig9.csv";
  Table t(out, {"lambda", "cv_error", "cv_se", "rank_cv", "rank_refit", "rmse_theta", "rmse_mu",
                "rmse_z", "bayes_error", "best"});
  for (std::size_t i = 0; i < cv.lambda_grid.size(); ++i) {
    const EvalReport& r = reports.at(i);
    t << cv.lambda_grid[i] << cv.cv_error[i] << cv.cv_se[i] << cv.rank_cv[i] << cv.rank_refit[i]
      << r.rmse_theta << r.rmse_mu << r.rmse_z << bayes << (i == cv.best_index);
    t.end_row();
  }
  return out;
}

fs::path fig2_overfit(const ExperimentOptions& o) {
  const Benchmark bm = prepare_benchmark(benchmark_params(o.seeds.at(0)));
  const std::vector<OverfitRun> runs =
      run_overfit(bm.data(), 3, {1e-5, 1e-8}, o.path.seed, std::max(o.path.max_iter, 100000));
  const fs::path out = o.out_dir / "fig2-overfit.csv";
  Table t(out, {"eps_f", "iterations", "converged", "max_abs_b1", "final_loss"});
  Table loadings(o.out_dir / "fig2-overfit-loadings.csv", {"eps_f", "column", "b1_1", "b1_2", "b1_3"});
  for (const OverfitRun& run : runs) {
    report(o.progress, "eps " + fmt(run.eps_f) + ": " + std::to_string(run.fit.iterations) +
                           " iterations, max|B1| " + fmt(run.max_abs_b1));
    t << run.eps_f << run.fit.iterations << run.fit.converged << run.max_abs_b1
      << run.fit.final_loss();
    t.end_row();
    for (Index j = 0; j < run.fit.b1.rows(); ++j) {
      loadings << run.eps_f << (j + 1);
      for (Index r = 0; r < 3; ++r) loadings << (r < run.fit.b1.cols() ? run.fit.b1(j, r) : 0.0);
      loadings.end_row();
    }
  }
  return out;
}

}  // namespace

Benchmark prepare_benchmark(const SimParams& params) {
  Benchmark bm;
  bm.params = params;
  SimGroundTruth truth = simulate_coupled(params);
  const ColumnFilter filter =
      drop_uninformative_binary_columns(truth.x1, MatrixXd::Ones(truth.x1.rows(), truth.x1.cols()));
  bm.kept = filter.kept;
  bm.truth = truth.select_binary_columns(filter.kept);
  return bm;
}

double bayes_error(const SimGroundTruth& truth, LinkKind link) {
  const CoupledData data = truth.data();
  return joint_nll(data, truth.theta(), truth.sigma2, link) / static_cast<double>(data.observed());
}

VectorXd noise_singular_values(const SimGroundTruth& truth) {
  return singular_values(hcat(truth.e1, truth.e2));
}

RmsePath rmse_path(const CoupledData& data, const SimGroundTruth& truth, const PenaltySpec& penalty,
                   const PathOptions& options) {
  FitConfig cfg;
  cfg.penalty = penalty;
  cfg.link = options.link;
  cfg.eps_f = options.eps_f;
  cfg.max_iter = options.max_iter;
  cfg.seed = options.seed;

  RmsePath path;
  path.penalty = penalty;
  if (options.lambda_max && options.lambda_min) {
    path.lambda_max = *options.lambda_max;
    path.lambda_min = *options.lambda_min;
  } else {
    const LambdaBounds b = find_lambda_bounds(data, cfg, options.search_eps);
    path.lambda_max = options.lambda_max.value_or(b.lambda_max);
    path.lambda_min = options.lambda_min.value_or(b.lambda_min);
  }
  if (path.lambda_min > path.lambda_max) std::swap(path.lambda_min, path.lambda_max);

  std::optional<ModelFit> warm;
  double best_rmse = std::numeric_limits<double>::infinity();
  for (double lambda : log_spaced_descending(path.lambda_max, path.lambda_min, options.n_lambda)) {
    cfg.penalty.lambda = lambda;
    cfg.warm_start = warm;
    ModelFit fit = fit_gsca(data, cfg);
    PathPoint pt;
    pt.lambda = lambda;
    pt.report = evaluate_fit(fit, truth);
    pt.iterations = fit.iterations;
    pt.converged = fit.converged;
    pt.saturated = fit.warned_saturated;
    path.points.push_back(pt);
    if (!pt.saturated && pt.report.rmse_theta < best_rmse) {
      best_rmse = pt.report.rmse_theta;
      path.best = path.points.size() - 1;
      path.best_fit = fit;
    }
    // Smaller lambdas only move further into the saturated regime.
    if (pt.saturated) break;
    // Concave penalties restart from the seeded initialization at every lambda;
    // see lambda_path.
    if (is_convex(penalty)) warm = std::move(fit);
  }
  if (!std::isfinite(best_rmse)) {
    path.best = 0;
    cfg.penalty.lambda = path.points.front().lambda;
    cfg.warm_start.reset();
    path.best_fit = fit_gsca(data, cfg);
  }
  return path;
}

FullInformation best_full_information(const SimGroundTruth& truth, Index max_rank) {
  const Index limit = std::min(max_rank, std::min(truth.rows(), truth.j1() + truth.j2()) - 1);
  FullInformation best;
  best.report.rmse_theta = std::numeric_limits<double>::infinity();
  for (Index r = 1; r <= limit; ++r) {
    const ScaEstimate est = sca_full_information(truth.x1_star, truth.x2, r);
    EvalReport rep = evaluate_estimate(est.mu, est.z, truth);
    if (rep.rmse_theta < best.report.rmse_theta) {
      best.rank = r;
      best.report = std::move(rep);
    }
  }
  return best;
}

std::vector<MethodResult> run_table2(const std::vector<std::uint64_t>& seeds,
                                     const PathOptions& options, const ProgressFn& progress) {
  std::vector<MethodResult> out;
  for (std::uint64_t seed : seeds) {
    const Benchmark bm = prepare_benchmark(benchmark_params(seed));
    const CoupledData data = bm.data();
    for (const PenaltySpec& spec : table2_penalties()) {
      const RmsePath path = rmse_path(data, bm.truth, spec, options);
      MethodResult r{spec.label(), seed, path.best_point().lambda, path.best_point().report};
      report(progress, describe("seed " + std::to_string(seed) + " " + r.method + " lambda " +
                                    fmt(r.lambda),
                                r.report));
      out.push_back(std::move(r));
    }
    const FullInformation fi = best_full_information(bm.truth);
    out.push_back(MethodResult{"full information", seed, 0.0, fi.report});
    report(progress, describe("seed " + std::to_string(seed) + " full information", fi.report));
  }
  return out;
}

std::vector<OverfitRun> run_overfit(const CoupledData& data, Index rank,
                                    const std::vector<double>& eps, std::uint64_t seed,
                                    int max_iter) {
  std::vector<OverfitRun> runs;
  for (double e : eps) {
    FitConfig cfg;
    cfg.eps_f = e;
    cfg.seed = seed;
    cfg.max_iter = max_iter;
    OverfitRun run;
    run.eps_f = e;
    run.fit = fit_exact_rank(data, rank, cfg);
    run.max_abs_b1 = run.fit.b1.size() ? run.fit.b1.cwiseAbs().maxCoeff() : 0.0;
    runs.push_back(std::move(run));
  }
  return runs;
}

const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids = {"table2", "fig3", "fig4", "fig5",
                                               "fig7",   "fig8", "fig9", "fig2-overfit"};
  return ids;
}

fs::path run_experiment(const std::string& id, const ExperimentOptions& options) {
  if (options.seeds.empty()) throw std::invalid_argument("at least one seed is required");
  fs::create_directories(options.out_dir);
  if (id == "table2") return table2(options);
  if (id == "fig3") return fig3(options);
  if (id == "fig4") return fig4(options);
  if (id == "fig5") return fig5(options);
  if (id == "fig7") return fig7(options);
  if (id == "fig8") return fig8(options);
  if (id == "fig9") return fig9(options);
  if (id == "fig2-overfit") return fig2_overfit(options);
  std::string valid;
  for (const auto& v : experiment_ids()) valid += (valid.empty() ? "" : ", ") + v;
  throw std::invalid_argument("unknown experiment '" + id + "'; valid ids: " + valid);
}

}  // namespace gsca
