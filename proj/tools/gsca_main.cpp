// gsca: command-line driver for simulation, fitting, cross-validation and the
// reproduction sweeps.

#include <algorithm>
#include <chrono>
#include <fstream>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gsca/experiments.hpp"
#include "gsca/io.hpp"

#ifndef GSCA_VERSION
#define GSCA_VERSION "unknown"
#endif

namespace {

using namespace gsca;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

constexpr const char* kOutEnv = "GSCA_OUT_DIR";

fs::path default_out_dir() {
  const char* env = std::getenv(kOutEnv);
  return env && *env ? fs::path(env) : fs::path(".");
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct PenaltyArgs {
  std::string family = "gdp";
  double lambda = 1.0;
  std::optional<double> hyper;
  std::string link = "logit";

  void add(CLI::App* cmd, bool with_lambda) {
    cmd->add_option("--penalty", family, "nuclear (l1), lq, scad or gdp")->capture_default_str();
    if (with_lambda) cmd->add_option("--lambda", lambda, "penalty strength")->capture_default_str();
    cmd->add_option("--gamma,--q,--hyper", hyper,
                    "hyper-parameter: q for lq, gamma for scad and gdp");
    cmd->add_option("--link", link, "logit or probit")->capture_default_str();
  }

  PenaltySpec spec() const {
    const PenaltyFamily f = parse_penalty_family(family);
    return PenaltySpec{f, lambda, hyper.value_or(default_hyper(f))};
  }

  LinkKind link_kind() const {
    if (link == "logit") return LinkKind::Logit;
    if (link == "probit") return LinkKind::Probit;
    throw std::invalid_argument("unknown link '" + link + "'");
  }
};

struct DataArgs {
  std::string x1;
  std::string x2;

  void add(CLI::App* cmd) {
    cmd->add_option("--x1", x1, "binary block CSV")->required()->check(CLI::ExistingFile);
    cmd->add_option("--x2", x2, "quantitative block CSV")->required()->check(CLI::ExistingFile);
  }

  CoupledData load() const { return load_coupled(x1, x2); }

  json digests() const { return json{{x1, sha256_file(x1)}, {x2, sha256_file(x2)}}; }
};

/// Collects the manifest for one command and writes it next to the outputs.
class Manifest {
 public:
  explicit Manifest(std::string command) : command_(std::move(command)) {
    start_ = std::chrono::steady_clock::now();
    started_at_ = utc_now();
  }

  json params = json::object();
  json inputs = json::object();
  std::uint64_t seed = 0;

  void write(const fs::path& dir) const {
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    fs::create_directories(dir);
    write_json(dir / "manifest.json", json{{"command", command_},
                                           {"parameters", params},
                                           {"seed", seed},
                                           {"version", GSCA_VERSION},
                                           {"inputs", inputs},
                                           {"timing", {{"started", started_at_}, {"seconds", seconds}}}});
  }

 private:
  std::string command_;
  std::chrono::steady_clock::time_point start_;
  std::string started_at_;
};

void write_fit_with_config(const fs::path& dir, const ModelFit& fit, const FitConfig& cfg) {
  write_fit(dir, fit);
  json j = read_json(dir / "fit.json");
  j["penalty"] = to_json(cfg.penalty);
  j["link"] = cfg.link == LinkKind::Logit ? "logit" : "probit";
  j["eps_f"] = cfg.eps_f;
  j["final_loss"] = fit.final_loss();
  write_json(dir / "fit.json", j);
}

void progress_line(const std::string& line) { std::cerr << line << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Penalized low-rank models for coupled binary and quantitative data"};
  app.set_version_flag("--version", GSCA_VERSION);
  app.require_subcommand(1);
  fs::path out_dir = default_out_dir();
  app.add_option("--out", out_dir, std::string("output directory (default: $") + kOutEnv + " or .)");

  // simulate
  CLI::App* sim = app.add_subcommand("simulate", "simulate coupled binary and quantitative data");
  SimParams sp = benchmark_params(1);
  std::string energy = "expected";
  std::string marginals_file;
  bool keep_constant = false;
  sim->add_option("--rows", sp.rows)->capture_default_str();
  sim->add_option("--j1", sp.j1)->capture_default_str();
  sim->add_option("--j2", sp.j2)->capture_default_str();
  sim->add_option("--rank", sp.rank)->capture_default_str();
  sim->add_option("--snr1", sp.snr1)->capture_default_str();
  sim->add_option("--snr2", sp.snr2)->capture_default_str();
  sim->add_option("--sigma2", sp.sigma2)->capture_default_str();
  sim->add_option("--seed", sp.seed)->capture_default_str();
  sim->add_option("--snr2-energy", energy, "expected or realized")->capture_default_str();
  sim->add_option("--marginals", marginals_file,
                  "CSV with one column of binary marginal probabilities (default: synthetic)")
      ->check(CLI::ExistingFile);
  sim->add_flag("--keep-constant", keep_constant, "keep binary columns without variation");

  // fit
  CLI::App* fit = app.add_subcommand("fit", "fit a penalized model at one lambda");
  DataArgs fit_data;
  PenaltyArgs fit_pen;
  FitConfig fit_cfg;
  std::string init_dir, truth_dir;
  fit_data.add(fit);
  fit_pen.add(fit, true);
  fit->add_option("--eps", fit_cfg.eps_f, "relative stopping tolerance")->capture_default_str();
  fit->add_option("--max-iter", fit_cfg.max_iter)->capture_default_str();
  fit->add_option("--seed", fit_cfg.seed, "initialization seed")->capture_default_str();
  fit->add_option("--init", init_dir, "warm start from a previous fit directory")
      ->check(CLI::ExistingDirectory);
  fit->add_option("--truth", truth_dir, "score against a simulated ground truth directory")
      ->check(CLI::ExistingDirectory);

  // exact-rank
  CLI::App* er = app.add_subcommand("exact-rank", "fit with an exact rank constraint and no penalty");
  DataArgs er_data;
  FitConfig er_cfg;
  Index er_rank = 3;
  er_data.add(er);
  er->add_option("--rank", er_rank)->capture_default_str();
  er->add_option("--eps", er_cfg.eps_f)->capture_default_str();
  er->add_option("--max-iter", er_cfg.max_iter)->capture_default_str();
  er->add_option("--seed", er_cfg.seed)->capture_default_str();

  // cv
  CLI::App* cv = app.add_subcommand("cv", "K-fold missing-value cross-validation over a lambda grid");
  DataArgs cv_data;
  PenaltyArgs cv_pen;
  FitConfig cv_cfg;
  cv_cfg.eps_f = 1e-5;
  GridSpec grid;
  bool cv_parallel = false;
  cv_data.add(cv);
  cv_pen.add(cv, false);
  cv->add_option("--k", grid.k, "number of folds")->capture_default_str();
  cv->add_option("--n-lambda", grid.n_lambda)->capture_default_str();
  cv->add_option("--lambda-max", grid.lambda_max);
  cv->add_option("--lambda-min", grid.lambda_min);
  cv->add_option("--fold-seed", grid.fold_seed)->capture_default_str();
  cv->add_option("--eps", cv_cfg.eps_f)->capture_default_str();
  cv->add_option("--max-iter", cv_cfg.max_iter)->capture_default_str();
  cv->add_option("--seed", cv_cfg.seed)->capture_default_str();
  cv->add_flag("--parallel", cv_parallel, "cold-start folds concurrently instead of warm starts");

  // path
  CLI::App* path = app.add_subcommand("path", "lambda path scored against a ground truth");
  PenaltyArgs path_pen;
  PathOptions popt;
  std::string path_truth;
  path_pen.add(path, false);
  path->add_option("--truth", path_truth, "simulated ground truth directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  path->add_option("--n-lambda", popt.n_lambda)->capture_default_str();
  path->add_option("--lambda-max", popt.lambda_max);
  path->add_option("--lambda-min", popt.lambda_min);
  path->add_option("--eps", popt.eps_f)->capture_default_str();
  path->add_option("--max-iter", popt.max_iter)->capture_default_str();
  path->add_option("--seed", popt.seed)->capture_default_str();

  // evaluate
  CLI::App* ev = app.add_subcommand("evaluate", "score a fit directory against a ground truth");
  std::string ev_fit, ev_truth;
  ev->add_option("--fit", ev_fit)->required()->check(CLI::ExistingDirectory);
  ev->add_option("--truth", ev_truth)->required()->check(CLI::ExistingDirectory);

  // reproduce
  CLI::App* rep = app.add_subcommand("reproduce", "run one of the simulation sweeps");
  std::string rep_id;
  ExperimentOptions eopt;
  rep->add_option("id", rep_id, "experiment id")->required();
  rep->add_option("--seeds", eopt.seeds)->capture_default_str();
  rep->add_option("--n-lambda", eopt.path.n_lambda)->capture_default_str();
  rep->add_option("--eps", eopt.path.eps_f)->capture_default_str();
  rep->add_option("--cv-eps", eopt.cv_eps_f)->capture_default_str();
  rep->add_option("--k", eopt.k)->capture_default_str();
  rep->add_option("--n-snr", eopt.n_snr)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sim) {
      if (energy == "expected") {
        sp.snr2_energy = NoiseEnergy::Expected;
      } else if (energy == "realized") {
        sp.snr2_energy = NoiseEnergy::Realized;
      } else {
        throw std::invalid_argument("--snr2-energy must be expected or realized");
      }
      Manifest m("simulate");
      if (!marginals_file.empty()) {
        const MatrixFile mf = read_matrix_csv(marginals_file);
        if (mf.values.cols() != 1) throw DataError("marginals file must have one column");
        sp.mu1 = binary_offsets_from_marginals(mf.values.col(0), sp.rows);
        m.inputs[marginals_file] = sha256_file(marginals_file);
      } else {
        sp.mu1 = binary_offsets_from_marginals(synthetic_binary_marginals(sp.j1, sp.seed), sp.rows);
      }
      if (sp.mu1.size() != sp.j1) throw std::invalid_argument("marginals must have j1 entries");
      sp.mu2 = gaussian_offsets(sp.j2, sp.seed);
      sp.validate();
      SimGroundTruth truth = simulate_coupled(sp);
      std::vector<Index> kept;
      if (!keep_constant) {
        const ColumnFilter f = drop_uninformative_binary_columns(
            truth.x1, MatrixXd::Ones(truth.x1.rows(), truth.x1.cols()));
        kept = f.kept;
        truth = truth.select_binary_columns(f.kept);
      }
      write_truth(out_dir, truth, sp);
      if (!keep_constant) {
        VectorXd idx(static_cast<Index>(kept.size()));
        for (std::size_t i = 0; i < kept.size(); ++i) idx[static_cast<Index>(i)] = kept[i] + 1;
        write_vector_csv(out_dir / "kept_columns.csv", idx, "column");
      }
      m.seed = sp.seed;
      m.params = {{"rows", sp.rows},   {"j1", sp.j1},         {"j2", sp.j2},
                  {"rank", sp.rank},   {"snr1", sp.snr1},     {"snr2", sp.snr2},
                  {"sigma2", sp.sigma2}, {"snr2_energy", energy}, {"keep_constant", keep_constant}};
      m.write(out_dir);
      std::cout << "wrote " << truth.rows() << " x (" << truth.j1() << " + " << truth.j2()
                << ") data to " << out_dir.string() << '\n';
    } else if (*fit) {
      fit_cfg.penalty = fit_pen.spec();
      fit_cfg.link = fit_pen.link_kind();
      const CoupledData data = fit_data.load();
      Manifest m("fit");
      m.inputs = fit_data.digests();
      if (!init_dir.empty()) fit_cfg.warm_start = read_fit(init_dir);
      const ModelFit result = fit_gsca(data, fit_cfg);
      write_fit_with_config(out_dir, result, fit_cfg);
      if (!truth_dir.empty()) {
        write_json(out_dir / "eval.json", to_json(evaluate_fit(result, read_truth(truth_dir))));
      }
      m.seed = fit_cfg.seed;
      m.params = {{"penalty", to_json(fit_cfg.penalty)}, {"link", fit_pen.link},
                  {"eps_f", fit_cfg.eps_f},              {"max_iter", fit_cfg.max_iter},
                  {"init", init_dir},                    {"truth", truth_dir}};
      m.write(out_dir);
      std::cout << "rank " << result.rank() << ", sigma2 " << result.sigma2 << ", "
                << result.iterations << " iterations"
                << (result.warned_saturated ? " (saturated)" : "") << '\n';
    } else if (*er) {
      const CoupledData data = er_data.load();
      Manifest m("exact-rank");
      m.inputs = er_data.digests();
      const ModelFit result = fit_exact_rank(data, er_rank, er_cfg);
      write_fit_with_config(out_dir, result, er_cfg);
      m.seed = er_cfg.seed;
      m.params = {{"rank", er_rank}, {"eps_f", er_cfg.eps_f}, {"max_iter", er_cfg.max_iter}};
      m.write(out_dir);
      std::cout << result.iterations << " iterations, max |B1| "
                << (result.b1.size() ? result.b1.cwiseAbs().maxCoeff() : 0.0) << '\n';
    } else if (*cv) {
      cv_cfg.penalty = cv_pen.spec();
      cv_cfg.link = cv_pen.link_kind();
      grid.mode = cv_parallel ? CvMode::ColdParallel : CvMode::WarmSequential;
      const CoupledData data = cv_data.load();
      Manifest m("cv");
      m.inputs = cv_data.digests();
      const CvResult result = lambda_path(data, cv_cfg, grid);
      fs::create_directories(out_dir);
      write_json(out_dir / "cv.json", to_json(result));
      const fs::path log = out_dir / "cv_log.csv";
      if (fs::exists(log)) fs::remove(log);
      append_cv_log(log, result.log);
      FitConfig refit_cfg = cv_cfg;
      refit_cfg.penalty.lambda = result.best_lambda;
      write_fit_with_config(out_dir / "refit", result.refit, refit_cfg);
      m.seed = cv_cfg.seed;
      m.params = {{"penalty", to_json(cv_cfg.penalty)},
                  {"link", cv_pen.link},
                  {"k", grid.k},
                  {"n_lambda", grid.n_lambda},
                  {"lambda_max", grid.lambda_max ? json(*grid.lambda_max) : json(nullptr)},
                  {"lambda_min", grid.lambda_min ? json(*grid.lambda_min) : json(nullptr)},
                  {"fold_seed", grid.fold_seed},
                  {"eps_f", cv_cfg.eps_f},
                  {"parallel", cv_parallel}};
      m.write(out_dir);
      std::cout << "best lambda " << result.best_lambda << ", CV error "
                << result.cv_error[result.best_index] << ", refit rank " << result.refit.rank()
                << '\n';
    } else if (*path) {
      const SimGroundTruth truth = read_truth(path_truth);
      Manifest m("path");
      for (const char* f : {"X1.csv", "X2.csv", "truth.json"}) {
        const fs::path p = fs::path(path_truth) / f;
        m.inputs[p.string()] = sha256_file(p);
      }
      popt.link = path_pen.link_kind();
      const RmsePath result = rmse_path(truth.data(), truth, path_pen.spec(), popt);
      fs::create_directories(out_dir);
      std::ofstream csv(out_dir / "path.csv");
      csv << "lambda,rmse_theta,rmse_mu,rmse_z,sigma2,rank,iterations,saturated,best\n";
      for (std::size_t i = 0; i < result.points.size(); ++i) {
        const PathPoint& p = result.points[i];
        csv << format_double(p.lambda) << ',' << format_double(p.report.rmse_theta) << ','
            << format_double(p.report.rmse_mu) << ',' << format_double(p.report.rmse_z) << ','
            << format_double(p.report.sigma2_hat) << ',' << p.report.rank_hat << ','
            << p.iterations << ',' << (p.saturated ? 1 : 0) << ',' << (i == result.best ? 1 : 0)
            << '\n';
      }
      FitConfig best_cfg;
      best_cfg.penalty = path_pen.spec();
      best_cfg.penalty.lambda = result.best_point().lambda;
      best_cfg.link = popt.link;
      best_cfg.eps_f = popt.eps_f;
      write_fit_with_config(out_dir / "best", result.best_fit, best_cfg);
      m.seed = popt.seed;
      m.params = {{"penalty", to_json(path_pen.spec())}, {"n_lambda", popt.n_lambda},
                  {"eps_f", popt.eps_f},                 {"lambda_max", result.lambda_max},
                  {"lambda_min", result.lambda_min}};
      m.write(out_dir);
      std::cout << "best lambda " << result.best_point().lambda << ", RMSE(Theta) "
                << result.best_point().report.rmse_theta << ", rank "
                << result.best_point().report.rank_hat << '\n';
    } else if (*ev) {
      Manifest m("evaluate");
      m.inputs[(fs::path(ev_fit) / "fit.json").string()] = sha256_file(fs::path(ev_fit) / "fit.json");
      const EvalReport r = evaluate_fit(read_fit(ev_fit), read_truth(ev_truth));
      write_json(out_dir / "eval.json", to_json(r));
      m.params = {{"fit", ev_fit}, {"truth", ev_truth}};
      m.write(out_dir);
      std::cout << "RMSE(Theta) " << r.rmse_theta << ", RMSE(mu) " << r.rmse_mu << ", RMSE(Z) "
                << r.rmse_z << ", rank " << r.rank_hat << '\n';
    } else if (*rep) {
      const auto& ids = experiment_ids();
      if (std::find(ids.begin(), ids.end(), rep_id) == ids.end()) {
        std::string valid;
        for (const auto& v : ids) valid += (valid.empty() ? "" : ", ") + v;
        std::cerr << "unknown experiment '" << rep_id << "'; valid ids: " << valid << '\n';
        return kExitUsage;
      }
      Manifest m("reproduce " + rep_id);
      eopt.out_dir = out_dir;
      eopt.progress = progress_line;
      const fs::path table = run_experiment(rep_id, eopt);
      m.seed = eopt.seeds.front();
      m.params = {{"id", rep_id},          {"seeds", eopt.seeds},   {"n_lambda", eopt.path.n_lambda},
                  {"eps_f", eopt.path.eps_f}, {"cv_eps_f", eopt.cv_eps_f}, {"k", eopt.k},
                  {"n_snr", eopt.n_snr}};
      m.write(out_dir);
      std::cout << "wrote " << table.string() << '\n';
    }
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitOk;
}
