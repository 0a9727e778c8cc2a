#include "gsca/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace gsca {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  cells.push_back(cell);
  return cells;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

json vec_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

VectorXd json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

MatrixXd read_plain(const fs::path& path) { return read_matrix_csv(path).values; }

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "NaN";
  if (std::isinf(value)) return value > 0 ? "Inf" : "-Inf";
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", value);
  return buf.data();
}

MatrixFile read_matrix_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");

  MatrixFile out;
  // A header with no names describes a matrix with zero columns.
  if (!trim(line).empty())
    for (const auto& name : split_csv_line(line)) out.column_names.push_back(trim(name));
  const auto cols = static_cast<Index>(out.column_names.size());

  std::vector<double> values;
  std::vector<double> mask;
  Index rows = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (static_cast<Index>(cells.size()) != cols)
      throw DataError(path.string() + ": row " + std::to_string(rows + 1) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(cols));
    for (const auto& raw : cells) {
      const std::string cell = trim(raw);
      if (cell == "NA") {
        values.push_back(0.0);
        mask.push_back(0.0);
        continue;
      }
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw DataError(path.string() + ": cannot parse '" + cell + "' in row " +
                        std::to_string(rows + 1));
      values.push_back(v);
      mask.push_back(1.0);
    }
    ++rows;
  }
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  out.values = Eigen::Map<const RowMajor>(values.data(), rows, cols);
  out.mask = Eigen::Map<const RowMajor>(mask.data(), rows, cols);
  return out;
}

void write_matrix_csv(const fs::path& path, const MatrixXd& values, const MatrixXd* mask,
                      const std::vector<std::string>* column_names) {
  if (mask && (mask->rows() != values.rows() || mask->cols() != values.cols()))
    throw std::invalid_argument("mask shape does not match values");
  if (column_names && static_cast<Index>(column_names->size()) != values.cols())
    throw std::invalid_argument("one column name per column required");
  std::ofstream out = open_out(path);
  for (Index j = 0; j < values.cols(); ++j) {
    if (j) out << ',';
    if (column_names) {
      out << (*column_names)[j];
    } else {
      out << 'V' << j + 1;
    }
  }
  out << '\n';
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      if (j) out << ',';
      if (mask && (*mask)(i, j) == 0.0) {
        out << "NA";
      } else {
        out << format_double(values(i, j));
      }
    }
    out << '\n';
  }
}

void write_vector_csv(const fs::path& path, const VectorXd& values, const std::string& name) {
  std::ofstream out = open_out(path);
  out << name << '\n';
  for (Index i = 0; i < values.size(); ++i) out << format_double(values[i]) << '\n';
}

CoupledData load_coupled(const fs::path& x1_path, const fs::path& x2_path) {
  MatrixFile f1 = read_matrix_csv(x1_path);
  MatrixFile f2 = read_matrix_csv(x2_path);
  if (f1.values.rows() != f2.values.rows())
    throw DataError("binary and quantitative files have different row counts (" +
                    std::to_string(f1.values.rows()) + " vs " +
                    std::to_string(f2.values.rows()) + ")");
  for (Index j = 0; j < f1.values.cols(); ++j)
    for (Index i = 0; i < f1.values.rows(); ++i)
      if (f1.mask(i, j) != 0.0 && f1.values(i, j) != 0.0 && f1.values(i, j) != 1.0)
        throw DataError(x1_path.string() + ": binary block contains " +
                        format_double(f1.values(i, j)) + " at row " + std::to_string(i + 1) +
                        ", column " + std::to_string(j + 1));
  try {
    return CoupledData(std::move(f1.values), std::move(f2.values), std::move(f1.mask),
                       std::move(f2.mask));
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
}

json to_json(const PenaltySpec& spec) {
  return json{{"family", to_string(spec.family)},
              {"lambda", spec.lambda},
              {"hyper", spec.hyper},
              {"label", spec.label()}};
}

json to_json(const ModelFit& fit) {
  return json{{"mu", vec_json(fit.mu)},
              {"sigma2", fit.sigma2},
              {"singular_values", vec_json(fit.singular_values)},
              {"rank", fit.rank()},
              {"loss_trace", fit.loss_trace},
              {"iterations", fit.iterations},
              {"converged", fit.converged},
              {"warned_saturated", fit.warned_saturated}};
}

json to_json(const EvalReport& r) {
  return json{{"rmse_theta", r.rmse_theta},       {"rmse_theta1", r.rmse_theta1},
              {"rmse_theta2", r.rmse_theta2},     {"rmse_mu", r.rmse_mu},
              {"rmse_z", r.rmse_z},               {"rmse_z1", r.rmse_z1},
              {"rmse_z2", r.rmse_z2},             {"rank_hat", r.rank_hat},
              {"sigma2_hat", r.sigma2_hat},       {"singular_values", vec_json(r.singular_values)}};
}

json to_json(const CvResult& r) {
  // JSON has no infinity; saturated grid points are reported as null.
  const auto finite_or_null = [](const std::vector<double>& v) {
    json arr = json::array();
    for (double x : v) arr.push_back(std::isfinite(x) ? json(x) : json(nullptr));
    return arr;
  };
  return json{{"lambda_grid", r.lambda_grid},
              {"cv_error", finite_or_null(r.cv_error)},
              {"cv_se", finite_or_null(r.cv_se)},
              {"rank_cv", r.rank_cv},
              {"rank_refit", r.rank_refit},
              {"best_lambda", r.best_lambda},
              {"best_index", r.best_index}};
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out = open_out(path);
  out << std::setw(2) << j << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_fit(const fs::path& dir, const ModelFit& fit) {
  fs::create_directories(dir);
  write_json(dir / "fit.json", to_json(fit));
  write_matrix_csv(dir / "A.csv", fit.a);
  write_matrix_csv(dir / "B1.csv", fit.b1);
  write_matrix_csv(dir / "B2.csv", fit.b2);
  write_matrix_csv(dir / "Z.csv", fit.z);
}

ModelFit read_fit(const fs::path& dir) {
  const json j = read_json(dir / "fit.json");
  ModelFit fit;
  fit.mu = json_vec(j.at("mu"));
  fit.sigma2 = j.at("sigma2").get<double>();
  fit.singular_values = json_vec(j.at("singular_values"));
  fit.loss_trace = j.at("loss_trace").get<std::vector<double>>();
  fit.iterations = j.at("iterations").get<int>();
  fit.converged = j.at("converged").get<bool>();
  fit.warned_saturated = j.at("warned_saturated").get<bool>();
  fit.z = read_plain(dir / "Z.csv");
  fit.a = read_plain(dir / "A.csv");
  fit.b1 = read_plain(dir / "B1.csv");
  fit.b2 = read_plain(dir / "B2.csv");
  return fit;
}

void write_truth(const fs::path& dir, const SimGroundTruth& truth, const SimParams& params) {
  fs::create_directories(dir);
  write_matrix_csv(dir / "X1.csv", truth.x1);
  write_matrix_csv(dir / "X2.csv", truth.x2);
  write_matrix_csv(dir / "X1_star.csv", truth.x1_star);
  write_matrix_csv(dir / "theta1.csv", truth.theta1);
  write_matrix_csv(dir / "theta2.csv", truth.theta2);
  write_matrix_csv(dir / "Z.csv", truth.z);
  write_matrix_csv(dir / "E2.csv", truth.e2);
  write_vector_csv(dir / "mu.csv", truth.mu, "mu");
  write_json(dir / "truth.json",
             json{{"rows", truth.rows()},
                  {"j1", truth.j1()},
                  {"j2", truth.j2()},
                  {"rank", params.rank},
                  {"seed", params.seed},
                  {"snr1_target", params.snr1},
                  {"snr2_target", params.snr2},
                  {"snr1", truth.snr1},
                  {"snr2", truth.snr2},
                  {"snr2_energy",
                   params.snr2_energy == NoiseEnergy::Expected ? "expected" : "realized"},
                  {"sigma2", truth.sigma2},
                  {"c1", truth.c1},
                  {"c2", truth.c2},
                  {"d", vec_json(truth.d)}});
}

SimGroundTruth read_truth(const fs::path& dir) {
  const json meta = read_json(dir / "truth.json");
  SimGroundTruth t;
  t.x1 = read_plain(dir / "X1.csv");
  t.x2 = read_plain(dir / "X2.csv");
  t.x1_star = read_plain(dir / "X1_star.csv");
  t.theta1 = read_plain(dir / "theta1.csv");
  t.theta2 = read_plain(dir / "theta2.csv");
  t.z = read_plain(dir / "Z.csv");
  t.e2 = read_plain(dir / "E2.csv");
  t.mu = read_plain(dir / "mu.csv").col(0);
  t.e1 = t.x1_star - t.theta1;
  t.d = json_vec(meta.at("d"));
  t.c1 = meta.at("c1").get<double>();
  t.c2 = meta.at("c2").get<double>();
  t.sigma2 = meta.at("sigma2").get<double>();
  t.snr1 = meta.at("snr1").get<double>();
  t.snr2 = meta.at("snr2").get<double>();
  return t;
}

void append_cv_log(const fs::path& path, const std::vector<CvFoldRecord>& records) {
  const bool fresh = !fs::exists(path);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  if (fresh) out << "lambda,fold,error,heldout,rank,iterations,saturated\n";
  for (const auto& r : records)
    out << format_double(r.lambda) << ',' << r.fold << ',' << format_double(r.error) << ','
        << r.heldout << ',' << r.rank << ',' << r.iterations << ',' << (r.saturated ? 1 : 0)
        << '\n';
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

}  // namespace gsca
