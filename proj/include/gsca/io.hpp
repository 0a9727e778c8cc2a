#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gsca/evaluation.hpp"
#include "gsca/model_selection.hpp"
#include "gsca/simulation.hpp"
#include "gsca/solver.hpp"

namespace gsca {

namespace fs = std::filesystem;
using json = nlohmann::json;

/// A CSV matrix: header row of column names, decimal cells, NA for missing.
struct MatrixFile {
  std::vector<std::string> column_names;
  MatrixXd values;  // 0 where missing
  MatrixXd mask;    // 1 = observed
};

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

MatrixFile read_matrix_csv(const fs::path& path);

/// Writes values; entries with mask == 0 are written as NA. Column names
/// default to V1..Vn.
void write_matrix_csv(const fs::path& path, const MatrixXd& values,
                      const MatrixXd* mask = nullptr,
                      const std::vector<std::string>* column_names = nullptr);

void write_vector_csv(const fs::path& path, const VectorXd& values, const std::string& name);

/// Reads the two block files and validates them (same row count, binary
/// block only 0/1/NA). Throws DataError on violations.
CoupledData load_coupled(const fs::path& x1_path, const fs::path& x2_path);

json to_json(const ModelFit& fit);
json to_json(const EvalReport& report);
json to_json(const CvResult& result);
json to_json(const PenaltySpec& spec);

void write_json(const fs::path& path, const json& j);
json read_json(const fs::path& path);

/// fit.json plus A.csv, B1.csv, B2.csv and Z.csv in `dir`.
void write_fit(const fs::path& dir, const ModelFit& fit);

/// Reads what write_fit wrote.
ModelFit read_fit(const fs::path& dir);

/// X1.csv, X2.csv, X1_star.csv, theta1.csv, theta2.csv, Z.csv, mu.csv, E2.csv
/// and truth.json in `dir`.
void write_truth(const fs::path& dir, const SimGroundTruth& truth, const SimParams& params);

/// Reads what write_truth wrote.
SimGroundTruth read_truth(const fs::path& dir);

/// Appends per-(lambda, fold) records; writes the header when the file is new.
void append_cv_log(const fs::path& path, const std::vector<CvFoldRecord>& records);

std::string sha256_file(const fs::path& path);

}  // namespace gsca
