#pragma once

#include <optional>
#include <string>

#include "gsca/data.hpp"

namespace gsca {

enum class PenaltyFamily { Nuclear, Lq, Scad, Gdp };

/// Concave penalty applied to each singular value. `lambda` is folded into
/// the penalty itself, so the value and supergradient below already include it.
struct PenaltySpec {
  PenaltyFamily family = PenaltyFamily::Gdp;
  double lambda = 1.0;
  /// q for Lq, gamma for SCAD and GDP, ignored for Nuclear.
  double hyper = 1.0;

  /// Builds a spec, filling in the default hyper-parameter when none is given
  /// (q = 0.1, SCAD gamma = 5, GDP gamma = 1).
  static PenaltySpec make(PenaltyFamily family, double lambda,
                          std::optional<double> hyper = std::nullopt);

  /// Throws std::invalid_argument when lambda or the hyper-parameter is out of range.
  void validate() const;

  PenaltySpec with_lambda(double new_lambda) const {
    PenaltySpec out = *this;
    out.lambda = new_lambda;
    return out;
  }

  /// Short label such as "GDP(1)" or "L0.1".
  std::string label() const;
};

double default_hyper(PenaltyFamily family);
PenaltyFamily parse_penalty_family(const std::string& name);
std::string to_string(PenaltyFamily family);

/// Nuclear norm, or Lq with q = 1.
bool is_convex(const PenaltySpec& spec);

double penalty_value(const PenaltySpec& spec, double eta);

/// Returns +infinity for Lq (q < 1) at eta = 0.
double supergradient(const PenaltySpec& spec, double eta);

VectorXd supergradients(const PenaltySpec& spec, const VectorXd& etas);

/// Sum of penalty_value over the given singular values.
double spectral_penalty(const PenaltySpec& spec, const VectorXd& singular_values);

struct SvtResult {
  MatrixXd matrix;
  /// Thresholded singular values in the order of the decomposition of M.
  VectorXd singular_values;
};

/// U diag((s_r - step * w_r)_+) V^T for the SVD U S V^T of M. An infinite
/// weight zeroes its singular value; step = 0 applies no shrinkage at all.
SvtResult weighted_svt(const MatrixXd& m, const VectorXd& weights, double step);

/// argmin over eta >= 0 of 0.5 (z - eta)^2 + penalty_value(spec, eta), by a
/// dense grid followed by golden-section refinement. Reference only; the
/// solver never calls it.
double scalar_prox(const PenaltySpec& spec, double z);

}  // namespace gsca
