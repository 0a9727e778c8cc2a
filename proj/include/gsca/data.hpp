#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace gsca {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Raised when the iterates of a fit stop being finite or a decomposition fails.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed input files or data that violates the model's domain.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A binary block X1 and a quantitative block X2 measured on the same I rows.
///
/// Missingness lives only in the indicator masks Q1 and Q2 (1 = observed).
/// Values stored under a zero mask entry are canonicalized to 0 so that they
/// cannot leak into any computation.
class CoupledData {
 public:
  CoupledData(MatrixXd x1, MatrixXd x2, MatrixXd q1, MatrixXd q2);

  /// Both blocks fully observed.
  static CoupledData fully_observed(MatrixXd x1, MatrixXd x2);

  const MatrixXd& x1() const { return x1_; }
  const MatrixXd& x2() const { return x2_; }
  const MatrixXd& q1() const { return q1_; }
  const MatrixXd& q2() const { return q2_; }

  Index rows() const { return x1_.rows(); }
  Index j1() const { return x1_.cols(); }
  Index j2() const { return x2_.cols(); }
  Index cols() const { return j1() + j2(); }

  /// [Q1 Q2]
  MatrixXd mask() const;
  /// [X1 X2]
  MatrixXd values() const;

  Index observed_binary() const;
  Index observed_quantitative() const;
  Index observed() const { return observed_binary() + observed_quantitative(); }

  /// Same values, new masks. The new masks must not reveal entries that are
  /// missing here.
  CoupledData with_masks(MatrixXd q1, MatrixXd q2) const;

 private:
  MatrixXd x1_, x2_, q1_, q2_;
};

/// Horizontal concatenation [left right].
MatrixXd hcat(const MatrixXd& left, const MatrixXd& right);

}  // namespace gsca
