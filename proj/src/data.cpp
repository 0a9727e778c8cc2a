#include "gsca/data.hpp"

#include <cmath>

namespace gsca {

namespace {

void check_mask(const MatrixXd& q, const char* name) {
  for (Index j = 0; j < q.cols(); ++j)
    for (Index i = 0; i < q.rows(); ++i)
      if (q(i, j) != 0.0 && q(i, j) != 1.0)
        throw std::invalid_argument(std::string(name) + " must contain only 0 and 1");
}

}  // namespace

CoupledData::CoupledData(MatrixXd x1, MatrixXd x2, MatrixXd q1, MatrixXd q2)
    : x1_(std::move(x1)), x2_(std::move(x2)), q1_(std::move(q1)), q2_(std::move(q2)) {
  if (x1_.rows() < 2) throw std::invalid_argument("need at least two rows");
  if (x1_.cols() < 1 || x2_.cols() < 1)
    throw std::invalid_argument("each block needs at least one column");
  if (x2_.rows() != x1_.rows())
    throw std::invalid_argument("binary and quantitative blocks differ in row count");
  if (q1_.rows() != x1_.rows() || q1_.cols() != x1_.cols())
    throw std::invalid_argument("Q1 shape does not match X1");
  if (q2_.rows() != x2_.rows() || q2_.cols() != x2_.cols())
    throw std::invalid_argument("Q2 shape does not match X2");
  check_mask(q1_, "Q1");
  check_mask(q2_, "Q2");

  for (Index j = 0; j < x1_.cols(); ++j) {
    for (Index i = 0; i < x1_.rows(); ++i) {
      if (q1_(i, j) == 0.0) {
        x1_(i, j) = 0.0;
      } else if (x1_(i, j) != 0.0 && x1_(i, j) != 1.0) {
        throw DataError("observed binary entry (" + std::to_string(i) + ", " +
                        std::to_string(j) + ") is not 0 or 1");
      }
    }
  }
  for (Index j = 0; j < x2_.cols(); ++j) {
    for (Index i = 0; i < x2_.rows(); ++i) {
      if (q2_(i, j) == 0.0) {
        x2_(i, j) = 0.0;
      } else if (!std::isfinite(x2_(i, j))) {
        throw DataError("observed quantitative entry (" + std::to_string(i) + ", " +
                        std::to_string(j) + ") is not finite");
      }
    }
  }
}

CoupledData CoupledData::fully_observed(MatrixXd x1, MatrixXd x2) {
  MatrixXd q1 = MatrixXd::Ones(x1.rows(), x1.cols());
  MatrixXd q2 = MatrixXd::Ones(x2.rows(), x2.cols());
  return CoupledData(std::move(x1), std::move(x2), std::move(q1), std::move(q2));
}

MatrixXd CoupledData::mask() const { return hcat(q1_, q2_); }

MatrixXd CoupledData::values() const { return hcat(x1_, x2_); }

Index CoupledData::observed_binary() const { return static_cast<Index>(q1_.sum()); }

Index CoupledData::observed_quantitative() const { return static_cast<Index>(q2_.sum()); }

CoupledData CoupledData::with_masks(MatrixXd q1, MatrixXd q2) const {
  if (q1.rows() != q1_.rows() || q1.cols() != q1_.cols() || q2.rows() != q2_.rows() ||
      q2.cols() != q2_.cols())
    throw std::invalid_argument("mask shape mismatch");
  if ((q1.array() > q1_.array()).any() || (q2.array() > q2_.array()).any())
    throw std::invalid_argument("new mask reveals entries that are missing");
  return CoupledData(x1_, x2_, std::move(q1), std::move(q2));
}

MatrixXd hcat(const MatrixXd& left, const MatrixXd& right) {
  if (left.rows() != right.rows()) throw std::invalid_argument("hcat: row count mismatch");
  MatrixXd out(left.rows(), left.cols() + right.cols());
  out << left, right;
  return out;
}

}  // namespace gsca
