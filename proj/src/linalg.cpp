#include "gsca/linalg.hpp"

namespace gsca {

namespace {

// BDCSVD in Eigen 3.4.0 can index out of bounds while deflating matrices with
// many exactly zero singular values, which is the normal shape of Z here.
using Jacobi = Eigen::JacobiSVD<MatrixXd, Eigen::ColPivHouseholderQRPreconditioner>;

}  // namespace

ThinSvd thin_svd(const MatrixXd& m) {
  if (!m.allFinite()) throw NumericError("SVD input has non-finite entries");
  const Jacobi svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericError("SVD did not converge");
  return ThinSvd{svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

VectorXd singular_values(const MatrixXd& m) {
  if (!m.allFinite()) throw NumericError("SVD input has non-finite entries");
  const Jacobi svd(m);
  if (svd.info() != Eigen::Success) throw NumericError("SVD did not converge");
  return svd.singularValues();
}

namespace detail {

GramEigen gram_eigen(const MatrixXd& m) {
  if (!m.allFinite()) throw NumericError("SVD input has non-finite entries");
  GramEigen out;
  out.wide = m.rows() <= m.cols();
  const Index n = out.wide ? m.rows() : m.cols();
  MatrixXd gram = MatrixXd::Zero(n, n);
  if (out.wide) {
    gram.selfadjointView<Eigen::Lower>().rankUpdate(m);
  } else {
    gram.selfadjointView<Eigen::Lower>().rankUpdate(m.transpose());
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram.selfadjointView<Eigen::Lower>());
  if (es.info() != Eigen::Success) throw NumericError("eigen-decomposition did not converge");
  // Eigen returns ascending eigenvalues.
  out.vectors = es.eigenvectors().rowwise().reverse();
  out.s = es.eigenvalues().reverse().cwiseMax(0.0).cwiseSqrt();
  return out;
}

}  // namespace detail

VectorXd column_means(const MatrixXd& m) { return m.colwise().mean().transpose(); }

MatrixXd column_center(const MatrixXd& m) {
  return m.rowwise() - m.colwise().mean();
}

MatrixXd add_offset(const VectorXd& mu, const MatrixXd& z) {
  if (mu.size() != z.cols()) throw std::invalid_argument("offset length mismatch");
  return z.rowwise() + mu.transpose();
}

}  // namespace gsca
