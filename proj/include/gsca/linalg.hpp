#pragma once

#include <algorithm>

#include "gsca/data.hpp"

namespace gsca {

/// Thin SVD M = U diag(s) V^T with s nonincreasing.
struct ThinSvd {
  MatrixXd u;
  VectorXd s;
  MatrixXd v;
};

ThinSvd thin_svd(const MatrixXd& m);

VectorXd singular_values(const MatrixXd& m);

/// Result of replacing the singular values s_r of M by new values v_r.
struct SpectralShrink {
  MatrixXd matrix;
  /// v_r for every r in 0..min(I, J) - 1, aligned with nonincreasing s_r.
  VectorXd values;
};

/// Computes U diag(v) V^T with v_r = shrink(r, s_r) and v_r <= s_r.
///
/// The decomposition comes from the eigen-decomposition of the smaller Gram
/// matrix, and the result is assembled as U_k diag(v_k / s_k) U_k^T M over the
/// kept components. That route is accurate for components well above the
/// rounding floor of the Gram matrix; when a kept s_r falls below
/// `kGramRelativeFloor * s_1` the computation is redone with a full SVD.
template <typename Shrink>
SpectralShrink spectral_shrink(const MatrixXd& m, Shrink&& shrink);

inline constexpr double kGramRelativeFloor = 1e-3;

/// J M with J = I - (1/n) 1 1^T.
MatrixXd column_center(const MatrixXd& m);

VectorXd column_means(const MatrixXd& m);

/// 1 mu^T + Z
MatrixXd add_offset(const VectorXd& mu, const MatrixXd& z);

namespace detail {

struct GramEigen {
  MatrixXd vectors;  // columns in order of nonincreasing singular value
  VectorXd s;
  bool wide = true;  // Gram = M M^T when true, M^T M otherwise
};

GramEigen gram_eigen(const MatrixXd& m);

}  // namespace detail

template <typename Shrink>
SpectralShrink spectral_shrink(const MatrixXd& m, Shrink&& shrink) {
  const Index n = std::min(m.rows(), m.cols());
  SpectralShrink out;
  out.values = VectorXd::Zero(n);
  if (n == 0) {
    out.matrix = m;
    return out;
  }

  const detail::GramEigen ge = detail::gram_eigen(m);
  const double floor = kGramRelativeFloor * ge.s[0];
  bool exact = true;
  Index kept = 0;
  for (Index r = 0; r < n; ++r) {
    out.values[r] = ge.s[r] > 0.0 ? shrink(r, ge.s[r]) : 0.0;
    if (out.values[r] > 0.0) {
      ++kept;
      if (ge.s[r] < floor || r + 1 != kept) exact = false;
    }
  }

  if (exact) {
    const VectorXd scale = out.values.head(kept).cwiseQuotient(ge.s.head(kept));
    const auto basis = ge.vectors.leftCols(kept);
    if (ge.wide) {
      out.matrix = basis * scale.asDiagonal() * (basis.transpose() * m);
    } else {
      out.matrix = (m * basis) * scale.asDiagonal() * basis.transpose();
    }
    return out;
  }

  const ThinSvd svd = thin_svd(m);
  for (Index r = 0; r < n; ++r) out.values[r] = svd.s[r] > 0.0 ? shrink(r, svd.s[r]) : 0.0;
  out.matrix = svd.u * out.values.asDiagonal() * svd.v.transpose();
  return out;
}

}  // namespace gsca
