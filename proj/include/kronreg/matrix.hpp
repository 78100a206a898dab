#pragma once

#include <Eigen/Dense>

#include <limits>
#include <string>

#include "kronreg/errors.hpp"

namespace kronreg {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Eigen::Index;

inline void require_finite(const Mat& a, const char* what) {
  if (!a.allFinite()) {
    throw domain_error(std::string(what) + ": non-finite entries");
  }
}

inline void require_same_shape(const Mat& a, const Mat& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw dimension_error(std::string(what) + ": shape mismatch (" +
                          std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                          std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
  }
}

/// Frobenius inner product trace(a^T b).
inline double frobenius_inner(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "frobenius_inner");
  return a.cwiseProduct(b).sum();
}

inline double frobenius_norm(const Mat& a) { return a.norm(); }

/// Kronecker product, block (i,j) = a(i,j) * b.
inline Mat kron(const Mat& a, const Mat& b) {
  const long long rows = static_cast<long long>(a.rows()) * b.rows();
  const long long cols = static_cast<long long>(a.cols()) * b.cols();
  // keep the dense product well under addressable range
  if (rows <= 0 || cols <= 0 || rows * cols > (1LL << 28)) {
    throw capacity_error("kron: product dimensions too large");
  }
  Mat out(rows, cols);
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// Column-stacking: vec(A Y B) = (B^T kron A) vec(Y).
inline Vec vec(const Mat& x) {
  return Eigen::Map<const Vec>(x.data(), x.size());
}

inline Mat unvec(const Vec& v, Index rows, Index cols) {
  if (v.size() != rows * cols) {
    throw dimension_error("unvec: size does not factor as rows*cols");
  }
  return Eigen::Map<const Mat>(v.data(), rows, cols);
}

/// Solve a*x = rhs for square a by pivoted LU; throws singular_error when a
/// pivot falls below 1e-14 * ||a||_F.
inline Mat solve_dense(const Mat& a, const Mat& rhs) {
  if (a.rows() != a.cols()) {
    throw dimension_error("solve_dense: matrix must be square");
  }
  if (rhs.rows() != a.rows()) {
    throw dimension_error("solve_dense: rhs row count mismatch");
  }
  require_finite(a, "solve_dense");
  require_finite(rhs, "solve_dense");
  Eigen::FullPivLU<Mat> lu(a);
  const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (min_pivot <= 1e-14 * a.norm()) {
    throw singular_error("solve_dense: numerically singular matrix");
  }
  return lu.solve(rhs);
}

/// Least-squares minimizer of ||a*y - rhs|| via column-pivoted QR.
/// Requires full column rank within tolerance 1e-12.
inline Vec lstsq(const Mat& a, const Vec& rhs) {
  if (a.rows() < a.cols()) {
    throw dimension_error("lstsq: need at least as many rows as columns");
  }
  if (rhs.size() != a.rows()) {
    throw dimension_error("lstsq: rhs size mismatch");
  }
  require_finite(a, "lstsq");
  Eigen::ColPivHouseholderQR<Mat> qr;
  qr.setThreshold(1e-12);
  qr.compute(a);
  if (qr.rank() < a.cols()) {
    throw rank_error("lstsq: rank-deficient matrix");
  }
  return qr.solve(rhs);
}

}  // namespace kronreg
