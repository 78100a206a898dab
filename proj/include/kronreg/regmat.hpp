#pragma once

#include <optional>
#include <vector>

#include "kronreg/matrix.hpp"

namespace kronreg {

enum class StencilKind { L1, L2, L1Square, L2Square };
enum class RegKind { L1, L2 };
enum class ProjSide { None, Left, Right };

/// Forward-difference, second-difference, and their square invertible
/// variants, including the 1/2 resp. 1/4 prefactors.
inline Mat make_stencil(StencilKind kind, Index n) {
  switch (kind) {
    case StencilKind::L1: {
      if (n < 2) throw dimension_error("make_stencil: L1 needs n >= 2");
      Mat l = Mat::Zero(n - 1, n);
      for (Index i = 0; i < n - 1; ++i) {
        l(i, i) = 0.5;
        l(i, i + 1) = -0.5;
      }
      return l;
    }
    case StencilKind::L2: {
      if (n < 3) throw dimension_error("make_stencil: L2 needs n >= 3");
      Mat l = Mat::Zero(n - 2, n);
      for (Index i = 0; i < n - 2; ++i) {
        l(i, i) = -0.25;
        l(i, i + 1) = 0.5;
        l(i, i + 2) = -0.25;
      }
      return l;
    }
    case StencilKind::L1Square: {
      if (n < 2) throw dimension_error("make_stencil: L1Square needs n >= 2");
      Mat l = Mat::Zero(n, n);
      for (Index i = 0; i < n; ++i) {
        l(i, i) = 0.5;
        if (i + 1 < n) l(i, i + 1) = -0.5;
      }
      return l;
    }
    case StencilKind::L2Square: {
      if (n < 3) throw dimension_error("make_stencil: L2Square needs n >= 3");
      Mat l = Mat::Zero(n, n);
      for (Index i = 0; i < n; ++i) {
        l(i, i) = 0.5;
        if (i > 0) l(i, i - 1) = -0.25;
        if (i + 1 < n) l(i, i + 1) = -0.25;
      }
      return l;
    }
  }
  throw domain_error("make_stencil: unknown kind");
}

/// Modified Gram-Schmidt with one reorthogonalization pass. Columns whose
/// remainder falls below tol are dropped.
inline Mat orthonormalize(const Mat& v, double tol = 1e-12) {
  Mat q(v.rows(), v.cols());
  Index r = 0;
  for (Index j = 0; j < v.cols(); ++j) {
    Vec w = v.col(j);
    for (int pass = 0; pass < 2; ++pass) {
      for (Index i = 0; i < r; ++i) {
        w -= q.col(i).dot(w) * q.col(i);
      }
    }
    const double nrm = w.norm();
    if (nrm > tol * std::max(1.0, v.col(j).norm())) {
      q.col(r++) = w / nrm;
    }
  }
  return q.leftCols(r);
}

/// Orthonormal basis of the stencil's null space: span{ones} for L1,
/// span{ones, [1..n]} for L2, empty for the invertible square kinds.
inline Mat nullspace_basis(StencilKind kind, Index n) {
  switch (kind) {
    case StencilKind::L1: {
      if (n < 2) throw dimension_error("nullspace_basis: L1 needs n >= 2");
      Mat v = Mat::Ones(n, 1);
      return v / v.norm();
    }
    case StencilKind::L2: {
      if (n < 3) throw dimension_error("nullspace_basis: L2 needs n >= 3");
      Mat v(n, 2);
      for (Index i = 0; i < n; ++i) {
        v(i, 0) = 1.0;
        v(i, 1) = static_cast<double>(i + 1);
      }
      return orthonormalize(v);
    }
    case StencilKind::L1Square:
    case StencilKind::L2Square:
      return Mat(n, 0);
  }
  throw domain_error("nullspace_basis: unknown kind");
}

/// p = I - basis * basis^T; symmetric, idempotent, annihilates the basis.
struct OrthoProjector {
  Mat p;
  Mat basis;

  Index order() const { return p.rows(); }
  Index removed() const { return basis.cols(); }
};

inline OrthoProjector projector_from_basis(const Mat& v) {
  const Index n = v.rows();
  if (v.cols() > 0) {
    Mat gram = v.transpose() * v;
    if ((gram - Mat::Identity(v.cols(), v.cols())).cwiseAbs().maxCoeff() > 1e-10) {
      throw domain_error("projector_from_basis: columns not orthonormal");
    }
  }
  OrthoProjector proj;
  proj.basis = v;
  proj.p = Mat::Identity(n, n) - v * v.transpose();
  return proj;
}

/// Frobenius-nearest Kronecker chain whose factor null spaces contain the
/// ranges of the given orthonormal blocks: hat(A)^(i) = A^(i) * P^(i).
inline std::vector<Mat> closest_with_nullspace(const std::vector<Mat>& a_factors,
                                               const std::vector<Mat>& v_factors) {
  if (a_factors.size() != v_factors.size() || a_factors.empty()) {
    throw dimension_error("closest_with_nullspace: factor lists must have equal nonzero length");
  }
  std::vector<Mat> out;
  out.reserve(a_factors.size());
  for (std::size_t i = 0; i < a_factors.size(); ++i) {
    const Mat& a = a_factors[i];
    const Mat& v = v_factors[i];
    if (v.rows() != a.cols()) {
      throw dimension_error("closest_with_nullspace: basis order must equal factor column count");
    }
    out.push_back(a * projector_from_basis(v).p);
  }
  return out;
}

/// Dual form: nearest chain whose factor ranges are orthogonal to the given
/// subspaces: hat(A)^(i) = P^(i) * A^(i).
inline std::vector<Mat> closest_with_range(const std::vector<Mat>& a_factors,
                                           const std::vector<Mat>& v_factors) {
  if (a_factors.size() != v_factors.size() || a_factors.empty()) {
    throw dimension_error("closest_with_range: factor lists must have equal nonzero length");
  }
  std::vector<Mat> out;
  out.reserve(a_factors.size());
  for (std::size_t i = 0; i < a_factors.size(); ++i) {
    const Mat& a = a_factors[i];
    const Mat& v = v_factors[i];
    if (v.rows() != a.rows()) {
      throw dimension_error("closest_with_range: basis order must equal factor row count");
    }
    out.push_back(projector_from_basis(v).p * a);
  }
  return out;
}

/// The diagonal projectors of the worked range examples:
/// diag[0,1,...,1,0] for the L2 kind, diag[1,...,1,0] for the L1 kind.
inline OrthoProjector example_range_projector(RegKind kind, Index n) {
  if (kind == RegKind::L2 && n < 3) {
    throw dimension_error("example_range_projector: L2 needs n >= 3");
  }
  if (n < 2) throw dimension_error("example_range_projector: n >= 2 required");
  const Index ell = (kind == RegKind::L2) ? 2 : 1;
  Mat basis = Mat::Zero(n, ell);
  if (kind == RegKind::L2) {
    basis(0, 0) = 1.0;
    basis(n - 1, 1) = 1.0;
  } else {
    basis(n - 1, 0) = 1.0;
  }
  return projector_from_basis(basis);
}

/// One Kronecker factor of a regularization operator: an invertible base
/// stencil, optionally composed with a projector on the left (P*Lt) or
/// right (Lt*P).
struct RegFactor {
  Mat base;
  std::optional<OrthoProjector> projector;
  ProjSide side = ProjSide::None;

  Index order() const { return base.rows(); }

  Mat effective() const {
    switch (side) {
      case ProjSide::None:
        return base;
      case ProjSide::Left:
        return projector->p * base;
      case ProjSide::Right:
        return base * projector->p;
    }
    throw domain_error("RegFactor: unknown side");
  }
};

inline RegFactor reg_factor(RegKind kind, Index n, ProjSide side) {
  RegFactor f;
  f.base = make_stencil(kind == RegKind::L1 ? StencilKind::L1Square : StencilKind::L2Square, n);
  f.side = side;
  switch (side) {
    case ProjSide::None:
      break;
    case ProjSide::Left:
      f.projector = example_range_projector(kind, n);
      break;
    case ProjSide::Right:
      f.projector = projector_from_basis(
          nullspace_basis(kind == RegKind::L1 ? StencilKind::L1 : StencilKind::L2, n));
      break;
  }
  return f;
}

/// Rectangular stacked regularizer [I kron L; L kron I]. Fixture only; the
/// solver paths use Kronecker-product regularizers.
inline Mat stacked_tensor_stencil(StencilKind kind, Index n) {
  if (kind != StencilKind::L1 && kind != StencilKind::L2) {
    throw domain_error("stacked_tensor_stencil: kind must be L1 or L2");
  }
  const Mat l = make_stencil(kind, n);
  const Mat eye = Mat::Identity(n, n);
  const Mat top = kron(eye, l);
  const Mat bot = kron(l, eye);
  Mat out(top.rows() + bot.rows(), n * n);
  out.topRows(top.rows()) = top;
  out.bottomRows(bot.rows()) = bot;
  return out;
}

}  // namespace kronreg
