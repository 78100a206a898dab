#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "kronreg/matrix.hpp"

namespace kronreg {

/// F-orthonormal block basis of the block Krylov subspace together with the
/// (k+1) x k Hessenberg matrix. beta = ||B||_F. breakdown_at is the 1-based
/// step j at which h_{j+1,j} vanished.
struct GlobalArnoldiDecomp {
  std::vector<Mat> blocks;
  Mat hess;
  double beta = 0.0;
  std::optional<int> breakdown_at;

  int steps() const { return static_cast<int>(hess.cols()); }
};

/// Incremental global Arnoldi. Orthogonalization is classical Gram-Schmidt
/// with one full reorthogonalization pass (CGS2); both passes accumulate
/// into the Hessenberg entries. Breakdown when h_{j+1,j} <= 1e-12 * beta.
class GlobalArnoldiBuilder {
 public:
  using ApplyFn = std::function<Mat(const Mat&)>;

  GlobalArnoldiBuilder(ApplyFn apply, const Mat& b)
      : apply_(std::move(apply)), beta_(b.norm()),
        capacity_(b.rows() * b.cols()) {
    require_finite(b, "global_arnoldi");
    if (beta_ == 0.0) {
      throw degenerate_input_error("global_arnoldi: zero starting block");
    }
    blocks_.push_back(b / beta_);
    hess_.resize(1, 0);
  }

  /// Runs one step. Returns false when no further step is possible (prior
  /// breakdown or exhausted space); a step that itself breaks down still
  /// returns true and records breakdown_at.
  bool advance() {
    if (breakdown_) return false;
    const Index j = hess_.cols() + 1;  // step number, 1-based
    if (j > capacity_) return false;
    Mat w = apply_(blocks_[j - 1]);
    if (w.rows() != blocks_[0].rows() || w.cols() != blocks_[0].cols()) {
      throw dimension_error("global_arnoldi: operator does not preserve block shape");
    }

    Mat h = Mat::Zero(j + 1, j);
    h.topLeftCorner(j, j - 1) = hess_;
    hess_.swap(h);
    for (int pass = 0; pass < 2; ++pass) {
      for (Index i = 0; i < j; ++i) {
        const double c = frobenius_inner(w, blocks_[i]);
        w -= c * blocks_[i];
        hess_(i, j - 1) += c;
      }
    }
    const double hsub = w.norm();
    hess_(j, j - 1) = hsub;
    if (hsub <= 1e-12 * beta_) {
      breakdown_ = static_cast<int>(j);
      return true;
    }
    blocks_.push_back(w / hsub);
    return true;
  }

  bool broken_down() const { return breakdown_.has_value(); }
  double beta() const { return beta_; }
  int steps() const { return static_cast<int>(hess_.cols()); }
  const std::vector<Mat>& blocks() const { return blocks_; }
  const Mat& hessenberg() const { return hess_; }

  GlobalArnoldiDecomp decomp() const {
    return GlobalArnoldiDecomp{blocks_, hess_, beta_, breakdown_};
  }

 private:
  ApplyFn apply_;
  std::vector<Mat> blocks_;
  Mat hess_;
  double beta_;
  Index capacity_;
  std::optional<int> breakdown_;
};

inline GlobalArnoldiDecomp global_arnoldi(GlobalArnoldiBuilder::ApplyFn apply,
                                          const Mat& b, int k) {
  if (k < 1) throw domain_error("global_arnoldi: k must be positive");
  if (static_cast<Index>(k) > b.rows() * b.cols()) {
    throw capacity_error("global_arnoldi: k exceeds the block-vector dimension");
  }
  GlobalArnoldiBuilder builder(std::move(apply), b);
  for (int j = 0; j < k; ++j) {
    if (!builder.advance()) break;
    if (builder.broken_down()) break;
  }
  return builder.decomp();
}

/// Deviation between the expanded residual ||sum_i y_i apply(V_i) - B||_F
/// and the projected residual ||H y - beta e1||.
inline double residual_identity_check(const GlobalArnoldiDecomp& decomp,
                                      const GlobalArnoldiBuilder::ApplyFn& apply,
                                      const Vec& y) {
  const Index k = y.size();
  if (k > decomp.hess.cols()) {
    throw dimension_error("residual_identity_check: y longer than the decomposition");
  }
  Mat r = -decomp.beta * decomp.blocks[0];
  for (Index i = 0; i < k; ++i) {
    r += y(i) * apply(decomp.blocks[i]);
  }
  Vec small = decomp.hess.topRows(k + 1).leftCols(k) * y;
  small(0) -= decomp.beta;
  return std::abs(r.norm() - small.norm());
}

}  // namespace kronreg
