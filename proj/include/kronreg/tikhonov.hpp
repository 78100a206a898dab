#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "kronreg/global_arnoldi.hpp"
#include "kronreg/matrix.hpp"
#include "kronreg/regmat.hpp"

namespace kronreg {

/// Transformed operator factor K1 = K * Lt^{-1} (computed by solves) and the
/// penalty operator in Y-coordinates: P for left-composed regularizers,
/// Lt * P * Lt^{-1} for right-composed ones, I when no projector.
struct StandardFormFactor {
  Mat k1;
  Mat penalty;
};

inline StandardFormFactor standard_form_factor(const Mat& k_factor, const RegFactor& reg) {
  if (k_factor.cols() != reg.base.rows()) {
    throw dimension_error("standard_form_factor: operator/regularizer order mismatch");
  }
  StandardFormFactor out;
  // K Lt^{-1} via Lt^T z = K^T
  out.k1 = solve_dense(reg.base.transpose(), k_factor.transpose()).transpose();
  const Index n = reg.base.rows();
  switch (reg.side) {
    case ProjSide::None:
      out.penalty = Mat::Identity(n, n);
      break;
    case ProjSide::Left:
      out.penalty = reg.projector->p;
      break;
    case ProjSide::Right:
      // M = Lt P Lt^{-1}
      out.penalty =
          solve_dense(reg.base.transpose(), reg.projector->p * reg.base.transpose()).transpose();
      break;
  }
  return out;
}

/// Gram matrix G_ij = <m1 V_i m2^T, m1 V_j m2^T> over the first k blocks,
/// so that ||sum_i y_i m1 V_i m2^T||_F^2 = y^T G y.
inline Mat penalty_gram(const GlobalArnoldiDecomp& decomp, const Mat& m1, const Mat& m2) {
  const int k = decomp.steps();
  if (k < 1) throw dimension_error("penalty_gram: empty decomposition");
  std::vector<Mat> w(k);
  for (int i = 0; i < k; ++i) {
    const Mat& v = decomp.blocks[i];
    if (m1.cols() != v.rows() || m2.cols() != v.cols()) {
      throw dimension_error("penalty_gram: penalty operators do not conform with blocks");
    }
    w[i] = m1 * v * m2.transpose();
  }
  Mat g(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j <= i; ++j) {
      g(i, j) = g(j, i) = frobenius_inner(w[i], w[j]);
    }
  }
  return g;
}

struct ProjectedSolution {
  Vec y;
  double residual;  // ||hess y - beta e1||
};

/// Minimize ||hess y - beta e1||^2 + mu y^T gram y by stacking
/// [hess; sqrt(mu) C] with C^T C = gram (eigenvalues clipped at 0).
inline ProjectedSolution solve_projected(const Mat& hess, double beta, const Mat& gram,
                                         double mu) {
  if (mu <= 0.0) throw domain_error("solve_projected: mu must be positive");
  const Index k = hess.cols();
  if (gram.rows() != k || gram.cols() != k) {
    throw dimension_error("solve_projected: gram order must match hess columns");
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(gram);
  Vec lam = eig.eigenvalues().cwiseMax(0.0);
  Mat c = lam.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();

  Mat stacked(hess.rows() + k, k);
  stacked.topRows(hess.rows()) = hess;
  stacked.bottomRows(k) = std::sqrt(mu) * c;
  Vec rhs = Vec::Zero(stacked.rows());
  rhs(0) = beta;
  Vec y = lstsq(stacked, rhs);

  Vec r = hess * y;
  r(0) -= beta;
  return ProjectedSolution{std::move(y), r.norm()};
}

enum class MuSearchStatus {
  Converged,       // |residual - target| <= 1e-6 * target
  TargetBelowReach,  // residual(mu_min) > target: Krylov space too small
  Saturated        // residual(mu_max) < target: accept mu_max
};

struct MuSearchResult {
  MuSearchStatus status;
  double mu;
  Vec y;
  double residual;
};

/// Bisection on log10(mu) for residual(mu) = target; the residual is
/// nondecreasing in mu.
inline MuSearchResult find_mu(const Mat& hess, double beta, const Mat& gram, double target,
                              double mu_min = 1e-12, double mu_max = 1e12) {
  if (target <= 0.0) throw domain_error("find_mu: target must be positive");
  if (!(mu_min > 0.0 && mu_min < mu_max)) {
    throw domain_error("find_mu: invalid bracket");
  }
  const double rtol = 1e-6 * target;
  auto eval = [&](double mu) { return solve_projected(hess, beta, gram, mu); };

  ProjectedSolution lo = eval(mu_min);
  if (std::abs(lo.residual - target) <= rtol) {
    return {MuSearchStatus::Converged, mu_min, std::move(lo.y), lo.residual};
  }
  if (lo.residual > target) {
    return {MuSearchStatus::TargetBelowReach, mu_min, std::move(lo.y), lo.residual};
  }
  ProjectedSolution hi = eval(mu_max);
  if (std::abs(hi.residual - target) <= rtol) {
    return {MuSearchStatus::Converged, mu_max, std::move(hi.y), hi.residual};
  }
  if (hi.residual < target) {
    return {MuSearchStatus::Saturated, mu_max, std::move(hi.y), hi.residual};
  }

  double tlo = std::log10(mu_min);
  double thi = std::log10(mu_max);
  for (int iter = 0; iter < 200; ++iter) {
    const double tmid = 0.5 * (tlo + thi);
    const double mu = std::pow(10.0, tmid);
    ProjectedSolution mid = eval(mu);
    if (std::abs(mid.residual - target) <= rtol) {
      return {MuSearchStatus::Converged, mu, std::move(mid.y), mid.residual};
    }
    if (mid.residual < target) {
      tlo = tmid;
    } else {
      thi = tmid;
    }
  }
  // bracket collapsed without meeting the tolerance; report the upper end
  const double mu = std::pow(10.0, thi);
  ProjectedSolution fin = eval(mu);
  return {MuSearchStatus::Converged, mu, std::move(fin.y), fin.residual};
}

struct TikhonovKronProblem {
  Mat k1_factor;
  Mat k2_factor;
  Mat data_b;
  RegFactor reg1;
  RegFactor reg2;
  double noise_bound_eps = 0.0;
  double eta = 1.01;
  int k_max = 0;  // 0: default min(n, 60)
  double mu_min = 1e-12;
  double mu_max = 1e12;
};

struct SolveReport {
  Mat x_solution;
  double mu = 0.0;
  int k_used = 0;
  double discrepancy_residual = 0.0;
  bool converged = false;
  bool saturated = false;
  double residual_identity_dev = 0.0;
  std::optional<double> relative_error;
  double wall_seconds = 0.0;
};

namespace detail {

inline void validate_kron_problem(const TikhonovKronProblem& p) {
  const Index n1 = p.data_b.rows();
  const Index n2 = p.data_b.cols();
  if (p.k1_factor.rows() != n1 || p.k1_factor.cols() != n1 ||
      p.k2_factor.rows() != n2 || p.k2_factor.cols() != n2 ||
      p.reg1.order() != n1 || p.reg2.order() != n2) {
    throw dimension_error("solve_kron: factor orders do not agree with data shape");
  }
  if (p.eta < 1.0) throw domain_error("solve_kron: eta must be >= 1");
  if (p.noise_bound_eps < 0.0) throw domain_error("solve_kron: eps must be >= 0");
  if (!(p.mu_min > 0.0 && p.mu_min < p.mu_max)) {
    throw domain_error("solve_kron: invalid mu bracket");
  }
  if (p.data_b.norm() == 0.0) {
    throw degenerate_input_error("solve_kron: zero data");
  }
}

}  // namespace detail

/// Grows the global Arnoldi space of the operator V -> K1 V K2^T one step at
/// a time and stops at the first k where the discrepancy target eta*eps is
/// attainable. The penalty is evaluated in the original coordinates through
/// the effective regularization factors, so no back-transformation is needed
/// and the Krylov space is that of the unpreconditioned operator.
inline SolveReport solve_kron(const TikhonovKronProblem& problem,
                              const Mat* reference = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  detail::validate_kron_problem(problem);

  const Mat l1 = problem.reg1.effective();
  const Mat l2 = problem.reg2.effective();
  auto apply = [&](const Mat& v) -> Mat {
    return problem.k1_factor * v * problem.k2_factor.transpose();
  };

  GlobalArnoldiBuilder builder(apply, problem.data_b);
  const double beta = builder.beta();
  const double target = problem.eta * problem.noise_bound_eps;
  const Index n = problem.data_b.rows();
  int k_max = problem.k_max > 0 ? problem.k_max
                                : static_cast<int>(std::min<Index>(n, 60));
  k_max = static_cast<int>(std::min<Index>(k_max, problem.data_b.size()));

  // incremental gram of the penalty-transformed blocks
  std::vector<Mat> w;
  Mat gram(0, 0);

  SolveReport report;
  Vec y;
  bool accepted = false;

  while (builder.steps() < k_max) {
    if (!builder.advance()) break;
    const int k = builder.steps();
    {
      const Mat& v = builder.blocks()[k - 1];
      w.push_back(l1 * v * l2.transpose());
      Mat g = Mat::Zero(k, k);
      g.topLeftCorner(k - 1, k - 1) = gram;
      for (int i = 0; i < k; ++i) {
        g(i, k - 1) = g(k - 1, i) = frobenius_inner(w[i], w[k - 1]);
      }
      gram.swap(g);
    }
    const Mat& hess = builder.hessenberg();

    if (target <= 1e-14 * beta) {
      // exact-data mode: accept once the unregularized residual vanishes
      Vec rhs = Vec::Zero(k + 1);
      rhs(0) = beta;
      Vec y0 = lstsq(hess, rhs);
      Vec r = hess * y0;
      r(0) -= beta;
      y = std::move(y0);
      report.mu = problem.mu_min;
      report.discrepancy_residual = r.norm();
      if (r.norm() <= 1e-10 * beta || builder.broken_down()) {
        report.converged = r.norm() <= 1e-10 * beta;
        accepted = true;
        break;
      }
      continue;
    }

    MuSearchResult res = find_mu(hess, beta, gram, target, problem.mu_min, problem.mu_max);
    if (res.status == MuSearchStatus::TargetBelowReach) {
      if (builder.broken_down()) {
        // space exhausted; keep the least-regularized iterate
        y = std::move(res.y);
        report.mu = res.mu;
        report.discrepancy_residual = res.residual;
        report.converged = false;
        accepted = true;
        break;
      }
      y = res.y;  // best so far in case k_max is hit
      report.mu = res.mu;
      report.discrepancy_residual = res.residual;
      continue;
    }
    y = std::move(res.y);
    report.mu = res.mu;
    report.discrepancy_residual = res.residual;
    report.converged = true;
    report.saturated = (res.status == MuSearchStatus::Saturated);
    accepted = true;
    break;
  }
  (void)accepted;

  const int k = static_cast<int>(y.size());
  if (k == 0) {
    throw degenerate_input_error("solve_kron: no Arnoldi step could be taken");
  }
  report.k_used = k;

  Mat yk = Mat::Zero(problem.data_b.rows(), problem.data_b.cols());
  for (int i = 0; i < k; ++i) {
    yk += y(i) * builder.blocks()[i];
  }
  report.residual_identity_dev =
      std::abs((apply(yk) - problem.data_b).norm() - report.discrepancy_residual);
  report.x_solution = std::move(yk);

  if (reference != nullptr) {
    report.relative_error = (report.x_solution - *reference).norm() / reference->norm();
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

/// Fixed-mu, fixed-k variant used for oracle comparisons.
inline Mat solve_kron_fixed_mu(const Mat& k1_factor, const Mat& k2_factor,
                               const RegFactor& reg1, const RegFactor& reg2,
                               const Mat& data_b, double mu, int k) {
  auto apply = [&](const Mat& v) -> Mat { return k1_factor * v * k2_factor.transpose(); };
  GlobalArnoldiDecomp decomp = global_arnoldi(apply, data_b, k);
  const Mat gram = penalty_gram(decomp, reg1.effective(), reg2.effective());
  ProjectedSolution sol = solve_projected(decomp.hess, decomp.beta, gram, mu);
  Mat xk = Mat::Zero(data_b.rows(), data_b.cols());
  for (int i = 0; i < decomp.steps(); ++i) {
    xk += sol.y(i) * decomp.blocks[i];
  }
  return xk;
}

/// Exact Tikhonov minimizer x = (K^T K + mu L^T L)^{-1} K^T b; the dense
/// oracle for the iterative paths.
inline Vec direct_solve(const Mat& k_full, const Vec& b, const Mat& l_full, double mu) {
  if (mu <= 0.0) throw domain_error("direct_solve: mu must be positive");
  if (k_full.rows() != b.size() || l_full.cols() != k_full.cols()) {
    throw dimension_error("direct_solve: shape mismatch");
  }
  Mat normal = k_full.transpose() * k_full + mu * l_full.transpose() * l_full;
  return solve_dense(normal, Vec(k_full.transpose() * b));
}

/// Standard (single-column) Arnoldi path for square K without Kronecker
/// structure. The penalty term ||(L2 kron L1) x|| is evaluated through the
/// matrix form of each basis vector, so only the two small effective factors
/// are ever formed.
inline SolveReport solve_general(const Mat& k_full, const Vec& b, const RegFactor& reg1,
                                 const RegFactor& reg2, double noise_bound_eps,
                                 double eta = 1.01, int k_max = 0, double mu_min = 1e-12,
                                 double mu_max = 1e12, const Vec* reference = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  const Index n1 = reg1.order();
  const Index n2 = reg2.order();
  const Index n_total = n1 * n2;
  if (k_full.rows() != k_full.cols() || k_full.rows() != n_total || b.size() != n_total) {
    throw dimension_error("solve_general: orders do not agree");
  }
  if (b.norm() == 0.0) throw degenerate_input_error("solve_general: zero data");
  if (eta < 1.0) throw domain_error("solve_general: eta must be >= 1");

  const Mat l1 = reg1.effective();
  const Mat l2 = reg2.effective();
  auto apply = [&](const Mat& v) -> Mat { return k_full * v.col(0); };

  GlobalArnoldiBuilder builder(apply, b);
  const double beta = builder.beta();
  const double target = eta * noise_bound_eps;
  int km = k_max > 0 ? k_max : static_cast<int>(std::min<Index>(n_total, 60));
  km = static_cast<int>(std::min<Index>(km, n_total));

  std::vector<Vec> w;
  Mat gram(0, 0);
  SolveReport report;
  Vec y;

  while (builder.steps() < km) {
    if (!builder.advance()) break;
    const int k = builder.steps();
    {
      Mat vm = unvec(Vec(builder.blocks()[k - 1].col(0)), n1, n2);
      w.push_back(vec(l1 * vm * l2.transpose()));
      Mat g = Mat::Zero(k, k);
      g.topLeftCorner(k - 1, k - 1) = gram;
      for (int i = 0; i < k; ++i) {
        g(i, k - 1) = g(k - 1, i) = w[i].dot(w[k - 1]);
      }
      gram.swap(g);
    }
    const Mat& hess = builder.hessenberg();

    if (target <= 1e-14 * beta) {
      Vec rhs = Vec::Zero(k + 1);
      rhs(0) = beta;
      Vec y0 = lstsq(hess, rhs);
      Vec r = hess * y0;
      r(0) -= beta;
      y = std::move(y0);
      report.mu = mu_min;
      report.discrepancy_residual = r.norm();
      if (r.norm() <= 1e-10 * beta || builder.broken_down()) {
        report.converged = r.norm() <= 1e-10 * beta;
        break;
      }
      continue;
    }

    MuSearchResult res = find_mu(hess, beta, gram, target, mu_min, mu_max);
    if (res.status == MuSearchStatus::TargetBelowReach) {
      y = res.y;
      report.mu = res.mu;
      report.discrepancy_residual = res.residual;
      if (builder.broken_down()) break;
      continue;
    }
    y = std::move(res.y);
    report.mu = res.mu;
    report.discrepancy_residual = res.residual;
    report.converged = true;
    report.saturated = (res.status == MuSearchStatus::Saturated);
    break;
  }

  const int k = static_cast<int>(y.size());
  if (k == 0) throw degenerate_input_error("solve_general: no Arnoldi step could be taken");
  report.k_used = k;

  Vec yk = Vec::Zero(n_total);
  for (int i = 0; i < k; ++i) {
    yk += y(i) * builder.blocks()[i].col(0);
  }
  report.residual_identity_dev =
      std::abs((Vec(k_full * yk) - b).norm() - report.discrepancy_residual);
  if (reference != nullptr) {
    report.relative_error = (yk - *reference).norm() / reference->norm();
  }
  report.x_solution = std::move(yk);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

/// Fixed-mu, fixed-k variant of solve_general.
inline Vec solve_general_fixed_mu(const Mat& k_full, const Vec& b, const RegFactor& reg1,
                                  const RegFactor& reg2, double mu, int k) {
  const Index n1 = reg1.order();
  const Index n2 = reg2.order();
  const Mat l1 = reg1.effective();
  const Mat l2 = reg2.effective();
  auto apply = [&](const Mat& v) -> Mat { return k_full * v.col(0); };
  GlobalArnoldiDecomp decomp = global_arnoldi(apply, b, k);
  const int ks = decomp.steps();
  Mat gram(ks, ks);
  std::vector<Vec> w(ks);
  for (int i = 0; i < ks; ++i) {
    Mat vm = unvec(Vec(decomp.blocks[i].col(0)), n1, n2);
    w[i] = vec(l1 * vm * l2.transpose());
  }
  for (int i = 0; i < ks; ++i) {
    for (int j = 0; j <= i; ++j) {
      gram(i, j) = gram(j, i) = w[i].dot(w[j]);
    }
  }
  ProjectedSolution sol = solve_projected(decomp.hess, decomp.beta, gram, mu);
  Vec xk = Vec::Zero(n1 * n2);
  for (int i = 0; i < ks; ++i) {
    xk += sol.y(i) * decomp.blocks[i].col(0);
  }
  return xk;
}

}  // namespace kronreg
