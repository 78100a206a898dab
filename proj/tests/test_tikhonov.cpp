#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "kronreg/problems.hpp"
#include "kronreg/tikhonov.hpp"

using namespace kronreg;

namespace {

Mat random_mat(SplitMix64& rng, Index r, Index c) {
  Mat m(r, c);
  fill_standard_normal(m, rng);
  return m;
}

RegFactor identity_reg(Index n) {
  return RegFactor{Mat::Identity(n, n), std::nullopt, ProjSide::None};
}

}  // namespace

TEST_CASE("standard_form_factor") {
  SplitMix64 rng(31);
  const Index n = 5;
  const Mat k = random_mat(rng, n, n);

  SECTION("identity base, no projector") {
    const auto f = standard_form_factor(k, identity_reg(n));
    CHECK((f.k1 - k).norm() <= 1e-14);
    CHECK((f.penalty - Mat::Identity(n, n)).norm() == 0.0);
  }

  SECTION("left case yields the diagonal projector penalty") {
    const RegFactor reg = reg_factor(RegKind::L2, n, ProjSide::Left);
    const auto f = standard_form_factor(k, reg);
    Vec d(n);
    d << 0, 1, 1, 1, 0;
    CHECK((f.penalty - Mat(d.asDiagonal())).norm() == 0.0);
  }

  SECTION("self-cancellation") {
    const RegFactor reg = reg_factor(RegKind::L2, n, ProjSide::None);
    const auto f = standard_form_factor(reg.base, reg);
    CHECK((f.k1 - Mat::Identity(n, n)).norm() <= 1e-12);
  }

  SECTION("right case penalty is the similarity-transformed projector") {
    const RegFactor reg = reg_factor(RegKind::L1, n, ProjSide::Right);
    const auto f = standard_form_factor(k, reg);
    const Mat expect =
        reg.base * reg.projector->p * solve_dense(reg.base, Mat::Identity(n, n));
    CHECK((f.penalty - expect).norm() <= 1e-10);
  }
}

TEST_CASE("penalty_gram") {
  SplitMix64 rng(32);
  const Index n = 6;
  const Mat k1 = random_mat(rng, n, n);
  const Mat k2 = random_mat(rng, n, n);
  const Mat b = random_mat(rng, n, n);
  auto apply = [&](const Mat& v) { return Mat(k1 * v * k2.transpose()); };
  auto decomp = global_arnoldi(apply, b, 4);

  SECTION("identity penalties give the unit gram") {
    const Mat g = penalty_gram(decomp, Mat::Identity(n, n), Mat::Identity(n, n));
    CHECK((g - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-10);
  }

  SECTION("zero penalties annihilate") {
    const Mat g = penalty_gram(decomp, Mat::Zero(n, n), Mat::Zero(n, n));
    CHECK(g.norm() == 0.0);
  }

  SECTION("quadratic form matches direct evaluation") {
    const Mat m1 = projector_from_basis(orthonormalize(random_mat(rng, n, 2))).p;
    const Mat m2 = projector_from_basis(orthonormalize(random_mat(rng, n, 1))).p;
    const Mat g = penalty_gram(decomp, m1, m2);
    CHECK((g - g.transpose()).cwiseAbs().maxCoeff() <= 1e-13);
    Eigen::SelfAdjointEigenSolver<Mat> eig(g);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-12);
    for (int trial = 0; trial < 20; ++trial) {
      const Vec y = random_mat(rng, 4, 1);
      Mat sum = Mat::Zero(n, n);
      for (int i = 0; i < 4; ++i) {
        sum += y(i) * m1 * decomp.blocks[i] * m2.transpose();
      }
      const double direct = sum.squaredNorm();
      const double via_gram = y.dot(g * y);
      CHECK(via_gram == Catch::Approx(direct).epsilon(1e-11).margin(1e-12));
    }
  }
}

TEST_CASE("solve_projected scalar case") {
  Mat hess(2, 1);
  hess << 1, 0;
  const Mat gram = Mat::Identity(1, 1);
  for (double mu : {1e-3, 0.5, 2.0, 100.0}) {
    const auto sol = solve_projected(hess, 1.0, gram, mu);
    CHECK(sol.y(0) == Catch::Approx(1.0 / (1.0 + mu)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(solve_projected(hess, 1.0, gram, 0.0), domain_error);
  // vanishing penalty approaches the plain least-squares minimizer
  const auto sol = solve_projected(hess, 1.0, gram, 1e-16);
  CHECK(sol.y(0) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("residual is nondecreasing in mu") {
  SplitMix64 rng(33);
  for (int trial = 0; trial < 5; ++trial) {
    const int k = 4;
    const Mat hess = random_mat(rng, k + 1, k);
    const Mat c = random_mat(rng, k, k);
    const Mat gram = c.transpose() * c;
    double prev = -1.0;
    for (int e = -8; e <= 8; e += 2) {
      const auto sol = solve_projected(hess, 1.0, gram, std::pow(10.0, e));
      CHECK(sol.residual >= prev - 1e-12);
      prev = sol.residual;
    }
  }
}

TEST_CASE("find_mu") {
  Mat hess(2, 1);
  hess << 1, 0;
  const Mat gram = Mat::Identity(1, 1);

  SECTION("scalar closed form") {
    const auto res = find_mu(hess, 1.0, gram, 0.5);
    REQUIRE(res.status == MuSearchStatus::Converged);
    CHECK(res.mu == Catch::Approx(1.0).epsilon(1e-5));
    CHECK(res.residual == Catch::Approx(0.5).epsilon(1e-6));
  }

  SECTION("unreachable target signals k too small") {
    const auto res = find_mu(hess, 1.0, gram, 1e-14);
    CHECK(res.status == MuSearchStatus::TargetBelowReach);
  }

  SECTION("saturation at the bracket top") {
    // zero gram: the penalty never bites, residual stays at the minimum
    const auto res = find_mu(hess, 1.0, Mat::Zero(1, 1), 0.5);
    CHECK(res.status == MuSearchStatus::Saturated);
  }

  SECTION("random SPD instances hit the target") {
    SplitMix64 rng(34);
    for (int trial = 0; trial < 10; ++trial) {
      const int k = 5;
      const Mat h = random_mat(rng, k + 1, k);
      const Mat c = random_mat(rng, k, k);
      const Mat g = c.transpose() * c + 0.1 * Mat::Identity(k, k);
      const double lo = solve_projected(h, 1.0, g, 1e-12).residual;
      const double hi = solve_projected(h, 1.0, g, 1e12).residual;
      const double target = 0.5 * (lo + hi);
      const auto res = find_mu(h, 1.0, g, target);
      REQUIRE(res.status == MuSearchStatus::Converged);
      CHECK(std::abs(res.residual - target) <= 1e-6 * target);
    }
  }
}

TEST_CASE("solve_kron identity problem returns the data") {
  SplitMix64 rng(35);
  const Index n = 5;
  TikhonovKronProblem p;
  p.k1_factor = Mat::Identity(n, n);
  p.k2_factor = Mat::Identity(n, n);
  p.data_b = random_mat(rng, n, n);
  p.reg1 = identity_reg(n);
  p.reg2 = identity_reg(n);
  p.noise_bound_eps = 0.0;
  const SolveReport r = solve_kron(p);
  CHECK(r.k_used == 1);
  CHECK(r.converged);
  CHECK((r.x_solution - p.data_b).norm() <= 1e-10 * p.data_b.norm());
}

TEST_CASE("solve_kron matches the dense oracle at matched mu") {
  SplitMix64 rng(36);
  const Index n = 8;
  const Mat k1 = Mat(random_mat(rng, n, n)) + 3.0 * Mat::Identity(n, n);
  const Mat k2 = Mat(random_mat(rng, n, n)) + 3.0 * Mat::Identity(n, n);
  const Mat b = random_mat(rng, n, n);
  const RegFactor r1 = reg_factor(RegKind::L2, n, ProjSide::Left);
  const RegFactor r2 = reg_factor(RegKind::L2, n, ProjSide::Left);
  const Mat k_full = kron(k2, k1);
  const Mat l_full = kron(r2.effective(), r1.effective());
  for (double mu : {1e-4, 1e-1, 1.0}) {
    const Mat x = solve_kron_fixed_mu(k1, k2, r1, r2, b, mu, static_cast<int>(n * n));
    const Vec xd = direct_solve(k_full, vec(b), l_full, mu);
    CHECK((vec(x) - xd).norm() <= 1e-8 * xd.norm());
  }
}

TEST_CASE("penalty equivalence between X- and Y-coordinates") {
  SplitMix64 rng(37);
  const Index n = 6;
  for (ProjSide side : {ProjSide::Left, ProjSide::Right}) {
    const RegFactor r1 = reg_factor(RegKind::L1, n, side);
    const RegFactor r2 = reg_factor(RegKind::L2, n, side);
    const auto f1 = standard_form_factor(Mat::Identity(n, n), r1);
    const auto f2 = standard_form_factor(Mat::Identity(n, n), r2);
    for (int trial = 0; trial < 5; ++trial) {
      const Mat x = random_mat(rng, n, n);
      const Mat y = r1.base * x * r2.base.transpose();
      const double in_y = (f1.penalty * y * f2.penalty.transpose()).norm();
      const double in_x = (r1.effective() * x * r2.effective().transpose()).norm();
      CHECK(in_y == Catch::Approx(in_x).epsilon(1e-10).margin(1e-12));
    }
  }
}

TEST_CASE("solve_kron discrepancy run on a noisy shaw instance") {
  const auto inst = make_shaw2d_instance(30, 1e-3, 1);
  TikhonovKronProblem p;
  p.k1_factor = inst.k1_factor;
  p.k2_factor = inst.k2_factor;
  p.data_b = inst.setup.b_noisy;
  p.reg1 = reg_factor(RegKind::L1, 30, ProjSide::Left);
  p.reg2 = reg_factor(RegKind::L1, 30, ProjSide::Left);
  p.noise_bound_eps = inst.setup.eps;
  const SolveReport r = solve_kron(p, &inst.x_true);
  REQUIRE(r.converged);
  const double target = p.eta * p.noise_bound_eps;
  if (!r.saturated) {
    CHECK(std::abs(r.discrepancy_residual - target) <= 1e-6 * target);
  } else {
    CHECK(r.discrepancy_residual <= target * (1.0 + 1e-6));
  }
  CHECK(r.residual_identity_dev <= 1e-9 * inst.setup.b_noisy.norm());
  REQUIRE(r.relative_error.has_value());
  CHECK(*r.relative_error < 0.5);
}

TEST_CASE("solve_kron reports non-convergence instead of throwing") {
  SplitMix64 rng(38);
  const Index n = 6;
  TikhonovKronProblem p;
  p.k1_factor = random_mat(rng, n, n);
  p.k2_factor = random_mat(rng, n, n);
  p.data_b = random_mat(rng, n, n);
  p.reg1 = identity_reg(n);
  p.reg2 = identity_reg(n);
  p.noise_bound_eps = 1e-300;  // effectively unreachable target
  p.eta = 1.01;
  p.k_max = 3;
  const SolveReport r = solve_kron(p);
  CHECK(!r.converged);
  CHECK(r.k_used == 3);
}

TEST_CASE("solve_kron input validation") {
  const Index n = 4;
  TikhonovKronProblem p;
  p.k1_factor = Mat::Identity(n, n);
  p.k2_factor = Mat::Identity(n, n);
  p.data_b = Mat::Zero(n, n);
  p.reg1 = identity_reg(n);
  p.reg2 = identity_reg(n);
  CHECK_THROWS_AS(solve_kron(p), degenerate_input_error);
  p.data_b = Mat::Ones(n, n);
  p.eta = 0.5;
  CHECK_THROWS_AS(solve_kron(p), domain_error);
}

TEST_CASE("direct_solve") {
  SplitMix64 rng(39);
  const Index n = 6;
  const Vec b = random_mat(rng, n, 1);

  // shrinkage with K = L = I
  const Vec x = direct_solve(Mat::Identity(n, n), b, Mat::Identity(n, n), 0.5);
  CHECK((x - b / 1.5).norm() <= 1e-12);

  // vanishing regularization approaches K^{-1} b
  const Mat k = Mat(random_mat(rng, n, n)) + 3.0 * Mat::Identity(n, n);
  const Vec x0 = direct_solve(k, b, Mat::Identity(n, n), 1e-14);
  CHECK((k * x0 - b).norm() <= 1e-8 * b.norm());

  // violated null-space condition
  CHECK_THROWS_AS(direct_solve(Mat::Zero(n, n), b, Mat::Zero(n, n), 1.0), singular_error);
}

TEST_CASE("solve_general agrees with solve_kron on Kronecker operators") {
  SplitMix64 rng(40);
  const Index n = 6;
  const Mat k1 = Mat(random_mat(rng, n, n)) + 3.0 * Mat::Identity(n, n);
  const Mat k2 = Mat(random_mat(rng, n, n)) + 3.0 * Mat::Identity(n, n);
  const Mat b = random_mat(rng, n, n);
  const RegFactor r1 = reg_factor(RegKind::L2, n, ProjSide::Right);
  const RegFactor r2 = reg_factor(RegKind::L1, n, ProjSide::Left);
  const Mat k_full = kron(k2, k1);
  const double mu = 1e-2;
  const int k = static_cast<int>(n * n);
  const Mat x_kron = solve_kron_fixed_mu(k1, k2, r1, r2, b, mu, k);
  const Vec x_gen = solve_general_fixed_mu(k_full, vec(b), r1, r2, mu, k);
  CHECK((x_gen - vec(x_kron)).norm() <= 1e-8 * vec(x_kron).norm());
}

TEST_CASE("solve_general identity problem") {
  SplitMix64 rng(41);
  const Index n = 4;
  const Vec b = random_mat(rng, n * n, 1);
  const SolveReport r = solve_general(Mat::Identity(n * n, n * n), b, identity_reg(n),
                                      identity_reg(n), 0.0);
  CHECK(r.k_used == 1);
  CHECK(r.converged);
  CHECK((Vec(r.x_solution) - b).norm() <= 1e-10 * b.norm());
}

TEST_CASE("solve_general on a non-Kronecker operator") {
  SplitMix64 rng(42);
  const Index n = 6;
  Mat k_full = random_mat(rng, n * n, n * n);
  k_full += 8.0 * Mat::Identity(n * n, n * n);
  Vec x_star = random_mat(rng, n * n, 1);
  Vec b_exact = k_full * x_star;
  auto noisy = add_noise(unvec(b_exact, n * n, 1), 1e-3, 7);
  const RegFactor r1 = reg_factor(RegKind::L1, n, ProjSide::Left);
  const RegFactor r2 = reg_factor(RegKind::L1, n, ProjSide::Left);
  const SolveReport r =
      solve_general(k_full, vec(noisy.b_noisy), r1, r2, noisy.eps);
  REQUIRE(r.converged);
  const double target = 1.01 * noisy.eps;
  if (!r.saturated) {
    CHECK(std::abs(r.discrepancy_residual - target) <= 1e-6 * target);
  }
  CHECK(r.residual_identity_dev <= 1e-9 * b_exact.norm());
}

TEST_CASE("unregularized projected residual is nonincreasing in k") {
  SplitMix64 rng(43);
  const Index n = 6;
  const Mat k1 = random_mat(rng, n, n);
  const Mat k2 = random_mat(rng, n, n);
  const Mat b = random_mat(rng, n, n);
  auto apply = [&](const Mat& v) { return Mat(k1 * v * k2.transpose()); };
  GlobalArnoldiBuilder builder(apply, b);
  double prev = builder.beta();
  for (int k = 1; k <= 8; ++k) {
    REQUIRE(builder.advance());
    const Mat& h = builder.hessenberg();
    Vec rhs = Vec::Zero(k + 1);
    rhs(0) = builder.beta();
    const Vec y = lstsq(h, rhs);
    Vec r = h * y;
    r(0) -= builder.beta();
    CHECK(r.norm() <= prev + 1e-12);
    prev = r.norm();
  }
}
