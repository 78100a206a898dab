#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "kronreg/matrix.hpp"

namespace kronreg {

/// SplitMix64. Pinned here (together with the Box-Muller pairing and the
/// row-major fill order below) so noise realizations reproduce bit-for-bit
/// across implementations.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // uniform double strictly inside (0,1)
  double uniform01() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }
};

/// Fills out (row-major order) with standard normals via Box-Muller on
/// consecutive uniform pairs; the second normal of a trailing odd pair is
/// discarded.
inline void fill_standard_normal(Mat& out, SplitMix64& rng) {
  const Index rows = out.rows();
  const Index cols = out.cols();
  const Index total = rows * cols;
  Index idx = 0;
  while (idx < total) {
    const double u1 = rng.uniform01();
    const double u2 = rng.uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    const double z1 = r * std::cos(theta);
    const double z2 = r * std::sin(theta);
    out(idx / cols, idx % cols) = z1;
    ++idx;
    if (idx < total) {
      out(idx / cols, idx % cols) = z2;
      ++idx;
    }
  }
}

struct NoisySetup {
  Mat b_exact;
  Mat b_noisy;
  double eps = 0.0;         // ||E||_F
  double noise_level = 0.0; // nu
  std::uint64_t seed = 0;
};

/// E = nu * ||b_exact||_F * E0 / ||E0||_F with seeded i.i.d. normal E0.
inline NoisySetup add_noise(const Mat& b_exact, double nu, std::uint64_t seed) {
  if (nu < 0.0) throw domain_error("add_noise: noise level must be >= 0");
  NoisySetup setup;
  setup.b_exact = b_exact;
  setup.noise_level = nu;
  setup.seed = seed;
  if (nu == 0.0) {
    setup.b_noisy = b_exact;
    setup.eps = 0.0;
    return setup;
  }
  if (b_exact.norm() == 0.0) {
    throw degenerate_input_error("add_noise: zero data with positive noise level");
  }
  Mat e0(b_exact.rows(), b_exact.cols());
  SplitMix64 rng(seed);
  fill_standard_normal(e0, rng);
  const Mat e = (nu * b_exact.norm() / e0.norm()) * e0;
  setup.b_noisy = b_exact + e;
  setup.eps = e.norm();
  return setup;
}

struct ProblemInstance {
  Mat k1_factor;
  Mat k2_factor;
  Mat x_true;
  NoisySetup setup;
  std::string name;
};

enum class ShawVariant { Canonical, Displayed };

inline double squared_sinc(double u) {
  const double s = std::abs(u) < 1e-9 ? 1.0 : std::sin(u) / u;
  return s * s;
}

/// Quadrature discretization of the 1-D shaw kernel on [-pi/2, pi/2],
/// midpoint grid t_i = -pi/2 + (i - 1/2) h, h = pi/n.
/// The Displayed variant swaps one trigonometric pair in the kernel; it is
/// kept for comparison and not used by default.
inline Mat shaw_matrix(Index n, ShawVariant variant = ShawVariant::Canonical) {
  if (n < 4 || n % 2 != 0) {
    throw dimension_error("shaw_matrix: n must be even and >= 4");
  }
  const double h = std::numbers::pi / static_cast<double>(n);
  Vec t(n);
  for (Index i = 0; i < n; ++i) {
    t(i) = -std::numbers::pi / 2.0 + (static_cast<double>(i) + 0.5) * h;
  }
  Mat a(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      double amp, u;
      if (variant == ShawVariant::Canonical) {
        amp = std::cos(t(i)) + std::cos(t(j));
        u = std::numbers::pi * (std::sin(t(i)) + std::sin(t(j)));
      } else {
        amp = std::cos(t(j)) + std::sin(t(i));
        u = std::numbers::pi * (std::sin(t(j)) + std::cos(t(i)));
      }
      a(i, j) = h * amp * amp * squared_sinc(u);
    }
  }
  return a;
}

/// Sum of two Gaussians on the shaw grid, shifted by the ones vector.
inline Vec shaw_true_solution(Index n) {
  if (n < 4 || n % 2 != 0) {
    throw dimension_error("shaw_true_solution: n must be even and >= 4");
  }
  const double h = std::numbers::pi / static_cast<double>(n);
  Vec x(n);
  for (Index i = 0; i < n; ++i) {
    const double t = -std::numbers::pi / 2.0 + (static_cast<double>(i) + 0.5) * h;
    x(i) = 2.0 * std::exp(-6.0 * (t - 0.8) * (t - 0.8)) +
           std::exp(-2.0 * (t + 0.5) * (t + 0.5)) + 1.0;
  }
  return x;
}

/// Symmetric banded Toeplitz Gaussian blur matrix, first row
/// z_j = c exp(-(j-1)^2 / (2 sigma^2)) for j <= band, c = 1/(sigma sqrt(2 pi)).
inline Mat blur_matrix(Index n, Index band, double sigma) {
  if (band < 1 || band > n) throw dimension_error("blur_matrix: need 1 <= band <= n");
  if (sigma <= 0.0) throw domain_error("blur_matrix: sigma must be positive");
  const double c = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
  Vec z = Vec::Zero(n);
  for (Index j = 0; j < band; ++j) {
    z(j) = c * std::exp(-static_cast<double>(j * j) / (2.0 * sigma * sigma));
  }
  Mat t = Mat::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const Index d = i > j ? i - j : j - i;
      if (d < band) t(i, j) = z(d);
    }
  }
  return t;
}

enum class ImageKind { Checker, Blocks, Gradient };

/// Deterministic grayscale test images in [0,1]: a QRcode-like binary
/// checker, piecewise-constant bright shapes on a dark background, and a
/// smooth row gradient.
inline Mat synthetic_image(ImageKind kind, Index n) {
  if (n < 8) throw dimension_error("synthetic_image: n must be >= 8");
  Mat img = Mat::Zero(n, n);
  switch (kind) {
    case ImageKind::Checker: {
      const Index block = (n + 24) / 25;  // ceil(n/25)
      SplitMix64 hash(0x51D2C0DEull);
      const Index nb = (n + block - 1) / block;
      Mat cells(nb, nb);
      for (Index bi = 0; bi < nb; ++bi) {
        for (Index bj = 0; bj < nb; ++bj) {
          cells(bi, bj) = (hash.next() >> 63) ? 1.0 : 0.0;
        }
      }
      for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
          img(i, j) = cells(i / block, j / block);
        }
      }
      break;
    }
    case ImageKind::Blocks: {
      // fixed layout of bright shapes, background stays at 0
      auto fill = [&](double r0, double r1, double c0, double c1, double v) {
        const Index i0 = static_cast<Index>(r0 * n), i1 = static_cast<Index>(r1 * n);
        const Index j0 = static_cast<Index>(c0 * n), j1 = static_cast<Index>(c1 * n);
        for (Index i = i0; i < i1; ++i) {
          for (Index j = j0; j < j1; ++j) img(i, j) = v;
        }
      };
      fill(0.35, 0.60, 0.35, 0.60, 1.0);
      fill(0.15, 0.25, 0.55, 0.80, 0.7);
      fill(0.65, 0.85, 0.20, 0.30, 0.9);
      break;
    }
    case ImageKind::Gradient: {
      for (Index i = 0; i < n; ++i) {
        img.row(i).setConstant(static_cast<double>(i) / static_cast<double>(n - 1));
      }
      break;
    }
  }
  return img;
}

inline double relative_error(const Mat& x, const Mat& x_true) {
  require_same_shape(x, x_true, "relative_error");
  const double nrm = x_true.norm();
  if (nrm == 0.0) throw domain_error("relative_error: zero reference");
  return (x - x_true).norm() / nrm;
}

/// K X K^T data model with seeded noise: the shaw test problem on a square grid.
inline ProblemInstance make_shaw2d_instance(Index n, double nu, std::uint64_t seed) {
  ProblemInstance inst;
  inst.k1_factor = shaw_matrix(n);
  inst.k2_factor = inst.k1_factor;
  const Vec x1 = shaw_true_solution(n);
  inst.x_true = x1 * x1.transpose();
  const Mat b_exact = inst.k1_factor * inst.x_true * inst.k2_factor.transpose();
  inst.setup = add_noise(b_exact, nu, seed);
  inst.name = "shaw2d";
  return inst;
}

inline ProblemInstance make_blur_instance(Index n, ImageKind image, double nu,
                                          std::uint64_t seed, Index band = 5,
                                          double sigma = 1.5) {
  ProblemInstance inst;
  inst.k1_factor = blur_matrix(n, band, sigma);
  inst.k2_factor = inst.k1_factor;
  inst.x_true = synthetic_image(image, n);
  const Mat b_exact = inst.k1_factor * inst.x_true * inst.k2_factor.transpose();
  inst.setup = add_noise(b_exact, nu, seed);
  inst.name = "blur";
  return inst;
}

}  // namespace kronreg
