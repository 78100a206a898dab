#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "kronreg/matrix.hpp"

namespace kronreg {

/// Binary PGM (P5) bytes: 8-bit, [min,max] rescaled linearly to [0,255];
/// a constant matrix renders mid-gray 128.
inline std::string pgm_bytes(const Mat& m) {
  const double lo = m.minCoeff();
  const double hi = m.maxCoeff();
  std::string out = "P5\n" + std::to_string(m.cols()) + " " + std::to_string(m.rows()) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      int v = 128;
      if (hi > lo) {
        v = static_cast<int>(std::lround((m(i, j) - lo) / (hi - lo) * 255.0));
      }
      out.push_back(static_cast<char>(static_cast<unsigned char>(v)));
    }
  }
  return out;
}

inline void write_pgm(const Mat& m, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw io_error("write_pgm: cannot open " + path.string());
  const std::string bytes = pgm_bytes(m);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw io_error("write_pgm: write failed for " + path.string());
}

}  // namespace kronreg
