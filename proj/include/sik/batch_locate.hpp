#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "sik/embedding_matrix.hpp"
#include "sik/parallel.hpp"
#include "sik/partitioning.hpp"

namespace sik::detail {

enum class LocateMode {
  kNearest,      // same answer as locate()
  kAnyInside,    // some containing sphere, or none; enough for SIK bits
};

inline constexpr std::size_t kLocateBlockRows = 64;

// Batched locate. Squared distances to every center of the ensemble are
// first estimated as ||x||^2 + ||c||^2 - 2<x, c> with one GEMM per row
// block. A sphere is skipped only when that estimate, minus a forward error
// bound valid for any summation order, still exceeds r^2 with margin; every
// other sphere is decided by the exact sequential distance that locate()
// uses. The result is therefore identical to the per-point path.
//
// Returns an n x t row-major array of raw assignments (-1 = none).
inline std::vector<std::int32_t> locate_rows(const SphereEnsemble& ensemble,
                                             const EmbeddingMatrix& data, LocateMode mode,
                                             unsigned threads) {
  check_point_dim(ensemble.dim(), data.cols());
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  const std::size_t n = data.rows();
  const std::size_t d = ensemble.dim();
  const std::size_t t = ensemble.t();
  const std::size_t psi = ensemble.psi();
  const std::size_t spheres = t * psi;

  RowMatrix centers(static_cast<Eigen::Index>(spheres), static_cast<Eigen::Index>(d));
  std::vector<double> center_norms(spheres);
  std::vector<double> radius_sq_limit(spheres);
  constexpr double unit = std::numeric_limits<double>::epsilon() / 2;
  for (std::size_t i = 0; i < t; ++i) {
    const Partitioning& p = ensemble[i];
    for (std::size_t j = 0; j < psi; ++j) {
      const std::size_t k = i * psi + j;
      auto c = p.center(j);
      std::copy(c.begin(), c.end(), centers.row(static_cast<Eigen::Index>(k)).data());
      center_norms[k] = p.center_squared_norms()[j];
      radius_sq_limit[k] = p.radius(j) * p.radius(j) * (1.0 + 16.0 * unit);
    }
  }
  const double error_coef = 4.0 * static_cast<double>(d + 4) * unit;

  std::vector<std::int32_t> out(n * t, -1);
  const std::size_t blocks = (n + kLocateBlockRows - 1) / kLocateBlockRows;

  parallel_for(blocks, threads, [&](std::size_t b) {
    const std::size_t row_begin = b * kLocateBlockRows;
    const std::size_t rows = std::min(kLocateBlockRows, n - row_begin);
    Eigen::Map<const RowMatrix> x_block(data.row(row_begin).data(),
                                        static_cast<Eigen::Index>(rows),
                                        static_cast<Eigen::Index>(d));
    const RowMatrix dots = x_block * centers.transpose();

    for (std::size_t r = 0; r < rows; ++r) {
      auto x = data.row(row_begin + r);
      double x_norm = 0.0;
      for (double v : x) x_norm += v * v;
      const auto dot_row = dots.row(static_cast<Eigen::Index>(r));

      for (std::size_t i = 0; i < t; ++i) {
        const Partitioning& p = ensemble[i];
        std::int32_t best = -1;
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < psi; ++j) {
          const std::size_t k = i * psi + j;
          const double scale = x_norm + center_norms[k];
          const double estimate = scale - 2.0 * dot_row[static_cast<Eigen::Index>(k)];
          const double lower = (estimate - error_coef * scale) * (1.0 - error_coef);
          if (lower > radius_sq_limit[k]) continue;

          const double radius = p.radius(j);
          const double dist =
              bounded_distance(x, p.center(j), std::min(radius, best_dist));
          if (dist <= radius && dist < best_dist) {
            best = static_cast<std::int32_t>(j);
            best_dist = dist;
            if (mode == LocateMode::kAnyInside) break;
          }
        }
        out[(row_begin + r) * t + i] = best;
      }
    }
  });
  return out;
}

}  // namespace sik::detail
