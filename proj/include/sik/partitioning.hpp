#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sik/embedding_matrix.hpp"
#include "sik/errors.hpp"
#include "sik/parallel.hpp"
#include "sik/rng.hpp"

namespace sik {

/// Squared Euclidean distance, summed in index order.
inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    sum += diff * diff;
  }
  return sum;
}

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) noexcept {
  return std::sqrt(squared_distance(a, b));
}

namespace detail {

inline constexpr std::size_t kPruneStride = 16;

// Same value as euclidean_distance(a, b) whenever that value is <= limit;
// +inf once a partial sum already exceeds it. Partial sums of non-negative
// terms never decrease under rounding, so pruning cannot reject a point
// the full sum would accept.
inline double bounded_distance(std::span<const double> a, std::span<const double> b,
                               double limit) noexcept {
  double sum = 0.0;
  const std::size_t d = a.size();
  std::size_t k = 0;
  while (k < d) {
    const std::size_t stop = std::min(d, k + kPruneStride);
    for (; k < stop; ++k) {
      const double diff = a[k] - b[k];
      sum += diff * diff;
    }
    if (k < d && std::sqrt(sum) > limit) return std::numeric_limits<double>::infinity();
  }
  return std::sqrt(sum);
}

}  // namespace detail

/// Result of locating a point in one partitioning: the containing sphere
/// (nearest center wins on overlap, lowest index on exact ties) or none.
class SphereAssignment {
 public:
  constexpr SphereAssignment() noexcept = default;

  static constexpr SphereAssignment none() noexcept { return SphereAssignment(); }
  static constexpr SphereAssignment sphere(std::size_t index) noexcept {
    return SphereAssignment(static_cast<std::int32_t>(index));
  }
  /// Inverse of raw(); -1 is none.
  static constexpr SphereAssignment from_raw(std::int32_t raw) noexcept {
    return raw < 0 ? none() : SphereAssignment(raw);
  }

  constexpr bool is_none() const noexcept { return value_ < 0; }
  constexpr std::size_t index() const noexcept { return static_cast<std::size_t>(value_); }
  /// Sphere index, or -1 for none.
  constexpr std::int32_t raw() const noexcept { return value_; }

  friend constexpr bool operator==(SphereAssignment, SphereAssignment) = default;

 private:
  constexpr explicit SphereAssignment(std::int32_t value) noexcept : value_(value) {}
  std::int32_t value_ = -1;
};

/// psi hyperspheres in R^d. Built partitionings have radii equal to each
/// center's nearest-neighbour distance among the other centers; explicitly
/// constructed ones accept any finite non-negative radii.
class Partitioning {
 public:
  Partitioning() = default;

  Partitioning(std::size_t dim, std::vector<double> centers, std::vector<double> radii)
      : dim_(dim), centers_(std::move(centers)), radii_(std::move(radii)) {
    if (dim_ < 1) throw ShapeError("partitioning dimension must be >= 1");
    if (radii_.empty()) throw InvalidHyperparameter("partitioning needs at least one sphere");
    if (centers_.size() != radii_.size() * dim_) {
      throw ShapeError("partitioning has " + std::to_string(centers_.size()) +
                       " center coordinates for " + std::to_string(radii_.size()) +
                       " spheres of dimension " + std::to_string(dim_));
    }
    for (double c : centers_) {
      if (!std::isfinite(c)) throw ShapeError("non-finite sphere center coordinate");
    }
    for (double r : radii_) {
      if (!std::isfinite(r) || r < 0.0) {
        throw InvariantError("sphere radius must be finite and >= 0");
      }
    }
    squared_norms_.resize(radii_.size());
    for (std::size_t j = 0; j < radii_.size(); ++j) {
      double s = 0.0;
      for (double v : center(j)) s += v * v;
      squared_norms_[j] = s;
    }
  }

  std::size_t psi() const noexcept { return radii_.size(); }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const double> center(std::size_t j) const noexcept {
    return {centers_.data() + j * dim_, dim_};
  }
  double radius(std::size_t j) const noexcept { return radii_[j]; }

  std::span<const double> centers() const noexcept { return centers_; }
  std::span<const double> radii() const noexcept { return radii_; }
  /// ||c_j||^2 per center; used by the batched locator.
  std::span<const double> center_squared_norms() const noexcept { return squared_norms_; }

  friend bool operator==(const Partitioning& a, const Partitioning& b) {
    return a.dim_ == b.dim_ && a.centers_ == b.centers_ && a.radii_ == b.radii_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<double> centers_;
  std::vector<double> radii_;
  std::vector<double> squared_norms_;
};

/// t partitionings sharing psi and d, plus the seed they were fitted with.
class SphereEnsemble {
 public:
  SphereEnsemble() = default;

  SphereEnsemble(std::vector<Partitioning> partitionings, std::uint64_t seed)
      : partitionings_(std::move(partitionings)), seed_(seed) {
    if (partitionings_.empty()) throw InvalidHyperparameter("t must be >= 1, got t=0");
    const auto& first = partitionings_.front();
    for (const auto& p : partitionings_) {
      if (p.psi() != first.psi() || p.dim() != first.dim()) {
        throw ShapeError("all partitionings of an ensemble must share psi and d");
      }
    }
  }

  std::size_t t() const noexcept { return partitionings_.size(); }
  std::size_t psi() const noexcept { return partitionings_.front().psi(); }
  std::size_t dim() const noexcept { return partitionings_.front().dim(); }
  std::uint64_t seed() const noexcept { return seed_; }

  const Partitioning& operator[](std::size_t i) const noexcept { return partitionings_[i]; }
  std::span<const Partitioning> partitionings() const noexcept { return partitionings_; }

  friend bool operator==(const SphereEnsemble&, const SphereEnsemble&) = default;

 private:
  std::vector<Partitioning> partitionings_;
  std::uint64_t seed_ = 0;
};

inline void check_psi(std::size_t psi, std::size_t n) {
  if (psi < 2) {
    throw InvalidHyperparameter("psi must be >= 2, got psi=" + std::to_string(psi));
  }
  if (psi > n) {
    throw InvalidHyperparameter("psi=" + std::to_string(psi) + " exceeds dataset size n=" +
                                std::to_string(n));
  }
}

/// psi distinct row indices drawn uniformly without replacement
/// (partial Fisher-Yates over all n rows).
inline std::vector<std::size_t> sample_subset(const EmbeddingMatrix& data, std::size_t psi,
                                              Engine& rng) {
  const std::size_t n = data.rows();
  check_psi(psi, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t k = 0; k < psi; ++k) {
    const std::size_t pick = k + static_cast<std::size_t>(uniform_below(rng, n - k));
    std::swap(order[k], order[pick]);
  }
  order.resize(psi);
  return order;
}

/// Spheres centered at the selected rows, each with radius equal to the
/// distance to its nearest other center.
inline Partitioning build_partitioning(const EmbeddingMatrix& data,
                                       std::span<const std::size_t> indices) {
  const std::size_t psi = indices.size();
  if (psi < 2) {
    throw InvalidHyperparameter("psi must be >= 2, got psi=" + std::to_string(psi));
  }
  std::vector<std::size_t> sorted(indices.begin(), indices.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw InvariantError("duplicate sample index " +
                         std::to_string(*std::adjacent_find(sorted.begin(), sorted.end())));
  }
  if (sorted.back() >= data.rows()) {
    throw InvariantError("sample index " + std::to_string(sorted.back()) +
                         " out of range for n=" + std::to_string(data.rows()));
  }

  const std::size_t d = data.cols();
  std::vector<double> centers;
  centers.reserve(psi * d);
  for (std::size_t idx : indices) {
    auto r = data.row(idx);
    centers.insert(centers.end(), r.begin(), r.end());
  }
  std::vector<double> radii(psi, std::numeric_limits<double>::infinity());
  for (std::size_t j = 0; j < psi; ++j) {
    std::span<const double> cj(centers.data() + j * d, d);
    for (std::size_t k = j + 1; k < psi; ++k) {
      const double dist = euclidean_distance(cj, {centers.data() + k * d, d});
      radii[j] = std::min(radii[j], dist);
      radii[k] = std::min(radii[k], dist);
    }
  }
  return Partitioning(d, std::move(centers), std::move(radii));
}

/// Partitioning i draws its subsample from Engine(derive_seed(seed, i)), so
/// the result does not depend on the thread count.
inline SphereEnsemble fit_ensemble(const EmbeddingMatrix& data, std::size_t psi, std::size_t t,
                                   std::uint64_t seed, unsigned threads = 1) {
  check_psi(psi, data.rows());
  if (t < 1) throw InvalidHyperparameter("t must be >= 1, got t=0");
  std::vector<Partitioning> parts(t);
  parallel_for(t, threads, [&](std::size_t i) {
    Engine rng(derive_seed(seed, i));
    const auto indices = sample_subset(data, psi, rng);
    parts[i] = build_partitioning(data, indices);
  });
  return SphereEnsemble(std::move(parts), seed);
}

inline void check_point_dim(std::size_t expected, std::size_t got) {
  if (expected != got) {
    throw ShapeError("point has dimension " + std::to_string(got) + ", expected " +
                     std::to_string(expected));
  }
}

/// Among spheres with dist(x, c_j) <= r_j, the one with the smallest
/// distance (lowest index on ties); none if x is outside every sphere.
inline SphereAssignment locate(const Partitioning& p, std::span<const double> x) {
  check_point_dim(p.dim(), x.size());
  SphereAssignment best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < p.psi(); ++j) {
    const double r = p.radius(j);
    const double dist = detail::bounded_distance(x, p.center(j), std::min(r, best_dist));
    if (dist <= r && dist < best_dist) {
      best = SphereAssignment::sphere(j);
      best_dist = dist;
    }
  }
  return best;
}

/// True when x lies in no sphere of p; stops at the first containing sphere.
inline bool outside_all(const Partitioning& p, std::span<const double> x) {
  check_point_dim(p.dim(), x.size());
  for (std::size_t j = 0; j < p.psi(); ++j) {
    const double r = p.radius(j);
    if (detail::bounded_distance(x, p.center(j), r) <= r) return false;
  }
  return true;
}

}  // namespace sik
