#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sik/errors.hpp"
#include "sik/features.hpp"

namespace sik {

// Scores follow one convention throughout: higher means more anomalous.
// Counts are exact integers and are divided by t exactly once.

inline void check_same_t(std::size_t a, std::size_t b) {
  if (a != b) {
    throw ShapeError("feature lengths differ: t=" + std::to_string(a) + " vs t=" +
                     std::to_string(b));
  }
}

/// kappa_S(x, y) = popcount(phi(x) AND phi(y)) / t.
inline double sik_kernel(const SikFeature& fx, const SikFeature& fy) {
  check_same_t(fx.size(), fy.size());
  const auto a = fx.words();
  const auto b = fy.words();
  std::size_t both = 0;
  for (std::size_t w = 0; w < a.size(); ++w) {
    both += static_cast<std::size_t>(std::popcount(a[w] & b[w]));
  }
  return static_cast<double>(both) / static_cast<double>(fx.size());
}

/// kappa_I(x, y): fraction of partitionings where x and y share a sphere.
/// Two "none" blocks are all-zero and contribute nothing.
inline double ik_kernel(const IkFeature& fx, const IkFeature& fy) {
  check_same_t(fx.size(), fy.size());
  if (fx.psi() != fy.psi()) {
    throw ShapeError("IK features built with different psi: " + std::to_string(fx.psi()) +
                     " vs " + std::to_string(fy.psi()));
  }
  std::size_t shared = 0;
  for (std::size_t i = 0; i < fx.size(); ++i) {
    if (!fx[i].is_none() && fx[i] == fy[i]) ++shared;
  }
  return static_cast<double>(shared) / static_cast<double>(fx.size());
}

/// Similarity to the ideal anomaly whose feature is all ones.
inline double sik_score(const SikFeature& f) {
  return static_cast<double>(f.popcount()) / static_cast<double>(f.size());
}

enum class Norm { kL0, kL1 };

/// 1 - ||Phi(x)|| / t, evaluated as (t - ||Phi(x)||) / t.
inline double ik_score(const IkFeature& f, Norm norm = Norm::kL1) {
  std::size_t magnitude = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    // Entry value of block i at its only possibly-set position.
    const std::size_t entry = f[i].is_none() ? 0 : 1;
    if (norm == Norm::kL0) {
      magnitude += entry != 0 ? 1 : 0;
    } else {
      magnitude += entry;
    }
  }
  return static_cast<double>(f.size() - magnitude) / static_cast<double>(f.size());
}

/// Average dense IK map over a reference set, laid out as t blocks of psi.
class KernelMean {
 public:
  KernelMean() = default;
  KernelMean(std::size_t t, std::size_t psi, std::vector<double> mean)
      : t_(t), psi_(psi), mean_(std::move(mean)) {
    if (mean_.size() != t_ * psi_) throw ShapeError("kernel mean must hold t*psi entries");
  }

  std::size_t t() const noexcept { return t_; }
  std::size_t psi() const noexcept { return psi_; }
  std::span<const double> values() const noexcept { return mean_; }
  double at(std::size_t i, std::size_t j) const noexcept { return mean_[i * psi_ + j]; }

 private:
  std::size_t t_ = 0;
  std::size_t psi_ = 0;
  std::vector<double> mean_;
};

inline KernelMean idk_fit(std::span<const IkFeature> reference) {
  if (reference.empty()) throw EmptyReference("kernel mean needs at least one reference point");
  const std::size_t t = reference.front().size();
  const std::size_t psi = reference.front().psi();
  std::vector<std::size_t> counts(t * psi, 0);
  for (const auto& f : reference) {
    if (f.size() != t || f.psi() != psi) throw ShapeError("reference features differ in shape");
    for (std::size_t i = 0; i < t; ++i) {
      if (!f[i].is_none()) ++counts[i * psi + f[i].index()];
    }
  }
  std::vector<double> mean(t * psi);
  const auto size = static_cast<double>(reference.size());
  for (std::size_t k = 0; k < mean.size(); ++k) {
    mean[k] = static_cast<double>(counts[k]) / size;
  }
  return KernelMean(t, psi, std::move(mean));
}

/// (1/t) <Phi(x), mean>; in [0, 1].
inline double idk_similarity(const IkFeature& f, const KernelMean& mean) {
  if (f.size() != mean.t() || f.psi() != mean.psi()) {
    throw ShapeError("IK feature shape (t=" + std::to_string(f.size()) + ", psi=" +
                     std::to_string(f.psi()) + ") does not match kernel mean (t=" +
                     std::to_string(mean.t()) + ", psi=" + std::to_string(mean.psi()) + ")");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!f[i].is_none()) sum += mean.at(i, f[i].index());
  }
  return sum / static_cast<double>(f.size());
}

/// Negated similarity to the reference distribution; in [-1, 0].
inline double idk_score(const IkFeature& f, const KernelMean& mean) {
  return 0.0 - idk_similarity(f, mean);
}

/// Symmetric n x n matrix, row-major.
struct GramMatrix {
  std::size_t n = 0;
  std::vector<double> values;

  double operator()(std::size_t i, std::size_t j) const noexcept { return values[i * n + j]; }
};

/// Pairwise kernel values; the upper triangle is computed and mirrored.
template <typename Feature, typename Kernel>
GramMatrix gram_matrix(std::span<const Feature> features, Kernel&& kernel) {
  GramMatrix g;
  g.n = features.size();
  g.values.assign(g.n * g.n, 0.0);
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t j = i; j < g.n; ++j) {
      const double v = kernel(features[i], features[j]);
      g.values[i * g.n + j] = v;
      g.values[j * g.n + i] = v;
    }
  }
  return g;
}

inline GramMatrix gram_matrix(std::span<const SikFeature> features) {
  return gram_matrix(features, [](const SikFeature& a, const SikFeature& b) {
    return sik_kernel(a, b);
  });
}

inline GramMatrix gram_matrix(std::span<const IkFeature> features) {
  return gram_matrix(features, [](const IkFeature& a, const IkFeature& b) {
    return ik_kernel(a, b);
  });
}

/// Scores of every row of a byte-packed store.
inline std::vector<double> sik_scores(const SikFeatureStore& store) {
  std::vector<double> out(store.rows());
  for (std::size_t r = 0; r < store.rows(); ++r) {
    out[r] = static_cast<double>(store.popcount(r)) / static_cast<double>(store.t());
  }
  return out;
}

inline std::vector<double> sik_scores(std::span<const SikFeature> features) {
  std::vector<double> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(sik_score(f));
  return out;
}

inline std::vector<double> ik_scores(std::span<const IkFeature> features, Norm norm = Norm::kL1) {
  std::vector<double> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(ik_score(f, norm));
  return out;
}

inline std::vector<double> idk_scores(std::span<const IkFeature> features,
                                      const KernelMean& mean) {
  std::vector<double> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(idk_score(f, mean));
  return out;
}

}  // namespace sik
