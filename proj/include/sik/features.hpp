#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "sik/batch_locate.hpp"
#include "sik/embedding_matrix.hpp"
#include "sik/errors.hpp"
#include "sik/partitioning.hpp"

namespace sik {

/// phi(x): bit i is set iff x falls outside every sphere of partitioning i.
/// Packed 64 bits per word, partitioning index ascending from bit 0 of word 0.
class SikFeature {
 public:
  SikFeature() = default;
  explicit SikFeature(std::size_t t) : t_(t), words_((t + 63) / 64, 0) {}

  static SikFeature from_bits(std::initializer_list<int> bits) {
    SikFeature f(bits.size());
    std::size_t i = 0;
    for (int b : bits) f.set(i++, b != 0);
    return f;
  }

  std::size_t size() const noexcept { return t_; }

  bool test(std::size_t i) const noexcept { return (words_[i / 64] >> (i % 64)) & 1u; }
  void set(std::size_t i, bool value = true) noexcept {
    const std::uint64_t mask = std::uint64_t{1} << (i % 64);
    if (value) {
      words_[i / 64] |= mask;
    } else {
      words_[i / 64] &= ~mask;
    }
  }

  std::size_t popcount() const noexcept {
    std::size_t count = 0;
    for (auto w : words_) count += static_cast<std::size_t>(std::popcount(w));
    return count;
  }

  std::span<const std::uint64_t> words() const noexcept { return words_; }

  friend bool operator==(const SikFeature&, const SikFeature&) = default;

 private:
  std::size_t t_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Phi(x) stored as one sphere assignment per partitioning. Semantically the
/// t*psi binary vector with at most one set bit per psi-block.
class IkFeature {
 public:
  IkFeature() = default;
  IkFeature(std::size_t t, std::size_t psi) : psi_(psi), assignments_(t) {}

  /// Raw values: sphere index, or -1 for none.
  static IkFeature from_raw(std::size_t psi, std::initializer_list<std::int32_t> raw) {
    IkFeature f(raw.size(), psi);
    std::size_t i = 0;
    for (auto v : raw) {
      if (v >= static_cast<std::int64_t>(psi)) {
        throw ShapeError("assignment " + std::to_string(v) + " out of range for psi=" +
                         std::to_string(psi));
      }
      f.assignments_[i++] = SphereAssignment::from_raw(v);
    }
    return f;
  }

  std::size_t size() const noexcept { return assignments_.size(); }
  std::size_t psi() const noexcept { return psi_; }

  SphereAssignment operator[](std::size_t i) const noexcept { return assignments_[i]; }
  void set(std::size_t i, SphereAssignment a) noexcept { assignments_[i] = a; }
  std::span<const SphereAssignment> assignments() const noexcept { return assignments_; }

  /// Dense t*psi expansion, block i occupying [i*psi, (i+1)*psi).
  std::vector<std::uint8_t> dense() const {
    std::vector<std::uint8_t> out(assignments_.size() * psi_, 0);
    for (std::size_t i = 0; i < assignments_.size(); ++i) {
      if (!assignments_[i].is_none()) out[i * psi_ + assignments_[i].index()] = 1;
    }
    return out;
  }

  friend bool operator==(const IkFeature&, const IkFeature&) = default;

 private:
  std::size_t psi_ = 0;
  std::vector<SphereAssignment> assignments_;
};

inline SikFeature sik_map(const SphereEnsemble& ensemble, std::span<const double> x) {
  check_point_dim(ensemble.dim(), x.size());
  SikFeature f(ensemble.t());
  for (std::size_t i = 0; i < ensemble.t(); ++i) f.set(i, outside_all(ensemble[i], x));
  return f;
}

inline IkFeature ik_map(const SphereEnsemble& ensemble, std::span<const double> x) {
  check_point_dim(ensemble.dim(), x.size());
  IkFeature f(ensemble.t(), ensemble.psi());
  for (std::size_t i = 0; i < ensemble.t(); ++i) f.set(i, locate(ensemble[i], x));
  return f;
}

inline std::vector<SikFeature> sik_map_batch(const SphereEnsemble& ensemble,
                                             const EmbeddingMatrix& data, unsigned threads = 1) {
  const auto raw = detail::locate_rows(ensemble, data, detail::LocateMode::kAnyInside, threads);
  const std::size_t t = ensemble.t();
  std::vector<SikFeature> out;
  out.reserve(data.rows());
  for (std::size_t r = 0; r < data.rows(); ++r) {
    SikFeature f(t);
    for (std::size_t i = 0; i < t; ++i) f.set(i, raw[r * t + i] < 0);
    out.push_back(std::move(f));
  }
  return out;
}

inline std::vector<IkFeature> ik_map_batch(const SphereEnsemble& ensemble,
                                           const EmbeddingMatrix& data, unsigned threads = 1) {
  const auto raw = detail::locate_rows(ensemble, data, detail::LocateMode::kNearest, threads);
  const std::size_t t = ensemble.t();
  std::vector<IkFeature> out;
  out.reserve(data.rows());
  for (std::size_t r = 0; r < data.rows(); ++r) {
    IkFeature f(t, ensemble.psi());
    for (std::size_t i = 0; i < t; ++i) f.set(i, SphereAssignment::from_raw(raw[r * t + i]));
    out.push_back(std::move(f));
  }
  return out;
}

// Feature-store sizes per point, derived from the encodings.
constexpr std::size_t sik_bits_per_point(std::size_t t) noexcept { return t; }
constexpr std::size_t sik_bytes_per_point(std::size_t t) noexcept { return (t + 7) / 8; }
constexpr std::size_t ik_dense_bits_per_point(std::size_t psi, std::size_t t) noexcept {
  return psi * t;
}
constexpr std::size_t ik_dense_bytes_per_point(std::size_t psi, std::size_t t) noexcept {
  return (psi * t + 7) / 8;
}

/// Byte-packed SIK features for n points: ceil(t/8) bytes per row, bit i of
/// a row in byte i/8 at position i%8.
class SikFeatureStore {
 public:
  SikFeatureStore() = default;

  explicit SikFeatureStore(std::span<const SikFeature> features) {
    if (features.empty()) return;
    t_ = features.front().size();
    stride_ = sik_bytes_per_point(t_);
    rows_ = features.size();
    bytes_.assign(rows_ * stride_, 0);
    for (std::size_t r = 0; r < rows_; ++r) {
      if (features[r].size() != t_) throw ShapeError("feature length mismatch in store");
      for (std::size_t i = 0; i < t_; ++i) {
        if (features[r].test(i)) {
          bytes_[r * stride_ + i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
        }
      }
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t t() const noexcept { return t_; }
  std::size_t byte_size() const noexcept { return bytes_.size(); }

  bool test(std::size_t row, std::size_t i) const noexcept {
    return (bytes_[row * stride_ + i / 8] >> (i % 8)) & 1u;
  }

  std::size_t popcount(std::size_t row) const noexcept {
    const std::uint8_t* p = bytes_.data() + row * stride_;
    std::size_t count = 0;
    std::size_t k = 0;
    for (; k + 8 <= stride_; k += 8) {
      std::uint64_t w;
      std::memcpy(&w, p + k, 8);
      count += static_cast<std::size_t>(std::popcount(w));
    }
    for (; k < stride_; ++k) count += static_cast<std::size_t>(std::popcount(p[k]));
    return count;
  }

 private:
  std::size_t t_ = 0;
  std::size_t stride_ = 0;
  std::size_t rows_ = 0;
  std::vector<std::uint8_t> bytes_;
};

/// IK assignments for n points as 16-bit indices (-1 = none).
class IkFeatureStore {
 public:
  IkFeatureStore() = default;

  explicit IkFeatureStore(std::span<const IkFeature> features) {
    if (features.empty()) return;
    t_ = features.front().size();
    psi_ = features.front().psi();
    if (psi_ > 32767) throw ShapeError("IK store supports psi <= 32767");
    rows_ = features.size();
    cells_.reserve(rows_ * t_);
    for (const auto& f : features) {
      if (f.size() != t_ || f.psi() != psi_) throw ShapeError("feature shape mismatch in store");
      for (auto a : f.assignments()) cells_.push_back(static_cast<std::int16_t>(a.raw()));
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t t() const noexcept { return t_; }
  std::size_t psi() const noexcept { return psi_; }
  std::size_t byte_size() const noexcept { return cells_.size() * sizeof(std::int16_t); }

  SphereAssignment at(std::size_t row, std::size_t i) const noexcept {
    return SphereAssignment::from_raw(cells_[row * t_ + i]);
  }

 private:
  std::size_t t_ = 0;
  std::size_t psi_ = 0;
  std::size_t rows_ = 0;
  std::vector<std::int16_t> cells_;
};

}  // namespace sik
