#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sik/errors.hpp"

namespace sik {

/// Dense n x d row-major matrix of finite doubles. Row i is point x_i.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;

  EmbeddingMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (rows_ < 1 || cols_ < 1) {
      throw ShapeError("embedding matrix needs n >= 1 and d >= 1, got n=" +
                       std::to_string(rows_) + " d=" + std::to_string(cols_));
    }
    if (values_.size() != rows_ * cols_) {
      throw ShapeError("embedding matrix buffer holds " + std::to_string(values_.size()) +
                       " values, expected n*d=" + std::to_string(rows_ * cols_));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw ShapeError("non-finite value at row " + std::to_string(i / cols_) + ", column " +
                         std::to_string(i % cols_));
      }
    }
  }

  /// Copies a contiguous row-major buffer; float input is upcast to double.
  template <typename Scalar>
  static EmbeddingMatrix from_buffer(std::span<const Scalar> buffer, std::size_t rows,
                                     std::size_t cols) {
    if (buffer.size() != rows * cols) {
      throw ShapeError("buffer of " + std::to_string(buffer.size()) +
                       " values does not match shape " + std::to_string(rows) + "x" +
                       std::to_string(cols));
    }
    return EmbeddingMatrix(rows, cols, std::vector<double>(buffer.begin(), buffer.end()));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<const double> row(std::size_t i) const noexcept {
    return {values_.data() + i * cols_, cols_};
  }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    return values_[i * cols_ + j];
  }

  std::span<const double> values() const noexcept { return values_; }

  /// New matrix holding the given rows, in the given order.
  EmbeddingMatrix select_rows(std::span<const std::size_t> indices) const {
    std::vector<double> out;
    out.reserve(indices.size() * cols_);
    for (std::size_t idx : indices) {
      if (idx >= rows_) {
        throw ShapeError("row index " + std::to_string(idx) + " out of range for n=" +
                         std::to_string(rows_));
      }
      auto r = row(idx);
      out.insert(out.end(), r.begin(), r.end());
    }
    return EmbeddingMatrix(indices.size(), cols_, std::move(out));
  }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

}  // namespace sik
