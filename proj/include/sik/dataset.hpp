#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sik/embedding_matrix.hpp"
#include "sik/errors.hpp"

namespace sik {

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;

  friend bool operator==(const Split&, const Split&) = default;
};

/// Fraction of the normal rows (in row order) that default_split puts in
/// the training split.
inline constexpr double kDefaultTrainFraction = 0.6;

/// Embeddings with optional 0/1 labels (1 = anomaly) and optional split.
struct LabeledDataset {
  EmbeddingMatrix embeddings;
  std::vector<std::uint8_t> labels;  // empty when unlabeled
  std::optional<Split> split;

  bool labeled() const noexcept { return !labels.empty(); }

  std::size_t anomaly_count() const noexcept {
    std::size_t count = 0;
    for (auto l : labels) count += l;
    return count;
  }

  void validate() const {
    if (labeled() && labels.size() != embeddings.rows()) {
      throw ShapeError("dataset has " + std::to_string(labels.size()) + " labels for " +
                       std::to_string(embeddings.rows()) + " rows");
    }
    for (auto l : labels) {
      if (l > 1) throw ShapeError("labels must be 0 or 1");
    }
    if (split) {
      for (const auto* part : {&split->train, &split->test}) {
        for (auto idx : *part) {
          if (idx >= embeddings.rows()) throw ShapeError("split index out of range");
        }
      }
    }
  }
};

/// Unlabeled data: train and test are every row. Labeled data: the first
/// floor(0.6 * normals) normal rows train (at least one); everything else,
/// including every anomaly, is test.
inline Split default_split(const LabeledDataset& data) {
  Split s;
  const std::size_t n = data.embeddings.rows();
  if (!data.labeled()) {
    s.train.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.train[i] = i;
    s.test = s.train;
    return s;
  }
  const std::size_t normals = n - data.anomaly_count();
  if (normals == 0) throw ParameterError("dataset has no normal rows to train on");
  std::size_t want = static_cast<std::size_t>(kDefaultTrainFraction * static_cast<double>(normals));
  if (want == 0) want = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (data.labels[i] == 0 && s.train.size() < want) {
      s.train.push_back(i);
    } else {
      s.test.push_back(i);
    }
  }
  return s;
}

inline Split resolve_split(const LabeledDataset& data) {
  return data.split ? *data.split : default_split(data);
}

}  // namespace sik
