#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sik/dataset.hpp"
#include "sik/errors.hpp"
#include "sik/features.hpp"
#include "sik/partitioning.hpp"
#include "sik/rng.hpp"
#include "sik/scoring.hpp"

namespace sik {

// ---------------------------------------------------------------------------
// AUROC

/// Mann-Whitney U / (n1 * n0) with average ranks on ties. Ranks are kept
/// doubled so they stay integral.
inline double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("auroc: " + std::to_string(scores.size()) + " scores for " +
                     std::to_string(labels.size()) + " labels");
  }
  std::size_t positives = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 1) throw ShapeError("auroc: labels must be 0 or 1");
    if (std::isnan(scores[i])) throw ParameterError("auroc: NaN score at index " + std::to_string(i));
    positives += labels[i];
  }
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw UndefinedMetric("auroc needs both classes, got " + std::to_string(positives) +
                          " anomalies and " + std::to_string(negatives) + " normals");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of doubled ranks of the positives; a tie group spanning sorted
  // positions [lo, hi) gets rank (lo + 1 + hi) / 2 each.
  std::uint64_t doubled_rank_sum = 0;
  std::size_t lo = 0;
  while (lo < order.size()) {
    std::size_t hi = lo + 1;
    while (hi < order.size() && scores[order[hi]] == scores[order[lo]]) ++hi;
    std::uint64_t group_positives = 0;
    for (std::size_t k = lo; k < hi; ++k) group_positives += labels[order[k]];
    doubled_rank_sum += group_positives * (lo + 1 + hi);
    lo = hi;
  }
  const std::uint64_t doubled_u = doubled_rank_sum - positives * (positives + 1);
  return static_cast<double>(doubled_u) /
         (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

// ---------------------------------------------------------------------------
// Synthetic data

/// Normals ~ N(0, I_d). Anomalies sit at a uniformly random direction and a
/// radius drawn uniformly from [s*sqrt(d), 1.5*s*sqrt(d)]. Rows are shuffled
/// and the split follows default_split.
inline LabeledDataset gen_blobs_with_outliers(std::size_t n_normal, std::size_t n_anomaly,
                                              std::size_t d, double separation,
                                              std::uint64_t seed) {
  if (n_normal < 1) throw ParameterError("gen: need at least one normal point");
  if (n_anomaly < 1) throw ParameterError("gen: need at least one anomaly");
  if (d < 1) throw ParameterError("gen: dimension must be >= 1");
  if (!(separation > 0.0) || !std::isfinite(separation)) {
    throw ParameterError("gen: separation must be a positive finite number");
  }
  Engine rng(seed);
  const std::size_t n = n_normal + n_anomaly;
  std::vector<double> values(n * d);
  std::vector<std::uint8_t> labels(n, 0);

  for (std::size_t i = 0; i < n_normal * d; ++i) values[i] = standard_normal(rng);

  const double inner = separation * std::sqrt(static_cast<double>(d));
  for (std::size_t a = 0; a < n_anomaly; ++a) {
    double* row = values.data() + (n_normal + a) * d;
    double norm = 0.0;
    while (norm == 0.0) {
      norm = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        row[k] = standard_normal(rng);
        norm += row[k] * row[k];
      }
      norm = std::sqrt(norm);
    }
    const double radius = inner * (1.0 + 0.5 * uniform_unit(rng));
    for (std::size_t k = 0; k < d; ++k) row[k] *= radius / norm;
    labels[n_normal + a] = 1;
  }

  // Fisher-Yates over rows.
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_below(rng, i + 1));
    if (j == i) continue;
    std::swap_ranges(values.begin() + static_cast<std::ptrdiff_t>(i * d),
                     values.begin() + static_cast<std::ptrdiff_t>((i + 1) * d),
                     values.begin() + static_cast<std::ptrdiff_t>(j * d));
    std::swap(labels[i], labels[j]);
  }

  LabeledDataset out;
  out.embeddings = EmbeddingMatrix(n, d, std::move(values));
  out.labels = std::move(labels);
  out.split = default_split(out);
  return out;
}

// ---------------------------------------------------------------------------
// Detectors

enum class Method { kSik, kIk, kIdk };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::kSik: return "sik";
    case Method::kIk: return "ik";
    case Method::kIdk: return "idk";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  if (s == "sik" || s == "SIK") return Method::kSik;
  if (s == "ik" || s == "IK") return Method::kIk;
  if (s == "idk" || s == "IDK") return Method::kIdk;
  throw ParameterError("unknown method '" + std::string(s) + "' (expected sik, ik or idk)");
}

/// Analytic feature-store size. SIK stores ceil(t/8) bytes per test point.
/// IK is reported at its dense t*psi-bit equivalent per test point; IDK
/// additionally maps every training point and keeps a dense double mean.
inline std::size_t feature_store_bytes(Method m, std::size_t n_train, std::size_t n_test,
                                       std::size_t psi, std::size_t t) {
  switch (m) {
    case Method::kSik: return n_test * sik_bytes_per_point(t);
    case Method::kIk: return n_test * ik_dense_bytes_per_point(psi, t);
    case Method::kIdk:
      return (n_train + n_test) * ik_dense_bytes_per_point(psi, t) + psi * t * sizeof(double);
  }
  return 0;
}

struct DetectorOutput {
  std::vector<double> scores;
  double fit_seconds = 0.0;
  double score_seconds = 0.0;
  std::size_t feature_bytes = 0;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace detail

/// Fits `method` on `train` and scores every row of `test`.
inline DetectorOutput fit_and_score(Method method, const EmbeddingMatrix& train,
                                    const EmbeddingMatrix& test, std::size_t psi, std::size_t t,
                                    std::uint64_t seed, unsigned threads = 1) {
  check_point_dim(train.cols(), test.cols());
  DetectorOutput out;
  auto start = detail::Clock::now();
  const SphereEnsemble ensemble = fit_ensemble(train, psi, t, seed, threads);
  KernelMean mean;
  if (method == Method::kIdk) mean = idk_fit(ik_map_batch(ensemble, train, threads));
  out.fit_seconds = detail::seconds_since(start);

  start = detail::Clock::now();
  switch (method) {
    case Method::kSik: {
      const auto features = sik_map_batch(ensemble, test, threads);
      out.scores = sik_scores(SikFeatureStore(features));
      break;
    }
    case Method::kIk:
      out.scores = ik_scores(ik_map_batch(ensemble, test, threads));
      break;
    case Method::kIdk:
      out.scores = idk_scores(ik_map_batch(ensemble, test, threads), mean);
      break;
  }
  out.score_seconds = detail::seconds_since(start);
  out.feature_bytes = feature_store_bytes(method, train.rows(), test.rows(), psi, t);
  return out;
}

struct ExperimentReport {
  Method method = Method::kSik;
  std::size_t psi = 0;
  std::size_t t = 0;
  std::uint64_t seed = 0;
  double auroc = 0.0;
  double fit_seconds = 0.0;
  double score_seconds = 0.0;
  std::size_t feature_bytes = 0;
  // Training contamination ratio; 0 outside contamination sweeps.
  double contamination = 0.0;
};

/// Seeds {0, ..., 4}: five repetitions.
inline std::vector<std::uint64_t> default_seeds() { return {0, 1, 2, 3, 4}; }

namespace detail {

inline void require_labeled(const LabeledDataset& data) {
  data.validate();
  if (!data.labeled()) throw ParameterError("evaluation needs a labeled dataset");
}

inline std::vector<std::uint8_t> gather(std::span<const std::uint8_t> labels,
                                        std::span<const std::size_t> idx) {
  std::vector<std::uint8_t> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(labels[i]);
  return out;
}

inline ExperimentReport run_on_split(const LabeledDataset& data, const Split& split,
                                     Method method, std::size_t psi, std::size_t t,
                                     std::uint64_t seed, unsigned threads) {
  if (split.train.empty() || split.test.empty()) throw ParameterError("empty train or test split");
  const auto train = data.embeddings.select_rows(split.train);
  const auto test = data.embeddings.select_rows(split.test);
  const auto out = fit_and_score(method, train, test, psi, t, seed, threads);
  ExperimentReport r;
  r.method = method;
  r.psi = psi;
  r.t = t;
  r.seed = seed;
  r.auroc = auroc(out.scores, gather(data.labels, split.test));
  r.fit_seconds = out.fit_seconds;
  r.score_seconds = out.score_seconds;
  r.feature_bytes = out.feature_bytes;
  return r;
}

// Mean of AUROC and timings; identifying fields come from the first run.
inline ExperimentReport average(std::span<const ExperimentReport> runs) {
  ExperimentReport r = runs.front();
  r.auroc = r.fit_seconds = r.score_seconds = 0.0;
  for (const auto& x : runs) {
    r.auroc += x.auroc;
    r.fit_seconds += x.fit_seconds;
    r.score_seconds += x.score_seconds;
  }
  const auto count = static_cast<double>(runs.size());
  r.auroc /= count;
  r.fit_seconds /= count;
  r.score_seconds /= count;
  return r;
}

inline void require_seeds(std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw ParameterError("at least one seed is required");
}

}  // namespace detail

/// One fit on the training split and one scoring pass over the test split.
inline ExperimentReport run_detector(const LabeledDataset& data, Method method, std::size_t psi,
                                     std::size_t t, std::uint64_t seed, unsigned threads = 1) {
  detail::require_labeled(data);
  return detail::run_on_split(data, resolve_split(data), method, psi, t, seed, threads);
}

/// run_detector repeated over `seeds`, averaged.
inline ExperimentReport evaluate(const LabeledDataset& data, Method method, std::size_t psi,
                                 std::size_t t, std::span<const std::uint64_t> seeds,
                                 unsigned threads = 1) {
  detail::require_seeds(seeds);
  std::vector<ExperimentReport> runs;
  for (auto s : seeds) runs.push_back(run_detector(data, method, psi, t, s, threads));
  return detail::average(runs);
}

/// Number of anomalies injected so they make up `ratio` of a training split
/// that holds `n_train` clean points.
inline std::size_t contamination_count(double ratio, std::size_t n_train) {
  return static_cast<std::size_t>(
      std::llround(ratio * static_cast<double>(n_train) / (1.0 - ratio)));
}

/// For each ratio and seed, moves contamination_count(ratio, |train|)
/// anomalies, chosen at random from the test split, into the training
/// split, then fits with that seed. At ratio 0 this is run_detector.
inline std::vector<ExperimentReport> contamination_sweep(const LabeledDataset& data,
                                                         std::span<const double> ratios,
                                                         Method method, std::size_t psi,
                                                         std::size_t t,
                                                         std::span<const std::uint64_t> seeds,
                                                         unsigned threads = 1) {
  detail::require_labeled(data);
  detail::require_seeds(seeds);
  const Split base = resolve_split(data);
  std::vector<std::size_t> pool;
  for (auto i : base.test) {
    if (data.labels[i]) pool.push_back(i);
  }
  for (double ratio : ratios) {
    if (!(ratio >= 0.0 && ratio < 0.5)) {
      throw ParameterError("contamination ratio must lie in [0, 0.5), got " + std::to_string(ratio));
    }
    const std::size_t k = contamination_count(ratio, base.train.size());
    if (k + 1 > pool.size()) {
      throw ParameterError("insufficient anomaly pool: ratio " + std::to_string(ratio) +
                           " needs " + std::to_string(k) + " injected anomalies plus one to test, "
                           "but the test split has " + std::to_string(pool.size()));
    }
  }

  std::vector<ExperimentReport> reports;
  for (double ratio : ratios) {
    const std::size_t k = contamination_count(ratio, base.train.size());
    std::vector<ExperimentReport> runs;
    for (auto seed : seeds) {
      Engine rng(derive_seed(seed, 0x636f6e74616d696eull));
      std::vector<std::size_t> shuffled = pool;
      for (std::size_t a = 0; a < k; ++a) {
        const std::size_t pick = a + static_cast<std::size_t>(uniform_below(rng, shuffled.size() - a));
        std::swap(shuffled[a], shuffled[pick]);
      }
      std::vector<std::size_t> injected(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(k));
      std::sort(injected.begin(), injected.end());

      Split split;
      split.train = base.train;
      split.train.insert(split.train.end(), injected.begin(), injected.end());
      for (auto i : base.test) {
        if (!std::binary_search(injected.begin(), injected.end(), i)) split.test.push_back(i);
      }
      auto r = detail::run_on_split(data, split, method, psi, t, seed, threads);
      r.contamination = ratio;
      runs.push_back(r);
    }
    reports.push_back(detail::average(runs));
  }
  return reports;
}

/// Varies psi over `psi_grid` at t = fixed_t, then t over `t_grid` at
/// psi = fixed_psi. One averaged report per grid point, in that order.
inline std::vector<ExperimentReport> sensitivity_sweep(
    const LabeledDataset& data, std::span<const std::size_t> psi_grid,
    std::span<const std::size_t> t_grid, std::size_t fixed_psi, std::size_t fixed_t,
    std::span<const std::uint64_t> seeds, Method method = Method::kSik, unsigned threads = 1) {
  if (psi_grid.empty() && t_grid.empty()) throw ParameterError("sensitivity grids are empty");
  std::vector<ExperimentReport> reports;
  for (auto psi : psi_grid) reports.push_back(evaluate(data, method, psi, fixed_t, seeds, threads));
  for (auto t : t_grid) reports.push_back(evaluate(data, method, fixed_psi, t, seeds, threads));
  return reports;
}

struct ScalingRow {
  std::size_t n = 0;
  double sik_fit_seconds = 0.0;
  double sik_score_seconds = 0.0;
  double idk_fit_seconds = 0.0;
  double idk_score_seconds = 0.0;
  std::size_t sik_feature_bytes = 0;
  std::size_t ik_dense_feature_bytes = 0;
};

/// Separation of the synthetic data used by bench_scaling.
inline constexpr double kBenchSeparation = 2.0;

/// For each size n: generates n points (5% anomalies), fits on all of them
/// and scores all of them with SIK and with IDK. IDK fit time includes
/// mapping the training set to build its kernel mean.
inline std::vector<ScalingRow> bench_scaling(std::size_t d, std::span<const std::size_t> sizes,
                                             std::size_t psi, std::size_t t, std::uint64_t seed,
                                             unsigned threads = 1) {
  if (!std::is_sorted(sizes.begin(), sizes.end())) {
    throw ParameterError("bench sizes must be ascending");
  }
  std::vector<ScalingRow> rows;
  for (auto n : sizes) {
    if (n < 2) throw ParameterError("bench sizes must be >= 2");
    const std::size_t anomalies = std::max<std::size_t>(1, n / 20);
    const auto data = gen_blobs_with_outliers(n - anomalies, anomalies, d, kBenchSeparation,
                                              derive_seed(seed, n));
    const auto& x = data.embeddings;
    ScalingRow row;
    row.n = n;

    auto start = detail::Clock::now();
    const auto ensemble = fit_ensemble(x, psi, t, seed, threads);
    row.sik_fit_seconds = detail::seconds_since(start);

    start = detail::Clock::now();
    const SikFeatureStore store(sik_map_batch(ensemble, x, threads));
    const auto sik = sik_scores(store);
    row.sik_score_seconds = detail::seconds_since(start);

    start = detail::Clock::now();
    const auto idk_ensemble = fit_ensemble(x, psi, t, seed, threads);
    const auto mean = idk_fit(ik_map_batch(idk_ensemble, x, threads));
    row.idk_fit_seconds = detail::seconds_since(start);

    start = detail::Clock::now();
    const auto idk = idk_scores(ik_map_batch(idk_ensemble, x, threads), mean);
    row.idk_score_seconds = detail::seconds_since(start);

    row.sik_feature_bytes = store.byte_size();
    row.ik_dense_feature_bytes = n * ik_dense_bytes_per_point(psi, t);
    if (sik.size() != n || idk.size() != n) throw InvariantError("bench: score count mismatch");
    rows.push_back(row);
  }
  return rows;
}

}  // namespace sik
