#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "sik/features.hpp"

namespace {

using sik::EmbeddingMatrix;
using sik::IkFeature;
using sik::Partitioning;
using sik::SikFeature;
using sik::SphereEnsemble;

EmbeddingMatrix random_matrix(std::uint64_t seed, std::size_t n, std::size_t d,
                              double scale = 1.0, double shift = 0.0) {
  std::mt19937_64 rng(seed);
  auto v = sik_test::random_rows(rng, n, d, scale);
  for (auto& x : v) x += shift;
  return EmbeddingMatrix(n, d, std::move(v));
}

// Two partitionings of three spheres each, as in the worked example:
// the query sits in the second sphere of H1 and outside all of H2.
SphereEnsemble worked_example() {
  const EmbeddingMatrix h1(3, 2, {0, 0, 4, 0, 8, 0});
  const EmbeddingMatrix h2(3, 2, {20, 20, 24, 20, 28, 20});
  const std::vector<std::size_t> all = {0, 1, 2};
  return SphereEnsemble({sik::build_partitioning(h1, all), sik::build_partitioning(h2, all)}, 0);
}

TEST(WorkedExampleTest, DenseIkAndCompactSik) {
  const auto e = worked_example();
  const std::vector<double> x = {4.0, 0.5};
  const auto ik = sik::ik_map(e, x);
  EXPECT_EQ(ik.dense(), (std::vector<std::uint8_t>{0, 1, 0, 0, 0, 0}));
  const auto phi = sik::sik_map(e, x);
  EXPECT_EQ(phi, SikFeature::from_bits({0, 1}));
}

TEST(WorkedExampleTest, SinglePartitioningOneBit) {
  const EmbeddingMatrix pts(3, 2, {0, 0, 2, 0, 1, 2});
  const std::vector<std::size_t> all = {0, 1, 2};
  const SphereEnsemble e({sik::build_partitioning(pts, all)}, 0);
  const std::vector<double> inside = {0.5, 0.2};
  const std::vector<double> outlier = {10.0, -7.0};
  EXPECT_EQ(sik::sik_map(e, inside), SikFeature::from_bits({0}));
  EXPECT_EQ(sik::sik_map(e, outlier), SikFeature::from_bits({1}));
  EXPECT_EQ(sik::ik_map(e, inside).dense().size(), 3u);
}

TEST(SikMapTest, SharedCenterMapsToZeros) {
  const auto data = random_matrix(1, 12, 5);
  const auto e = sik::fit_ensemble(data, 12, 30, 4);
  for (std::size_t r = 0; r < data.rows(); ++r) {
    EXPECT_EQ(sik::sik_map(e, data.row(r)).popcount(), 0u);
  }
}

TEST(SikMapTest, RemotePointMapsToOnes) {
  const auto data = random_matrix(2, 50, 5);
  const auto e = sik::fit_ensemble(data, 8, 70, 4);
  const std::vector<double> far(5, 1e4);
  const auto f = sik::sik_map(e, far);
  EXPECT_EQ(f.size(), 70u);
  EXPECT_EQ(f.popcount(), 70u);
}

TEST(IkMapTest, CenterAtIndexZero) {
  const auto data = random_matrix(3, 40, 4);
  const auto e = sik::fit_ensemble(data, 10, 5, 9);
  const auto f = sik::ik_map(e, e[0].center(0));
  EXPECT_EQ(f[0], sik::SphereAssignment::sphere(0));
}

TEST(FeatureMapTest, DimensionMismatch) {
  const auto e = worked_example();
  const std::vector<double> x = {1.0, 2.0, 3.0};
  EXPECT_THROW(sik::sik_map(e, x), sik::ShapeError);
  EXPECT_THROW(sik::ik_map(e, x), sik::ShapeError);
  const auto wrong = random_matrix(1, 4, 3);
  EXPECT_THROW(sik::sik_map_batch(e, wrong), sik::ShapeError);
  EXPECT_THROW(sik::ik_map_batch(e, wrong), sik::ShapeError);
}

TEST(FeatureMapTest, SikBitIsSetExactlyWhenIkIsNone) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto data = random_matrix(seed, 100, 3 + seed);
    const auto e = sik::fit_ensemble(data, 4 + seed, 25, seed);
    const auto queries = random_matrix(seed + 100, 50, 3 + seed, 1.5);
    for (std::size_t r = 0; r < queries.rows(); ++r) {
      const auto phi = sik::sik_map(e, queries.row(r));
      const auto ik = sik::ik_map(e, queries.row(r));
      const auto dense = ik.dense();
      ASSERT_EQ(phi.size(), ik.size());
      std::size_t ones = 0;
      for (std::size_t i = 0; i < e.t(); ++i) {
        const auto block_sum = std::accumulate(dense.begin() + i * e.psi(),
                                               dense.begin() + (i + 1) * e.psi(), 0);
        ASSERT_LE(block_sum, 1);
        ASSERT_EQ(phi.test(i), ik[i].is_none());
        ASSERT_EQ(phi.test(i), block_sum == 0);
        ones += block_sum;
      }
      ASSERT_LE(ones, e.t());
      // Idempotent.
      ASSERT_EQ(phi, sik::sik_map(e, queries.row(r)));
      ASSERT_EQ(ik, sik::ik_map(e, queries.row(r)));
    }
  }
}

TEST(FeatureMapTest, TrainingCentersAreCovered) {
  const auto data = random_matrix(6, 200, 7);
  const auto e = sik::fit_ensemble(data, 32, 40, 1);
  for (std::size_t i = 0; i < e.t(); ++i) {
    for (std::size_t j = 0; j < e.psi(); ++j) {
      EXPECT_FALSE(sik::sik_map(e, e[i].center(j)).test(i));
    }
  }
}

TEST(FeatureMapTest, EncodingsReduceDimensionByPsi) {
  const auto data = random_matrix(6, 300, 3);
  for (std::size_t psi : {32u, 256u}) {
    const auto e = sik::fit_ensemble(data, psi, 200, 1);
    const auto x = data.row(0);
    const auto phi = sik::sik_map(e, x);
    const auto ik = sik::ik_map(e, x);
    EXPECT_EQ(phi.size(), 200u);
    EXPECT_EQ(ik.dense().size(), psi * 200);
    EXPECT_EQ(ik.dense().size() / phi.size(), psi);
    EXPECT_EQ(sik::ik_dense_bits_per_point(psi, 200) / sik::sik_bits_per_point(200), psi);
  }
}

void expect_batch_matches_loop(const SphereEnsemble& e, const EmbeddingMatrix& data) {
  const auto sik_batch = sik::sik_map_batch(e, data);
  const auto ik_batch = sik::ik_map_batch(e, data);
  ASSERT_EQ(sik_batch.size(), data.rows());
  ASSERT_EQ(ik_batch.size(), data.rows());
  for (std::size_t r = 0; r < data.rows(); ++r) {
    ASSERT_EQ(sik_batch[r], sik::sik_map(e, data.row(r))) << "row " << r;
    ASSERT_EQ(ik_batch[r], sik::ik_map(e, data.row(r))) << "row " << r;
  }
}

TEST(BatchMapTest, RandomBatchEqualsPointLoop) {
  const auto train = random_matrix(11, 400, 16);
  const auto e = sik::fit_ensemble(train, 32, 50, 5);
  expect_batch_matches_loop(e, random_matrix(12, 200, 16, 1.3));
}

// Training rows sit exactly on sphere boundaries (each sampled center's
// nearest neighbour is on its sphere); the batched path must still agree.
TEST(BatchMapTest, BoundaryPointsAcrossDimensions) {
  for (std::size_t d : {2u, 64u, 768u}) {
    const auto train = random_matrix(d, 150, d);
    const auto e = sik::fit_ensemble(train, 16, 20, d);
    expect_batch_matches_loop(e, train);
  }
}

// Large offsets make ||x||^2 + ||c||^2 - 2<x,c> cancel badly.
TEST(BatchMapTest, LargeOffsetsStillExact) {
  const auto train = random_matrix(21, 120, 32, 1e-3, 1e6);
  const auto e = sik::fit_ensemble(train, 16, 20, 2);
  expect_batch_matches_loop(e, train);
  expect_batch_matches_loop(e, random_matrix(22, 60, 32, 1e-3, 1e6));
}

TEST(BatchMapTest, DuplicateRowsAndZeroRadii) {
  std::vector<double> v;
  for (int i = 0; i < 30; ++i) {
    const double base = static_cast<double>(i % 5);
    v.insert(v.end(), {base, -base, 0.5 * base});
  }
  const EmbeddingMatrix data(30, 3, v);
  const auto e = sik::fit_ensemble(data, 12, 25, 3);
  expect_batch_matches_loop(e, data);
}

TEST(BatchMapTest, SingletonAndPermutation) {
  const auto train = random_matrix(31, 100, 5);
  const auto e = sik::fit_ensemble(train, 16, 40, 5);
  const auto queries = random_matrix(32, 70, 5, 1.4);

  const std::vector<std::size_t> one = {17};
  const auto single = queries.select_rows(one);
  EXPECT_EQ(sik::sik_map_batch(e, single).front(), sik::sik_map(e, queries.row(17)));
  EXPECT_EQ(sik::ik_map_batch(e, single).front(), sik::ik_map(e, queries.row(17)));

  std::vector<std::size_t> perm(queries.rows());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(4));
  const auto permuted = queries.select_rows(perm);
  const auto sik_base = sik::sik_map_batch(e, queries);
  const auto ik_base = sik::ik_map_batch(e, queries);
  const auto sik_perm = sik::sik_map_batch(e, permuted);
  const auto ik_perm = sik::ik_map_batch(e, permuted);
  for (std::size_t k = 0; k < perm.size(); ++k) {
    EXPECT_EQ(sik_perm[k], sik_base[perm[k]]);
    EXPECT_EQ(ik_perm[k], ik_base[perm[k]]);
  }
}

TEST(BatchMapTest, ThreadCountDoesNotChangeResults) {
  const auto train = random_matrix(41, 500, 12);
  const auto e = sik::fit_ensemble(train, 32, 30, 5);
  EXPECT_EQ(sik::ik_map_batch(e, train, 1), sik::ik_map_batch(e, train, 3));
  EXPECT_EQ(sik::sik_map_batch(e, train, 1), sik::sik_map_batch(e, train, 3));
}

TEST(FeatureStoreTest, PackedSikStoreUsesCeilTOver8BytesPerPoint) {
  const auto train = random_matrix(51, 200, 4);
  for (std::size_t t : {1u, 8u, 9u, 64u, 200u, 333u}) {
    const auto e = sik::fit_ensemble(train, 8, t, 5);
    const auto features = sik::sik_map_batch(e, random_matrix(52, 40, 4, 2.0));
    const sik::SikFeatureStore store(features);
    EXPECT_EQ(store.byte_size(), 40 * ((t + 7) / 8));
    for (std::size_t r = 0; r < features.size(); ++r) {
      EXPECT_EQ(store.popcount(r), features[r].popcount());
      for (std::size_t i = 0; i < t; ++i) ASSERT_EQ(store.test(r, i), features[r].test(i));
    }
  }
}

TEST(FeatureStoreTest, IkStoreIsSmallerThanDenseEquivalent) {
  const auto train = random_matrix(61, 200, 4);
  const auto e = sik::fit_ensemble(train, 32, 200, 5);
  const auto features = sik::ik_map_batch(e, train);
  const sik::IkFeatureStore store(features);
  EXPECT_LT(store.byte_size() * 8, train.rows() * 32 * 200);
  for (std::size_t r = 0; r < features.size(); ++r) {
    for (std::size_t i = 0; i < 200; ++i) ASSERT_EQ(store.at(r, i), features[r][i]);
  }
}

TEST(SikFeatureTest, BitOperations) {
  SikFeature f(130);
  EXPECT_EQ(f.words().size(), 3u);
  f.set(0);
  f.set(64);
  f.set(129);
  EXPECT_EQ(f.popcount(), 3u);
  f.set(64, false);
  EXPECT_FALSE(f.test(64));
  EXPECT_TRUE(f.test(129));
  EXPECT_EQ(f.popcount(), 2u);
}

TEST(IkFeatureTest, FromRawValidatesRange) {
  EXPECT_THROW(IkFeature::from_raw(3, {0, 3}), sik::ShapeError);
  const auto f = IkFeature::from_raw(3, {2, -1, 0});
  EXPECT_EQ(f.dense(), (std::vector<std::uint8_t>{0, 0, 1, 0, 0, 0, 1, 0, 0}));
}

}  // namespace
