#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "dadpfl/data.hpp"
#include "dadpfl/errors.hpp"
#include "dadpfl/learner.hpp"
#include "oracles.hpp"

using namespace dadpfl;

namespace {

DataShard random_shard(std::size_t n, std::size_t dim, std::size_t classes, Rng& rng) {
  std::normal_distribution<float> g(0.0f, 1.0f);
  DataShard s;
  s.dim = dim;
  s.inputs.resize(n * dim);
  for (auto& x : s.inputs) x = g(rng);
  for (std::size_t i = 0; i < n; ++i) s.labels.push_back(std::uint32_t(rng() % classes));
  return s;
}

DataShard shard_from(const Dataset& d) {
  std::vector<std::size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), 0);
  return make_shard(d, idx, 0);
}

}  // namespace

TEST(Gradient, MatchesFiniteDifferences) {
  Rng rng(5);
  const std::vector<LayerShape> shapes{{4, 2}, {2, 3}};
  const auto shard = random_shard(8, 4, 3, rng);
  const std::size_t P = total_params(shapes);
  std::vector<double> p(P);
  std::normal_distribution<double> g(0.0, 1.0);
  for (auto& x : p) x = g(rng);
  std::vector<std::size_t> rows(8);
  std::iota(rows.begin(), rows.end(), 0);
  std::vector<double> grad(P);
  const double loss = loss_and_gradient<double>(shapes, p, shard, rows, grad);
  EXPECT_NEAR(loss, oracle::mlp_loss(shapes, p, shard), 1e-12);

  const double h = 1e-3;
  for (std::size_t i = 0; i < P; ++i) {
    auto up = p, dn = p;
    up[i] += h;
    dn[i] -= h;
    const double fd = (oracle::mlp_loss(shapes, up, shard) - oracle::mlp_loss(shapes, dn, shard)) / (2 * h);
    const double rel = std::abs(fd - grad[i]) / std::max(1e-8, std::abs(fd) + std::abs(grad[i]));
    EXPECT_LT(rel, 1e-4) << "param " << i << " fd " << fd << " analytic " << grad[i];
  }
}

TEST(Gradient, ZeroLogitsGiveLogClasses) {
  const std::vector<LayerShape> shapes{{3, 4}, {4, 10}};
  DataShard s;
  s.dim = 3;
  s.inputs = {1, 2, 3, -1, 0, 1};
  s.labels = {4, 9};
  std::vector<double> p(total_params(shapes), 0.0);
  const std::vector<std::size_t> rows{0, 1};
  const double loss = loss_and_gradient<double>(shapes, p, s, rows, std::span<double>{});
  EXPECT_NEAR(loss, std::log(10.0), 1e-12);
}

TEST(LocalTrain, ZeroEpochsIsIdentity) {
  Rng rng(2);
  const auto shapes = mlp_shapes(5, 6, 3);
  const auto m = init_model(shapes, rng);
  const auto shard = random_shard(20, 5, 3, rng);
  SgdOptions o;
  o.epochs = 0;
  const auto r = local_train(m, MaskSet(shapes), shard, o, rng);
  EXPECT_EQ(r.model, m);
}

TEST(LocalTrain, MaskedWeightsStayZero) {
  Rng rng(3);
  const auto shapes = mlp_shapes(6, 8, 4);
  auto m = init_model(shapes, rng);
  const auto mask = erk_init(shapes, 0.4, rng);
  apply_mask(m, mask);
  const auto shard = random_shard(50, 6, 4, rng);
  SgdOptions o;
  o.epochs = 3;
  o.batch_size = 7;
  const auto r = local_train(m, mask, shard, o, rng);
  EXPECT_TRUE(mask_consistent(r.model, mask));
  EXPECT_FALSE(r.model == m);
  EXPECT_TRUE(std::isfinite(r.mean_loss));
}

TEST(LocalTrain, EmptyShardLeavesModel) {
  Rng rng(3);
  const auto shapes = mlp_shapes(2, 2, 2);
  const auto m = init_model(shapes, rng);
  DataShard empty;
  empty.dim = 2;
  const auto r = local_train(m, MaskSet(shapes), empty, SgdOptions{}, rng);
  EXPECT_EQ(r.model, m);
  EXPECT_TRUE(std::isnan(r.mean_loss));
  EXPECT_THROW(evaluate(m, empty), InvalidParameter);
}

TEST(LocalTrain, LearnsSeparableBlobs) {
  Rng rng(11);
  BlobSpec spec;
  spec.classes = 4;
  spec.dim = 8;
  spec.samples = 800;
  spec.center_scale = 3.0;
  spec.sigma = 0.5;
  const auto data = make_blobs(spec, rng);
  const auto shard = shard_from(data);

  // Nearest-centroid accuracy establishes the data is separable at this level.
  std::vector<std::vector<double>> mu(spec.classes, std::vector<double>(spec.dim, 0.0));
  std::vector<std::size_t> cnt(spec.classes, 0);
  for (std::size_t i = 0; i < shard.size(); ++i) {
    ++cnt[shard.labels[i]];
    for (std::size_t j = 0; j < spec.dim; ++j) mu[shard.labels[i]][j] += shard.row(i)[j];
  }
  for (std::size_t c = 0; c < spec.classes; ++c)
    for (auto& v : mu[c]) v /= double(cnt[c]);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < shard.size(); ++i) {
    std::size_t best = 0;
    double bd = 1e300;
    for (std::size_t c = 0; c < spec.classes; ++c) {
      double d = 0.0;
      for (std::size_t j = 0; j < spec.dim; ++j) d += std::pow(shard.row(i)[j] - mu[c][j], 2);
      if (d < bd) bd = d, best = c;
    }
    hit += best == shard.labels[i];
  }
  ASSERT_GE(double(hit) / double(shard.size()), 0.95);

  const auto shapes = mlp_shapes(spec.dim, 16, spec.classes);
  const auto m = init_model(shapes, rng);
  SgdOptions o;
  o.epochs = 20;
  o.batch_size = 32;
  const auto r = local_train(m, MaskSet(shapes), shard, o, rng);
  EXPECT_GE(evaluate(r.model, shard).accuracy, 0.95);
}

TEST(Evaluate, TiesGoToLowestClass) {
  const auto shapes = mlp_shapes(2, 2, 3);
  FlatModel m(shapes);
  DataShard s;
  s.dim = 2;
  s.inputs = {1, 1, 1, 1};
  s.labels = {0, 2};
  const auto r = evaluate(m, s);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.5);
  EXPECT_NEAR(r.mean_loss, std::log(3.0), 1e-6);
}

TEST(Partition, DirichletIsDisjointCover) {
  Rng rng(4);
  std::vector<std::uint32_t> labels(1000);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = std::uint32_t(i % 10);
  const auto parts = partition_dirichlet(labels, 20, 0.3, rng);
  ASSERT_EQ(parts.size(), 20u);
  std::set<std::size_t> seen;
  std::size_t total = 0;
  for (const auto& p : parts) {
    EXPECT_FALSE(p.empty());
    total += p.size();
    seen.insert(p.begin(), p.end());
  }
  EXPECT_EQ(total, labels.size());
  EXPECT_EQ(seen.size(), labels.size());
}

TEST(Partition, LargeAlphaIsNearUniform) {
  Rng rng(9);
  std::vector<std::uint32_t> labels(10000);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = std::uint32_t(i % 10);
  const auto parts = partition_dirichlet(labels, 10, 1e6, rng);
  const auto hist = class_histogram(labels, parts, 10);
  for (const auto& row : hist)
    for (auto c : row) EXPECT_NEAR(double(c), 100.0, 5.0);
}

TEST(Partition, TooFewSamplesIsInfeasible) {
  Rng rng(1);
  const std::vector<std::uint32_t> labels{0, 1, 2};
  EXPECT_THROW(partition_dirichlet(labels, 5, 1.0, rng), InfeasiblePartition);
}

TEST(Partition, PathologicalLimitsClassesPerClient) {
  Rng rng(6);
  std::vector<std::uint32_t> labels(2000);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = std::uint32_t(i % 10);
  for (std::size_t K : {5u, 7u, 20u}) {
    const auto parts = partition_pathological(labels, K, 2, rng);
    ASSERT_EQ(parts.size(), K);
    const auto hist = class_histogram(labels, parts, 10);
    std::size_t total = 0;
    for (const auto& row : hist) {
      std::size_t distinct = 0;
      for (auto c : row) distinct += c > 0, total += c;
      EXPECT_LE(distinct, 2u);
      EXPECT_GE(distinct, 1u);
    }
    EXPECT_EQ(total, labels.size());
  }
  const auto single = partition_pathological(labels, 1, 10, rng);
  EXPECT_EQ(single[0].size(), labels.size());
  EXPECT_THROW(partition_pathological(labels, 5, 11, rng), InfeasiblePartition);
}

TEST(Partition, PathologicalPiecesAreBalanced) {
  Rng rng(7);
  std::vector<std::uint32_t> labels(1003);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = std::uint32_t(i % 10);
  const auto parts = partition_pathological(labels, 10, 2, rng);
  const auto hist = class_histogram(labels, parts, 10);
  for (std::size_t c = 0; c < 10; ++c) {
    std::size_t lo = SIZE_MAX, hi = 0;
    for (const auto& row : hist)
      if (row[c] > 0) lo = std::min(lo, row[c]), hi = std::max(hi, row[c]);
    EXPECT_LE(hi - lo, 1u);
  }
}

TEST(Csv, LoadsAndReportsLine) {
  const auto dir = std::filesystem::temp_directory_path() / "dadpfl_csv_test";
  std::filesystem::create_directories(dir);
  const auto good = dir / "good.csv";
  std::ofstream(good) << "0,1.5,2\n2,-1,0.25\n";
  const auto d = load_csv(good);
  EXPECT_EQ(d.dim, 2u);
  EXPECT_EQ(d.classes, 3u);
  EXPECT_EQ(d.size(), 2u);
  EXPECT_FLOAT_EQ(d.inputs[3], 0.25f);

  const auto bad = dir / "bad.csv";
  std::ofstream(bad) << "0,1,2\n1,abc,3\n";
  try {
    load_csv(bad);
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }
  const auto ragged = dir / "ragged.csv";
  std::ofstream(ragged) << "0,1,2\n1,3\n";
  EXPECT_THROW(load_csv(ragged), std::runtime_error);
  EXPECT_THROW(load_csv(dir / "missing.csv"), std::runtime_error);
}

TEST(Holdout, SplitsRows) {
  Rng rng(8);
  auto s = random_shard(10, 3, 2, rng);
  const auto r = split_holdout(s, 0.2, rng);
  EXPECT_EQ(r.test.size(), 2u);
  EXPECT_EQ(r.train.size(), 8u);
  EXPECT_EQ(r.train.dim, 3u);
  EXPECT_EQ(r.train.inputs.size(), 24u);
}
