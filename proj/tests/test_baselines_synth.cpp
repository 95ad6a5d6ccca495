#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "crowd/baselines.hpp"
#include "crowd/synth.hpp"
#include "oracles.hpp"

using namespace crowd;

TEST_CASE("majority vote") {
  SUBCASE("two to one") {
    const auto labels = ObservedLabels::create(3, 1, 2, {{0, 0, 0}, {1, 0, 0}, {2, 0, 1}});
    const auto q = majority_vote(labels);
    CHECK(q.beliefs(0, 0) == doctest::Approx(2.0 / 3));
    CHECK(q.beliefs(0, 1) == doctest::Approx(1.0 / 3));
    CHECK(q.predictions[0] == 0);
    const auto hard = majority_vote(labels, true);
    CHECK(hard.beliefs(0, 0) == 1.0);
    CHECK(hard.beliefs(0, 1) == 0.0);
  }
  SUBCASE("tie goes to the lowest class") {
    const auto labels = ObservedLabels::create(2, 2, 2, {{0, 0, 1}, {1, 0, 0}, {0, 1, 1}});
    const auto q = majority_vote(labels);
    CHECK(q.predictions[0] == 0);
    CHECK(q.beliefs(0, 0) == doctest::Approx(0.5));
    CHECK(q.predictions[1] == 1);
  }
  SUBCASE("unlabeled item") {
    const auto labels = ObservedLabels::create(1, 2, 3, {{0, 0, 2}});
    const auto q = majority_vote(labels);
    CHECK(q.beliefs.row(1).isApprox(Eigen::RowVector3d::Constant(1.0 / 3)));
  }
}

TEST_CASE("majority vote ignores worker order") {
  SynthConfig cfg;
  cfg.num_workers = 9;
  cfg.num_items = 100;
  cfg.sparsity = 0.6;
  cfg.seed = 2;
  const auto data = generate(cfg);
  const auto base = majority_vote(data.labels);
  std::mt19937_64 rng(0);
  for (int t = 0; t < 5; ++t) {
    std::vector<int> perm(9);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<LabelEntry> entries;
    for (const auto& e : data.labels.entries()) entries.push_back({perm[e.worker], e.item, e.label});
    const auto q = majority_vote(ObservedLabels::create(9, 100, 2, entries));
    CHECK(q.predictions == base.predictions);
    CHECK(q.beliefs.isApprox(base.beliefs));
  }
}

TEST_CASE("duplicating a worker never flips a decided item") {
  SynthConfig cfg;
  cfg.num_workers = 7;
  cfg.num_items = 400;
  cfg.num_classes = 3;
  cfg.sparsity = 0.7;
  cfg.regime = OneCoinRegime{0.4, 0.8};
  cfg.seed = 13;
  const auto data = generate(cfg);
  const auto base = majority_vote(data.labels);
  for (int dup = 0; dup < 7; ++dup) {
    std::vector<LabelEntry> entries(data.labels.entries().begin(), data.labels.entries().end());
    for (const auto& e : data.labels.entries())
      if (e.worker == dup) entries.push_back({7, e.item, e.label});
    const auto q = majority_vote(ObservedLabels::create(8, 400, 3, entries));
    for (int j = 0; j < 400; ++j) {
      std::vector<int> votes(3, 0);
      for (const auto& e : data.labels.item_entries(j)) ++votes[e.label];
      std::sort(votes.rbegin(), votes.rend());
      if (votes[0] - votes[1] >= 2) CHECK(q.predictions[j] == base.predictions[j]);
    }
  }
}

TEST_CASE("generator") {
  SUBCASE("full sparsity labels everything") {
    SynthConfig cfg;
    cfg.num_workers = 10;
    cfg.num_items = 50;
    cfg.seed = 1;
    const auto data = generate(cfg);
    CHECK(data.labels.size() == 500);
  }

  SUBCASE("binary regime diagonal mean") {
    SynthConfig cfg;
    cfg.num_items = 1000;
    cfg.seed = 21;
    const auto data = generate(cfg);
    double mean = 0;
    for (const auto& c : data.truth.confusions) mean += (c(0, 0) + c(1, 1)) / 200;
    // 200 uniform(0.3, 0.9) draws: sd of the mean is 0.6 / sqrt(12 * 200)
    CHECK(std::abs(mean - 0.6) <= 3 * 0.6 / std::sqrt(12.0 * 200));
    for (const auto& c : data.truth.confusions) CHECK(is_column_stochastic(c));
  }

  SUBCASE("perfect one-coin workers report the truth") {
    SynthConfig cfg;
    cfg.num_workers = 5;
    cfg.num_items = 80;
    cfg.num_classes = 4;
    cfg.sparsity = 0.5;
    cfg.regime = OneCoinRegime{1.0, 1.0};
    cfg.seed = 3;
    const auto data = generate(cfg);
    for (const auto& e : data.labels.entries()) CHECK(e.label == data.truth.true_labels[e.item]);
  }

  SUBCASE("same seed, same dataset") {
    SynthConfig cfg;
    cfg.num_workers = 20;
    cfg.num_items = 200;
    cfg.sparsity = 0.3;
    cfg.seed = 99;
    const auto a = generate(cfg);
    const auto b = generate(cfg);
    CHECK(std::ranges::equal(a.labels.entries(), b.labels.entries()));
    CHECK(a.truth.true_labels == b.truth.true_labels);
    for (int i = 0; i < 20; ++i) CHECK(a.truth.confusions[i] == b.truth.confusions[i]);
    cfg.seed = 100;
    CHECK_FALSE(std::ranges::equal(a.labels.entries(), generate(cfg).labels.entries()));
  }

  SUBCASE("invalid configurations") {
    SynthConfig cfg;
    cfg.num_classes = 3;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = {};
    cfg.sparsity = 0;
    CHECK_THROWS_AS(generate(cfg), Error);
    cfg = {};
    cfg.regime = ExplicitRegime{{Eigen::Matrix2d::Identity()}};
    CHECK_THROWS_AS(generate(cfg), Error);
  }
}

TEST_CASE("reported labels follow the confusion columns") {
  // chi-square goodness of fit per (worker, true class) cell, k = 3,
  // 2 degrees of freedom each; pooled over all cells at 0.999
  Eigen::Matrix3d c;
  c << 0.6, 0.1, 0.25, 0.3, 0.7, 0.15, 0.1, 0.2, 0.6;
  SynthConfig cfg;
  cfg.num_workers = 4;
  cfg.num_items = 30000;
  cfg.num_classes = 3;
  cfg.sparsity = 0.8;
  cfg.prior = Eigen::Vector3d(0.5, 0.3, 0.2);
  cfg.regime = ExplicitRegime{ConfusionSet<double>(4, c)};
  cfg.seed = 17;
  const auto data = generate(cfg);

  double chi2 = 0;
  int dof = 0;
  for (int i = 0; i < 4; ++i) {
    Eigen::Matrix3d counts = Eigen::Matrix3d::Zero();
    for (const auto& e : data.labels.entries())
      if (e.worker == i) counts(e.label, data.truth.true_labels[e.item]) += 1;
    for (int l = 0; l < 3; ++l) {
      const double total = counts.col(l).sum();
      CHECK(total >= 1e3);
      for (int x = 0; x < 3; ++x) {
        const double expected = total * c(x, l);
        chi2 += (counts(x, l) - expected) * (counts(x, l) - expected) / expected;
      }
      dof += 2;
    }
  }
  // chi-square 0.999 quantile for 24 degrees of freedom
  REQUIRE(dof == 24);
  CHECK(chi2 < 51.18);
}
