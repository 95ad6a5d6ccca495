#pragma once

#include <cstdint>
#include <variant>

#include "crowd/labels.hpp"
#include "crowd/model.hpp"

namespace crowd {

/// Binary regime: both diagonal entries independently uniform on
/// [low, high]; off-diagonals complete the columns.
struct BinaryRegime {
  double low = 0.3;
  double high = 0.9;
};

/// Given confusion matrices, one per worker.
struct ExplicitRegime {
  ConfusionSet<double> confusions;
};

/// One-coin workers with accuracy uniform on [low, high].
struct OneCoinRegime {
  double low = 0.6;
  double high = 0.9;
};

using ConfusionRegime = std::variant<BinaryRegime, ExplicitRegime, OneCoinRegime>;

struct SynthConfig {
  int num_workers = 100;
  int num_items = 1000;
  int num_classes = 2;
  double sparsity = 1.0;  // probability a worker labels a given item
  ClassPrior<double> prior;  // empty means uniform
  ConfusionRegime regime = BinaryRegime{};
  std::uint64_t seed = 0;
};

struct SynthData {
  ObservedLabels labels;
  GroundTruthModel truth;
};

/// Throws InvalidConfig.
void validate(const SynthConfig& config);

/// Samples a dataset. Draw order from one generator: true labels by item,
/// then worker confusions (random regimes only), then labels with workers
/// outer and items inner (a Bernoulli presence draw, then the label draw
/// when present). Same config, same dataset.
SynthData generate(const SynthConfig& config);

}  // namespace crowd
