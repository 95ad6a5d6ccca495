#include "crowd/synth.hpp"

#include <random>

#include "crowd/onecoin.hpp"

namespace crowd {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::InvalidConfig, what);
}

int sample_category(const Eigen::VectorXd& probs, double u) {
  double cumulative = 0;
  for (Eigen::Index c = 0; c + 1 < probs.size(); ++c) {
    cumulative += probs(c);
    if (u < cumulative) return static_cast<int>(c);
  }
  return static_cast<int>(probs.size() - 1);
}

}  // namespace

void validate(const SynthConfig& config) {
  require(config.num_workers >= 1 && config.num_items >= 1, "need workers and items");
  require(config.num_classes >= 2, "need at least two classes");
  require(config.sparsity > 0 && config.sparsity <= 1, "sparsity must be in (0,1]");
  if (config.prior.size() != 0) {
    require(config.prior.size() == config.num_classes, "prior has wrong length");
    require(is_probability_vector(config.prior), "prior must be positive and sum to 1");
  }
  std::visit(Overloaded{
                 [&](const BinaryRegime& r) {
                   require(config.num_classes == 2, "the binary regime needs k = 2");
                   require(0 <= r.low && r.low <= r.high && r.high <= 1, "diagonal range must lie in [0,1]");
                 },
                 [&](const ExplicitRegime& r) {
                   require(static_cast<int>(r.confusions.size()) == config.num_workers, "one matrix per worker");
                   for (const auto& c : r.confusions) {
                     require(c.rows() == config.num_classes && c.cols() == config.num_classes, "matrix must be k x k");
                     require(is_column_stochastic(c), "matrix must be column-stochastic");
                   }
                 },
                 [&](const OneCoinRegime& r) {
                   require(0 <= r.low && r.low <= r.high && r.high <= 1, "accuracy range must lie in [0,1]");
                 },
             },
             config.regime);
}

SynthData generate(const SynthConfig& config) {
  validate(config);
  const int m = config.num_workers;
  const int n = config.num_items;
  const int k = config.num_classes;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  GroundTruthModel truth;
  truth.prior = config.prior.size() != 0 ? config.prior : ClassPrior<double>::Constant(k, 1.0 / k);
  truth.sparsity.assign(m, config.sparsity);
  truth.true_labels.resize(n);
  for (int j = 0; j < n; ++j) truth.true_labels[j] = sample_category(truth.prior, unit(rng));

  truth.confusions = std::visit(
      Overloaded{
          [&](const BinaryRegime& r) {
            std::uniform_real_distribution<double> diag(r.low, r.high);
            ConfusionSet<double> out;
            for (int i = 0; i < m; ++i) {
              const double d0 = diag(rng);
              const double d1 = diag(rng);
              Eigen::Matrix2d c;
              c << d0, 1 - d1, 1 - d0, d1;
              out.emplace_back(c);
            }
            return out;
          },
          [&](const ExplicitRegime& r) { return r.confusions; },
          [&](const OneCoinRegime& r) {
            std::uniform_real_distribution<double> acc(r.low, r.high);
            ConfusionSet<double> out;
            for (int i = 0; i < m; ++i) out.push_back(one_coin_confusion(acc(rng), k));
            return out;
          },
      },
      config.regime);

  std::bernoulli_distribution present(config.sparsity);
  std::vector<LabelEntry> entries;
  entries.reserve(static_cast<std::size_t>(m * n * config.sparsity) + 16);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!present(rng)) continue;
      const Eigen::VectorXd column = truth.confusions[i].col(truth.true_labels[j]);
      entries.push_back({i, j, sample_category(column, unit(rng))});
    }
  }
  if (entries.empty()) throw Error(ErrorKind::EmptyDataset, "sampled no labels");
  return {ObservedLabels::create(m, n, k, std::move(entries)), std::move(truth)};
}

}  // namespace crowd
