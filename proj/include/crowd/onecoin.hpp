#pragma once

// One-coin model: worker i reports the true class with probability p_i and
// each wrong class with probability (1 - p_i) / (k - 1). Accuracies are
// initialized from pairwise agreement statistics, then refined by EM.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "crowd/em.hpp"
#include "crowd/error.hpp"
#include "crowd/labels.hpp"
#include "crowd/model.hpp"

namespace crowd {

template <typename Scalar>
struct PairwiseStats {
  Matrix<Scalar> agreement;  // N_ab, symmetric; the diagonal is a worker with itself
  Eigen::MatrixXi overlap;   // items co-labeled by a and b
};

/// N_ab = ((k-1)/k) (agreement fraction - 1/k) over the items both workers
/// labeled. Throws NoOverlap for a pair without common items unless
/// allow_missing is set, in which case that N_ab is 0.
template <typename Scalar = double>
PairwiseStats<Scalar> pairwise_stats(const ObservedLabels& labels, bool allow_missing = false) {
  const int m = labels.num_workers();
  const Scalar k = labels.num_classes();
  Eigen::MatrixXi agree = Eigen::MatrixXi::Zero(m, m);
  PairwiseStats<Scalar> out;
  out.overlap = Eigen::MatrixXi::Zero(m, m);
  for (int j = 0; j < labels.num_items(); ++j) {
    const auto row = labels.item_entries(j);
    for (std::size_t x = 0; x < row.size(); ++x) {
      for (std::size_t y = x; y < row.size(); ++y) {
        const int a = row[x].worker;
        const int b = row[y].worker;
        ++out.overlap(a, b);
        if (a != b) ++out.overlap(b, a);
        if (row[x].label == row[y].label) {
          ++agree(a, b);
          if (a != b) ++agree(b, a);
        }
      }
    }
  }
  out.agreement = Matrix<Scalar>::Zero(m, m);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      if (out.overlap(a, b) == 0) {
        if (a != b && !allow_missing) {
          throw Error(ErrorKind::NoOverlap, "workers " + std::to_string(a) + " and " + std::to_string(b));
        }
        continue;
      }
      const Scalar fraction = static_cast<Scalar>(agree(a, b)) / out.overlap(a, b);
      out.agreement(a, b) = (k - 1) / k * (fraction - 1 / k);
    }
  }
  return out;
}

enum class SignReference {
  FirstWorkerPartner,  // sign(N_{i,a_1}) with a_1 the partner chosen for worker 1
  OwnPartner,          // sign(N_{i,a_i})
};

struct OneCoinOptions {
  SignReference sign_reference = SignReference::FirstWorkerPartner;
  double floor = 1e-6;  // accuracies are kept in [floor, 1 - floor]
};

template <typename Scalar>
struct AccuracyInit {
  std::vector<Scalar> accuracies;
  std::vector<std::pair<int, int>> partners;  // (a_i, b_i)
  bool flipped = false;
};

/// Moment initialization of the accuracies from pairwise statistics.
/// Needs at least three workers. Throws DegeneratePair when the strongest
/// pair available to some worker has N = 0.
template <typename Scalar>
AccuracyInit<Scalar> init_accuracies(const Matrix<Scalar>& n_ab, int num_classes, const OneCoinOptions& opts = {}) {
  const auto m = static_cast<int>(n_ab.rows());
  if (m < 3) throw Error(ErrorKind::TooFewWorkers, "one-coin initialization needs 3 workers");
  const Scalar inv_k = Scalar(1) / num_classes;

  struct Pair {
    Scalar strength;
    int a, b;
  };
  std::vector<Pair> pairs;
  pairs.reserve(static_cast<std::size_t>(m) * (m - 1) / 2);
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b) pairs.push_back({std::abs(n_ab(a, b)), a, b});
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) { return x.strength > y.strength; });

  AccuracyInit<Scalar> out;
  out.partners.resize(m);
  for (int i = 0; i < m; ++i) {
    const auto it = std::find_if(pairs.begin(), pairs.end(), [i](const Pair& p) { return p.a != i && p.b != i; });
    if (it->strength == Scalar(0)) {
      throw Error(ErrorKind::DegeneratePair, "strongest pair for worker " + std::to_string(i) + " has N = 0");
    }
    out.partners[i] = {it->a, it->b};
  }

  auto sign = [](Scalar x) { return static_cast<Scalar>((x > 0) - (x < 0)); };
  out.accuracies.resize(m);
  for (int i = 0; i < m; ++i) {
    const auto [a, b] = out.partners[i];
    const int ref = opts.sign_reference == SignReference::FirstWorkerPartner ? out.partners[0].first : a;
    const Scalar ratio = std::max(Scalar(0), n_ab(i, a) * n_ab(i, b) / n_ab(a, b));
    out.accuracies[i] = inv_k + sign(n_ab(i, ref)) * std::sqrt(ratio);
  }

  Scalar mean = 0;
  for (Scalar p : out.accuracies) mean += p;
  mean /= m;
  if (mean < inv_k) {
    out.flipped = true;
    for (Scalar& p : out.accuracies) p = 2 * inv_k - p;
  }
  const auto lo = static_cast<Scalar>(opts.floor);
  for (Scalar& p : out.accuracies) p = std::clamp(p, lo, Scalar(1) - lo);
  return out;
}

/// The confusion matrix of a one-coin worker.
template <typename Scalar>
ConfusionMatrix<Scalar> one_coin_confusion(Scalar accuracy, int num_classes) {
  ConfusionMatrix<Scalar> c = ConfusionMatrix<Scalar>::Constant(num_classes, num_classes,
                                                                (1 - accuracy) / (num_classes - 1));
  c.diagonal().setConstant(accuracy);
  return c;
}

template <typename Scalar>
struct OneCoinResult {
  std::vector<Scalar> accuracies;
  Posterior<Scalar> posterior;  // E-step of `accuracies`
  std::vector<Scalar> trace;    // marginal log-likelihood per round, initialization first
  int iteration = 0;
};

namespace detail {

template <typename Scalar>
Matrix<Scalar> one_coin_scores(const ObservedLabels& labels, const std::vector<Scalar>& accuracies) {
  const int k = labels.num_classes();
  Matrix<Scalar> scores = Matrix<Scalar>::Zero(labels.num_items(), k);
  for (const auto& e : labels.entries()) {
    const Scalar p = accuracies[e.worker];
    if (!(p > 0 && p < 1)) {
      throw Error(ErrorKind::ZeroProbability, "accuracy of worker " + std::to_string(e.worker) + " is 0 or 1");
    }
    const Scalar miss = std::log((1 - p) / (k - 1));
    scores.row(e.item).array() += miss;
    scores(e.item, e.label) += std::log(p) - miss;
  }
  return scores;
}

}  // namespace detail

/// Marginal log-likelihood of the one-coin model, same conventions as
/// log_marginal_likelihood.
template <typename Scalar>
Scalar one_coin_log_likelihood(const ObservedLabels& labels, const std::vector<Scalar>& accuracies) {
  return detail::likelihood_from_scores(labels, detail::one_coin_scores(labels, accuracies));
}

/// EM for the one-coin model. The M-step divides by the number of items the
/// worker labeled; workers with no labels keep their accuracy.
template <typename Scalar>
OneCoinResult<Scalar> run_onecoin_em(const ObservedLabels& labels, std::vector<Scalar> init, int rounds,
                                     const OneCoinOptions& opts = {}) {
  if (rounds < 1 && rounds != kUntilConverged) {
    throw Error(ErrorKind::InvalidConfig, "EM needs at least one round");
  }
  const bool until_converged = rounds == kUntilConverged;
  const int limit = until_converged ? kMaxConvergenceRounds : rounds;
  const auto lo = static_cast<Scalar>(opts.floor);

  OneCoinResult<Scalar> out;
  out.accuracies = std::move(init);
  auto scores = detail::one_coin_scores(labels, out.accuracies);
  out.posterior = detail::posterior_from_scores(scores);
  out.trace.push_back(detail::likelihood_from_scores(labels, scores));

  for (int r = 1; r <= limit; ++r) {
    std::vector<Scalar> hits(labels.num_workers(), Scalar(0));
    for (const auto& e : labels.entries()) hits[e.worker] += out.posterior.beliefs(e.item, e.label);
    for (int i = 0; i < labels.num_workers(); ++i) {
      if (labels.worker_count(i) == 0) continue;
      out.accuracies[i] = std::clamp(hits[i] / labels.worker_count(i), lo, Scalar(1) - lo);
    }
    scores = detail::one_coin_scores(labels, out.accuracies);
    out.posterior = detail::posterior_from_scores(scores);
    out.trace.push_back(detail::likelihood_from_scores(labels, scores));
    out.iteration = r;
    if (until_converged && std::abs(out.trace.back() - out.trace[out.trace.size() - 2]) < Scalar(1e-10)) break;
  }
  return out;
}

}  // namespace crowd
