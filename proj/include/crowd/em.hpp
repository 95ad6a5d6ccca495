#pragma once

// Stage 2: EM on the Dawid-Skene marginal likelihood under a uniform class
// prior. All products over workers are accumulated as log sums.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "crowd/baselines.hpp"
#include "crowd/error.hpp"
#include "crowd/labels.hpp"
#include "crowd/model.hpp"

namespace crowd {

namespace detail {

template <typename Scalar>
std::vector<Matrix<Scalar>> log_confusions(const ConfusionSet<Scalar>& confusions) {
  std::vector<Matrix<Scalar>> out;
  out.reserve(confusions.size());
  for (const auto& c : confusions) out.push_back(c.array().log().matrix());
  return out;
}

/// Row j holds sum over workers of log mu_{i, l, z_ij} for every class l.
template <typename Scalar>
Matrix<Scalar> item_log_scores(const ObservedLabels& labels, const ConfusionSet<Scalar>& confusions) {
  const auto logs = log_confusions(confusions);
  Matrix<Scalar> scores = Matrix<Scalar>::Zero(labels.num_items(), labels.num_classes());
  for (const auto& e : labels.entries()) {
    scores.row(e.item) += logs[e.worker].row(e.label);
  }
  return scores;
}

template <typename Scalar>
Scalar row_max_or_throw(const Matrix<Scalar>& scores, Eigen::Index j) {
  const Scalar top = scores.row(j).maxCoeff();
  if (!(top > -std::numeric_limits<Scalar>::infinity())) {
    throw Error(ErrorKind::ZeroProbability, "item " + std::to_string(j) + " has zero likelihood under every class");
  }
  return top;
}

template <typename Scalar>
Posterior<Scalar> posterior_from_scores(const Matrix<Scalar>& scores) {
  Posterior<Scalar> out;
  out.beliefs.resize(scores.rows(), scores.cols());
  for (Eigen::Index j = 0; j < scores.rows(); ++j) {
    const Scalar top = row_max_or_throw(scores, j);
    auto row = out.beliefs.row(j);
    row = (scores.row(j).array() - top).exp().matrix();
    row /= row.sum();
  }
  out.predictions = argmax_rows(out.beliefs);
  return out;
}

template <typename Scalar>
Scalar likelihood_from_scores(const ObservedLabels& labels, const Matrix<Scalar>& scores) {
  Scalar total = 0;
  for (Eigen::Index j = 0; j < scores.rows(); ++j) {
    if (labels.item_entries(static_cast<int>(j)).empty()) continue;
    const Scalar top = row_max_or_throw(scores, j);
    total += top + std::log((scores.row(j).array() - top).exp().sum());
  }
  return total;
}

}  // namespace detail

/// Posterior over true labels given confusion estimates (uniform prior).
/// Items without labels get the uniform row. A zero confusion entry rules
/// out the classes it touches; ZeroProbability is thrown only when it rules
/// out every class of an item.
template <typename Scalar>
Posterior<Scalar> e_step(const ObservedLabels& labels, const ConfusionSet<Scalar>& confusions) {
  return detail::posterior_from_scores(detail::item_log_scores(labels, confusions));
}

/// Confusion estimates maximizing the expected complete log-likelihood:
/// posterior-weighted label frequencies. A column with no posterior mass is
/// set to uniform.
template <typename Scalar>
ConfusionSet<Scalar> m_step(const ObservedLabels& labels, const Posterior<Scalar>& posterior) {
  const int k = labels.num_classes();
  ConfusionSet<Scalar> counts(labels.num_workers(), Matrix<Scalar>::Zero(k, k));
  for (const auto& e : labels.entries()) {
    counts[e.worker].row(e.label) += posterior.beliefs.row(e.item);
  }
  for (auto& c : counts) {
    for (int l = 0; l < k; ++l) {
      const Scalar mass = c.col(l).sum();
      if (mass > Scalar(0)) {
        c.col(l) /= mass;
      } else {
        c.col(l).setConstant(Scalar(1) / k);
      }
    }
  }
  return counts;
}

/// Marginal log-likelihood sum_j log sum_l prod_i mu_{i,l,z_ij}, natural log.
/// The uniform prior constant is dropped and unlabeled items contribute 0.
template <typename Scalar>
Scalar log_marginal_likelihood(const ObservedLabels& labels, const ConfusionSet<Scalar>& confusions) {
  return detail::likelihood_from_scores(labels, detail::item_log_scores(labels, confusions));
}

template <typename Scalar>
struct EmState {
  ConfusionSet<Scalar> confusions;
  Posterior<Scalar> posterior;  // E-step of `confusions`
  Scalar log_marginal = 0;
  int iteration = 0;
  std::vector<Scalar> trace;  // log_marginal at iteration 0, 1, ...
};

/// Pass as `rounds` to iterate until |delta log-likelihood| < 1e-10 or
/// kMaxConvergenceRounds rounds.
inline constexpr int kUntilConverged = -1;
inline constexpr int kMaxConvergenceRounds = 500;

template <typename Scalar>
using EmObserver = std::function<void(const EmState<Scalar>&)>;

/// Alternates E and M steps starting from init. After each round the state
/// holds the new confusions, their posterior and likelihood; the observer,
/// when given, sees iteration 0 (the initialization) and every round.
template <typename Scalar>
EmState<Scalar> run_em(const ObservedLabels& labels, ConfusionSet<Scalar> init, int rounds,
                       const EmObserver<Scalar>& observer = {}) {
  if (rounds < 1 && rounds != kUntilConverged) {
    throw Error(ErrorKind::InvalidConfig, "EM needs at least one round");
  }
  const bool until_converged = rounds == kUntilConverged;
  const int limit = until_converged ? kMaxConvergenceRounds : rounds;

  EmState<Scalar> state;
  state.confusions = std::move(init);
  auto scores = detail::item_log_scores(labels, state.confusions);
  state.posterior = detail::posterior_from_scores(scores);
  state.log_marginal = detail::likelihood_from_scores(labels, scores);
  state.trace.push_back(state.log_marginal);
  if (observer) observer(state);

  for (int r = 1; r <= limit; ++r) {
    state.confusions = m_step(labels, state.posterior);
    scores = detail::item_log_scores(labels, state.confusions);
    state.posterior = detail::posterior_from_scores(scores);
    const Scalar previous = state.log_marginal;
    state.log_marginal = detail::likelihood_from_scores(labels, scores);
    state.iteration = r;
    state.trace.push_back(state.log_marginal);
    if (observer) observer(state);
    if (until_converged && std::abs(state.log_marginal - previous) < Scalar(1e-10)) break;
  }
  return state;
}

/// Initialization from one M-step on the majority-vote posterior, floored at
/// threshold and renormalized.
template <typename Scalar = double>
ConfusionSet<Scalar> majority_vote_init(const ObservedLabels& labels, Scalar threshold = Scalar(1e-6),
                                        bool one_hot = false) {
  auto confusions = m_step(labels, majority_vote<Scalar>(labels, one_hot));
  for (auto& c : confusions) c = clamp_and_normalize<Scalar>(std::move(c), threshold);
  return confusions;
}

}  // namespace crowd
