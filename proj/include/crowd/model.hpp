#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "crowd/error.hpp"
#include "crowd/labels.hpp"

namespace crowd {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// k x k, column-stochastic. Entry (c, l) is the probability that a worker
/// reports class c for an item whose true class is l.
template <typename Scalar>
using ConfusionMatrix = Matrix<Scalar>;

template <typename Scalar>
using ConfusionSet = std::vector<ConfusionMatrix<Scalar>>;

/// Length-k class distribution, strictly positive, summing to one.
template <typename Scalar>
using ClassPrior = Vector<Scalar>;

/// Per-item label beliefs (n x k, rows sum to one) and hard predictions.
template <typename Scalar>
struct Posterior {
  Matrix<Scalar> beliefs;
  std::vector<int> predictions;
};

/// Generating parameters of a dataset; used by synthgen and diagnostics.
struct GroundTruthModel {
  ClassPrior<double> prior;
  ConfusionSet<double> confusions;
  std::vector<double> sparsity;
  std::vector<int> true_labels;
};

template <typename Derived>
bool is_column_stochastic(const Eigen::MatrixBase<Derived>& c, double tol = 1e-9) {
  if ((c.array() < 0).any() || (c.array() > 1).any()) return false;
  return ((c.colwise().sum().array() - 1).abs() <= tol).all();
}

template <typename Derived>
bool is_probability_vector(const Eigen::MatrixBase<Derived>& w, double tol = 1e-9) {
  return (w.array() > 0).all() && std::abs(w.sum() - 1) <= tol;
}

/// Rescales every column to sum to one.
template <typename Scalar>
Matrix<Scalar> normalize_columns(Matrix<Scalar> c) {
  for (Eigen::Index l = 0; l < c.cols(); ++l) c.col(l) /= c.col(l).sum();
  return c;
}

/// Raises entries below floor to floor, then normalizes columns.
template <typename Scalar>
Matrix<Scalar> clamp_and_normalize(Matrix<Scalar> c, Scalar floor) {
  return normalize_columns<Scalar>(c.cwiseMax(floor));
}

/// First index attaining the maximum of each row.
template <typename Derived>
std::vector<int> argmax_rows(const Eigen::MatrixBase<Derived>& beliefs) {
  std::vector<int> out(beliefs.rows());
  for (Eigen::Index j = 0; j < beliefs.rows(); ++j) {
    Eigen::Index best = 0;
    for (Eigen::Index l = 1; l < beliefs.cols(); ++l) {
      if (beliefs(j, l) > beliefs(j, best)) best = l;
    }
    out[j] = static_cast<int>(best);
  }
  return out;
}

/// KL(p || q) = sum_c p_c log(p_c / q_c), natural log.
template <typename Scalar, typename DerivedP, typename DerivedQ>
Scalar kl_divergence(const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedQ>& q) {
  Scalar total = 0;
  for (Eigen::Index c = 0; c < p.size(); ++c) {
    if (p(c) > 0) total += p(c) * std::log(p(c) / q(c));
  }
  return total;
}

/// Minimum over ordered class pairs l != l' of (1/m) sum_i pi_i KL(mu_il, mu_il').
/// Measures how well the crowd as a whole separates classes.
inline double mean_kl_separation(const GroundTruthModel& model) {
  const auto m = model.confusions.size();
  if (m == 0) throw Error(ErrorKind::InvalidConfig, "no workers");
  const auto k = model.confusions.front().cols();
  for (const auto& c : model.confusions) {
    if ((c.array() <= 0).any()) throw Error(ErrorKind::ZeroEntry, "confusion entry is zero");
  }
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index l = 0; l < k; ++l) {
    for (Eigen::Index lp = 0; lp < k; ++lp) {
      if (l == lp) continue;
      double sum = 0;
      for (std::size_t i = 0; i < m; ++i) {
        const auto& c = model.confusions[i];
        sum += model.sparsity[i] * kl_divergence<double>(c.col(l), c.col(lp));
      }
      best = std::min(best, sum / static_cast<double>(m));
    }
  }
  return best;
}

/// Replaces each observed label, independently with probability k*rho, by a
/// uniform draw from the k classes. Absent entries stay absent. Entries are
/// visited item-major, worker-minor; deterministic given seed.
ObservedLabels inject_label_noise(const ObservedLabels& labels, double rho, std::uint64_t seed);

}  // namespace crowd
