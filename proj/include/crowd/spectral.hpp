#pragma once

// Stage 1 of the two-stage estimator: recover the aggregated confusion
// matrices of three worker groups and the class prior from second and
// third order moments (whitening + robust tensor power method), then plug
// them in to estimate every worker's confusion matrix.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "crowd/error.hpp"
#include "crowd/labels.hpp"
#include "crowd/model.hpp"
#include "crowd/tensor3.hpp"

namespace crowd {

/// Three disjoint non-empty worker groups covering all workers.
struct GroupPartition {
  std::array<std::vector<int>, 3> groups;
  std::vector<int> group_of;  // worker -> group index in {0,1,2}
};

/// Builds a partition from explicit groups, checking disjointness and cover.
inline GroupPartition make_partition(int num_workers, std::array<std::vector<int>, 3> groups) {
  GroupPartition p;
  p.group_of.assign(num_workers, -1);
  for (int g = 0; g < 3; ++g) {
    if (groups[g].empty()) throw Error(ErrorKind::InvalidConfig, "empty worker group");
    for (int i : groups[g]) {
      if (i < 0 || i >= num_workers || p.group_of[i] != -1) {
        throw Error(ErrorKind::InvalidConfig, "groups must be disjoint worker indices");
      }
      p.group_of[i] = g;
    }
  }
  if (std::find(p.group_of.begin(), p.group_of.end(), -1) != p.group_of.end()) {
    throw Error(ErrorKind::InvalidConfig, "groups must cover every worker");
  }
  for (auto& g : groups) std::sort(g.begin(), g.end());
  p.groups = std::move(groups);
  return p;
}

/// Random, even split of the workers into three groups (sizes differ by at
/// most one).
inline GroupPartition partition_workers(int num_workers, std::uint64_t seed) {
  if (num_workers < 3) {
    throw Error(ErrorKind::TooFewWorkers, "need at least 3 workers, got " + std::to_string(num_workers));
  }
  std::vector<int> order(num_workers);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::array<std::vector<int>, 3> groups;
  for (int r = 0; r < num_workers; ++r) groups[r % 3].push_back(order[r]);
  return make_partition(num_workers, std::move(groups));
}

/// Column j of views[g] is Z_gj, the average label indicator of group g on item j.
template <typename Scalar>
using GroupViews = std::array<Matrix<Scalar>, 3>;

template <typename Scalar = double>
GroupViews<Scalar> group_aggregate(const ObservedLabels& labels, const GroupPartition& partition) {
  GroupViews<Scalar> views;
  for (auto& v : views) v = Matrix<Scalar>::Zero(labels.num_classes(), labels.num_items());
  for (const auto& e : labels.entries()) {
    const int g = partition.group_of[e.worker];
    views[g](e.label, e.item) += Scalar(1);
  }
  for (int g = 0; g < 3; ++g) views[g] /= static_cast<Scalar>(partition.groups[g].size());
  return views;
}

/// A permutation (a, b, c) of the three groups; the moments built from it
/// identify group c.
struct ViewPermutation {
  int a, b, c;
};

/// The three permutations used to estimate groups 0, 1 and 2 in turn.
inline constexpr std::array<ViewPermutation, 3> kViewPermutations{{{1, 2, 0}, {2, 0, 1}, {0, 1, 2}}};

/// Pairwise and triple cross moments between the views of a permutation.
template <typename Scalar>
struct CrossMoments {
  Matrix<Scalar> s_ab, s_ba, s_cb, s_ca;  // s_xy = E[Z_x Z_y^T]
  Tensor3<Scalar> t_abc;                  // E[Z_a (x) Z_b (x) Z_c]
};

template <typename Scalar>
CrossMoments<Scalar> sample_cross_moments(const GroupViews<Scalar>& views, ViewPermutation perm) {
  const auto& za = views[perm.a];
  const auto& zb = views[perm.b];
  const auto& zc = views[perm.c];
  const auto n = static_cast<Scalar>(za.cols());
  const auto k = za.rows();
  CrossMoments<Scalar> out;
  out.s_ab = za * zb.transpose() / n;
  out.s_ba = out.s_ab.transpose();
  out.s_cb = zc * zb.transpose() / n;
  out.s_ca = zc * za.transpose() / n;
  out.t_abc = Tensor3<Scalar>(k);
  for (Eigen::Index j = 0; j < za.cols(); ++j) {
    out.t_abc.add_outer(Scalar(1) / n, za.col(j), zb.col(j), zc.col(j));
  }
  return out;
}

/// Symmetrized second and third moments of one permutation.
///
/// The modified views are linear in the raw ones: Z'_aj = a_transform * Z_aj
/// and Z'_bj = b_transform * Z_bj.
template <typename Scalar>
struct GroupMoments {
  Matrix<Scalar> a_transform;
  Matrix<Scalar> b_transform;
  Matrix<Scalar> m2;  // symmetrized
  Tensor3<Scalar> m3;
};

template <typename Scalar>
Scalar smallest_singular_value(const Matrix<Scalar>& m) {
  Eigen::JacobiSVD<Matrix<Scalar>> svd(m);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

template <typename Scalar>
GroupMoments<Scalar> symmetrize_views(const CrossMoments<Scalar>& cm, Scalar sigma_tol = Scalar(1e-8)) {
  for (const auto* s : {&cm.s_ab, &cm.s_ba}) {
    const Scalar sigma = smallest_singular_value(*s);
    if (!(sigma > sigma_tol)) {
      throw Error(ErrorKind::IllConditionedMoments,
                  "cross moment smallest singular value " + std::to_string(static_cast<double>(sigma)));
    }
  }
  GroupMoments<Scalar> out;
  out.a_transform = cm.s_cb * cm.s_ab.inverse();
  out.b_transform = cm.s_ca * cm.s_ba.inverse();
  const Matrix<Scalar> m2 = out.a_transform * cm.s_ab * out.b_transform.transpose();
  out.m2 = (m2 + m2.transpose()) / Scalar(2);
  const auto k = cm.s_ab.rows();
  out.m3 = cm.t_abc.multilinear(out.a_transform, out.b_transform, Matrix<Scalar>::Identity(k, k));
  return out;
}

/// Second and third moments of permutation perm from the group views.
/// Throws IllConditionedMoments when a cross moment is numerically singular.
template <typename Scalar>
GroupMoments<Scalar> empirical_moments(const GroupViews<Scalar>& views, ViewPermutation perm,
                                       Scalar sigma_tol = Scalar(1e-8)) {
  return symmetrize_views(sample_cross_moments(views, perm), sigma_tol);
}

/// Q with Q^T M2 Q = I, from the eigendecomposition of the symmetric M2.
template <typename Scalar>
Matrix<Scalar> whiten(const Matrix<Scalar>& m2, Scalar sigma_tol = Scalar(1e-8)) {
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(m2);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorKind::NotPositiveDefinite, "eigendecomposition failed");
  }
  const Scalar smallest = eig.eigenvalues().minCoeff();
  if (!(smallest > sigma_tol)) {
    throw Error(ErrorKind::NotPositiveDefinite,
                "second moment eigenvalue " + std::to_string(static_cast<double>(smallest)));
  }
  return eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal();
}

struct TensorPowerOptions {
  int restarts = 30;
  int iterations = 100;
  std::uint64_t seed = 0;
};

template <typename Scalar>
struct Eigenpair {
  Scalar eigenvalue;
  Vector<Scalar> vector;
};

template <typename Scalar>
struct TensorPowerResult {
  std::vector<Eigenpair<Scalar>> pairs;
  Tensor3<Scalar> residual;  // tensor left after all deflations
  bool converged = true;     // false when some polish run hit the iteration cap
};

namespace detail {

template <typename Scalar>
bool power_iterate(const Tensor3<Scalar>& t, Vector<Scalar>& theta, int iterations) {
  for (int it = 0; it < iterations; ++it) {
    Vector<Scalar> next = t.contract_pair(theta);
    const Scalar norm = next.norm();
    if (!(norm > Scalar(0))) return false;
    next /= norm;
    const Scalar overlap = next.dot(theta);
    theta = std::move(next);
    if (overlap >= Scalar(1) - Scalar(1e-10)) return true;
  }
  return false;
}

}  // namespace detail

/// Eigenpairs of a (nearly) orthogonally decomposable symmetric tensor by
/// power iteration with random restarts and deflation.
template <typename Scalar>
TensorPowerResult<Scalar> robust_tensor_power(Tensor3<Scalar> t, const TensorPowerOptions& opts) {
  const auto k = t.dim();
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal;
  TensorPowerResult<Scalar> out;
  for (Eigen::Index h = 0; h < k; ++h) {
    Vector<Scalar> best;
    Scalar best_value = -std::numeric_limits<Scalar>::infinity();
    for (int r = 0; r < opts.restarts; ++r) {
      Vector<Scalar> theta(k);
      for (Eigen::Index x = 0; x < k; ++x) theta(x) = static_cast<Scalar>(normal(rng));
      theta.normalize();
      detail::power_iterate(t, theta, opts.iterations);
      const Scalar value = t.cubic_form(theta);
      if (value > best_value) {
        best_value = value;
        best = theta;
      }
    }
    out.converged = detail::power_iterate(t, best, opts.iterations) && out.converged;
    const Scalar alpha = t.cubic_form(best);
    t.add_outer(-alpha, best, best, best);
    out.pairs.push_back({alpha, std::move(best)});
  }
  out.residual = std::move(t);
  return out;
}

/// One recovered (column, weight) pair, in arbitrary order.
template <typename Scalar>
struct RecoveredComponent {
  Vector<Scalar> column;
  Scalar weight;
};

/// Maps whitened eigenpairs back: weight = alpha^-2, column = Q^-T (alpha v).
template <typename Scalar>
std::vector<RecoveredComponent<Scalar>> unwhiten(const std::vector<Eigenpair<Scalar>>& pairs,
                                                 const Matrix<Scalar>& whitener) {
  const Matrix<Scalar> back = whitener.transpose().inverse();
  std::vector<RecoveredComponent<Scalar>> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back({back * (p.eigenvalue * p.vector), Scalar(1) / (p.eigenvalue * p.eigenvalue)});
  }
  return out;
}

/// Aggregated confusion estimate of one group with its class weights.
template <typename Scalar>
struct GroupEstimate {
  Matrix<Scalar> confusion;  // column l estimates the aggregated column of class l
  Vector<Scalar> weights;    // diagonal of the class-prior estimate
  std::vector<int> assignment;  // slot l <- component assignment[l]
};

/// Assigns component h to slot l when l is the coordinate of its largest
/// entry. Several candidates for a slot: uniform random choice; no candidate:
/// a uniform random pick among the components still unused. The result is a
/// bijection between components and slots.
template <typename Scalar>
GroupEstimate<Scalar> match_columns(const std::vector<RecoveredComponent<Scalar>>& comps,
                                    std::mt19937_64& rng) {
  const auto k = static_cast<int>(comps.size());
  std::vector<int> top(k);
  for (int h = 0; h < k; ++h) {
    Eigen::Index idx = 0;
    const auto& col = comps[h].column;
    for (Eigen::Index x = 1; x < col.size(); ++x) {
      if (col(x) > col(idx)) idx = x;
    }
    top[h] = static_cast<int>(idx);
  }
  std::vector<int> assignment(k, -1);
  std::vector<bool> used(k, false);
  auto pick = [&rng](const std::vector<int>& from) {
    std::uniform_int_distribution<std::size_t> d(0, from.size() - 1);
    return from[d(rng)];
  };
  for (int l = 0; l < k; ++l) {
    std::vector<int> candidates;
    for (int h = 0; h < k; ++h) {
      if (!used[h] && top[h] == l) candidates.push_back(h);
    }
    if (candidates.empty()) continue;
    const int h = candidates.size() == 1 ? candidates.front() : pick(candidates);
    assignment[l] = h;
    used[h] = true;
  }
  for (int l = 0; l < k; ++l) {
    if (assignment[l] != -1) continue;
    std::vector<int> leftover;
    for (int h = 0; h < k; ++h) {
      if (!used[h]) leftover.push_back(h);
    }
    const int h = leftover.size() == 1 ? leftover.front() : pick(leftover);
    assignment[l] = h;
    used[h] = true;
  }

  GroupEstimate<Scalar> est;
  est.confusion.resize(comps.front().column.size(), k);
  est.weights.resize(k);
  for (int l = 0; l < k; ++l) {
    est.confusion.col(l) = comps[assignment[l]].column;
    est.weights(l) = comps[assignment[l]].weight;
  }
  est.assignment = std::move(assignment);
  return est;
}

/// Whitening, tensor decomposition and column matching for one permutation's
/// moments. Returns the estimate and whether the power iterations converged.
template <typename Scalar>
std::pair<GroupEstimate<Scalar>, bool> decompose_moments(const GroupMoments<Scalar>& moments,
                                                         const TensorPowerOptions& power,
                                                         std::mt19937_64& match_rng,
                                                         Scalar sigma_tol = Scalar(1e-8)) {
  const Matrix<Scalar> q = whiten(moments.m2, sigma_tol);
  const Matrix<Scalar> qt = q.transpose();
  auto result = robust_tensor_power(moments.m3.multilinear(qt, qt, qt), power);
  auto est = match_columns(unwhiten(result.pairs, q), match_rng);
  return {std::move(est), result.converged};
}

/// Entrywise mean of the three weight estimates, floored at threshold and
/// renormalized.
template <typename Scalar>
ClassPrior<Scalar> average_prior(const std::array<Vector<Scalar>, 3>& weights, Scalar threshold) {
  Vector<Scalar> w = (weights[0] + weights[1] + weights[2]) / Scalar(3);
  w = w.cwiseMax(threshold);
  return w / w.sum();
}

/// Plug-in estimate of one worker's confusion matrix from its cross moment
/// with another group, E[z_i Z_a^T], which equals pi_i C_i W C_a^T:
/// multiply by (W C_a^T)^-1, floor entries at threshold, normalize columns.
template <typename Scalar>
ConfusionMatrix<Scalar> recover_confusion(const Matrix<Scalar>& cross, const ClassPrior<Scalar>& prior,
                                          const Matrix<Scalar>& group_confusion, Scalar threshold,
                                          Scalar sigma_tol = Scalar(1e-8)) {
  const Matrix<Scalar> base = prior.asDiagonal() * group_confusion.transpose();
  const Scalar sigma = smallest_singular_value(base);
  if (!(sigma > sigma_tol)) {
    throw Error(ErrorKind::IllConditionedMoments,
                "prior-weighted group confusion singular value " + std::to_string(static_cast<double>(sigma)));
  }
  return clamp_and_normalize<Scalar>(cross * base.inverse(), threshold);
}

/// The group whose estimate is paired with workers of group g.
inline int reference_group(int g) { return (g + 1) % 3; }

template <typename Scalar>
ConfusionSet<Scalar> recover_worker_confusions(const ObservedLabels& labels, const GroupPartition& partition,
                                               const GroupViews<Scalar>& views,
                                               const std::array<GroupEstimate<Scalar>, 3>& groups,
                                               const ClassPrior<Scalar>& prior, Scalar threshold,
                                               Scalar sigma_tol = Scalar(1e-8)) {
  const int k = labels.num_classes();
  const auto n = static_cast<Scalar>(labels.num_items());
  std::vector<Matrix<Scalar>> cross(labels.num_workers(), Matrix<Scalar>::Zero(k, k));
  for (const auto& e : labels.entries()) {
    const int a = reference_group(partition.group_of[e.worker]);
    cross[e.worker].row(e.label) += views[a].col(e.item).transpose();
  }
  ConfusionSet<Scalar> out;
  out.reserve(labels.num_workers());
  for (int i = 0; i < labels.num_workers(); ++i) {
    const int a = reference_group(partition.group_of[i]);
    out.push_back(recover_confusion<Scalar>(cross[i] / n, prior, groups[a].confusion, threshold, sigma_tol));
  }
  return out;
}

struct SpectralOptions {
  std::uint64_t seed = 0;  // partition, restarts and tie breaks derive from it
  TensorPowerOptions power;
  double threshold = 1e-6;
  double sigma_tol = 1e-8;
};

template <typename Scalar>
struct SpectralResult {
  GroupPartition partition;
  std::array<GroupEstimate<Scalar>, 3> groups;  // indexed by group
  ClassPrior<Scalar> prior;
  ConfusionSet<Scalar> confusions;
  bool converged = true;
};

/// Full first stage on observed labels. Throws IllConditionedMoments or
/// NotPositiveDefinite when the moments cannot be inverted.
template <typename Scalar = double>
SpectralResult<Scalar> spectral_init(const ObservedLabels& labels, const SpectralOptions& opts = {}) {
  SpectralResult<Scalar> out;
  out.partition = partition_workers(labels.num_workers(), opts.seed);
  const auto views = group_aggregate<Scalar>(labels, out.partition);
  const auto tol = static_cast<Scalar>(opts.sigma_tol);
  std::mt19937_64 match_rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
  std::array<Vector<Scalar>, 3> weights;
  for (std::size_t p = 0; p < kViewPermutations.size(); ++p) {
    const auto perm = kViewPermutations[p];
    TensorPowerOptions power = opts.power;
    power.seed = opts.power.seed + opts.seed * 3 + p;
    auto [est, converged] = decompose_moments(empirical_moments(views, perm, tol), power, match_rng, tol);
    out.converged = out.converged && converged;
    weights[perm.c] = est.weights;
    out.groups[perm.c] = std::move(est);
  }
  const auto threshold = static_cast<Scalar>(opts.threshold);
  out.prior = average_prior(weights, threshold);
  out.confusions = recover_worker_confusions(labels, out.partition, views, out.groups, out.prior, threshold, tol);
  return out;
}

}  // namespace crowd
