#pragma once

#include "crowd/labels.hpp"
#include "crowd/model.hpp"

namespace crowd {

/// Majority vote. Beliefs are vote shares per item (one-hot on the winner
/// when one_hot is set); items without votes get the uniform row. Ties go to
/// the lowest class index.
template <typename Scalar = double>
Posterior<Scalar> majority_vote(const ObservedLabels& labels, bool one_hot = false) {
  const int n = labels.num_items();
  const int k = labels.num_classes();
  Matrix<Scalar> votes = Matrix<Scalar>::Zero(n, k);
  for (const auto& e : labels.entries()) votes(e.item, e.label) += Scalar(1);

  Posterior<Scalar> out;
  out.predictions = argmax_rows(votes);
  out.beliefs.resize(n, k);
  for (int j = 0; j < n; ++j) {
    const Scalar total = votes.row(j).sum();
    if (total == Scalar(0)) {
      out.beliefs.row(j).setConstant(Scalar(1) / k);
    } else if (one_hot) {
      out.beliefs.row(j).setZero();
      out.beliefs(j, out.predictions[j]) = Scalar(1);
    } else {
      out.beliefs.row(j) = votes.row(j) / total;
    }
  }
  return out;
}

}  // namespace crowd
