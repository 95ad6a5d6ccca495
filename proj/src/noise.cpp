#include <random>

#include "crowd/model.hpp"

namespace crowd {

ObservedLabels inject_label_noise(const ObservedLabels& labels, double rho, std::uint64_t seed) {
  const int k = labels.num_classes();
  const double replace = k * rho;
  if (rho < 0 || replace > 1) {
    throw Error(ErrorKind::InvalidRho, "need 0 <= k*rho <= 1");
  }
  std::vector<LabelEntry> entries(labels.entries().begin(), labels.entries().end());
  if (replace == 0) {
    return ObservedLabels::create(labels.num_workers(), labels.num_items(), k, std::move(entries));
  }
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution flip(replace);
  std::uniform_int_distribution<int> draw(0, k - 1);
  for (auto& e : entries) {
    if (flip(rng)) e.label = draw(rng);
  }
  return ObservedLabels::create(labels.num_workers(), labels.num_items(), k, std::move(entries));
}

}  // namespace crowd
