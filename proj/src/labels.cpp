#include "crowd/labels.hpp"

#include <algorithm>
#include <string>
#include <unordered_set>

#include "crowd/error.hpp"

namespace crowd {

namespace {

std::string where(const LabelEntry& e) {
  return "(worker " + std::to_string(e.worker) + ", item " + std::to_string(e.item) +
         ", label " + std::to_string(e.label) + ")";
}

}  // namespace

void validate(int num_workers, int num_items, int num_classes,
              std::span<const LabelEntry> entries) {
  if (num_workers < 1 || num_items < 1) {
    throw Error(ErrorKind::InvalidConfig, "need at least one worker and one item");
  }
  if (num_classes < 2) {
    throw Error(ErrorKind::InvalidConfig, "need at least two classes");
  }
  if (entries.empty()) {
    throw Error(ErrorKind::EmptyDataset, "no labels");
  }
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(entries.size());
  for (const auto& e : entries) {
    if (e.worker < 0 || e.worker >= num_workers || e.item < 0 || e.item >= num_items ||
        e.label < 0 || e.label >= num_classes) {
      throw Error(ErrorKind::LabelOutOfRange, where(e));
    }
    const auto key = (static_cast<std::uint64_t>(e.worker) << 32) | static_cast<std::uint32_t>(e.item);
    if (!seen.insert(key).second) {
      throw Error(ErrorKind::DuplicateLabel, where(e));
    }
  }
}

ObservedLabels ObservedLabels::create(int num_workers, int num_items, int num_classes,
                                      std::vector<LabelEntry> entries) {
  validate(num_workers, num_items, num_classes, entries);
  std::sort(entries.begin(), entries.end(), [](const LabelEntry& a, const LabelEntry& b) {
    return a.item != b.item ? a.item < b.item : a.worker < b.worker;
  });

  ObservedLabels out;
  out.num_workers_ = num_workers;
  out.num_items_ = num_items;
  out.num_classes_ = num_classes;
  out.item_offsets_.assign(num_items + 1, 0);
  out.worker_counts_.assign(num_workers, 0);
  for (const auto& e : entries) {
    ++out.item_offsets_[e.item + 1];
    ++out.worker_counts_[e.worker];
  }
  for (int j = 0; j < num_items; ++j) out.item_offsets_[j + 1] += out.item_offsets_[j];
  out.entries_ = std::move(entries);
  return out;
}

int ObservedLabels::label(int worker, int item) const noexcept {
  const auto row = item_entries(item);
  const auto it = std::lower_bound(row.begin(), row.end(), worker,
                                   [](const LabelEntry& e, int w) { return e.worker < w; });
  return (it != row.end() && it->worker == worker) ? it->label : -1;
}

Eigen::MatrixXd worker_indicators(const ObservedLabels& labels, int worker) {
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(labels.num_classes(), labels.num_items());
  for (const auto& e : labels.entries()) {
    if (e.worker == worker) z(e.label, e.item) = 1.0;
  }
  return z;
}

ObservedLabels from_indicators(const std::vector<Eigen::MatrixXd>& indicators) {
  if (indicators.empty()) throw Error(ErrorKind::EmptyDataset, "no workers");
  const auto k = static_cast<int>(indicators.front().rows());
  const auto n = static_cast<int>(indicators.front().cols());
  std::vector<LabelEntry> entries;
  for (int i = 0; i < static_cast<int>(indicators.size()); ++i) {
    const auto& z = indicators[i];
    if (z.rows() != k || z.cols() != n) {
      throw Error(ErrorKind::InvalidConfig, "indicator shapes differ");
    }
    for (int j = 0; j < n; ++j) {
      const double total = z.col(j).sum();
      if (total == 0.0 && z.col(j).cwiseAbs().maxCoeff() == 0.0) continue;
      Eigen::Index c = 0;
      z.col(j).maxCoeff(&c);
      if (total != 1.0 || z(c, j) != 1.0) {
        throw Error(ErrorKind::LabelOutOfRange, "indicator column is not a basis vector");
      }
      entries.push_back({i, j, static_cast<int>(c)});
    }
  }
  return ObservedLabels::create(static_cast<int>(indicators.size()), n, k, std::move(entries));
}

std::vector<double> estimate_sparsity(const ObservedLabels& labels) {
  std::vector<double> pi(labels.num_workers());
  for (int i = 0; i < labels.num_workers(); ++i) {
    pi[i] = static_cast<double>(labels.worker_count(i)) / labels.num_items();
  }
  return pi;
}

}  // namespace crowd
