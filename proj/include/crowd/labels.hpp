#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

namespace crowd {

/// One observed label. All indices are 0-based inside the library; the
/// file formats in io.hpp translate to and from 1-based external ids.
struct LabelEntry {
  int worker = 0;
  int item = 0;
  int label = 0;

  friend bool operator==(const LabelEntry&, const LabelEntry&) = default;
};

/// Checks the invariants of a raw label set: indices inside [0,m) x [0,n),
/// labels inside [0,k), at most one label per (worker, item), at least one
/// entry. Throws crowd::Error on the first violation.
void validate(int num_workers, int num_items, int num_classes,
              std::span<const LabelEntry> entries);

/// Sparse worker x item matrix of categorical labels. An absent pair is the
/// "unlabeled" state (the zero indicator vector). Immutable once built.
///
/// Entries are stored grouped by item (ascending), workers ascending within
/// an item, so per-item passes are contiguous.
class ObservedLabels {
 public:
  /// Empty placeholder; use create() for real data.
  ObservedLabels() = default;

  /// Validates and builds. Throws crowd::Error.
  static ObservedLabels create(int num_workers, int num_items, int num_classes,
                               std::vector<LabelEntry> entries);

  int num_workers() const noexcept { return num_workers_; }
  int num_items() const noexcept { return num_items_; }
  int num_classes() const noexcept { return num_classes_; }
  std::size_t size() const noexcept { return entries_.size(); }

  std::span<const LabelEntry> entries() const noexcept { return entries_; }

  /// Labels given to item j, ordered by worker.
  std::span<const LabelEntry> item_entries(int item) const noexcept {
    return std::span<const LabelEntry>(entries_).subspan(
        item_offsets_[item], item_offsets_[item + 1] - item_offsets_[item]);
  }

  /// Number of items worker i labeled.
  int worker_count(int worker) const noexcept { return worker_counts_[worker]; }

  /// Label worker i gave item j, or -1 when absent.
  int label(int worker, int item) const noexcept;

 private:
  int num_workers_ = 0;
  int num_items_ = 0;
  int num_classes_ = 0;
  std::vector<LabelEntry> entries_;
  std::vector<std::size_t> item_offsets_;
  std::vector<int> worker_counts_;
};

/// k x n indicator matrix of worker i: column j is e_c when the worker
/// labeled item j as c, and zero when the pair is absent.
Eigen::MatrixXd worker_indicators(const ObservedLabels& labels, int worker);

/// Inverse of worker_indicators over all workers. Each column must be zero
/// or a basis vector.
ObservedLabels from_indicators(const std::vector<Eigen::MatrixXd>& indicators);

/// Fraction of items each worker labeled (the sparsity estimate).
std::vector<double> estimate_sparsity(const ObservedLabels& labels);

}  // namespace crowd
