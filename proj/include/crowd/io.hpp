#pragma once

// Text formats. Every file is UTF-8 with one comma-separated record per
// line; '#' starts a comment line and blank lines are skipped.
//
//   labels       worker_id,item_id,label
//   truth        item_id,label
//   predictions  item_id,label
//   confusions   worker_id,true_label,reported_label,probability
//
// Ids are positive integers and labels run from 1 to k. Ids are densified
// to contiguous 0-based indices (in ascending id order) on read, and mapped
// back on write.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <vector>

#include "crowd/labels.hpp"
#include "crowd/model.hpp"

namespace crowd {

using ExternalId = std::int64_t;

struct LabelFile {
  ObservedLabels labels;
  std::vector<ExternalId> worker_ids;  // index -> external id
  std::vector<ExternalId> item_ids;
};

/// Reads labels. num_classes = 0 infers k as the largest label seen (at
/// least 2). Throws ParseError (with line number), DuplicateLabel or
/// LabelOutOfRange.
LabelFile read_labels(std::istream& in, int num_classes);
LabelFile read_labels(const std::filesystem::path& path, int num_classes);

/// Reads a (possibly partial) item -> 0-based label map.
std::map<ExternalId, int> read_truth(std::istream& in, int num_classes);
std::map<ExternalId, int> read_truth(const std::filesystem::path& path, int num_classes);

/// Truth aligned to the densified item indices of `file`, -1 where unknown.
std::vector<int> align_truth(const LabelFile& file, const std::map<ExternalId, int>& truth);

void write_labels(std::ostream& out, const LabelFile& file);
void write_item_labels(std::ostream& out, const std::vector<ExternalId>& item_ids, const std::vector<int>& labels);
void write_confusions(std::ostream& out, const std::vector<ExternalId>& worker_ids, const ConfusionSet<double>& confusions);

/// Identity id maps: worker i -> i + 1, item j -> j + 1.
LabelFile with_sequential_ids(ObservedLabels labels);

/// Writes through a temporary file in the same directory, then renames.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace crowd
