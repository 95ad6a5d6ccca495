#include "crowd/io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "crowd/error.hpp"

namespace crowd {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + what);
}

/// Splits a record into exactly N integer fields.
template <std::size_t N>
std::array<ExternalId, N> parse_record(std::string_view text, std::size_t line) {
  std::array<ExternalId, N> out{};
  std::size_t field = 0;
  while (true) {
    const auto comma = text.find(',');
    const auto token = trim(text.substr(0, comma));
    if (field == N) parse_error(line, "too many fields");
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, out[field]);
    if (token.empty() || ec != std::errc() || ptr != end) {
      parse_error(line, "field " + std::to_string(field + 1) + " is not an integer");
    }
    ++field;
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (field != N) parse_error(line, "expected " + std::to_string(N) + " fields");
  return out;
}

/// Calls fn(record, line_number) for every data line.
template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto text = trim(raw);
    if (text.empty() || text.front() == '#') continue;
    fn(text, line);
  }
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path.string());
  return in;
}

void check_label(ExternalId label, int num_classes, std::size_t line) {
  if (label < 1 || (num_classes > 0 && label > num_classes)) {
    throw Error(ErrorKind::LabelOutOfRange, "line " + std::to_string(line) + ": label " + std::to_string(label));
  }
}

}  // namespace

LabelFile read_labels(std::istream& in, int num_classes) {
  struct Raw {
    ExternalId worker, item;
    int label;
    std::size_t line;
  };
  std::vector<Raw> raw;
  std::map<ExternalId, int> workers;
  std::map<ExternalId, int> items;
  int max_label = 0;
  for_each_record(in, [&](std::string_view text, std::size_t line) {
    const auto [w, j, c] = parse_record<3>(text, line);
    if (w < 1 || j < 1) parse_error(line, "ids must be positive");
    check_label(c, num_classes, line);
    raw.push_back({w, j, static_cast<int>(c), line});
    workers.emplace(w, 0);
    items.emplace(j, 0);
    max_label = std::max(max_label, static_cast<int>(c));
  });
  if (raw.empty()) throw Error(ErrorKind::EmptyDataset, "no labels in input");

  LabelFile out;
  for (auto& [id, index] : workers) {
    index = static_cast<int>(out.worker_ids.size());
    out.worker_ids.push_back(id);
  }
  for (auto& [id, index] : items) {
    index = static_cast<int>(out.item_ids.size());
    out.item_ids.push_back(id);
  }
  const int k = num_classes > 0 ? num_classes : std::max(2, max_label);

  std::set<std::pair<int, int>> seen;
  std::vector<LabelEntry> entries;
  entries.reserve(raw.size());
  for (const auto& r : raw) {
    const LabelEntry e{workers[r.worker], items[r.item], r.label - 1};
    if (!seen.emplace(e.worker, e.item).second) {
      throw Error(ErrorKind::DuplicateLabel, "line " + std::to_string(r.line) + ": worker " +
                                                 std::to_string(r.worker) + " item " + std::to_string(r.item));
    }
    entries.push_back(e);
  }
  out.labels = ObservedLabels::create(static_cast<int>(out.worker_ids.size()), static_cast<int>(out.item_ids.size()),
                                      k, std::move(entries));
  return out;
}

LabelFile read_labels(const std::filesystem::path& path, int num_classes) {
  auto in = open(path);
  return read_labels(in, num_classes);
}

std::map<ExternalId, int> read_truth(std::istream& in, int num_classes) {
  std::map<ExternalId, int> out;
  for_each_record(in, [&](std::string_view text, std::size_t line) {
    const auto [j, c] = parse_record<2>(text, line);
    if (j < 1) parse_error(line, "ids must be positive");
    check_label(c, num_classes, line);
    if (!out.emplace(j, static_cast<int>(c) - 1).second) {
      parse_error(line, "duplicate item " + std::to_string(j));
    }
  });
  return out;
}

std::map<ExternalId, int> read_truth(const std::filesystem::path& path, int num_classes) {
  auto in = open(path);
  return read_truth(in, num_classes);
}

std::vector<int> align_truth(const LabelFile& file, const std::map<ExternalId, int>& truth) {
  std::vector<int> out(file.item_ids.size(), -1);
  for (std::size_t j = 0; j < file.item_ids.size(); ++j) {
    if (const auto it = truth.find(file.item_ids[j]); it != truth.end()) out[j] = it->second;
  }
  return out;
}

void write_labels(std::ostream& out, const LabelFile& file) {
  for (const auto& e : file.labels.entries()) {
    out << file.worker_ids[e.worker] << ',' << file.item_ids[e.item] << ',' << e.label + 1 << '\n';
  }
}

void write_item_labels(std::ostream& out, const std::vector<ExternalId>& item_ids, const std::vector<int>& labels) {
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j] < 0) continue;
    out << item_ids[j] << ',' << labels[j] + 1 << '\n';
  }
}

void write_confusions(std::ostream& out, const std::vector<ExternalId>& worker_ids,
                      const ConfusionSet<double>& confusions) {
  out << std::setprecision(17);
  for (std::size_t i = 0; i < confusions.size(); ++i) {
    const auto& c = confusions[i];
    for (Eigen::Index l = 0; l < c.cols(); ++l)
      for (Eigen::Index r = 0; r < c.rows(); ++r)
        out << worker_ids[i] << ',' << l + 1 << ',' << r + 1 << ',' << c(r, l) << '\n';
  }
}

LabelFile with_sequential_ids(ObservedLabels labels) {
  LabelFile out;
  out.labels = std::move(labels);
  for (int i = 0; i < out.labels.num_workers(); ++i) out.worker_ids.push_back(i + 1);
  for (int j = 0; j < out.labels.num_items(); ++j) out.item_ids.push_back(j + 1);
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::ParseError, "cannot write " + tmp.string());
    out << contents;
    if (!out) throw Error(ErrorKind::ParseError, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace crowd
