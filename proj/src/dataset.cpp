#include "locml/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace locml {

Dataset Dataset::classification(std::size_t n_features, std::vector<double> values,
                                std::vector<int> class_ids) {
  Dataset ds;
  ds.n_features = n_features;
  ds.n_points = class_ids.size();
  ds.label_kind = LabelKind::classification;
  ds.values = std::move(values);
  ds.labels.reserve(class_ids.size());
  int max_id = -1;
  for (int c : class_ids) {
    if (c < 0) throw std::invalid_argument("class id must be non-negative");
    max_id = std::max(max_id, c);
    ds.labels.push_back(static_cast<double>(c));
  }
  for (int c = 0; c <= max_id; ++c) ds.class_values.push_back(static_cast<double>(c));
  ds.validate();
  return ds;
}

Dataset Dataset::regression(std::size_t n_features, std::vector<double> values,
                            std::vector<double> targets) {
  Dataset ds;
  ds.n_features = n_features;
  ds.n_points = targets.size();
  ds.label_kind = LabelKind::regression;
  ds.values = std::move(values);
  ds.labels = std::move(targets);
  ds.validate();
  return ds;
}

void Dataset::validate() const {
  if (values.size() != n_points * n_features)
    throw std::invalid_argument("dataset: values size does not match n_points * n_features");
  if (labels.size() != n_points)
    throw std::invalid_argument("dataset: labels size does not match n_points");
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("dataset: non-finite feature value");
  if (label_kind == LabelKind::classification) {
    for (double l : labels) {
      const int c = static_cast<int>(l);
      if (c < 0 || static_cast<std::size_t>(c) >= n_classes())
        throw std::invalid_argument("dataset: class id out of range");
    }
  }
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
  Dataset out;
  out.n_features = ds.n_features;
  out.n_points = indices.size();
  out.label_kind = ds.label_kind;
  out.class_values = ds.class_values;
  out.values.reserve(indices.size() * ds.n_features);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= ds.n_points) throw std::out_of_range("subset: point index out of range");
    const auto p = ds.point(i);
    out.values.insert(out.values.end(), p.begin(), p.end());
    out.labels.push_back(ds.labels[i]);
  }
  return out;
}

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end != begin && (*(end - 1) == ' ' || *(end - 1) == '\t' || *(end - 1) == '\r')) --end;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw std::runtime_error("csv parse error at row " + std::to_string(row) + ", column " +
                             std::to_string(col) + ": cannot parse '" + cell + "' as a number");
  }
  return value;
}

}  // namespace

Dataset load_csv(const std::string& path, std::size_t label_column, LabelKind kind,
                 bool has_header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);

  std::vector<double> values;
  std::vector<double> raw_labels;
  std::size_t n_columns = 0;
  std::size_t data_row = 0;
  std::string line;
  std::size_t file_row = 0;
  bool skipped_header = false;
  while (std::getline(in, line)) {
    ++file_row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (has_header && !skipped_header) {
      skipped_header = true;
      continue;
    }
    const auto cells = split_row(line);
    if (data_row == 0) {
      n_columns = cells.size();
      if (n_columns < 2)
        throw std::runtime_error("csv must have at least one feature column and one label column");
      if (label_column >= n_columns)
        throw std::runtime_error("label column " + std::to_string(label_column) +
                                 " out of range for " + std::to_string(n_columns) + " columns");
    } else if (cells.size() != n_columns) {
      throw std::runtime_error("ragged csv: row " + std::to_string(file_row) + " has " +
                               std::to_string(cells.size()) + " columns, expected " +
                               std::to_string(n_columns));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double v = parse_cell(cells[c], file_row, c);
      if (c == label_column)
        raw_labels.push_back(v);
      else
        values.push_back(v);
    }
    ++data_row;
  }
  if (data_row == 0) throw std::runtime_error("empty input: " + path);

  Dataset ds;
  ds.n_points = data_row;
  ds.n_features = n_columns - 1;
  ds.label_kind = kind;
  ds.values = std::move(values);
  if (kind == LabelKind::regression) {
    ds.labels = std::move(raw_labels);
  } else {
    std::unordered_map<double, int> dense;
    for (double raw : raw_labels) {
      auto [it, inserted] = dense.try_emplace(raw, static_cast<int>(ds.class_values.size()));
      if (inserted) ds.class_values.push_back(raw);
      ds.labels.push_back(static_cast<double>(it->second));
    }
  }
  ds.validate();
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path, bool header) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  char buf[64];
  if (header) {
    for (std::size_t f = 0; f < ds.n_features; ++f) out << "f" << f << ",";
    out << "label\n";
  }
  for (std::size_t i = 0; i < ds.n_points; ++i) {
    const auto p = ds.point(i);
    for (double v : p) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << buf << ",";
    }
    const double label = ds.label_kind == LabelKind::classification
                             ? ds.class_values[static_cast<std::size_t>(ds.class_id(i))]
                             : ds.labels[i];
    std::snprintf(buf, sizeof(buf), "%.17g", label);
    out << buf << "\n";
  }
  if (!out) throw std::runtime_error("write failure: " + path);
}

Dataset generate_blobs(std::size_t n_per_class, std::size_t n_classes,
                       std::size_t n_features,
                       const std::vector<std::vector<double>>& centers, double sigma,
                       std::uint64_t seed) {
  if (sigma <= 0.0) throw std::invalid_argument("generate_blobs: sigma must be positive");
  if (n_per_class < 1) throw std::invalid_argument("generate_blobs: n_per_class must be >= 1");
  if (centers.size() != n_classes)
    throw std::invalid_argument("generate_blobs: need exactly one center per class");
  for (const auto& c : centers)
    if (c.size() != n_features)
      throw std::invalid_argument("generate_blobs: center length does not match n_features");

  Rng rng(seed);
  std::vector<double> values;
  values.reserve(n_per_class * n_classes * n_features);
  std::vector<int> ids;
  ids.reserve(n_per_class * n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      for (std::size_t f = 0; f < n_features; ++f)
        values.push_back(centers[c][f] + sigma * rng.normal());
      ids.push_back(static_cast<int>(c));
    }
  }
  return Dataset::classification(n_features, std::move(values), std::move(ids));
}

std::vector<std::size_t> FoldPartition::fold_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPartition::complement_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] != fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPartition::fold_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t f : assignment) ++sizes[f];
  return sizes;
}

FoldPartition partition_folds(std::size_t n_points, std::size_t k, std::uint64_t seed) {
  if (k < 2 || k > n_points)
    throw std::invalid_argument("partition_folds: need 2 <= k <= n_points");
  std::vector<std::size_t> order(n_points);
  for (std::size_t i = 0; i < n_points; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  FoldPartition part;
  part.k = k;
  part.assignment.resize(n_points);
  const std::size_t base = n_points / k;
  const std::size_t rem = n_points % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < rem ? 1 : 0);
    for (std::size_t j = 0; j < size; ++j) part.assignment[order[pos++]] = f;
  }
  return part;
}

std::vector<std::size_t> bootstrap_indices(std::size_t n_points, std::uint64_t seed) {
  if (n_points == 0) throw std::invalid_argument("bootstrap_indices: empty dataset");
  Rng rng(seed);
  std::vector<std::size_t> out(n_points);
  for (auto& v : out) v = static_cast<std::size_t>(rng.below(n_points));
  return out;
}

BatchStream::BatchStream(std::size_t n_points, std::size_t batch_size, std::size_t epochs,
                         std::uint64_t seed, bool shuffle)
    : n_points_(n_points),
      batch_size_(batch_size),
      epochs_(epochs),
      shuffle_(shuffle),
      rng_(seed) {
  if (batch_size_ == 0 || batch_size_ > n_points_)
    throw std::invalid_argument("batch size must satisfy 1 <= n <= n_points");
  order_.resize(n_points_);
}

std::optional<MiniBatch> BatchStream::next() {
  if (!started_ || cursor_ >= n_points_) {
    if (started_) ++epoch_;
    if (epoch_ >= epochs_) return std::nullopt;
    for (std::size_t i = 0; i < n_points_; ++i) order_[i] = i;
    if (shuffle_) rng_.shuffle(order_);
    cursor_ = 0;
    started_ = true;
  }
  const std::size_t begin = cursor_;
  const std::size_t end = std::min(begin + batch_size_, n_points_);
  cursor_ = end;
  return MiniBatch{epoch_, {order_.data() + begin, end - begin}};
}

}  // namespace locml
