#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "locml/rng.hpp"

namespace locml {

enum class LabelKind { classification, regression };

/// Dense labeled point collection. Values are row-major doubles
/// (n_points x n_features). Classification labels are dense class ids in
/// [0, n_classes); the original label values are kept in `class_values`
/// (indexed by class id, first-appearance order) for reporting.
///
/// Immutable after construction by convention; safe to share across threads.
struct Dataset {
  std::size_t n_points = 0;
  std::size_t n_features = 0;
  LabelKind label_kind = LabelKind::classification;
  std::vector<double> values;
  std::vector<double> labels;
  std::vector<double> class_values;

  static Dataset classification(std::size_t n_features, std::vector<double> values,
                                std::vector<int> class_ids);
  static Dataset regression(std::size_t n_features, std::vector<double> values,
                            std::vector<double> targets);

  std::span<const double> point(std::size_t i) const {
    return {values.data() + i * n_features, n_features};
  }
  int class_id(std::size_t i) const { return static_cast<int>(labels[i]); }
  double target(std::size_t i) const { return labels[i]; }
  std::size_t n_classes() const { return class_values.size(); }

  /// Checks the structural invariants; throws std::invalid_argument on
  /// violation.
  void validate() const;
};

/// Dataset restricted to `indices` (duplicates allowed, e.g. bootstrap
/// samples). Label metadata is preserved.
Dataset subset(const Dataset& ds, std::span<const std::size_t> indices);

/// Loads a CSV file of decimal-point doubles. `label_column` selects the
/// label; the remaining columns become features in file order.
/// Classification labels are re-encoded to dense ids preserving
/// first-appearance order.
Dataset load_csv(const std::string& path, std::size_t label_column, LabelKind kind,
                 bool has_header = false);

/// Writes the dataset in the same CSV dialect, label last. Classification
/// rows carry the original label value, not the dense id.
void save_csv(const Dataset& ds, const std::string& path, bool header = false);

/// Deterministic Gaussian blobs, one per class, class-major point order.
/// `centers` must contain one center of length n_features per class.
Dataset generate_blobs(std::size_t n_per_class, std::size_t n_classes,
                       std::size_t n_features,
                       const std::vector<std::vector<double>>& centers, double sigma,
                       std::uint64_t seed);

/// k roughly equal folds; every point belongs to exactly one fold and fold
/// sizes differ by at most 1. Assignment is uniform (unstratified).
struct FoldPartition {
  std::size_t k = 0;
  std::vector<std::size_t> assignment;

  std::vector<std::size_t> fold_indices(std::size_t fold) const;
  std::vector<std::size_t> complement_indices(std::size_t fold) const;
  std::vector<std::size_t> fold_sizes() const;
};

FoldPartition partition_folds(std::size_t n_points, std::size_t k, std::uint64_t seed);

/// n_points indices drawn uniformly with replacement.
std::vector<std::size_t> bootstrap_indices(std::size_t n_points, std::uint64_t seed);

struct MiniBatch {
  std::size_t epoch = 0;
  std::span<const std::size_t> indices;
};

/// Deterministic mini-batch stream: each epoch draws a fresh permutation
/// (or keeps the natural order when shuffle is off) and slices it into
/// batches of `batch_size`; the final batch of an epoch may be smaller.
/// Single-consumer iterator, not shareable.
class BatchStream {
 public:
  BatchStream(std::size_t n_points, std::size_t batch_size, std::size_t epochs,
              std::uint64_t seed, bool shuffle = true);

  /// Next batch, or nullopt when all epochs are exhausted. The returned
  /// span stays valid until the next call.
  std::optional<MiniBatch> next();

  std::size_t batches_per_epoch() const {
    return (n_points_ + batch_size_ - 1) / batch_size_;
  }

 private:
  std::size_t n_points_;
  std::size_t batch_size_;
  std::size_t epochs_;
  bool shuffle_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t epoch_ = 0;
  std::size_t cursor_ = 0;
  bool started_ = false;
};

}  // namespace locml
