#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "locml/dataset.hpp"
#include "locml/trace.hpp"

namespace locml {

/// Bounded list of the k nearest training points seen so far, sorted by
/// (squared distance, training index) ascending; the index breaks distance
/// ties, so the contents are input-order independent per query.
class NeighborList {
 public:
  explicit NeighborList(std::size_t k);
  void consider(double dist2, std::size_t index);
  const std::vector<std::pair<double, std::size_t>>& entries() const { return entries_; }

 private:
  std::size_t k_;
  std::vector<std::pair<double, std::size_t>> entries_;
};

struct KernelSpec {
  enum class Kind { gaussian };
  Kind kind = Kind::gaussian;
  double bandwidth = 1.0;

  void validate() const;
  /// Unnormalized kernel weight for a squared distance; the normalizing
  /// constant cancels in the argmax.
  double weight(double dist2) const;
};

/// Access and work counters of one classification run. A separate k-NN run
/// and a separate PRW run each compute |RT| x |P| distances; the joint run
/// computes each distance once.
struct InstanceReport {
  std::uint64_t distance_computations = 0;
  std::uint64_t train_point_loads = 0;
  std::uint64_t wall_ns = 0;

  std::string to_json() const;
};

struct KnnResult {
  std::vector<int> labels;
  InstanceReport report;
};

struct PrwResult {
  std::vector<int> labels;
  InstanceReport report;
};

struct JointResult {
  std::vector<int> knn_labels;
  std::vector<int> prw_labels;
  InstanceReport report;
};

/// Brute-force k-NN classification of every point of `queries` against
/// `train`. Queries are processed in blocks of `query_batch`; each training
/// point is loaded once per block, so batching shortens the training-set
/// reuse distance without changing any label. Vote ties go to the class
/// with the smaller summed squared distance, then the smaller class id.
KnnResult knn_classify(const Dataset& train, const Dataset& queries, std::size_t k,
                       std::size_t query_batch = 1, AccessTrace* trace = nullptr);

/// Parzen-Rosenblatt window classification: per query, every class
/// accumulates the kernel weights of its training points and the heaviest
/// class wins (ties to the smaller class id).
PrwResult prw_classify(const Dataset& train, const Dataset& queries,
                       const KernelSpec& kernel, AccessTrace* trace = nullptr);

/// Runs k-NN and PRW in one pass: each (query, training point) squared
/// distance is computed once and feeds both the neighbor list and the
/// kernel totals. Labels match the separate runs exactly.
JointResult joint_classify(const Dataset& train, const Dataset& queries, std::size_t k,
                           const KernelSpec& kernel, std::size_t query_batch = 1,
                           AccessTrace* trace = nullptr);

double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace locml
