#include "locml/instance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace locml {

NeighborList::NeighborList(std::size_t k) : k_(k) {
  if (k == 0) throw std::invalid_argument("neighbor list capacity must be >= 1");
  entries_.reserve(k);
}

void NeighborList::consider(double dist2, std::size_t index) {
  const std::pair<double, std::size_t> candidate{dist2, index};
  if (entries_.size() == k_ && candidate >= entries_.back()) return;
  auto pos = std::upper_bound(entries_.begin(), entries_.end(), candidate);
  entries_.insert(pos, candidate);
  if (entries_.size() > k_) entries_.pop_back();
}

void KernelSpec::validate() const {
  if (bandwidth <= 0.0) throw std::invalid_argument("kernel bandwidth must be positive");
}

double KernelSpec::weight(double dist2) const {
  return std::exp(-dist2 / (2.0 * bandwidth * bandwidth));
}

std::string InstanceReport::to_json() const {
  nlohmann::json j;
  j["distance_computations"] = distance_computations;
  j["train_point_loads"] = train_point_loads;
  j["wall_ns"] = wall_ns;
  return j.dump(2);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d2 += t * t;
  }
  return d2;
}

namespace {

using Clock = std::chrono::steady_clock;

void check_inputs(const Dataset& train, const Dataset& queries) {
  if (train.n_points == 0) throw std::invalid_argument("instance: empty training set");
  if (train.n_features != queries.n_features)
    throw std::invalid_argument("instance: feature counts do not match");
  if (train.label_kind != LabelKind::classification)
    throw std::invalid_argument("instance: classification training set required");
}

int vote_neighbors(const NeighborList& neighbors, const Dataset& train,
                   std::size_t n_classes) {
  std::vector<std::size_t> votes(n_classes, 0);
  std::vector<double> dist_sum(n_classes, 0.0);
  for (const auto& [d2, idx] : neighbors.entries()) {
    const auto c = static_cast<std::size_t>(train.class_id(idx));
    ++votes[c];
    dist_sum[c] += d2;
  }
  // Majority; ties by smaller summed distance, then smaller class id.
  std::size_t best = 0;
  for (std::size_t c = 1; c < n_classes; ++c) {
    if (votes[c] > votes[best] ||
        (votes[c] == votes[best] && votes[c] > 0 && dist_sum[c] < dist_sum[best]))
      best = c;
  }
  return static_cast<int>(best);
}

int heaviest_class(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c)
    if (scores[c] > scores[best]) best = c;
  return static_cast<int>(best);
}

}  // namespace

KnnResult knn_classify(const Dataset& train, const Dataset& queries, std::size_t k,
                       std::size_t query_batch, AccessTrace* trace) {
  check_inputs(train, queries);
  if (k < 1 || k > train.n_points)
    throw std::invalid_argument("knn: need 1 <= k <= training set size");
  if (query_batch < 1) throw std::invalid_argument("knn: query batch must be >= 1");

  KnnResult result;
  result.labels.resize(queries.n_points);
  const auto start = Clock::now();
  std::vector<NeighborList> lists;
  for (std::size_t q0 = 0; q0 < queries.n_points; q0 += query_batch) {
    const std::size_t q1 = std::min(q0 + query_batch, queries.n_points);
    lists.assign(q1 - q0, NeighborList(k));
    for (std::size_t j = 0; j < train.n_points; ++j) {
      const auto t = train.point(j);
      ++result.report.train_point_loads;
      if (trace) trace->record(object_id::train_set, j);
      for (std::size_t i = q0; i < q1; ++i) {
        if (trace) trace->record(object_id::query_set, i);
        const double d2 = squared_distance(queries.point(i), t);
        ++result.report.distance_computations;
        lists[i - q0].consider(d2, j);
      }
    }
    for (std::size_t i = q0; i < q1; ++i)
      result.labels[i] = vote_neighbors(lists[i - q0], train, train.n_classes());
  }
  result.report.wall_ns = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count());
  return result;
}

PrwResult prw_classify(const Dataset& train, const Dataset& queries,
                       const KernelSpec& kernel, AccessTrace* trace) {
  check_inputs(train, queries);
  kernel.validate();

  PrwResult result;
  result.labels.resize(queries.n_points);
  const auto start = Clock::now();
  std::vector<double> scores(train.n_classes());
  for (std::size_t i = 0; i < queries.n_points; ++i) {
    std::fill(scores.begin(), scores.end(), 0.0);
    const auto q = queries.point(i);
    for (std::size_t j = 0; j < train.n_points; ++j) {
      ++result.report.train_point_loads;
      if (trace) {
        trace->record(object_id::train_set, j);
        trace->record(object_id::query_set, i);
      }
      const double d2 = squared_distance(q, train.point(j));
      ++result.report.distance_computations;
      scores[static_cast<std::size_t>(train.class_id(j))] += kernel.weight(d2);
    }
    result.labels[i] = heaviest_class(scores);
  }
  result.report.wall_ns = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count());
  return result;
}

JointResult joint_classify(const Dataset& train, const Dataset& queries, std::size_t k,
                           const KernelSpec& kernel, std::size_t query_batch,
                           AccessTrace* trace) {
  check_inputs(train, queries);
  kernel.validate();
  if (k < 1 || k > train.n_points)
    throw std::invalid_argument("knn: need 1 <= k <= training set size");
  if (query_batch < 1) throw std::invalid_argument("joint: query batch must be >= 1");

  JointResult result;
  result.knn_labels.resize(queries.n_points);
  result.prw_labels.resize(queries.n_points);
  const auto start = Clock::now();
  const std::size_t n_classes = train.n_classes();
  std::vector<NeighborList> lists;
  std::vector<std::vector<double>> scores;
  for (std::size_t q0 = 0; q0 < queries.n_points; q0 += query_batch) {
    const std::size_t q1 = std::min(q0 + query_batch, queries.n_points);
    lists.assign(q1 - q0, NeighborList(k));
    scores.assign(q1 - q0, std::vector<double>(n_classes, 0.0));
    for (std::size_t j = 0; j < train.n_points; ++j) {
      const auto t = train.point(j);
      const auto cls = static_cast<std::size_t>(train.class_id(j));
      ++result.report.train_point_loads;
      if (trace) trace->record(object_id::train_set, j);
      for (std::size_t i = q0; i < q1; ++i) {
        if (trace) trace->record(object_id::query_set, i);
        const double d2 = squared_distance(queries.point(i), t);
        ++result.report.distance_computations;
        lists[i - q0].consider(d2, j);
        scores[i - q0][cls] += kernel.weight(d2);
      }
    }
    for (std::size_t i = q0; i < q1; ++i) {
      result.knn_labels[i] = vote_neighbors(lists[i - q0], train, n_classes);
      result.prw_labels[i] = heaviest_class(scores[i - q0]);
    }
  }
  result.report.wall_ns = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count());
  return result;
}

}  // namespace locml
