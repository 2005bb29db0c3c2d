#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "locml/dataset.hpp"
#include "locml/trace.hpp"

namespace locml {

/// A learner bound to hyperparameters; the drivers construct fresh
/// instances through a LearnerFactory. Instances trained on the same data
/// in the same order with the same seed produce the same model.
class Learner {
 public:
  virtual ~Learner() = default;

  virtual void train(const Dataset& dataset) = 0;
  virtual int predict(std::span<const double> x) const = 0;

  /// Incremental batch updates (SGD-family learners); update() may be
  /// called repeatedly after prepare_incremental().
  virtual bool supports_incremental() const { return false; }
  virtual void prepare_incremental(const Dataset& dataset);
  virtual void update(const Dataset& dataset, std::span<const std::size_t> batch);

  /// Training-point reads this instance has performed.
  virtual std::uint64_t point_loads() const { return loads_; }

  /// Optional access-trace instrumentation.
  virtual void set_trace(AccessTrace* trace) { trace_ = trace; }

 protected:
  std::uint64_t loads_ = 0;
  AccessTrace* trace_ = nullptr;
};

using LearnerFactory = std::function<std::unique_ptr<Learner>(std::uint64_t seed)>;

double accuracy(const Learner& learner, const Dataset& test);

/// Per-fold accuracies of one cross-validation run plus the training-point
/// load counter the naive/streamed comparison is about.
struct CVReport {
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0.0;
  std::uint64_t train_point_loads = 0;

  std::string to_json() const;
};

/// Naive k-fold cross validation: per fold, a fresh learner trains on the
/// other k-1 folds and is scored on the held-out fold.
CVReport cross_validate(const LearnerFactory& factory, const Dataset& dataset,
                        std::size_t k, std::uint64_t seed);

/// Fold-streamed cross validation: the k instances are trained
/// concurrently; per sweep each fold is loaded once and dispatched to the
/// k-1 instances that train on it, so the load counter is |T| per sweep
/// instead of (k-1)|T|. Each instance still receives exactly the same
/// multiset of (point, sweep) visits as naive training; models may differ
/// from the naive run because the interleaving differs.
CVReport cross_validate_streamed(const LearnerFactory& factory, const Dataset& dataset,
                                 std::size_t k, std::size_t epochs, std::uint64_t seed);

/// Population variance of the test metric over n_boot bootstrap-trained
/// models.
double bootstrap_variance(const LearnerFactory& factory, const Dataset& dataset,
                          std::size_t n_boot, const Dataset& test_set, std::uint64_t seed);

/// Same, with explicit (bootstrap seed, learner seed) pairs per run.
double bootstrap_variance_with_seeds(
    const LearnerFactory& factory, const Dataset& dataset,
    std::span<const std::pair<std::uint64_t, std::uint64_t>> run_seeds,
    const Dataset& test_set);

struct BaggedEnsemble {
  std::vector<std::unique_ptr<Learner>> members;
  std::size_t n_classes = 0;

  /// Majority vote; ties to the smallest class id.
  int predict(std::span<const double> x) const;
};

BaggedEnsemble bagging(const LearnerFactory& factory, const Dataset& dataset,
                       std::size_t n_models, std::uint64_t seed);
BaggedEnsemble bagging_with_seeds(
    const LearnerFactory& factory, const Dataset& dataset,
    std::span<const std::pair<std::uint64_t, std::uint64_t>> member_seeds);

/// Memoized per-point predictions: each (model, point) pair is evaluated at
/// most once, hits and misses are counted.
class PredictionCache {
 public:
  PredictionCache(std::size_t n_models, std::size_t n_points);

  int get(std::size_t model, std::size_t point, const std::function<int()>& evaluate);

  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }
  std::uint64_t evaluations(std::size_t model) const { return per_model_misses_[model]; }

 private:
  std::size_t n_points_;
  std::vector<std::optional<int>> cache_;
  std::vector<std::uint64_t> per_model_misses_;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

enum class BoostDegeneracy { none, m1_perfect, m1_all_wrong, empty_disagreement };

std::string to_string(BoostDegeneracy d);

struct BoostEnsemble {
  std::vector<std::unique_ptr<Learner>> members;
  BoostDegeneracy degeneracy = BoostDegeneracy::none;

  /// Majority of the member predictions; a tie returns the first member's
  /// prediction (impossible with three members and binary labels).
  int predict(std::span<const double> x) const;
};

struct Boost3Result {
  BoostEnsemble ensemble;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;
  std::uint64_t m1_evaluations = 0;
  std::uint64_t m2_evaluations = 0;
};

/// Three-classifier boosting round for binary problems: M1 trains on a
/// uniform sample, M2 on a half-right/half-wrong sample judged by M1's
/// cached predictions, M3 on the points where M1 and M2 disagree. The
/// prediction cache guarantees each model is evaluated at most once per
/// training point across sample construction and the disagreement scan.
Boost3Result boost3(const LearnerFactory& factory, const Dataset& dataset,
                    const Dataset& test_set, std::size_t sample_size, std::uint64_t seed);

}  // namespace locml
