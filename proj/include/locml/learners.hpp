#pragma once

#include <memory>
#include <string>

#include "locml/bayes.hpp"
#include "locml/ensemble.hpp"
#include "locml/instance.hpp"
#include "locml/linear.hpp"
#include "locml/optim.hpp"

namespace locml {

/// Binary linear classifier trained with the generic mini-batch trainer.
/// Supports incremental updates, so it can be fold-streamed. Hinge labels
/// are mapped from dataset class ids {0, 1} to {-1, +1} internally.
class LinearSgdLearner : public Learner {
 public:
  LinearSgdLearner(LinearLoss loss, OptimizerConfig config, std::uint64_t seed);

  void train(const Dataset& dataset) override;
  int predict(std::span<const double> x) const override;
  bool supports_incremental() const override { return true; }
  void prepare_incremental(const Dataset& dataset) override;
  void update(const Dataset& dataset, std::span<const std::size_t> batch) override;

  const LinearModel& model() const { return model_; }

 private:
  double learner_label(const Dataset& dataset, std::size_t idx) const;

  LinearLoss loss_;
  OptimizerConfig config_;
  LinearModel model_;
  UpdateRuleState state_;
  bool ready_ = false;
};

/// Brute-force k-NN; "training" memorizes the dataset.
class KnnLearner : public Learner {
 public:
  explicit KnnLearner(std::size_t k) : k_(k) {}

  void train(const Dataset& dataset) override;
  int predict(std::span<const double> x) const override;

 private:
  std::size_t k_;
  Dataset memory_;
};

/// Gaussian naive Bayes learner.
class NbLearner : public Learner {
 public:
  explicit NbLearner(double var_floor = 1e-9) : var_floor_(var_floor) {}

  void train(const Dataset& dataset) override;
  int predict(std::span<const double> x) const override;

 private:
  double var_floor_;
  NBModel model_;
};

/// Always predicts the same class; a baseline and test double.
class ConstantLearner : public Learner {
 public:
  explicit ConstantLearner(int label) : label_(label) {}

  void train(const Dataset& dataset) override;
  int predict(std::span<const double>) const override { return label_; }

 private:
  int label_;
};

/// Factory from a learner name: "logistic", "hinge", "nb",
/// "knn" (with `k`), "constant" (with `label`). The optimizer config only
/// applies to the linear learners.
LearnerFactory make_learner_factory(const std::string& name, const OptimizerConfig& config,
                                    std::size_t k = 1, int constant_label = 0);

}  // namespace locml
