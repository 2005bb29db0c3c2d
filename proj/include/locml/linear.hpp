#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "locml/dataset.hpp"
#include "locml/optim.hpp"

namespace locml {

enum class LinearLoss { logistic, hinge };

LinearLoss linear_loss_from_string(const std::string& name);
std::string to_string(LinearLoss loss);

/// Binary linear classifier trained in the primal. Logistic expects labels
/// in {0, 1}, hinge in {-1, +1}. The bias is off by default; when enabled
/// it behaves as a constant-1 feature appended to the weight vector.
struct LinearModel {
  LinearLoss loss = LinearLoss::logistic;
  std::vector<double> weights;
  std::optional<double> bias;

  static LinearModel zeros(LinearLoss loss, std::size_t n_features, bool with_bias = false);

  std::size_t n_features() const { return weights.size(); }
  /// Number of trainable parameters (weights plus bias when present).
  std::size_t dim() const { return weights.size() + (bias ? 1 : 0); }

  std::string to_json() const;
  static LinearModel from_json(const std::string& text);
};

/// Numerically stable logistic sigmoid.
double sigmoid(double p);

/// Inner product w.x (+ bias).
double decision_value(const LinearModel& model, std::span<const double> x);

/// Per-point loss under the model's loss kind.
///   logistic: -[y log s(p) + (1-y) log(1-s(p))]
///   hinge:    max(0, 1 - y p)
double point_loss(const LinearModel& model, std::span<const double> x, double y);

/// Per-point gradient with respect to the trainable parameters.
///   logistic: (s(p) - y) x
///   hinge:    -y x when y p < 1, else zero (subgradient 0 at the kink)
std::vector<double> point_gradient(const LinearModel& model, std::span<const double> x,
                                   double y);

/// One mini-batch step in the two-phase template: phase one accumulates the
/// mean batch gradient, phase two applies weight decay and the rule update
/// to every parameter.
void batch_update(LinearModel& model, const Dataset& dataset,
                  std::span<const std::size_t> batch, double eta, double lambda,
                  UpdateRuleState& state, const OptimizerConfig& config);

/// Counters and per-model mean gradients of one shared pass over a batch.
struct JointPassReport {
  std::vector<std::vector<double>> gradients;
  std::uint64_t point_loads = 0;
  std::uint64_t scalar_multiplies = 0;
};

/// Computes the gradient phase for several models in one traversal of the
/// batch: each point is loaded once and its inner products with every model
/// are accumulated feature by feature. Gradients are bit-identical to the
/// ones separate passes produce (same per-model accumulation order); only
/// the point-load counter changes.
JointPassReport joint_batch_pass(std::span<const LinearModel> models, const Dataset& dataset,
                                 std::span<const std::size_t> batch);

/// Single-model gradient phase with the same counters, for comparing
/// against joint_batch_pass.
JointPassReport separate_batch_pass(const LinearModel& model, const Dataset& dataset,
                                    std::span<const std::size_t> batch);

/// Predicted label. Logistic returns 1 iff s(p) >= 0.5 (ties to class 1),
/// hinge returns +1 iff p >= 0.
int predict(const LinearModel& model, std::span<const double> x);

/// Adapters plugging a linear model into the generic trainer. `loss`
/// selects the loss kind; weights are the flat parameter vector (bias last
/// when enabled).
PointGradFn linear_grad_fn(LinearLoss loss, bool with_bias = false);
PointLossFn linear_loss_fn(LinearLoss loss, bool with_bias = false);

}  // namespace locml
