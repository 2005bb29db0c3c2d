#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "locml/dataset.hpp"
#include "locml/trace.hpp"

namespace locml {

enum class UpdateKind { vanilla, momentum, adagrad, adam };

UpdateKind update_kind_from_string(const std::string& name);
std::string to_string(UpdateKind kind);

/// Hyperparameters of one training run. batch_size = 1 is SGD,
/// batch_size = n_points is GD, anything in between is MB-GD.
/// window_batches only matters for train_swsgd. `shuffle` selects
/// per-epoch shuffling (the default) or fixed-order traversal, which is
/// what the reuse-distance assertions rely on.
struct OptimizerConfig {
  std::size_t batch_size = 1;
  std::size_t epochs = 1;
  double step_size = 0.1;
  UpdateKind rule = UpdateKind::vanilla;
  double momentum_mu = 0.9;
  double adagrad_eps = 1e-8;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  std::size_t window_batches = 0;
  std::uint64_t seed = 0;
  bool shuffle = true;

  void validate() const;
};

/// Per-weight accumulators for the update rules. Shapes follow the model.
struct UpdateRuleState {
  UpdateKind kind = UpdateKind::vanilla;
  std::vector<double> velocity;      // momentum
  std::vector<double> grad_sq_sum;   // adagrad
  std::vector<double> first_moment;  // adam
  std::vector<double> second_moment; // adam
  std::uint64_t step = 0;            // adam bias-correction counter

  static UpdateRuleState init(const OptimizerConfig& config, std::size_t dim);
  static UpdateRuleState init(UpdateKind kind, std::size_t dim);
};

/// One update step: multiplicative weight decay w *= (1 - eta*lambda)
/// first, then the rule step on gradient G. Throws on shape mismatch or
/// non-finite G.
void apply_update(UpdateRuleState& state, std::span<double> weights,
                  std::span<const double> grad, double eta, double lambda,
                  const OptimizerConfig& config);

/// Thrown when a training run produces a non-finite combined gradient.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t epoch, const std::string& what)
      : std::runtime_error(what), epoch(epoch) {}
  std::size_t epoch;
};

/// Per-point model callbacks over a flat weight vector. `x` is the point's
/// feature row, `y` its label or target.
using PointGradFn = std::function<void(std::span<const double> weights,
                                       std::span<const double> x, double y,
                                       std::span<double> grad_out)>;
using PointLossFn = std::function<double(std::span<const double> weights,
                                         std::span<const double> x, double y)>;

/// Loss history plus the access counters the locality benchmarks compare.
/// point_loads counts training-point reads charged to main memory (window
/// re-reads in SW-SGD are not charged); grad_evals counts per-point gradient
/// evaluations. The per-epoch vectors hold cumulative totals at each epoch
/// end.
struct TrainReport {
  std::vector<double> epoch_loss;
  std::vector<std::uint64_t> epoch_point_loads;
  std::vector<std::uint64_t> epoch_grad_evals;

  std::uint64_t point_loads() const {
    return epoch_point_loads.empty() ? 0 : epoch_point_loads.back();
  }
  std::uint64_t grad_evals() const {
    return epoch_grad_evals.empty() ? 0 : epoch_grad_evals.back();
  }

  void to_csv(const std::string& path) const;
  std::string to_json() const;
};

/// Mini-batch gradient descent (Alg.-template form): per batch, the
/// combined gradient is the mean of the per-point gradients, then decay and
/// the rule step are applied. Mean loss over each epoch's point visits is
/// recorded. When `trace` is set, every training-point read is recorded as
/// a TRAIN_SET event.
TrainReport train(std::vector<double>& weights, const PointGradFn& grad_fn,
                  const PointLossFn& loss_fn, const Dataset& dataset,
                  const OptimizerConfig& config, AccessTrace* trace = nullptr);

/// Sliding-window SGD: the combined gradient additionally averages over the
/// points of up to `window_batches` previously visited batches, which are
/// treated as cache-resident (they are re-read but not charged to
/// point_loads). window_batches = 0 reproduces train() bit for bit.
TrainReport train_swsgd(std::vector<double>& weights, const PointGradFn& grad_fn,
                        const PointLossFn& loss_fn, const Dataset& dataset,
                        const OptimizerConfig& config, AccessTrace* trace = nullptr);

}  // namespace locml
