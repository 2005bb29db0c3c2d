#include "locml/optim.hpp"

#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>

#include "json.hpp"

namespace locml {

UpdateKind update_kind_from_string(const std::string& name) {
  if (name == "vanilla") return UpdateKind::vanilla;
  if (name == "momentum") return UpdateKind::momentum;
  if (name == "adagrad") return UpdateKind::adagrad;
  if (name == "adam") return UpdateKind::adam;
  throw std::invalid_argument("unknown update rule: " + name);
}

std::string to_string(UpdateKind kind) {
  switch (kind) {
    case UpdateKind::vanilla: return "vanilla";
    case UpdateKind::momentum: return "momentum";
    case UpdateKind::adagrad: return "adagrad";
    case UpdateKind::adam: return "adam";
  }
  return "?";
}

void OptimizerConfig::validate() const {
  if (step_size <= 0.0) throw std::invalid_argument("config: step size must be positive");
  if (weight_decay < 0.0) throw std::invalid_argument("config: weight decay must be >= 0");
  if (momentum_mu < 0.0 || momentum_mu >= 1.0)
    throw std::invalid_argument("config: momentum must be in [0, 1)");
  if (adam_beta1 <= 0.0 || adam_beta1 >= 1.0 || adam_beta2 <= 0.0 || adam_beta2 >= 1.0)
    throw std::invalid_argument("config: adam betas must be in (0, 1)");
  if (adam_eps <= 0.0 || adagrad_eps <= 0.0)
    throw std::invalid_argument("config: epsilons must be positive");
  if (batch_size == 0) throw std::invalid_argument("config: batch size must be >= 1");
}

UpdateRuleState UpdateRuleState::init(const OptimizerConfig& config, std::size_t dim) {
  return init(config.rule, dim);
}

UpdateRuleState UpdateRuleState::init(UpdateKind kind, std::size_t dim) {
  UpdateRuleState state;
  state.kind = kind;
  switch (kind) {
    case UpdateKind::vanilla: break;
    case UpdateKind::momentum: state.velocity.assign(dim, 0.0); break;
    case UpdateKind::adagrad: state.grad_sq_sum.assign(dim, 0.0); break;
    case UpdateKind::adam:
      state.first_moment.assign(dim, 0.0);
      state.second_moment.assign(dim, 0.0);
      break;
  }
  return state;
}

void apply_update(UpdateRuleState& state, std::span<double> weights,
                  std::span<const double> grad, double eta, double lambda,
                  const OptimizerConfig& config) {
  if (weights.size() != grad.size())
    throw std::invalid_argument("apply_update: gradient/weight shape mismatch");
  for (double g : grad)
    if (!std::isfinite(g)) throw std::invalid_argument("apply_update: non-finite gradient");

  if (lambda != 0.0) {
    const double shrink = 1.0 - eta * lambda;
    for (double& w : weights) w *= shrink;
  }
  switch (state.kind) {
    case UpdateKind::vanilla:
      for (std::size_t i = 0; i < weights.size(); ++i) weights[i] -= eta * grad[i];
      break;
    case UpdateKind::momentum:
      if (state.velocity.size() != weights.size())
        throw std::invalid_argument("apply_update: state shape mismatch");
      for (std::size_t i = 0; i < weights.size(); ++i) {
        state.velocity[i] = config.momentum_mu * state.velocity[i] - eta * grad[i];
        weights[i] += state.velocity[i];
      }
      break;
    case UpdateKind::adagrad:
      if (state.grad_sq_sum.size() != weights.size())
        throw std::invalid_argument("apply_update: state shape mismatch");
      for (std::size_t i = 0; i < weights.size(); ++i) {
        state.grad_sq_sum[i] += grad[i] * grad[i];
        weights[i] -= eta * grad[i] / std::sqrt(state.grad_sq_sum[i] + config.adagrad_eps);
      }
      break;
    case UpdateKind::adam: {
      if (state.first_moment.size() != weights.size())
        throw std::invalid_argument("apply_update: state shape mismatch");
      ++state.step;
      const double b1 = config.adam_beta1;
      const double b2 = config.adam_beta2;
      const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
      const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
      for (std::size_t i = 0; i < weights.size(); ++i) {
        state.first_moment[i] = b1 * state.first_moment[i] + (1.0 - b1) * grad[i];
        state.second_moment[i] = b2 * state.second_moment[i] + (1.0 - b2) * grad[i] * grad[i];
        const double m_hat = state.first_moment[i] / corr1;
        const double v_hat = state.second_moment[i] / corr2;
        weights[i] -= eta * m_hat / (std::sqrt(v_hat) + config.adam_eps);
      }
      break;
    }
  }
}

void TrainReport::to_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open report file for writing: " + path);
  out << "epoch,mean_loss,point_loads,grad_evals\n";
  char buf[64];
  for (std::size_t e = 0; e < epoch_loss.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "%.17g", epoch_loss[e]);
    out << e << "," << buf << "," << epoch_point_loads[e] << "," << epoch_grad_evals[e] << "\n";
  }
}

std::string TrainReport::to_json() const {
  nlohmann::json j;
  j["epoch_loss"] = epoch_loss;
  j["epoch_point_loads"] = epoch_point_loads;
  j["epoch_grad_evals"] = epoch_grad_evals;
  j["point_loads"] = point_loads();
  j["grad_evals"] = grad_evals();
  return j.dump(2);
}

namespace {

struct RunCounters {
  std::uint64_t point_loads = 0;
  std::uint64_t grad_evals = 0;
};

void check_finite(std::span<const double> grad, std::size_t epoch) {
  for (double g : grad)
    if (!std::isfinite(g))
      throw DivergenceError(epoch, "training diverged at epoch " + std::to_string(epoch) +
                                       ": non-finite gradient");
}

// Shared engine; train() is the window_batches = 0 instantiation, so the
// two entry points stay bit-identical in the degenerate case by
// construction of the window arithmetic, not by sharing a branch.
TrainReport run_training(std::vector<double>& weights, const PointGradFn& grad_fn,
                         const PointLossFn& loss_fn, const Dataset& dataset,
                         const OptimizerConfig& config, std::size_t window_capacity,
                         AccessTrace* trace) {
  config.validate();
  if (dataset.n_points == 0) throw std::invalid_argument("train: empty dataset");
  if (config.batch_size > dataset.n_points)
    throw std::invalid_argument("train: batch size exceeds dataset size");

  const std::size_t dim = weights.size();
  UpdateRuleState state = UpdateRuleState::init(config, dim);
  BatchStream stream(dataset.n_points, config.batch_size, config.epochs, config.seed,
                     config.shuffle);
  std::deque<std::vector<std::size_t>> window;

  TrainReport report;
  RunCounters counters;
  std::vector<double> combined(dim, 0.0);
  std::vector<double> point_grad(dim, 0.0);
  double epoch_loss_sum = 0.0;
  std::size_t current_epoch = 0;

  const auto finish_epoch = [&]() {
    report.epoch_loss.push_back(epoch_loss_sum / static_cast<double>(dataset.n_points));
    report.epoch_point_loads.push_back(counters.point_loads);
    report.epoch_grad_evals.push_back(counters.grad_evals);
    epoch_loss_sum = 0.0;
  };

  while (auto batch = stream.next()) {
    if (batch->epoch != current_epoch) {
      finish_epoch();
      current_epoch = batch->epoch;
    }

    std::fill(combined.begin(), combined.end(), 0.0);
    std::size_t effective = 0;
    const auto accumulate_point = [&](std::size_t idx, bool charged) {
      const auto x = dataset.point(idx);
      const double y = dataset.labels[idx];
      if (trace) trace->record(object_id::train_set, idx);
      if (charged) {
        ++counters.point_loads;
        epoch_loss_sum += loss_fn(weights, x, y);
      }
      grad_fn(weights, x, y, point_grad);
      for (std::size_t i = 0; i < dim; ++i) combined[i] += point_grad[i];
      ++counters.grad_evals;
      ++effective;
    };

    for (std::size_t idx : batch->indices) accumulate_point(idx, true);
    for (const auto& old_batch : window)
      for (std::size_t idx : old_batch) accumulate_point(idx, false);

    const double inv = 1.0 / static_cast<double>(effective);
    for (double& g : combined) g *= inv;
    check_finite(combined, current_epoch);
    apply_update(state, weights, combined, config.step_size, config.weight_decay, config);

    if (window_capacity > 0) {
      window.emplace_back(batch->indices.begin(), batch->indices.end());
      if (window.size() > window_capacity) window.pop_front();
    }
  }
  if (config.epochs > 0) finish_epoch();
  return report;
}

}  // namespace

TrainReport train(std::vector<double>& weights, const PointGradFn& grad_fn,
                  const PointLossFn& loss_fn, const Dataset& dataset,
                  const OptimizerConfig& config, AccessTrace* trace) {
  return run_training(weights, grad_fn, loss_fn, dataset, config, 0, trace);
}

TrainReport train_swsgd(std::vector<double>& weights, const PointGradFn& grad_fn,
                        const PointLossFn& loss_fn, const Dataset& dataset,
                        const OptimizerConfig& config, AccessTrace* trace) {
  return run_training(weights, grad_fn, loss_fn, dataset, config, config.window_batches,
                      trace);
}

}  // namespace locml
