#include "locml/learners.hpp"

#include <stdexcept>

namespace locml {

LinearSgdLearner::LinearSgdLearner(LinearLoss loss, OptimizerConfig config,
                                   std::uint64_t seed)
    : loss_(loss), config_(std::move(config)) {
  config_.seed = seed;
}

double LinearSgdLearner::learner_label(const Dataset& dataset, std::size_t idx) const {
  const int c = dataset.class_id(idx);
  if (c != 0 && c != 1)
    throw std::invalid_argument("linear learner: binary class ids {0, 1} required");
  if (loss_ == LinearLoss::hinge) return c == 0 ? -1.0 : 1.0;
  return static_cast<double>(c);
}

void LinearSgdLearner::train(const Dataset& dataset) {
  prepare_incremental(dataset);
  // Re-labelled copy so the generic trainer sees the loss kind's label
  // convention directly.
  Dataset relabeled = dataset;
  for (std::size_t i = 0; i < dataset.n_points; ++i)
    relabeled.labels[i] = learner_label(dataset, i);
  auto cfg = config_;
  cfg.batch_size = std::min(cfg.batch_size, dataset.n_points);
  const auto report = train_swsgd(model_.weights, linear_grad_fn(loss_), linear_loss_fn(loss_),
                                  relabeled, cfg, trace_);
  loads_ += report.point_loads();
}

void LinearSgdLearner::prepare_incremental(const Dataset& dataset) {
  if (dataset.n_features == 0) throw std::invalid_argument("linear learner: no features");
  model_ = LinearModel::zeros(loss_, dataset.n_features);
  state_ = UpdateRuleState::init(config_, model_.dim());
  ready_ = true;
}

void LinearSgdLearner::update(const Dataset& dataset, std::span<const std::size_t> batch) {
  if (!ready_) prepare_incremental(dataset);
  // Stream the given points in order, one rule step per batch_size chunk.
  std::vector<std::size_t> chunk;
  std::vector<double> labels;
  for (std::size_t pos = 0; pos < batch.size(); pos += config_.batch_size) {
    const std::size_t end = std::min(pos + config_.batch_size, batch.size());
    chunk.assign(batch.begin() + pos, batch.begin() + end);
    Dataset view = subset(dataset, chunk);
    for (std::size_t i = 0; i < chunk.size(); ++i)
      view.labels[i] = learner_label(dataset, chunk[i]);
    std::vector<std::size_t> local(chunk.size());
    for (std::size_t i = 0; i < local.size(); ++i) local[i] = i;
    if (trace_)
      for (std::size_t idx : chunk) trace_->record(object_id::train_set, idx);
    loads_ += chunk.size();
    batch_update(model_, view, local, config_.step_size, config_.weight_decay, state_,
                 config_);
  }
}

int LinearSgdLearner::predict(std::span<const double> x) const {
  const int raw = locml::predict(model_, x);
  if (loss_ == LinearLoss::hinge) return raw < 0 ? 0 : 1;
  return raw;
}

void KnnLearner::train(const Dataset& dataset) {
  if (k_ < 1 || k_ > dataset.n_points)
    throw std::invalid_argument("knn learner: need 1 <= k <= n_points");
  memory_ = dataset;
  loads_ += dataset.n_points;
  if (trace_)
    for (std::size_t i = 0; i < dataset.n_points; ++i)
      trace_->record(object_id::train_set, i);
}

int KnnLearner::predict(std::span<const double> x) const {
  NeighborList neighbors(k_);
  for (std::size_t j = 0; j < memory_.n_points; ++j)
    neighbors.consider(squared_distance(x, memory_.point(j)), j);
  std::vector<std::size_t> votes(memory_.n_classes(), 0);
  std::vector<double> dist_sum(memory_.n_classes(), 0.0);
  for (const auto& [d2, idx] : neighbors.entries()) {
    const auto c = static_cast<std::size_t>(memory_.class_id(idx));
    ++votes[c];
    dist_sum[c] += d2;
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < votes.size(); ++c)
    if (votes[c] > votes[best] ||
        (votes[c] == votes[best] && votes[c] > 0 && dist_sum[c] < dist_sum[best]))
      best = c;
  return static_cast<int>(best);
}

void NbLearner::train(const Dataset& dataset) {
  auto fit = fit_nb(dataset, var_floor_, trace_);
  loads_ += fit.point_reads;
  model_ = std::move(fit.model);
}

int NbLearner::predict(std::span<const double> x) const {
  return predict_nb(model_, x).label;
}

void ConstantLearner::train(const Dataset& dataset) { loads_ += dataset.n_points; }

LearnerFactory make_learner_factory(const std::string& name, const OptimizerConfig& config,
                                    std::size_t k, int constant_label) {
  if (name == "logistic" || name == "hinge") {
    const LinearLoss loss = linear_loss_from_string(name);
    return [loss, config](std::uint64_t seed) {
      return std::make_unique<LinearSgdLearner>(loss, config, seed);
    };
  }
  if (name == "nb")
    return [](std::uint64_t) { return std::make_unique<NbLearner>(); };
  if (name == "knn")
    return [k](std::uint64_t) { return std::make_unique<KnnLearner>(k); };
  if (name == "constant")
    return [constant_label](std::uint64_t) {
      return std::make_unique<ConstantLearner>(constant_label);
    };
  throw std::invalid_argument("unknown learner: " + name);
}

}  // namespace locml
