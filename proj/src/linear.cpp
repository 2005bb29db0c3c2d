#include "locml/linear.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace locml {

LinearLoss linear_loss_from_string(const std::string& name) {
  if (name == "logistic") return LinearLoss::logistic;
  if (name == "hinge") return LinearLoss::hinge;
  throw std::invalid_argument("unknown linear loss: " + name);
}

std::string to_string(LinearLoss loss) {
  return loss == LinearLoss::logistic ? "logistic" : "hinge";
}

LinearModel LinearModel::zeros(LinearLoss loss, std::size_t n_features, bool with_bias) {
  LinearModel m;
  m.loss = loss;
  m.weights.assign(n_features, 0.0);
  if (with_bias) m.bias = 0.0;
  return m;
}

std::string LinearModel::to_json() const {
  nlohmann::json j;
  j["loss"] = to_string(loss);
  j["weights"] = weights;
  if (bias) j["bias"] = *bias;
  return j.dump(2);
}

LinearModel LinearModel::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  LinearModel m;
  m.loss = linear_loss_from_string(j.at("loss").get<std::string>());
  m.weights = j.at("weights").get<std::vector<double>>();
  if (j.contains("bias")) m.bias = j.at("bias").get<double>();
  return m;
}

double sigmoid(double p) {
  if (p >= 0.0) return 1.0 / (1.0 + std::exp(-p));
  const double e = std::exp(p);
  return e / (1.0 + e);
}

namespace {

double softplus(double t) {
  // log(1 + e^t) without overflow.
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

void check_point(const LinearModel& model, std::span<const double> x, double y) {
  if (x.size() != model.weights.size())
    throw std::invalid_argument("linear: feature count does not match model");
  if (model.loss == LinearLoss::logistic) {
    if (y != 0.0 && y != 1.0)
      throw std::invalid_argument("logistic loss expects labels in {0, 1}");
  } else {
    if (y != -1.0 && y != 1.0)
      throw std::invalid_argument("hinge loss expects labels in {-1, +1}");
  }
}

}  // namespace

double decision_value(const LinearModel& model, std::span<const double> x) {
  if (x.size() != model.weights.size())
    throw std::invalid_argument("linear: feature count does not match model");
  double p = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) p += model.weights[i] * x[i];
  if (model.bias) p += *model.bias;
  return p;
}

double point_loss(const LinearModel& model, std::span<const double> x, double y) {
  check_point(model, x, y);
  const double p = decision_value(model, x);
  if (model.loss == LinearLoss::logistic)
    return y * softplus(-p) + (1.0 - y) * softplus(p);
  return std::max(0.0, 1.0 - y * p);
}

std::vector<double> point_gradient(const LinearModel& model, std::span<const double> x,
                                   double y) {
  check_point(model, x, y);
  const double p = decision_value(model, x);
  std::vector<double> grad(model.dim(), 0.0);
  if (model.loss == LinearLoss::logistic) {
    const double d = sigmoid(p) - y;
    for (std::size_t i = 0; i < x.size(); ++i) grad[i] = d * x[i];
    if (model.bias) grad[x.size()] = d;
  } else if (y * p < 1.0) {
    for (std::size_t i = 0; i < x.size(); ++i) grad[i] = -y * x[i];
    if (model.bias) grad[x.size()] = -y;
  }
  return grad;
}

void batch_update(LinearModel& model, const Dataset& dataset,
                  std::span<const std::size_t> batch, double eta, double lambda,
                  UpdateRuleState& state, const OptimizerConfig& config) {
  if (batch.empty()) throw std::invalid_argument("batch_update: empty batch");
  // Phase 1a: accumulate the mean batch gradient.
  std::vector<double> combined(model.dim(), 0.0);
  for (std::size_t idx : batch) {
    const auto grad = point_gradient(model, dataset.point(idx), dataset.labels[idx]);
    for (std::size_t i = 0; i < combined.size(); ++i) combined[i] += grad[i];
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (double& g : combined) g *= inv;
  // Phase 1b: decay plus rule step over every parameter.
  std::vector<double> params = model.weights;
  if (model.bias) params.push_back(*model.bias);
  apply_update(state, params, combined, eta, lambda, config);
  if (model.bias) {
    model.bias = params.back();
    params.pop_back();
  }
  model.weights = std::move(params);
}

namespace {

double loss_derivative(const LinearModel& model, double p, double y) {
  if (model.loss == LinearLoss::logistic) return sigmoid(p) - y;
  return y * p < 1.0 ? -y : 0.0;
}

}  // namespace

JointPassReport joint_batch_pass(std::span<const LinearModel> models, const Dataset& dataset,
                                 std::span<const std::size_t> batch) {
  if (models.empty()) throw std::invalid_argument("joint_batch_pass: no models");
  if (batch.empty()) throw std::invalid_argument("joint_batch_pass: empty batch");
  const std::size_t n_features = models.front().n_features();
  for (const auto& m : models)
    if (m.n_features() != n_features)
      throw std::invalid_argument("joint_batch_pass: models disagree on feature count");
  if (n_features != dataset.n_features)
    throw std::invalid_argument("joint_batch_pass: dataset feature count mismatch");

  JointPassReport report;
  report.gradients.reserve(models.size());
  for (const auto& m : models) report.gradients.emplace_back(m.dim(), 0.0);

  std::vector<double> inner(models.size());
  for (std::size_t idx : batch) {
    const auto x = dataset.point(idx);
    ++report.point_loads;
    // All inner products advance together, feature by feature, so the point
    // is traversed once while every model consumes it.
    std::fill(inner.begin(), inner.end(), 0.0);
    for (std::size_t i = 0; i < n_features; ++i) {
      const double xi = x[i];
      for (std::size_t m = 0; m < models.size(); ++m) {
        inner[m] += models[m].weights[i] * xi;
        ++report.scalar_multiplies;
      }
    }
    for (std::size_t m = 0; m < models.size(); ++m) {
      double p = inner[m];
      if (models[m].bias) p += *models[m].bias;
      const double y = dataset.labels[idx];
      const double d = loss_derivative(models[m], p, y);
      auto& grad = report.gradients[m];
      for (std::size_t i = 0; i < n_features; ++i) {
        grad[i] += d * x[i];
        ++report.scalar_multiplies;
      }
      if (models[m].bias) grad[n_features] += d;
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto& grad : report.gradients)
    for (double& g : grad) g *= inv;
  return report;
}

JointPassReport separate_batch_pass(const LinearModel& model, const Dataset& dataset,
                                    std::span<const std::size_t> batch) {
  return joint_batch_pass(std::span<const LinearModel>(&model, 1), dataset, batch);
}

int predict(const LinearModel& model, std::span<const double> x) {
  const double p = decision_value(model, x);
  if (model.loss == LinearLoss::logistic) return sigmoid(p) >= 0.5 ? 1 : 0;
  return p >= 0.0 ? 1 : -1;
}

PointGradFn linear_grad_fn(LinearLoss loss, bool with_bias) {
  return [loss, with_bias](std::span<const double> weights, std::span<const double> x,
                           double y, std::span<double> grad_out) {
    LinearModel m;
    m.loss = loss;
    if (with_bias) {
      m.weights.assign(weights.begin(), weights.end() - 1);
      m.bias = weights.back();
    } else {
      m.weights.assign(weights.begin(), weights.end());
    }
    const auto grad = point_gradient(m, x, y);
    std::copy(grad.begin(), grad.end(), grad_out.begin());
  };
}

PointLossFn linear_loss_fn(LinearLoss loss, bool with_bias) {
  return [loss, with_bias](std::span<const double> weights, std::span<const double> x,
                           double y) {
    LinearModel m;
    m.loss = loss;
    if (with_bias) {
      m.weights.assign(weights.begin(), weights.end() - 1);
      m.bias = weights.back();
    } else {
      m.weights.assign(weights.begin(), weights.end());
    }
    return point_loss(m, x, y);
  };
}

}  // namespace locml
