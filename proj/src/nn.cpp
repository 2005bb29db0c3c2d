#include "locml/nn.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "json.hpp"
#include "locml/rng.hpp"

namespace locml {

OutputHead output_head_from_string(const std::string& name) {
  if (name == "softmax-cross-entropy") return OutputHead::softmax_cross_entropy;
  if (name == "identity-mse") return OutputHead::identity_mse;
  throw std::invalid_argument("unknown output head: " + name);
}

std::string to_string(OutputHead head) {
  return head == OutputHead::softmax_cross_entropy ? "softmax-cross-entropy" : "identity-mse";
}

MLP MLP::init(std::vector<std::size_t> layer_sizes, OutputHead head, std::uint64_t seed) {
  if (layer_sizes.size() < 2)
    throw std::invalid_argument("mlp: need at least input and output layers");
  for (std::size_t s : layer_sizes)
    if (s == 0) throw std::invalid_argument("mlp: zero-size layer");

  MLP mlp;
  mlp.layer_sizes = std::move(layer_sizes);
  mlp.head = head;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < mlp.layer_sizes.size(); ++l) {
    const std::size_t fan_in = mlp.layer_sizes[l];
    const std::size_t fan_out = mlp.layer_sizes[l + 1];
    Matrix w(fan_out, fan_in);
    const double r = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : w.data) v = rng.uniform(-r, r);
    mlp.weights.push_back(std::move(w));
  }
  return mlp;
}

std::size_t MLP::n_params() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += w.data.size();
  return n;
}

std::vector<double> MLP::flatten() const {
  std::vector<double> flat;
  flat.reserve(n_params());
  for (const auto& w : weights) flat.insert(flat.end(), w.data.begin(), w.data.end());
  return flat;
}

void MLP::unflatten(std::span<const double> params) {
  if (params.size() != n_params())
    throw std::invalid_argument("mlp: flat parameter size mismatch");
  std::size_t off = 0;
  for (auto& w : weights) {
    std::copy(params.begin() + off, params.begin() + off + w.data.size(), w.data.begin());
    off += w.data.size();
  }
}

std::string MLP::to_json() const {
  nlohmann::json j;
  j["layer_sizes"] = layer_sizes;
  j["head"] = to_string(head);
  nlohmann::json ws = nlohmann::json::array();
  for (const auto& w : weights) ws.push_back(w.data);
  j["weights"] = ws;
  return j.dump(2);
}

MLP MLP::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  MLP mlp;
  mlp.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
  mlp.head = output_head_from_string(j.at("head").get<std::string>());
  const auto& ws = j.at("weights");
  for (std::size_t l = 0; l + 1 < mlp.layer_sizes.size(); ++l) {
    Matrix w(mlp.layer_sizes[l + 1], mlp.layer_sizes[l]);
    w.data = ws.at(l).get<std::vector<double>>();
    if (w.data.size() != w.rows * w.cols)
      throw std::invalid_argument("mlp: weight matrix size mismatch in json");
    mlp.weights.push_back(std::move(w));
  }
  return mlp;
}

namespace {

double sigmoid_scalar(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void softmax_columns(Matrix& m) {
  for (std::size_t c = 0; c < m.cols; ++c) {
    double peak = m(0, c);
    for (std::size_t r = 1; r < m.rows; ++r) peak = std::max(peak, m(r, c));
    double total = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) {
      m(r, c) = std::exp(m(r, c) - peak);
      total += m(r, c);
    }
    for (std::size_t r = 0; r < m.rows; ++r) m(r, c) /= total;
  }
}

}  // namespace

ForwardCache forward(const MLP& mlp, const Matrix& batch, std::size_t tile) {
  if (batch.rows != mlp.input_size())
    throw std::invalid_argument("forward: batch rows must equal the input layer size");

  ForwardCache cache;
  cache.input = batch;
  const Matrix* prev = &cache.input;
  for (std::size_t l = 0; l < mlp.n_layers(); ++l) {
    Matrix z = gemm_blocked(mlp.weights[l], *prev, tile);
    Matrix a = z;
    if (l + 1 < mlp.n_layers()) {
      for (double& v : a.data) v = sigmoid_scalar(v);
    } else if (mlp.head == OutputHead::softmax_cross_entropy) {
      softmax_columns(a);
    }
    cache.z.push_back(std::move(z));
    cache.a.push_back(std::move(a));
    prev = &cache.a.back();
  }
  return cache;
}

LayerErrors backward(const MLP& mlp, const ForwardCache& cache, const Matrix& targets) {
  if (cache.a.size() != mlp.n_layers())
    throw std::invalid_argument("backward: incomplete forward cache");
  const Matrix& out = cache.output();
  if (targets.rows != out.rows || targets.cols != out.cols)
    throw std::invalid_argument("backward: target shape mismatch");

  LayerErrors errors;
  errors.e.resize(mlp.n_layers());
  Matrix e_out(out.rows, out.cols);
  for (std::size_t i = 0; i < out.data.size(); ++i)
    e_out.data[i] = out.data[i] - targets.data[i];
  errors.e.back() = std::move(e_out);

  for (std::size_t l = mlp.n_layers() - 1; l > 0; --l) {
    const Matrix back = gemm_blocked(transpose(mlp.weights[l]), errors.e[l], 32);
    Matrix e(back.rows, back.cols);
    const Matrix& act = cache.a[l - 1];
    for (std::size_t i = 0; i < e.data.size(); ++i)
      e.data[i] = back.data[i] * act.data[i] * (1.0 - act.data[i]);
    errors.e[l - 1] = std::move(e);
  }
  return errors;
}

std::vector<Matrix> weight_gradients(const ForwardCache& cache, const LayerErrors& errors) {
  if (errors.e.size() != cache.a.size())
    throw std::invalid_argument("weight_gradients: shape mismatch");
  const double inv_batch = 1.0 / static_cast<double>(cache.input.cols);
  std::vector<Matrix> grads;
  grads.reserve(errors.e.size());
  for (std::size_t l = 0; l < errors.e.size(); ++l) {
    const Matrix& below = l == 0 ? cache.input : cache.a[l - 1];
    Matrix g = gemm_blocked(errors.e[l], transpose(below), 32);
    for (double& v : g.data) v *= inv_batch;
    grads.push_back(std::move(g));
  }
  return grads;
}

double loss_value(const MLP& mlp, const ForwardCache& cache, const Matrix& targets) {
  const Matrix& out = cache.output();
  if (targets.rows != out.rows || targets.cols != out.cols)
    throw std::invalid_argument("loss_value: target shape mismatch");
  const double inv_batch = 1.0 / static_cast<double>(out.cols);
  double total = 0.0;
  if (mlp.head == OutputHead::softmax_cross_entropy) {
    for (std::size_t i = 0; i < out.data.size(); ++i)
      if (targets.data[i] != 0.0)
        total -= targets.data[i] * std::log(std::max(out.data[i], 1e-300));
  } else {
    for (std::size_t i = 0; i < out.data.size(); ++i) {
      const double d = out.data[i] - targets.data[i];
      total += 0.5 * d * d;
    }
  }
  return total * inv_batch;
}

double grad_check(MLP& mlp, const Matrix& batch, const Matrix& targets, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("grad_check: eps must be positive");
  if (mlp.n_params() > 10000)
    throw std::invalid_argument("grad_check: network too large for finite differencing");

  const ForwardCache cache = forward(mlp, batch);
  const LayerErrors errors = backward(mlp, cache, targets);
  const std::vector<Matrix> analytic = weight_gradients(cache, errors);

  double worst = 0.0;
  for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
    for (std::size_t i = 0; i < mlp.weights[l].data.size(); ++i) {
      double& w = mlp.weights[l].data[i];
      const double saved = w;
      w = saved + eps;
      const double up = loss_value(mlp, forward(mlp, batch), targets);
      w = saved - eps;
      const double down = loss_value(mlp, forward(mlp, batch), targets);
      w = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[l].data[i];
      const double rel =
          std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

Matrix batch_inputs(const Dataset& ds, std::span<const std::size_t> indices) {
  Matrix m(ds.n_features, indices.size());
  for (std::size_t c = 0; c < indices.size(); ++c) {
    const auto p = ds.point(indices[c]);
    for (std::size_t r = 0; r < ds.n_features; ++r) m(r, c) = p[r];
  }
  return m;
}

Matrix batch_targets(const Dataset& ds, std::span<const std::size_t> indices) {
  if (ds.label_kind == LabelKind::classification) {
    Matrix t(ds.n_classes(), indices.size());
    for (std::size_t c = 0; c < indices.size(); ++c)
      t(static_cast<std::size_t>(ds.class_id(indices[c])), c) = 1.0;
    return t;
  }
  Matrix t(1, indices.size());
  for (std::size_t c = 0; c < indices.size(); ++c) t(0, c) = ds.labels[indices[c]];
  return t;
}

namespace {

Matrix column_from(std::span<const double> x) {
  Matrix m(x.size(), 1);
  for (std::size_t r = 0; r < x.size(); ++r) m(r, 0) = x[r];
  return m;
}

Matrix target_from(const MLP& proto, double y) {
  Matrix t(proto.output_size(), 1);
  if (proto.head == OutputHead::softmax_cross_entropy) {
    const auto c = static_cast<std::size_t>(y);
    if (c >= proto.output_size())
      throw std::invalid_argument("mlp target: class id exceeds output size");
    t(c, 0) = 1.0;
  } else {
    if (proto.output_size() != 1)
      throw std::invalid_argument("mlp target: scalar regression head expected");
    t(0, 0) = y;
  }
  return t;
}

}  // namespace

PointGradFn mlp_grad_fn(const MLP& proto) {
  // The scratch net is shared across calls; training is single-threaded.
  auto scratch = std::make_shared<MLP>(proto);
  return [scratch](std::span<const double> weights, std::span<const double> x, double y,
                   std::span<double> grad_out) {
    scratch->unflatten(weights);
    const Matrix input = column_from(x);
    const Matrix targets = target_from(*scratch, y);
    const ForwardCache cache = forward(*scratch, input);
    const LayerErrors errors = backward(*scratch, cache, targets);
    const auto grads = weight_gradients(cache, errors);
    std::size_t off = 0;
    for (const auto& g : grads) {
      std::copy(g.data.begin(), g.data.end(), grad_out.begin() + off);
      off += g.data.size();
    }
  };
}

PointLossFn mlp_loss_fn(const MLP& proto) {
  auto scratch = std::make_shared<MLP>(proto);
  return [scratch](std::span<const double> weights, std::span<const double> x, double y) {
    scratch->unflatten(weights);
    const Matrix input = column_from(x);
    const Matrix targets = target_from(*scratch, y);
    return loss_value(*scratch, forward(*scratch, input), targets);
  };
}

}  // namespace locml
