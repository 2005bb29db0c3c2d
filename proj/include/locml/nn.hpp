#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "locml/dataset.hpp"
#include "locml/matrix.hpp"
#include "locml/optim.hpp"

namespace locml {

enum class OutputHead { softmax_cross_entropy, identity_mse };

OutputHead output_head_from_string(const std::string& name);
std::string to_string(OutputHead head);

/// Fully connected feed-forward network with sigmoid hidden layers and a
/// softmax-cross-entropy or identity-MSE output head. Layer l maps
/// activations of size layer_sizes[l] to layer_sizes[l+1] through the
/// (fan_out x fan_in) weight matrix weights[l]. No biases; the layers are
/// the plain weighted-sum template.
struct MLP {
  std::vector<std::size_t> layer_sizes;
  std::vector<Matrix> weights;
  OutputHead head = OutputHead::softmax_cross_entropy;

  /// Weights drawn uniformly from [-1/sqrt(fan_in), +1/sqrt(fan_in)].
  static MLP init(std::vector<std::size_t> layer_sizes, OutputHead head,
                  std::uint64_t seed);

  std::size_t n_layers() const { return weights.size(); }
  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t output_size() const { return layer_sizes.back(); }
  std::size_t n_params() const;

  std::vector<double> flatten() const;
  void unflatten(std::span<const double> params);

  std::string to_json() const;
  static MLP from_json(const std::string& text);
};

/// Intermediates of one forward pass: per layer the weighted inputs z and
/// activations a (both neurons x batch), plus the input batch itself.
/// Complete for every layer once forward() returns.
struct ForwardCache {
  Matrix input;
  std::vector<Matrix> z;
  std::vector<Matrix> a;

  const Matrix& output() const { return a.back(); }
};

/// Per-layer error matrices e = dC/dz (neurons x batch).
struct LayerErrors {
  std::vector<Matrix> e;
};

/// Forward propagation over a batch arranged column-wise
/// (input_size x batch). z_l = W_l * a_{l-1}, hidden activations sigmoid,
/// the head applied at the final layer. Layers run strictly in order; the
/// matrix products are tiled with `tile`.
ForwardCache forward(const MLP& mlp, const Matrix& batch, std::size_t tile = 32);

/// Backward error propagation in reverse layer order. Both heads give the
/// output-layer error a_L - targets; hidden errors are
/// (W_{l+1}^T e_{l+1}) elementwise-times sigmoid'(z_l).
LayerErrors backward(const MLP& mlp, const ForwardCache& cache, const Matrix& targets);

/// dC/dW_l = e_l * a_{l-1}^T / batch_size.
std::vector<Matrix> weight_gradients(const ForwardCache& cache, const LayerErrors& errors);

/// Mean loss of a cached forward pass against targets (cross entropy or
/// 0.5 * squared error, averaged over the batch).
double loss_value(const MLP& mlp, const ForwardCache& cache, const Matrix& targets);

/// Central-difference check of every weight gradient; returns the worst
/// relative error max(|analytic - numeric|) / max(1, |analytic|, |numeric|).
/// Guarded to small nets (<= 10^4 weights); eps must be positive.
double grad_check(MLP& mlp, const Matrix& batch, const Matrix& targets, double eps);

/// Column-wise batch matrix (features x batch) and, for classification,
/// one-hot target matrix (n_classes x batch) for the given points.
Matrix batch_inputs(const Dataset& ds, std::span<const std::size_t> indices);
Matrix batch_targets(const Dataset& ds, std::span<const std::size_t> indices);

/// Per-point adapters over the flattened weights, plugging an MLP into the
/// generic trainer. Classification targets are one-hot rows of `proto`'s
/// output size; regression targets are scalar.
PointGradFn mlp_grad_fn(const MLP& proto);
PointLossFn mlp_loss_fn(const MLP& proto);

}  // namespace locml
