#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "shaped_pick/random.h"

namespace shaped_pick::nn {

// Hidden layers are always ReLU.
enum class OutputActivation { kIdentity, kTanh };

std::string_view activation_name(OutputActivation act);
OutputActivation activation_from_name(std::string_view name);

// Dense network. weights[l] is (layer_sizes[l+1] x layer_sizes[l]).
struct MlpParams {
  std::vector<int> layer_sizes;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  OutputActivation output_activation = OutputActivation::kIdentity;

  int num_layers() const { return static_cast<int>(weights.size()); }
  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  std::size_t parameter_count() const;
  bool same_shape(const MlpParams& other) const;

  // Throws std::invalid_argument on inconsistent shapes or non-finite values.
  void validate() const;

  // All weights and biases zero.
  static MlpParams zeros(std::span<const int> layer_sizes,
                         OutputActivation output_activation);
};

// Glorot-uniform weights, zero biases. Rejects fewer than two sizes or a
// non-positive size.
MlpParams init_mlp(std::span<const int> layer_sizes,
                   OutputActivation output_activation, Rng& rng);

// Per-layer values kept by forward() for backward(). Samples are columns.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> layer_inputs;
  std::vector<Eigen::MatrixXd> pre_activations;
  Eigen::MatrixXd output;
};

// Batched forward pass; each column of `input` is one sample.
Eigen::MatrixXd forward(const MlpParams& params, const Eigen::MatrixXd& input,
                        ForwardCache* cache = nullptr);

std::vector<double> forward(const MlpParams& params,
                            std::span<const double> input);

struct MlpGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static MlpGradients zeros_like(const MlpParams& params);
  bool all_finite() const;
};

struct BackwardResult {
  MlpGradients params;
  Eigen::MatrixXd input_gradient;
};

// Reverse mode for the scalar sum_{i,b} output_gradient(i,b) * output(i,b).
// Parameter gradients are summed over the batch columns.
BackwardResult backward(const MlpParams& params, const ForwardCache& cache,
                        const Eigen::MatrixXd& output_gradient);

// Same as backward() but skips the parameter gradients.
Eigen::MatrixXd input_gradient(const MlpParams& params,
                               const ForwardCache& cache,
                               const Eigen::MatrixXd& output_gradient);

struct AdamState {
  std::vector<Eigen::MatrixXd> weight_m, weight_v;
  std::vector<Eigen::VectorXd> bias_m, bias_v;
  std::int64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const MlpParams& params);
};

// Bias-corrected Adam. Throws std::runtime_error (leaving params and state
// untouched) if any gradient is non-finite.
void adam_step(MlpParams& params, const MlpGradients& gradients,
               AdamState& state, double learning_rate);

// Checkpoint encoding; row-major arrays, shortest round-trip decimals.
nlohmann::json to_json(const MlpParams& params);
MlpParams mlp_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AdamState& state);
AdamState adam_from_json(const nlohmann::json& j, const MlpParams& shape);

}  // namespace shaped_pick::nn
