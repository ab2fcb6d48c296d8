#include "shaped_pick/nn.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace shaped_pick::nn {

namespace {

void check_sizes(std::span<const int> layer_sizes) {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("mlp needs at least input and output sizes");
  }
  for (int n : layer_sizes) {
    if (n < 1) throw std::invalid_argument("mlp layer sizes must be >= 1");
  }
}

// Output-layer derivative applied in place: d(out)/d(pre) for the last layer,
// ReLU mask for hidden layers.
void apply_activation_derivative(const MlpParams& params,
                                 const ForwardCache& cache, int layer,
                                 Eigen::MatrixXd& grad) {
  const bool last = layer == params.num_layers() - 1;
  if (last) {
    if (params.output_activation == OutputActivation::kTanh) {
      grad.array() *= 1.0 - cache.output.array().square();
    }
  } else {
    grad.array() *=
        (cache.pre_activations[layer].array() > 0.0).cast<double>();
  }
}

void check_cache(const MlpParams& params, const ForwardCache& cache,
                 const Eigen::MatrixXd& output_gradient) {
  if (static_cast<int>(cache.layer_inputs.size()) != params.num_layers() ||
      output_gradient.rows() != params.output_size() ||
      output_gradient.cols() != cache.output.cols()) {
    throw std::invalid_argument("backward: gradient/cache shape mismatch");
  }
}

}  // namespace

std::string_view activation_name(OutputActivation act) {
  return act == OutputActivation::kTanh ? "tanh" : "identity";
}

OutputActivation activation_from_name(std::string_view name) {
  if (name == "tanh") return OutputActivation::kTanh;
  if (name == "identity") return OutputActivation::kIdentity;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (int l = 0; l < num_layers(); ++l) {
    n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  }
  return n;
}

bool MlpParams::same_shape(const MlpParams& other) const {
  return layer_sizes == other.layer_sizes &&
         output_activation == other.output_activation;
}

void MlpParams::validate() const {
  check_sizes(layer_sizes);
  const std::size_t layers = layer_sizes.size() - 1;
  if (weights.size() != layers || biases.size() != layers) {
    throw std::invalid_argument("mlp layer count does not match layer_sizes");
  }
  for (std::size_t l = 0; l < layers; ++l) {
    if (weights[l].rows() != layer_sizes[l + 1] ||
        weights[l].cols() != layer_sizes[l] ||
        biases[l].size() != layer_sizes[l + 1]) {
      throw std::invalid_argument("mlp layer " + std::to_string(l) +
                                  " has inconsistent shape");
    }
    if (!weights[l].allFinite() || !biases[l].allFinite()) {
      throw std::invalid_argument("mlp layer " + std::to_string(l) +
                                  " has non-finite entries");
    }
  }
}

MlpParams MlpParams::zeros(std::span<const int> layer_sizes,
                           OutputActivation output_activation) {
  check_sizes(layer_sizes);
  MlpParams p;
  p.layer_sizes.assign(layer_sizes.begin(), layer_sizes.end());
  p.output_activation = output_activation;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    p.weights.push_back(
        Eigen::MatrixXd::Zero(layer_sizes[l + 1], layer_sizes[l]));
    p.biases.push_back(Eigen::VectorXd::Zero(layer_sizes[l + 1]));
  }
  return p;
}

MlpParams init_mlp(std::span<const int> layer_sizes,
                   OutputActivation output_activation, Rng& rng) {
  MlpParams p = MlpParams::zeros(layer_sizes, output_activation);
  for (int l = 0; l < p.num_layers(); ++l) {
    Eigen::MatrixXd& w = p.weights[l];
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    // Row-major fill order so the draw sequence matches the stored layout.
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
    }
  }
  return p;
}

Eigen::MatrixXd forward(const MlpParams& params, const Eigen::MatrixXd& input,
                        ForwardCache* cache) {
  if (input.rows() != params.input_size()) {
    throw std::invalid_argument(
        "forward: input has " + std::to_string(input.rows()) +
        " rows, network expects " + std::to_string(params.input_size()));
  }
  if (cache) {
    cache->layer_inputs.resize(params.num_layers());
    cache->pre_activations.resize(params.num_layers());
  }
  Eigen::MatrixXd x = input;
  for (int l = 0; l < params.num_layers(); ++l) {
    Eigen::MatrixXd pre = params.weights[l] * x;
    pre.colwise() += params.biases[l];
    if (cache) {
      cache->layer_inputs[l] = std::move(x);
      cache->pre_activations[l] = pre;
    }
    const bool last = l == params.num_layers() - 1;
    if (!last) {
      x = pre.cwiseMax(0.0);
    } else if (params.output_activation == OutputActivation::kTanh) {
      x = pre.array().tanh().matrix();
    } else {
      x = std::move(pre);
    }
  }
  if (cache) cache->output = x;
  return x;
}

std::vector<double> forward(const MlpParams& params,
                            std::span<const double> input) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(input.size()), 1);
  for (std::size_t i = 0; i < input.size(); ++i) {
    x(static_cast<Eigen::Index>(i), 0) = input[i];
  }
  const Eigen::MatrixXd y = forward(params, x);
  return {y.data(), y.data() + y.size()};
}

MlpGradients MlpGradients::zeros_like(const MlpParams& params) {
  MlpGradients g;
  for (int l = 0; l < params.num_layers(); ++l) {
    g.weights.push_back(Eigen::MatrixXd::Zero(params.weights[l].rows(),
                                              params.weights[l].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(params.biases[l].size()));
  }
  return g;
}

bool MlpGradients::all_finite() const {
  for (const auto& w : weights) {
    if (!w.allFinite()) return false;
  }
  for (const auto& b : biases) {
    if (!b.allFinite()) return false;
  }
  return true;
}

BackwardResult backward(const MlpParams& params, const ForwardCache& cache,
                        const Eigen::MatrixXd& output_gradient) {
  check_cache(params, cache, output_gradient);
  BackwardResult result;
  result.params.weights.resize(params.num_layers());
  result.params.biases.resize(params.num_layers());

  Eigen::MatrixXd grad = output_gradient;
  for (int l = params.num_layers() - 1; l >= 0; --l) {
    apply_activation_derivative(params, cache, l, grad);
    result.params.weights[l].noalias() =
        grad * cache.layer_inputs[l].transpose();
    result.params.biases[l] = grad.rowwise().sum();
    Eigen::MatrixXd upstream = params.weights[l].transpose() * grad;
    grad = std::move(upstream);
  }
  result.input_gradient = std::move(grad);
  return result;
}

Eigen::MatrixXd input_gradient(const MlpParams& params,
                               const ForwardCache& cache,
                               const Eigen::MatrixXd& output_gradient) {
  check_cache(params, cache, output_gradient);
  Eigen::MatrixXd grad = output_gradient;
  for (int l = params.num_layers() - 1; l >= 0; --l) {
    apply_activation_derivative(params, cache, l, grad);
    Eigen::MatrixXd upstream = params.weights[l].transpose() * grad;
    grad = std::move(upstream);
  }
  return grad;
}

AdamState AdamState::for_params(const MlpParams& params) {
  AdamState s;
  const MlpGradients zero = MlpGradients::zeros_like(params);
  s.weight_m = zero.weights;
  s.weight_v = zero.weights;
  s.bias_m = zero.biases;
  s.bias_v = zero.biases;
  return s;
}

void adam_step(MlpParams& params, const MlpGradients& gradients,
               AdamState& state, double learning_rate) {
  const int layers = params.num_layers();
  if (static_cast<int>(gradients.weights.size()) != layers ||
      static_cast<int>(gradients.biases.size()) != layers ||
      static_cast<int>(state.weight_m.size()) != layers) {
    throw std::invalid_argument("adam_step: layer count mismatch");
  }
  for (int l = 0; l < layers; ++l) {
    if (gradients.weights[l].rows() != params.weights[l].rows() ||
        gradients.weights[l].cols() != params.weights[l].cols() ||
        gradients.biases[l].size() != params.biases[l].size()) {
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    }
  }
  if (!gradients.all_finite()) {
    throw std::runtime_error("adam_step: non-finite gradient");
  }

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double eps = state.epsilon;

  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    param.array() -= learning_rate * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + eps);
  };
  for (int l = 0; l < layers; ++l) {
    update(params.weights[l], state.weight_m[l], state.weight_v[l],
           gradients.weights[l]);
    update(params.biases[l], state.bias_m[l], state.bias_v[l],
           gradients.biases[l]);
  }
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index rows,
                                 Eigen::Index cols, const std::string& what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw std::invalid_argument(what + ": expected " + std::to_string(rows) +
                                " rows");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw std::invalid_argument(what + ": expected " + std::to_string(cols) +
                                  " columns");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return m;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j, Eigen::Index size,
                                 const std::string& what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size) {
    throw std::invalid_argument(what + ": expected length " +
                                std::to_string(size));
  }
  Eigen::VectorXd v(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    v(i) = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

}  // namespace

nlohmann::json to_json(const MlpParams& params) {
  nlohmann::json j;
  j["layer_sizes"] = params.layer_sizes;
  j["hidden_activation"] = "relu";
  j["output_activation"] = activation_name(params.output_activation);
  j["weights"] = nlohmann::json::array();
  j["biases"] = nlohmann::json::array();
  for (int l = 0; l < params.num_layers(); ++l) {
    j["weights"].push_back(matrix_to_json(params.weights[l]));
    j["biases"].push_back(vector_to_json(params.biases[l]));
  }
  return j;
}

MlpParams mlp_from_json(const nlohmann::json& j) {
  const auto sizes = j.at("layer_sizes").get<std::vector<int>>();
  if (j.contains("hidden_activation") &&
      j.at("hidden_activation").get<std::string>() != "relu") {
    throw std::invalid_argument("mlp: only relu hidden layers are supported");
  }
  MlpParams p = MlpParams::zeros(
      sizes,
      activation_from_name(j.at("output_activation").get<std::string>()));
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  if (weights.size() != p.weights.size() || biases.size() != p.biases.size()) {
    throw std::invalid_argument("mlp: layer count does not match layer_sizes");
  }
  for (int l = 0; l < p.num_layers(); ++l) {
    const std::string what = "mlp layer " + std::to_string(l);
    p.weights[l] = matrix_from_json(weights[l], p.weights[l].rows(),
                                    p.weights[l].cols(), what + " weights");
    p.biases[l] = vector_from_json(biases[l], p.biases[l].size(),
                                   what + " biases");
  }
  p.validate();
  return p;
}

nlohmann::json to_json(const AdamState& state) {
  nlohmann::json j;
  j["step_count"] = state.step_count;
  j["beta1"] = state.beta1;
  j["beta2"] = state.beta2;
  j["epsilon"] = state.epsilon;
  for (const char* key : {"weight_m", "weight_v", "bias_m", "bias_v"}) {
    j[key] = nlohmann::json::array();
  }
  for (std::size_t l = 0; l < state.weight_m.size(); ++l) {
    j["weight_m"].push_back(matrix_to_json(state.weight_m[l]));
    j["weight_v"].push_back(matrix_to_json(state.weight_v[l]));
    j["bias_m"].push_back(vector_to_json(state.bias_m[l]));
    j["bias_v"].push_back(vector_to_json(state.bias_v[l]));
  }
  return j;
}

AdamState adam_from_json(const nlohmann::json& j, const MlpParams& shape) {
  AdamState s = AdamState::for_params(shape);
  s.step_count = j.at("step_count").get<std::int64_t>();
  s.beta1 = j.at("beta1").get<double>();
  s.beta2 = j.at("beta2").get<double>();
  s.epsilon = j.at("epsilon").get<double>();
  for (int l = 0; l < shape.num_layers(); ++l) {
    const auto idx = static_cast<std::size_t>(l);
    const Eigen::Index rows = shape.weights[l].rows();
    const Eigen::Index cols = shape.weights[l].cols();
    s.weight_m[l] = matrix_from_json(j.at("weight_m").at(idx), rows, cols, "adam weight_m");
    s.weight_v[l] = matrix_from_json(j.at("weight_v").at(idx), rows, cols, "adam weight_v");
    s.bias_m[l] = vector_from_json(j.at("bias_m").at(idx), rows, "adam bias_m");
    s.bias_v[l] = vector_from_json(j.at("bias_v").at(idx), rows, "adam bias_v");
  }
  return s;
}

}  // namespace shaped_pick::nn
