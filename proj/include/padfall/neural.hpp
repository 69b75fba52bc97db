#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <fmt/format.h>

#include "padfall/common.hpp"

namespace padfall {

enum class OutputActivation : std::uint32_t { kTanh = 0, kLinear = 1 };

/// Fully connected stack: ReLU on every hidden layer, tanh or identity on the output.
struct MlpSpec {
  int input_dim = 15;
  std::vector<int> hidden_dims{512, 512, 256, 128};
  int output_dim = 3;
  OutputActivation output_activation = OutputActivation::kTanh;

  /// input, hidden..., output
  std::vector<int> layer_dims() const;
  std::size_t parameter_count() const;
  void validate() const;

  bool operator==(const MlpSpec&) const = default;
};

MlpSpec actor_spec(int obs_dim, int action_dim, std::vector<int> hidden);
MlpSpec critic_spec(int obs_dim, int action_dim, std::vector<int> hidden);

template <typename T>
using MatrixT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using VectorT = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
struct DenseLayer {
  MatrixT<T> weight;  ///< out x in
  VectorT<T> bias;    ///< out
};

/// Weights and biases of one network. `version` changes whenever the values
/// are modified through the library, so activation caches can detect staleness.
template <typename T>
struct BasicParamSet {
  std::vector<DenseLayer<T>> layers;
  std::uint64_t version = 0;

  static BasicParamSet zeros_like(const MlpSpec& spec);

  template <typename U>
  BasicParamSet<U> cast() const {
    BasicParamSet<U> out;
    out.layers.reserve(layers.size());
    for (const auto& l : layers) out.layers.push_back({l.weight.template cast<U>(), l.bias.template cast<U>()});
    out.version = version;
    return out;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  /// Visits every scalar in checkpoint order (per layer: weight row-major, then bias).
  template <typename F>
  void for_each(F&& f) {
    for (auto& l : layers) {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c) f(l.weight(r, c));
      for (Eigen::Index r = 0; r < l.bias.size(); ++r) f(l.bias(r));
    }
  }
  template <typename F>
  void for_each(F&& f) const {
    for (const auto& l : layers) {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c) f(l.weight(r, c));
      for (Eigen::Index r = 0; r < l.bias.size(); ++r) f(l.bias(r));
    }
  }

  bool all_finite() const {
    for (const auto& l : layers)
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }

  bool same_values(const BasicParamSet& o) const {
    if (layers.size() != o.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (layers[i].weight != o.layers[i].weight || layers[i].bias != o.layers[i].bias) return false;
    }
    return true;
  }
};

using ParamSet = BasicParamSet<float>;

template <typename T>
struct ActivationCache {
  std::vector<MatrixT<T>> inputs;  ///< input to each layer, in x batch
  std::vector<MatrixT<T>> pre;     ///< pre-activation of each layer, out x batch
  MatrixT<T> output;
  std::uint64_t params_version = 0;
  const void* params_identity = nullptr;
};

template <typename T>
struct Gradients {
  BasicParamSet<T> params;
  MatrixT<T> input;
};

template <typename T>
void check_shapes(const BasicParamSet<T>& params, const MlpSpec& spec) {
  const auto dims = spec.layer_dims();
  if (params.layers.size() + 1 != dims.size()) throw UsageError("parameter set does not match network spec");
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& l = params.layers[i];
    if (l.weight.rows() != dims[i + 1] || l.weight.cols() != dims[i] || l.bias.size() != dims[i + 1]) {
      throw UsageError(fmt::format("layer {} shape mismatch", i));
    }
  }
}

template <typename T>
BasicParamSet<T> BasicParamSet<T>::zeros_like(const MlpSpec& spec) {
  BasicParamSet<T> p;
  const auto dims = spec.layer_dims();
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    p.layers.push_back({MatrixT<T>::Zero(dims[i + 1], dims[i]), VectorT<T>::Zero(dims[i + 1])});
  }
  return p;
}

/// Kaiming-style uniform init: weights ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)), so
/// Var = 2/fan_in; biases zero.
ParamSet init_params(const MlpSpec& spec, RngStream& rng);

/// input is input_dim x batch (one sample per column).
template <typename T>
MatrixT<T> forward(const BasicParamSet<T>& params, const MlpSpec& spec, const MatrixT<T>& input,
                   ActivationCache<T>* cache = nullptr) {
  check_shapes(params, spec);
  if (input.rows() != spec.input_dim) {
    throw UsageError(fmt::format("forward: input has {} rows, network expects {}", input.rows(), spec.input_dim));
  }
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
    cache->params_version = params.version;
    cache->params_identity = &params;
  }
  MatrixT<T> x = input;
  const std::size_t n = params.layers.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = params.layers[i];
    MatrixT<T> z(l.weight.rows(), x.cols());
    z.noalias() = l.weight * x;
    z.colwise() += l.bias;
    if (cache) {
      cache->inputs.push_back(std::move(x));
      cache->pre.push_back(z);
    }
    if (i + 1 < n) {
      x = z.cwiseMax(T(0));
    } else if (spec.output_activation == OutputActivation::kTanh) {
      x = z.array().tanh().matrix();
    } else {
      x = std::move(z);
    }
  }
  if (cache) cache->output = x;
  return x;
}

/// Reverse-mode gradients of sum(output_gradient .* output) w.r.t. parameters and input.
template <typename T>
Gradients<T> backward(const BasicParamSet<T>& params, const MlpSpec& spec, const ActivationCache<T>& cache,
                      const MatrixT<T>& output_gradient) {
  check_shapes(params, spec);
  if (cache.params_identity != &params || cache.params_version != params.version ||
      cache.pre.size() != params.layers.size()) {
    throw UsageError("backward: activation cache does not belong to this parameter state");
  }
  if (output_gradient.rows() != cache.output.rows() || output_gradient.cols() != cache.output.cols()) {
    throw UsageError("backward: output gradient shape mismatch");
  }
  Gradients<T> g;
  g.params = BasicParamSet<T>::zeros_like(spec);
  const std::size_t n = params.layers.size();
  MatrixT<T> delta;
  if (spec.output_activation == OutputActivation::kTanh) {
    delta = output_gradient.cwiseProduct((T(1) - cache.output.array().square()).matrix());
  } else {
    delta = output_gradient;
  }
  for (std::size_t k = n; k-- > 0;) {
    const auto& l = params.layers[k];
    g.params.layers[k].weight.noalias() = delta * cache.inputs[k].transpose();
    g.params.layers[k].bias = delta.rowwise().sum();
    MatrixT<T> upstream(l.weight.cols(), delta.cols());
    upstream.noalias() = l.weight.transpose() * delta;
    if (k > 0) {
      delta = upstream.cwiseProduct((cache.pre[k - 1].array() > T(0)).template cast<T>().matrix());
    } else {
      g.input = std::move(upstream);
    }
  }
  return g;
}

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  ParamSet m;
  ParamSet v;

  static AdamState for_params(const ParamSet& params, AdamConfig config);
};

/// One bias-corrected Adam step. `learning_rate` overrides the configured rate
/// when positive (used by learning-rate schedules).
void adam_update(ParamSet& params, const ParamSet& grads, AdamState& state, double learning_rate = -1.0);

/// target <- tau * source + (1 - tau) * target, coordinate-wise.
void soft_update(ParamSet& target, const ParamSet& source, double tau);

// Checkpoint format, little-endian:
//   "PADFALL1" | u32 format_version | u32 input_dim | u32 output_dim |
//   u32 hidden_count | u32 hidden[hidden_count] | u32 output_activation |
//   f32 values in for_each order.
inline constexpr char kCheckpointMagic[8] = {'P', 'A', 'D', 'F', 'A', 'L', 'L', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const MlpSpec& spec, const ParamSet& params);
/// Throws ConfigError on malformed input.
std::pair<MlpSpec, ParamSet> decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::string& path, const MlpSpec& spec, const ParamSet& params);
std::pair<MlpSpec, ParamSet> load_checkpoint(const std::string& path);

}  // namespace padfall
