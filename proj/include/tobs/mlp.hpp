#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tobs/common.hpp"

namespace tobs::deep {

enum class Activation { Tanh, Logistic, Relu };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct Layer {
  Matrix W;  ///< out x in
  Vector b;  ///< out
};

/// Feedforward scalar network u(z) = offset + scale * g_M(...g_1(zn)), with
/// g_k(v) = act(W_k v + b_k) and zn the standardized input (z - mean) / sd.
/// Every layer applies the activation unless `linear_output` is set, in which
/// case the last layer is affine.
struct Mlp {
  std::vector<Layer> layers;
  Activation activation = Activation::Tanh;
  bool linear_output = false;
  Vector input_mean;   ///< length p
  Vector input_scale;  ///< length p, strictly positive
  double output_offset = 0.0;
  double output_scale = 1.0;

  int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().W.cols()); }
  Eigen::Index parameter_count() const;
  /// W_1 (row-major), b_1, W_2, b_2, ...
  Vector parameters() const;
  void set_parameters(const Vector& theta);
  /// Throws InvalidInput if the layer chain or normalization is inconsistent.
  void validate() const;
};

struct Architecture {
  int input_dim = 40;
  int hidden_layers = 7;
  int width = 32;
  Activation activation = Activation::Tanh;
  bool linear_output = false;
};

/// Glorot-uniform weights, zero biases, identity normalization.
Mlp make_mlp(const Architecture& arch, std::uint64_t seed);

/// Network output for one raw (unnormalized) input window.
double forward(const Mlp& net, const Eigen::Ref<const Vector>& z);

/// Outputs for every column of Z (p x N).
Vector forward_batch(const Mlp& net, const Matrix& Z);

}  // namespace tobs::deep
