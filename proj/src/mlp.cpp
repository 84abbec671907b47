#include "tobs/mlp.hpp"

#include <cmath>

#include "tobs/rng.hpp"

namespace tobs::deep {

const char* to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Logistic: return "logistic";
    case Activation::Relu: return "relu";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "logistic") return Activation::Logistic;
  if (s == "relu") return Activation::Relu;
  throw InvalidInput("unknown activation '" + s + "'");
}

Eigen::Index Mlp::parameter_count() const {
  Eigen::Index c = 0;
  for (const auto& l : layers) c += l.W.size() + l.b.size();
  return c;
}

Vector Mlp::parameters() const {
  Vector theta(parameter_count());
  Eigen::Index at = 0;
  for (const auto& l : layers) {
    for (Eigen::Index r = 0; r < l.W.rows(); ++r)
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) theta[at++] = l.W(r, c);
    theta.segment(at, l.b.size()) = l.b;
    at += l.b.size();
  }
  return theta;
}

void Mlp::set_parameters(const Vector& theta) {
  require(theta.size() == parameter_count(), "set_parameters: wrong parameter count");
  Eigen::Index at = 0;
  for (auto& l : layers) {
    for (Eigen::Index r = 0; r < l.W.rows(); ++r)
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) l.W(r, c) = theta[at++];
    l.b = theta.segment(at, l.b.size());
    at += l.b.size();
  }
}

void Mlp::validate() const {
  require(!layers.empty(), "mlp: no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    require(layers[k].b.size() == layers[k].W.rows(), "mlp: bias/weight row mismatch in layer " + std::to_string(k + 1));
    if (k > 0)
      require(layers[k].W.cols() == layers[k - 1].W.rows(),
              "mlp: layer " + std::to_string(k + 1) + " input does not match previous output");
  }
  require(layers.back().W.rows() == 1, "mlp: last layer must have one output");
  require(input_mean.size() == input_dim() && input_scale.size() == input_dim(),
          "mlp: normalization vectors must have input_dim entries");
  require((input_scale.array() > 0.0).all(), "mlp: input scales must be positive");
  require(output_scale > 0.0, "mlp: output scale must be positive");
}

Mlp make_mlp(const Architecture& arch, std::uint64_t seed) {
  require(arch.input_dim >= 1 && arch.width >= 1 && arch.hidden_layers >= 0,
          "make_mlp: bad architecture");
  Rng rng(seed);
  Mlp net;
  net.activation = arch.activation;
  net.linear_output = arch.linear_output;
  int in = arch.input_dim;
  for (int k = 0; k <= arch.hidden_layers; ++k) {
    const int out = k == arch.hidden_layers ? 1 : arch.width;
    const double bound = std::sqrt(6.0 / (in + out));
    Layer l{Matrix(out, in), Vector::Zero(out)};
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) l.W(r, c) = rng.uniform(-bound, bound);
    net.layers.push_back(std::move(l));
    in = out;
  }
  net.input_mean = Vector::Zero(arch.input_dim);
  net.input_scale = Vector::Ones(arch.input_dim);
  return net;
}

namespace {

template <typename Derived>
void activate(Activation a, Eigen::ArrayBase<Derived>& v) {
  switch (a) {
    case Activation::Tanh: v = v.tanh(); break;
    case Activation::Logistic: v = 1.0 / (1.0 + (-v).exp()); break;
    case Activation::Relu: v = v.max(0.0); break;
  }
}

}  // namespace

Vector forward_batch(const Mlp& net, const Matrix& Z) {
  require(Z.rows() == net.input_dim(), "forward: input has " + std::to_string(Z.rows()) +
                                           " rows, expected " + std::to_string(net.input_dim()));
  Matrix a = (Z.colwise() - net.input_mean).array().colwise() / net.input_scale.array();
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    Matrix pre = net.layers[k].W * a;
    pre.colwise() += net.layers[k].b;
    if (!(net.linear_output && k + 1 == net.layers.size())) {
      auto arr = pre.array();
      activate(net.activation, arr);
    }
    a = std::move(pre);
  }
  return (net.output_offset + net.output_scale * a.row(0).array()).matrix().transpose();
}

double forward(const Mlp& net, const Eigen::Ref<const Vector>& z) {
  require(z.size() == net.input_dim(), "forward: input has length " + std::to_string(z.size()) +
                                           ", expected " + std::to_string(net.input_dim()));
  return forward_batch(net, Matrix(z))[0];
}

}  // namespace tobs::deep
