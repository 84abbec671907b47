#include "tobs/deep_filter.hpp"

#include <algorithm>
#include <cmath>

#include "tobs/parallel.hpp"

namespace tobs::deep {

namespace {

constexpr Eigen::Index kBlock = 512;

bool squashed(const Mlp& net, std::size_t k) {
  return !(net.linear_output && k + 1 == net.layers.size());
}

void apply_activation(Activation a, Matrix& m) {
  auto v = m.array();
  switch (a) {
    case Activation::Tanh: v = v.tanh(); break;
    case Activation::Logistic: v = 1.0 / (1.0 + (-v).exp()); break;
    case Activation::Relu: v = v.max(0.0); break;
  }
}

// Derivative of the activation expressed through its output (and input for ReLU).
Matrix activation_slope(Activation a, const Matrix& out, const Matrix& pre) {
  switch (a) {
    case Activation::Tanh: return (1.0 - out.array().square()).matrix();
    case Activation::Logistic: return (out.array() * (1.0 - out.array())).matrix();
    case Activation::Relu: return (pre.array() > 0.0).cast<double>().matrix();
  }
  return Matrix();
}

void check(const Mlp& net, const Dataset& data) {
  net.validate();
  data.validate();
  require(data.size() > 0, "loss: dataset is empty");
  require(data.dim() == net.input_dim(), "loss: dataset dimension " + std::to_string(data.dim()) +
                                             " does not match network input " +
                                             std::to_string(net.input_dim()));
}

struct BlockResult {
  double sse = 0.0;
  std::vector<Matrix> gW;
  std::vector<Vector> gb;
};

BlockResult block_loss_gradient(const Mlp& net, const Dataset& data, Eigen::Index begin,
                                Eigen::Index count, double inv_n) {
  const std::size_t L = net.layers.size();
  std::vector<Matrix> act(L + 1), pre(L);
  act[0] = (data.Z.middleCols(begin, count).colwise() - net.input_mean).array().colwise() /
           net.input_scale.array();
  for (std::size_t k = 0; k < L; ++k) {
    pre[k] = net.layers[k].W * act[k];
    pre[k].colwise() += net.layers[k].b;
    act[k + 1] = pre[k];
    if (squashed(net, k)) apply_activation(net.activation, act[k + 1]);
  }
  const Eigen::RowVectorXd out = (net.output_offset + net.output_scale * act[L].row(0).array()).matrix();
  const Eigen::RowVectorXd resid = out - data.labels.segment(begin, count).transpose();

  BlockResult r;
  r.sse = resid.squaredNorm();
  r.gW.resize(L);
  r.gb.resize(L);
  Matrix delta = (2.0 * inv_n * net.output_scale) * resid;
  for (std::size_t k = L; k-- > 0;) {
    if (squashed(net, k)) delta = delta.cwiseProduct(activation_slope(net.activation, act[k + 1], pre[k]));
    r.gW[k] = delta * act[k].transpose();
    r.gb[k] = delta.rowwise().sum();
    if (k > 0) delta = net.layers[k].W.transpose() * delta;
  }
  return r;
}

Vector flatten(const std::vector<Matrix>& gW, const std::vector<Vector>& gb, Eigen::Index total) {
  Vector g(total);
  Eigen::Index at = 0;
  for (std::size_t k = 0; k < gW.size(); ++k) {
    for (Eigen::Index r = 0; r < gW[k].rows(); ++r)
      for (Eigen::Index c = 0; c < gW[k].cols(); ++c) g[at++] = gW[k](r, c);
    g.segment(at, gb[k].size()) = gb[k];
    at += gb[k].size();
  }
  return g;
}

}  // namespace

LossGradient loss_and_gradient(const Mlp& net, const Dataset& data) {
  check(net, data);
  const Eigen::Index n = data.size();
  const Eigen::Index blocks = (n + kBlock - 1) / kBlock;
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<BlockResult> parts(static_cast<std::size_t>(blocks));
#pragma omp parallel for schedule(static) num_threads(worker_count())
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index begin = b * kBlock;
    parts[static_cast<std::size_t>(b)] =
        block_loss_gradient(net, data, begin, std::min(kBlock, n - begin), inv_n);
  }

  // Fixed-order reduction.
  BlockResult total = std::move(parts[0]);
  for (std::size_t b = 1; b < parts.size(); ++b) {
    total.sse += parts[b].sse;
    for (std::size_t k = 0; k < total.gW.size(); ++k) {
      total.gW[k] += parts[b].gW[k];
      total.gb[k] += parts[b].gb[k];
    }
  }
  return {total.sse * inv_n, flatten(total.gW, total.gb, net.parameter_count())};
}

double evaluate_rmse(const Mlp& net, const Dataset& data) {
  check(net, data);
  const Eigen::Index n = data.size();
  const Eigen::Index blocks = (n + kBlock - 1) / kBlock;
  std::vector<double> sse(static_cast<std::size_t>(blocks), 0.0);
#pragma omp parallel for schedule(static) num_threads(worker_count())
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index begin = b * kBlock;
    const Eigen::Index cnt = std::min(kBlock, n - begin);
    const Vector out = forward_batch(net, data.Z.middleCols(begin, cnt));
    sse[static_cast<std::size_t>(b)] = (out - data.labels.segment(begin, cnt)).squaredNorm();
  }
  double s = 0.0;
  for (double v : sse) s += v;
  return std::sqrt(s / static_cast<double>(n));
}

void TrainConfig::validate() const {
  optimizer.validate();
  require(output_margin >= 1.0, "train: output_margin must be >= 1");
}

void fit_normalization(Mlp& net, const Dataset& train_set, const TrainConfig& cfg) {
  require(train_set.size() > 0, "fit_normalization: empty training set");
  require(train_set.dim() == net.input_dim(), "fit_normalization: dimension mismatch");
  const auto n = static_cast<double>(train_set.size());
  if (cfg.standardize_inputs) {
    net.input_mean = train_set.Z.rowwise().mean();
    const Matrix centered = train_set.Z.colwise() - net.input_mean;
    net.input_scale = (centered.array().square().rowwise().sum() / n).sqrt().matrix();
    for (Eigen::Index i = 0; i < net.input_scale.size(); ++i)
      if (!(net.input_scale[i] > 0.0)) net.input_scale[i] = 1.0;
  } else {
    net.input_mean = Vector::Zero(net.input_dim());
    net.input_scale = Vector::Ones(net.input_dim());
  }
  net.output_offset = 0.0;
  net.output_scale = 1.0;
  if (cfg.fit_output_scale && !net.linear_output && net.activation == Activation::Tanh) {
    const double mean = train_set.labels.mean();
    const double spread = (train_set.labels.array() - mean).abs().maxCoeff();
    net.output_offset = mean;
    net.output_scale = spread > 0.0 ? cfg.output_margin * spread : 1.0;
  }
}

TrainResult train(const Mlp& net, const Dataset& train_set, const TrainConfig& cfg,
                  const optim::Monitor& monitor) {
  cfg.validate();
  check(net, train_set);
  Mlp work = net;
  const optim::Objective objective = [&work, &train_set](const Vector& theta, Vector& grad) {
    work.set_parameters(theta);
    auto lg = loss_and_gradient(work, train_set);
    grad = std::move(lg.gradient);
    return lg.loss;
  };
  const auto res = optim::minimize(objective, net.parameters(), cfg.optimizer, monitor);

  TrainResult out;
  out.net = net;
  out.net.set_parameters(res.x);
  out.loss_history = res.history;
  out.status = res.status;
  out.iterations = res.iterations;
  out.warning = res.warning();
  return out;
}

TrainResult train_from_scratch(const Dataset& train_set, const TrainConfig& cfg,
                               const optim::Monitor& monitor) {
  Architecture arch = cfg.arch;
  arch.input_dim = train_set.dim();
  Mlp net = make_mlp(arch, cfg.init_seed);
  fit_normalization(net, train_set, cfg);
  return train(net, train_set, cfg, monitor);
}

namespace reference {

namespace {

double act(Activation a, double v) {
  switch (a) {
    case Activation::Tanh: return std::tanh(v);
    case Activation::Logistic: return 1.0 / (1.0 + std::exp(-v));
    case Activation::Relu: return v > 0.0 ? v : 0.0;
  }
  return v;
}

double slope(Activation a, double pre, double out) {
  switch (a) {
    case Activation::Tanh: return 1.0 - out * out;
    case Activation::Logistic: return out * (1.0 - out);
    case Activation::Relu: return pre > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

// Activations of every layer for one sample; acts[0] is the normalized input.
void forward_trace(const Mlp& net, const Vector& z, std::vector<std::vector<double>>& pres,
                   std::vector<std::vector<double>>& acts) {
  const std::size_t L = net.layers.size();
  acts.assign(L + 1, {});
  pres.assign(L, {});
  acts[0].resize(static_cast<std::size_t>(z.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i)
    acts[0][static_cast<std::size_t>(i)] = (z[i] - net.input_mean[i]) / net.input_scale[i];
  for (std::size_t k = 0; k < L; ++k) {
    const auto& W = net.layers[k].W;
    const auto& b = net.layers[k].b;
    pres[k].assign(static_cast<std::size_t>(W.rows()), 0.0);
    acts[k + 1].assign(static_cast<std::size_t>(W.rows()), 0.0);
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      double s = b[r];
      for (Eigen::Index c = 0; c < W.cols(); ++c) s += W(r, c) * acts[k][static_cast<std::size_t>(c)];
      pres[k][static_cast<std::size_t>(r)] = s;
      acts[k + 1][static_cast<std::size_t>(r)] =
          (net.linear_output && k + 1 == L) ? s : act(net.activation, s);
    }
  }
}

}  // namespace

double forward(const Mlp& net, const Vector& z) {
  net.validate();
  require(z.size() == net.input_dim(), "reference forward: dimension mismatch");
  std::vector<std::vector<double>> pres, acts;
  forward_trace(net, z, pres, acts);
  return net.output_offset + net.output_scale * acts.back()[0];
}

LossGradient loss_and_gradient(const Mlp& net, const Dataset& data) {
  check(net, data);
  const std::size_t L = net.layers.size();
  const auto n = static_cast<double>(data.size());
  Vector grad = Vector::Zero(net.parameter_count());
  double sse = 0.0;
  std::vector<std::vector<double>> pres, acts;

  for (Eigen::Index j = 0; j < data.size(); ++j) {
    forward_trace(net, data.Z.col(j), pres, acts);
    const double out = net.output_offset + net.output_scale * acts[L][0];
    const double r = out - data.labels[j];
    sse += r * r;

    std::vector<double> delta{2.0 * r / n * net.output_scale};
    // Offsets of each layer's block inside the flat gradient.
    std::vector<Eigen::Index> offset(L, 0);
    for (std::size_t k = 1; k < L; ++k)
      offset[k] = offset[k - 1] + net.layers[k - 1].W.size() + net.layers[k - 1].b.size();
    for (std::size_t k = L; k-- > 0;) {
      const auto& W = net.layers[k].W;
      if (!(net.linear_output && k + 1 == L))
        for (std::size_t r2 = 0; r2 < delta.size(); ++r2)
          delta[r2] *= slope(net.activation, pres[k][r2], acts[k + 1][r2]);
      for (Eigen::Index r2 = 0; r2 < W.rows(); ++r2) {
        for (Eigen::Index c = 0; c < W.cols(); ++c)
          grad[offset[k] + r2 * W.cols() + c] += delta[static_cast<std::size_t>(r2)] * acts[k][static_cast<std::size_t>(c)];
        grad[offset[k] + W.size() + r2] += delta[static_cast<std::size_t>(r2)];
      }
      if (k > 0) {
        std::vector<double> prev(static_cast<std::size_t>(W.cols()), 0.0);
        for (Eigen::Index c = 0; c < W.cols(); ++c)
          for (Eigen::Index r2 = 0; r2 < W.rows(); ++r2)
            prev[static_cast<std::size_t>(c)] += W(r2, c) * delta[static_cast<std::size_t>(r2)];
        delta = std::move(prev);
      }
    }
  }
  return {sse / n, grad};
}

}  // namespace reference

}  // namespace tobs::deep
