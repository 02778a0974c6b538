#include "wbmm/mlp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "wbmm/kernels.hpp"

namespace wbmm {

Mlp::Mlp(int input_dim, const std::vector<int>& hidden, int output_dim) {
  if (input_dim <= 0 || output_dim <= 0) {
    throw std::invalid_argument("mlp dimensions must be positive");
  }
  dims_.push_back(input_dim);
  for (int h : hidden) {
    if (h <= 0) throw std::invalid_argument("hidden width must be positive");
    dims_.push_back(h);
  }
  dims_.push_back(output_dim);

  int offset = 0;
  for (int l = 0; l < num_layers(); ++l) {
    w_offsets_.push_back(offset);
    offset += dims_[l + 1] * dims_[l];
    b_offsets_.push_back(offset);
    offset += dims_[l + 1];
  }
  params_.assign(offset, 0.0);
}

void Mlp::init_weights(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int l = 0; l < num_layers(); ++l) {
    const double scale = std::sqrt(1.0 / dims_[l]);
    double* w = params_.data() + w_offsets_[l];
    for (int i = 0; i < dims_[l + 1] * dims_[l]; ++i) w[i] = scale * normal(rng);
    double* b = params_.data() + b_offsets_[l];
    for (int i = 0; i < dims_[l + 1]; ++i) b[i] = 0.0;
  }
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  Workspace ws;
  return forward(x, ws);
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x, Workspace& ws) const {
  if (x.size() != input_dim()) throw std::invalid_argument("mlp input dimension mismatch");
  const int layers = num_layers();
  ws.act.resize(layers + 1);
  ws.act[0].assign(x.data(), x.data() + x.size());
  for (int l = 0; l < layers; ++l) {
    const int rows = dims_[l + 1], cols = dims_[l];
    ws.act[l + 1].resize(rows);
    kernels::dense_forward(params_.data() + w_offsets_[l], params_.data() + b_offsets_[l],
                           ws.act[l].data(), ws.act[l + 1].data(), rows, cols);
    if (l + 1 < layers) {
      kernels::tanh_forward(ws.act[l + 1].data(), ws.act[l + 1].data(), rows);
    }
  }
  return Eigen::Map<const Eigen::VectorXd>(ws.act[layers].data(), output_dim());
}

void Mlp::backward(const Eigen::VectorXd& dy, Workspace& ws, std::vector<double>& grad) const {
  if (dy.size() != output_dim()) throw std::invalid_argument("mlp output grad dimension mismatch");
  if (grad.size() != params_.size()) throw std::invalid_argument("grad buffer size mismatch");
  const int layers = num_layers();

  ws.delta_hi.assign(dy.data(), dy.data() + dy.size());
  for (int l = layers - 1; l >= 0; --l) {
    const int rows = dims_[l + 1], cols = dims_[l];
    kernels::dense_accumulate_grads(ws.delta_hi.data(), ws.act[l].data(),
                                    grad.data() + w_offsets_[l], grad.data() + b_offsets_[l],
                                    rows, cols);
    if (l == 0) break;
    ws.delta_lo.resize(cols);
    kernels::dense_backward_input(params_.data() + w_offsets_[l], ws.delta_hi.data(),
                                  ws.delta_lo.data(), rows, cols);
    // Previous layer output passed through tanh.
    kernels::tanh_backward(ws.act[l].data(), ws.delta_lo.data(), ws.delta_lo.data(), cols);
    std::swap(ws.delta_hi, ws.delta_lo);
  }
}

AdamOptimizer::AdamOptimizer(int num_params, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
      m_(static_cast<size_t>(num_params), 0.0), v_(static_cast<size_t>(num_params), 0.0) {}

void AdamOptimizer::step(std::vector<double>& params, const std::vector<double>& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw std::invalid_argument("adam buffer size mismatch");
  }
  ++t_;
  const double bias1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  kernels::adam_step(params.data(), grad.data(), m_.data(), v_.data(),
                     static_cast<int>(params.size()), lr_, beta1_, beta2_, eps_, bias1, bias2);
}

}  // namespace wbmm
