#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace wbmm {

/// Fully connected tanh network with a linear output layer. Parameters live
/// in one flat vector (weights row-major, then bias, per layer in order) so
/// the optimizer, checkpointing and finite-difference checks can treat the
/// model as a single parameter array.
class Mlp {
 public:
  Mlp() = default;
  Mlp(int input_dim, const std::vector<int>& hidden, int output_dim);

  void init_weights(std::uint64_t seed);

  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  const std::vector<int>& dims() const { return dims_; }
  int num_params() const { return static_cast<int>(params_.size()); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;

  /// Per-sample scratch: layer activations kept for the backward pass.
  struct Workspace {
    std::vector<std::vector<double>> act;    // act[0] = input, act[L] = output
    std::vector<double> delta_hi, delta_lo;  // backprop buffers
  };

  Eigen::VectorXd forward(const Eigen::VectorXd& x, Workspace& ws) const;

  /// Accumulates parameter gradients of dL/dy into `grad` (same layout as
  /// params). Requires the workspace of the matching forward call.
  void backward(const Eigen::VectorXd& dy, Workspace& ws, std::vector<double>& grad) const;

 private:
  std::vector<int> dims_;            // input, hidden..., output
  std::vector<double> params_;
  std::vector<int> w_offsets_;       // per layer: weight block offset
  std::vector<int> b_offsets_;       // per layer: bias block offset

  int num_layers() const { return static_cast<int>(dims_.size()) - 1; }
};

/// Adaptive-moment SGD state over a flat parameter vector.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(int num_params, double lr = 1e-3, double beta1 = 0.9,
                         double beta2 = 0.999, double eps = 1e-8);

  void step(std::vector<double>& params, const std::vector<double>& grad);
  double learning_rate() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

}  // namespace wbmm
