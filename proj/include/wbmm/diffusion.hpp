#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wbmm/mlp.hpp"
#include "wbmm/se3.hpp"

namespace wbmm {

/// Linear-beta DDPM schedule. alpha_bar[k-1] = prod_{s<=k} (1 - beta_s).
struct NoiseSchedule {
  Eigen::VectorXd beta;
  Eigen::VectorXd alpha_bar;

  int steps() const { return static_cast<int>(beta.size()); }
};

/// Throws std::invalid_argument unless K >= 1 and 0 < beta_start <= beta_end < 1.
NoiseSchedule make_schedule(int steps, double beta_start, double beta_end);

/// a_k = sqrt(alpha_bar_k) a0 + sqrt(1 - alpha_bar_k) eps, 1 <= k <= K.
Eigen::VectorXd forward_sample(const Eigen::VectorXd& a0, int k, const Eigen::VectorXd& eps,
                               const NoiseSchedule& s);

/// End-effector goal action: position plus axis-angle orientation, d = 6.
struct Action {
  Vec3 position = Vec3::Zero();
  Vec3 rotvec = Vec3::Zero();  // magnitude <= pi

  Eigen::VectorXd flat() const;
  static Action from_flat(const Eigen::VectorXd& v);  // wraps the rotation into <= pi
  PoseSE3 pose() const;
  static Action from_pose(const PoseSE3& p);
};

constexpr int kActionDim = 6;

/// Sinusoidal embedding of the diffusion step index.
Eigen::VectorXd step_embedding(int k, int dim);

/// Noise-prediction network eps_theta(a_k, k, h): a tanh MLP over the
/// concatenated [a_k, step_embedding(k), h].
class Denoiser {
 public:
  Denoiser() = default;
  Denoiser(int action_dim, int cond_dim, int k_embed_dim, const std::vector<int>& hidden,
           std::uint64_t seed);

  Eigen::VectorXd predict(const Eigen::VectorXd& a_k, int k, const Eigen::VectorXd& h) const;

  int action_dim() const { return action_dim_; }
  int cond_dim() const { return cond_dim_; }
  int k_embed_dim() const { return k_embed_dim_; }
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }

  Eigen::VectorXd assemble_input(const Eigen::VectorXd& a_k, int k,
                                 const Eigen::VectorXd& h) const;

 private:
  int action_dim_ = 0, cond_dim_ = 0, k_embed_dim_ = 0;
  Mlp net_;
};

/// One corrupted training sample of the noise-prediction objective.
struct DiffusionSample {
  Eigen::VectorXd a0;
  Eigen::VectorXd h;
  int k = 1;
  Eigen::VectorXd eps;
  Eigen::VectorXd a_k;
};

/// Draws (k, eps) for each batch element from `seed` and corrupts the clean
/// actions with the forward process. The sampling order is fixed, so a seed
/// pins the whole batch.
std::vector<DiffusionSample> make_training_samples(
    const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& batch,
    const NoiseSchedule& s, std::uint64_t seed);

/// Mean squared noise-prediction error of an arbitrary predictor over the
/// samples; the seam the loss oracle tests plug into.
double diffusion_loss(
    const std::vector<DiffusionSample>& samples,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&, int, const Eigen::VectorXd&)>&
        predict);

/// Loss plus reverse-mode parameter gradients for the denoiser. Batch entries
/// are (a0, h) pairs in the (normalized) action space.
double loss_and_grad(const Denoiser& net,
                     const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& batch,
                     const NoiseSchedule& s, std::uint64_t seed, std::vector<double>& grad);

/// Ancestral sampling of Eq. a_{k-1} = (a_k - beta_k/sqrt(1-alpha_bar_k) eps_hat)
/// / sqrt(1-beta_k) + sigma_k z, sigma_k^2 = beta_k, z = 0 at the final step.
/// Deterministic under a fixed seed.
Eigen::VectorXd reverse_sample(const Denoiser& net, const Eigen::VectorXd& h,
                               const NoiseSchedule& s, std::uint64_t seed);

struct TrainConfig {
  int steps = 4000;
  int batch_size = 64;
  double learning_rate = 1e-3;
  std::uint64_t seed = 7;
  double divergence_factor = 10.0;  // abort when loss exceeds this times the initial loss
};

/// Stochastic-gradient training over a dataset of (a0, h) pairs; returns the
/// per-step loss history. Throws std::runtime_error on divergence.
std::vector<double> train(Denoiser& net,
                          const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& dataset,
                          const NoiseSchedule& s, const TrainConfig& cfg);

/// Denoiser bundled with its schedule and the dataset normalization, i.e.
/// everything a rollout needs. Serialized as a little-endian binary blob:
/// magic "WBMMPOL1", layer-shape header, normalization vectors, then the flat
/// parameter array.
struct GoalPolicy {
  Denoiser net;
  NoiseSchedule schedule;
  Eigen::VectorXd h_mean, h_std;   // condition normalization
  Eigen::VectorXd a_mean, a_std;   // action normalization

  Eigen::VectorXd normalize_h(const Eigen::VectorXd& h_raw) const;
  Action sample_goal(const Eigen::VectorXd& h_raw, std::uint64_t seed) const;

  void save(const std::string& path) const;
  static GoalPolicy load(const std::string& path);
};

/// Fits a GoalPolicy to raw (h, action) pairs: computes normalization, trains
/// the denoiser, returns the loss history through `history`.
GoalPolicy fit_goal_policy(const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& data,
                           int k_steps, double beta_start, double beta_end,
                           const std::vector<int>& hidden, int k_embed_dim,
                           const TrainConfig& cfg, std::vector<double>* history = nullptr);

}  // namespace wbmm
