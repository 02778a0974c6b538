#include "wbmm/diffusion.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

namespace wbmm {

NoiseSchedule make_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw std::invalid_argument("schedule needs at least one step");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
    throw std::invalid_argument("beta range must satisfy 0 < beta_start <= beta_end < 1");
  }
  NoiseSchedule s;
  s.beta.resize(steps);
  s.alpha_bar.resize(steps);
  double prod = 1.0;
  for (int k = 0; k < steps; ++k) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(k) / (steps - 1);
    s.beta[k] = beta_start + frac * (beta_end - beta_start);
    prod *= 1.0 - s.beta[k];
    s.alpha_bar[k] = prod;
  }
  return s;
}

Eigen::VectorXd forward_sample(const Eigen::VectorXd& a0, int k, const Eigen::VectorXd& eps,
                               const NoiseSchedule& s) {
  if (k < 1 || k > s.steps()) throw std::invalid_argument("diffusion step out of range");
  if (eps.size() != a0.size()) throw std::invalid_argument("noise dimension mismatch");
  const double ab = s.alpha_bar[k - 1];
  return std::sqrt(ab) * a0 + std::sqrt(1.0 - ab) * eps;
}

Eigen::VectorXd Action::flat() const {
  Eigen::VectorXd v(kActionDim);
  v << position, rotvec;
  return v;
}

Action Action::from_flat(const Eigen::VectorXd& v) {
  if (v.size() != kActionDim) throw std::invalid_argument("action must be 6-dimensional");
  Action a;
  a.position = v.head<3>();
  a.rotvec = v.tail<3>();
  const double angle = a.rotvec.norm();
  if (angle > M_PI) {
    // Wrap to the equivalent rotation of magnitude <= pi.
    const double wrapped = std::fmod(angle + M_PI, 2.0 * M_PI) - M_PI;
    a.rotvec *= wrapped / angle;
  }
  return a;
}

PoseSE3 Action::pose() const {
  PoseSE3 p;
  p.rotation = rotation_exp(rotvec);
  p.translation = position;
  return p;
}

Action Action::from_pose(const PoseSE3& p) {
  Action a;
  a.position = p.translation;
  a.rotvec = rotation_log(p.rotation);
  return a;
}

Eigen::VectorXd step_embedding(int k, int dim) {
  Eigen::VectorXd e(dim);
  const int half = dim / 2;
  for (int j = 0; j < half; ++j) {
    const double freq = std::pow(10000.0, -static_cast<double>(j) / half);
    e[2 * j] = std::sin(k * freq);
    e[2 * j + 1] = std::cos(k * freq);
  }
  if (dim % 2 == 1) e[dim - 1] = 0.0;
  return e;
}

Denoiser::Denoiser(int action_dim, int cond_dim, int k_embed_dim, const std::vector<int>& hidden,
                   std::uint64_t seed)
    : action_dim_(action_dim),
      cond_dim_(cond_dim),
      k_embed_dim_(k_embed_dim),
      net_(action_dim + k_embed_dim + cond_dim, hidden, action_dim) {
  net_.init_weights(seed);
}

Eigen::VectorXd Denoiser::assemble_input(const Eigen::VectorXd& a_k, int k,
                                         const Eigen::VectorXd& h) const {
  if (a_k.size() != action_dim_ || h.size() != cond_dim_) {
    throw std::invalid_argument("denoiser input dimension mismatch");
  }
  Eigen::VectorXd in(action_dim_ + k_embed_dim_ + cond_dim_);
  in << a_k, step_embedding(k, k_embed_dim_), h;
  return in;
}

Eigen::VectorXd Denoiser::predict(const Eigen::VectorXd& a_k, int k,
                                  const Eigen::VectorXd& h) const {
  return net_.forward(assemble_input(a_k, k, h));
}

std::vector<DiffusionSample> make_training_samples(
    const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& batch,
    const NoiseSchedule& s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> step_dist(1, s.steps());
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<DiffusionSample> out;
  out.reserve(batch.size());
  for (const auto& [a0, h] : batch) {
    DiffusionSample sample;
    sample.a0 = a0;
    sample.h = h;
    sample.k = step_dist(rng);
    sample.eps.resize(a0.size());
    for (Eigen::Index i = 0; i < a0.size(); ++i) sample.eps[i] = normal(rng);
    sample.a_k = forward_sample(a0, sample.k, sample.eps, s);
    out.push_back(std::move(sample));
  }
  return out;
}

double diffusion_loss(
    const std::vector<DiffusionSample>& samples,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&, int, const Eigen::VectorXd&)>&
        predict) {
  if (samples.empty()) throw std::invalid_argument("empty sample batch");
  double loss = 0.0;
  for (const DiffusionSample& s : samples) {
    loss += (s.eps - predict(s.a_k, s.k, s.h)).squaredNorm();
  }
  return loss / static_cast<double>(samples.size());
}

double loss_and_grad(const Denoiser& net,
                     const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& batch,
                     const NoiseSchedule& s, std::uint64_t seed, std::vector<double>& grad) {
  if (batch.empty()) throw std::invalid_argument("empty training batch");
  grad.assign(net.net().num_params(), 0.0);

  const std::vector<DiffusionSample> samples = make_training_samples(batch, s, seed);
  Mlp::Workspace ws;
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  for (const DiffusionSample& sample : samples) {
    const Eigen::VectorXd in = net.assemble_input(sample.a_k, sample.k, sample.h);
    const Eigen::VectorXd eps_hat = net.net().forward(in, ws);
    const Eigen::VectorXd resid = eps_hat - sample.eps;
    loss += resid.squaredNorm() * inv_n;
    net.net().backward(2.0 * inv_n * resid, ws, grad);
  }
  return loss;
}

Eigen::VectorXd reverse_sample(const Denoiser& net, const Eigen::VectorXd& h,
                               const NoiseSchedule& s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int d = net.action_dim();

  Eigen::VectorXd a(d);
  for (int i = 0; i < d; ++i) a[i] = normal(rng);

  for (int k = s.steps(); k >= 1; --k) {
    const double beta = s.beta[k - 1];
    const double ab = s.alpha_bar[k - 1];
    const Eigen::VectorXd eps_hat = net.predict(a, k, h);
    a = (a - (beta / std::sqrt(1.0 - ab)) * eps_hat) / std::sqrt(1.0 - beta);
    if (k > 1) {
      const double sigma = std::sqrt(beta);
      for (int i = 0; i < d; ++i) a[i] += sigma * normal(rng);
    }
  }
  return a;
}

std::vector<double> train(Denoiser& net,
                          const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& dataset,
                          const NoiseSchedule& s, const TrainConfig& cfg) {
  if (dataset.empty()) throw std::invalid_argument("empty training dataset");

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<size_t> pick(0, dataset.size() - 1);
  AdamOptimizer opt(net.net().num_params(), cfg.learning_rate);
  std::vector<double> grad;
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> batch;
  std::vector<double> history;
  history.reserve(cfg.steps);

  double initial_loss = -1.0;
  for (int step = 0; step < cfg.steps; ++step) {
    batch.clear();
    for (int i = 0; i < cfg.batch_size; ++i) batch.push_back(dataset[pick(rng)]);
    const std::uint64_t noise_seed = rng();
    const double loss = loss_and_grad(net, batch, s, noise_seed, grad);
    if (initial_loss < 0.0) initial_loss = loss;
    if (loss > cfg.divergence_factor * initial_loss) {
      throw std::runtime_error("diffusion training diverged at step " + std::to_string(step) +
                               ": loss " + std::to_string(loss) + " vs initial " +
                               std::to_string(initial_loss));
    }
    opt.step(net.net().params(), grad);
    history.push_back(loss);
  }
  return history;
}

Eigen::VectorXd GoalPolicy::normalize_h(const Eigen::VectorXd& h_raw) const {
  return (h_raw - h_mean).cwiseQuotient(h_std);
}

Action GoalPolicy::sample_goal(const Eigen::VectorXd& h_raw, std::uint64_t seed) const {
  const Eigen::VectorXd a_norm = reverse_sample(net, normalize_h(h_raw), schedule, seed);
  return Action::from_flat(a_norm.cwiseProduct(a_std) + a_mean);
}

namespace {

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_f64(std::ofstream& out, const double* data, size_t n) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
}

std::uint32_t read_u32(std::ifstream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void read_f64(std::ifstream& in, double* data, size_t n) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
}

constexpr char kMagic[8] = {'W', 'B', 'M', 'M', 'P', 'O', 'L', '1'};

}  // namespace

void GoalPolicy::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, static_cast<std::uint32_t>(net.action_dim()));
  write_u32(out, static_cast<std::uint32_t>(net.cond_dim()));
  write_u32(out, static_cast<std::uint32_t>(net.k_embed_dim()));
  const std::vector<int>& dims = net.net().dims();
  write_u32(out, static_cast<std::uint32_t>(dims.size()));
  for (int d : dims) write_u32(out, static_cast<std::uint32_t>(d));
  write_u32(out, static_cast<std::uint32_t>(schedule.steps()));
  const double beta0 = schedule.beta[0];
  const double beta1 = schedule.beta[schedule.steps() - 1];
  write_f64(out, &beta0, 1);
  write_f64(out, &beta1, 1);
  write_f64(out, h_mean.data(), static_cast<size_t>(h_mean.size()));
  write_f64(out, h_std.data(), static_cast<size_t>(h_std.size()));
  write_f64(out, a_mean.data(), static_cast<size_t>(a_mean.size()));
  write_f64(out, a_std.data(), static_cast<size_t>(a_std.size()));
  write_f64(out, net.net().params().data(), net.net().params().size());
}

GoalPolicy GoalPolicy::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("not a policy checkpoint: " + path);
  }
  const int action_dim = static_cast<int>(read_u32(in));
  const int cond_dim = static_cast<int>(read_u32(in));
  const int k_embed = static_cast<int>(read_u32(in));
  const int n_dims = static_cast<int>(read_u32(in));
  std::vector<int> dims(n_dims);
  for (int& d : dims) d = static_cast<int>(read_u32(in));
  const int k_steps = static_cast<int>(read_u32(in));
  double beta0 = 0, beta1 = 0;
  read_f64(in, &beta0, 1);
  read_f64(in, &beta1, 1);

  GoalPolicy policy;
  std::vector<int> hidden(dims.begin() + 1, dims.end() - 1);
  policy.net = Denoiser(action_dim, cond_dim, k_embed, hidden, 0);
  policy.schedule = make_schedule(k_steps, beta0, beta1);
  policy.h_mean.resize(cond_dim);
  policy.h_std.resize(cond_dim);
  policy.a_mean.resize(action_dim);
  policy.a_std.resize(action_dim);
  read_f64(in, policy.h_mean.data(), static_cast<size_t>(cond_dim));
  read_f64(in, policy.h_std.data(), static_cast<size_t>(cond_dim));
  read_f64(in, policy.a_mean.data(), static_cast<size_t>(action_dim));
  read_f64(in, policy.a_std.data(), static_cast<size_t>(action_dim));
  read_f64(in, policy.net.net().params().data(), policy.net.net().params().size());
  if (!in) throw std::runtime_error("truncated policy checkpoint: " + path);
  return policy;
}

GoalPolicy fit_goal_policy(const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& data,
                           int k_steps, double beta_start, double beta_end,
                           const std::vector<int>& hidden, int k_embed_dim,
                           const TrainConfig& cfg, std::vector<double>* history) {
  if (data.empty()) throw std::invalid_argument("empty policy dataset");
  const int cond_dim = static_cast<int>(data[0].first.size());
  const int action_dim = static_cast<int>(data[0].second.size());

  GoalPolicy policy;
  policy.h_mean = Eigen::VectorXd::Zero(cond_dim);
  policy.a_mean = Eigen::VectorXd::Zero(action_dim);
  for (const auto& [h, a] : data) {
    policy.h_mean += h;
    policy.a_mean += a;
  }
  const double inv_n = 1.0 / static_cast<double>(data.size());
  policy.h_mean *= inv_n;
  policy.a_mean *= inv_n;

  Eigen::VectorXd h_var = Eigen::VectorXd::Zero(cond_dim);
  Eigen::VectorXd a_var = Eigen::VectorXd::Zero(action_dim);
  for (const auto& [h, a] : data) {
    h_var += (h - policy.h_mean).cwiseAbs2();
    a_var += (a - policy.a_mean).cwiseAbs2();
  }
  // Guard degenerate (constant) dimensions.
  policy.h_std = (h_var * inv_n).cwiseSqrt().cwiseMax(1e-6);
  policy.a_std = (a_var * inv_n).cwiseSqrt().cwiseMax(1e-6);

  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> normalized;
  normalized.reserve(data.size());
  for (const auto& [h, a] : data) {
    normalized.emplace_back((a - policy.a_mean).cwiseQuotient(policy.a_std),
                            (h - policy.h_mean).cwiseQuotient(policy.h_std));
  }

  policy.schedule = make_schedule(k_steps, beta_start, beta_end);
  policy.net = Denoiser(action_dim, cond_dim, k_embed_dim, hidden, cfg.seed);
  std::vector<double> hist = train(policy.net, normalized, policy.schedule, cfg);
  if (history) *history = std::move(hist);
  return policy;
}

}  // namespace wbmm
