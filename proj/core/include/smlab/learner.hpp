#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <iosfwd>
#include <span>
#include <vector>

#include "smlab/mlp.hpp"

namespace smlab {

/// One on-policy experience: the successor action is the one the agent
/// actually executed from next_obs (never a max over actions). terminal
/// marks the episode boundary, where bootstrapping stops and next_action is
/// meaningless.
struct Transition {
  ObsIndices obs;
  ObsIndices next_obs;
  int action = 0;
  int next_action = 0;
  double reward = 0.0;
  bool terminal = false;
};

/// Keeps the transitions of the most recent episodes only (default 10),
/// evicting whole episodes FIFO.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(int max_episodes = 10) : max_episodes_(max_episodes) {}

  void begin_episode();
  void push(const Transition& t);
  std::size_t size() const { return total_; }
  int episodes() const { return static_cast<int>(episodes_.size()); }

  /// Uniform over all stored transitions.
  const Transition& sample(Rng& rng) const;

 private:
  std::deque<std::vector<Transition>> episodes_;
  std::size_t total_ = 0;
  int max_episodes_;
};

/// Exponential exploration decay with a floor:
/// eps(episode) = max(floor, eps0 * exp(-episode / tau)).
struct EpsilonSchedule {
  double eps0 = 1.0;
  double tau = 1.0;
  double floor = 0.05;

  double at(double episode) const {
    return std::max(floor, eps0 * std::exp(-episode / tau));
  }

  /// tau such that the unfloored value reaches target_eps after
  /// at_fraction of the episode budget.
  static double tau_for(long episodes, double at_fraction = 0.8,
                        double target_eps = 0.06, double eps0 = 1.0);
};

/// Epsilon-greedy over a Q-vector: uniform with probability eps, otherwise
/// the argmax with the lowest index winning ties.
template <typename Scalar>
int select_action(std::span<const Scalar> q, double eps, Rng& rng) {
  if (q.empty()) throw ContractViolation("select_action: empty Q-vector");
  if (eps > 0.0 && rng.uniform() < eps) {
    return rng.uniform_int(static_cast<int>(q.size()));
  }
  int best = 0;
  for (int i = 1; i < static_cast<int>(q.size()); ++i) {
    if (q[i] > q[best]) best = i;
  }
  return best;
}

inline int select_action(const std::vector<double>& q, double eps, Rng& rng) {
  return select_action<double>(std::span<const double>(q), eps, rng);
}

/// Scratch space for sarsa_update so the training loop never allocates.
/// Activations are stored with samples as columns.
template <typename Scalar>
struct SarsaWorkspace {
  using Matrix = typename Mlp<Scalar>::Matrix;
  std::vector<Matrix> acts;        // acts[l]: layer-l activations, hidden only
  std::vector<Matrix> next_acts;
  std::vector<Matrix> deltas;
  Gradients<Scalar> grads;
  std::vector<Scalar> q_taken;
  std::vector<Scalar> target;

  void prepare(const Mlp<Scalar>& mlp, int batch) {
    const auto& sizes = mlp.layer_sizes();
    const int hidden_layers = mlp.num_layers() - 1;
    acts.resize(hidden_layers);
    next_acts.resize(hidden_layers);
    deltas.resize(hidden_layers);
    for (int l = 0; l < hidden_layers; ++l) {
      acts[l].resize(sizes[l + 1], batch);
      next_acts[l].resize(sizes[l + 1], batch);
      deltas[l].resize(sizes[l + 1], batch);
    }
    if (grads.dw.size() != static_cast<size_t>(mlp.num_layers())) {
      grads.match_shape(mlp);
    }
    q_taken.resize(batch);
    target.resize(batch);
  }
};

namespace detail {

/// Hidden-layer forward for a batch of sparse observations. Layer-1 columns
/// are accumulated straight from the set bits; deeper layers are plain GEMM.
template <typename Scalar>
void forward_hidden_sparse(const Mlp<Scalar>& mlp,
                           std::span<const Transition> batch, bool use_next,
                           std::vector<typename Mlp<Scalar>::Matrix>& acts) {
  const int B = static_cast<int>(batch.size());
  const int hidden_layers = mlp.num_layers() - 1;
  for (int s = 0; s < B; ++s) {
    const ObsIndices& in = use_next ? batch[s].next_obs : batch[s].obs;
    acts[0].col(s) = mlp.biases[0];
    for (int k = 0; k < in.count; ++k) {
      acts[0].col(s) += mlp.weights[0].col(in.idx[k]);
    }
  }
  acts[0] = acts[0].cwiseMax(Scalar(0));
  for (int l = 1; l < hidden_layers; ++l) {
    acts[l].noalias() = mlp.weights[l] * acts[l - 1];
    acts[l].colwise() += mlp.biases[l];
    acts[l] = acts[l].cwiseMax(Scalar(0));
  }
}

}  // namespace detail

/// One optimizer step on the mean squared TD error of the batch:
///   target = reward + gamma * Q(next_obs, next_action)   (reward if terminal)
///   loss   = mean over the batch of (Q(obs, action) - target)^2
/// The target is a constant for the gradient (no backpropagation through the
/// successor value). Returns the pre-update loss. Throws TrainingError when
/// the loss is not finite.
template <typename Scalar>
double sarsa_update(Mlp<Scalar>& mlp, Adam<Scalar>& adam,
                    std::span<const Transition> batch, double gamma,
                    SarsaWorkspace<Scalar>& ws) {
  const int B = static_cast<int>(batch.size());
  if (B == 0) throw ContractViolation("sarsa_update: empty batch");
  const int L = mlp.num_layers();
  const int top = L - 1;  // output layer index
  ws.prepare(mlp, B);

  // Successor values Q(o', a') for the non-terminal transitions.
  bool any_bootstrap = false;
  for (const Transition& t : batch) any_bootstrap |= !t.terminal;
  if (any_bootstrap) {
    detail::forward_hidden_sparse(mlp, batch, /*use_next=*/true, ws.next_acts);
  }
  for (int s = 0; s < B; ++s) {
    const Transition& t = batch[s];
    if (t.terminal) {
      ws.target[s] = static_cast<Scalar>(t.reward);
    } else {
      Scalar qn = mlp.weights[top].row(t.next_action).dot(ws.next_acts[top - 1].col(s)) +
                  mlp.biases[top][t.next_action];
      ws.target[s] = static_cast<Scalar>(t.reward + gamma * qn);
    }
  }

  detail::forward_hidden_sparse(mlp, batch, /*use_next=*/false, ws.acts);
  double loss = 0.0;
  for (int s = 0; s < B; ++s) {
    const Transition& t = batch[s];
    ws.q_taken[s] = mlp.weights[top].row(t.action).dot(ws.acts[top - 1].col(s)) +
                    mlp.biases[top][t.action];
    const double td = static_cast<double>(ws.q_taken[s] - ws.target[s]);
    loss += td * td;
  }
  loss /= B;
  if (!std::isfinite(loss)) {
    throw TrainingError("sarsa_update: TD loss is not finite");
  }

  // Backward. The output delta has one nonzero per sample (the taken
  // action), so the top layer is handled per sample instead of as a GEMM.
  ws.grads.set_zero();
  for (int s = 0; s < B; ++s) {
    const Transition& t = batch[s];
    const Scalar coef =
        Scalar(2) * (ws.q_taken[s] - ws.target[s]) / static_cast<Scalar>(B);
    ws.grads.dw[top].row(t.action) +=
        coef * ws.acts[top - 1].col(s).transpose();
    ws.grads.db[top][t.action] += coef;
    ws.deltas[top - 1].col(s) = coef * mlp.weights[top].row(t.action).transpose();
  }
  ws.deltas[top - 1].array() *=
      (ws.acts[top - 1].array() > Scalar(0)).template cast<Scalar>();

  for (int l = top - 1; l >= 1; --l) {
    ws.grads.dw[l].noalias() = ws.deltas[l] * ws.acts[l - 1].transpose();
    ws.grads.db[l] = ws.deltas[l].rowwise().sum();
    ws.deltas[l - 1].noalias() = mlp.weights[l].transpose() * ws.deltas[l];
    ws.deltas[l - 1].array() *=
        (ws.acts[l - 1].array() > Scalar(0)).template cast<Scalar>();
  }
  // First layer, straight from the sparse inputs.
  for (int s = 0; s < B; ++s) {
    const ObsIndices& in = batch[s].obs;
    for (int k = 0; k < in.count; ++k) {
      ws.grads.dw[0].col(in.idx[k]) += ws.deltas[0].col(s);
    }
  }
  ws.grads.db[0] = ws.deltas[0].rowwise().sum();

  adam.step(mlp, ws.grads);
  return loss;
}

/// Convenience overload with a throwaway workspace.
template <typename Scalar>
double sarsa_update(Mlp<Scalar>& mlp, Adam<Scalar>& adam,
                    std::span<const Transition> batch, double gamma) {
  SarsaWorkspace<Scalar> ws;
  return sarsa_update(mlp, adam, batch, gamma, ws);
}

struct LearnerOptions {
  std::vector<int> hidden{50, 25};
  AdamConfig adam;
  double gamma = 0.9;
  int replay_batch = 32;
  int buffer_episodes = 10;
  bool update_on_fresh = true;
};

/// One agent's complete learning module: value network, optimizer, replay
/// buffer. Agents never share any of these.
template <typename Scalar>
class SarsaLearner {
 public:
  SarsaLearner(int obs_size, int num_actions, const LearnerOptions& options,
               std::uint64_t init_seed, std::uint64_t replay_seed)
      : opt_(options),
        mlp_(make_layer_sizes(obs_size, num_actions, options), init_seed),
        adam_(mlp_, options.adam),
        buffer_(options.buffer_episodes),
        replay_rng_(mix_seed({0x5e9au, replay_seed})) {}

  int select(const ObsIndices& obs, double eps, Rng& action_rng) {
    forward_values(obs);
    return select_action<Scalar>(std::span<const Scalar>(q_.data(), q_.size()),
                                 eps, action_rng);
  }

  void begin_episode() { buffer_.begin_episode(); }

  /// Stores the transition, updates on it, then updates on one uniform
  /// replay minibatch. Returns the fresh-transition TD loss.
  double observe(const Transition& t) {
    buffer_.push(t);
    double loss = 0.0;
    if (opt_.update_on_fresh) {
      loss = sarsa_update<Scalar>(mlp_, adam_, std::span(&t, 1), opt_.gamma,
                                  ws_fresh_);
      ++updates_;
    }
    if (opt_.replay_batch > 0 && buffer_.size() > 0) {
      replay_scratch_.clear();
      for (int k = 0; k < opt_.replay_batch; ++k) {
        replay_scratch_.push_back(buffer_.sample(replay_rng_));
      }
      sarsa_update<Scalar>(mlp_, adam_, replay_scratch_, opt_.gamma, ws_replay_);
      ++updates_;
    }
    return loss;
  }

  Mlp<Scalar>& mlp() { return mlp_; }
  const Mlp<Scalar>& mlp() const { return mlp_; }
  Adam<Scalar>& adam() { return adam_; }
  const Adam<Scalar>& adam() const { return adam_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const LearnerOptions& options() const { return opt_; }
  long updates() const { return updates_; }

 private:
  static std::vector<int> make_layer_sizes(int obs_size, int num_actions,
                                           const LearnerOptions& o) {
    std::vector<int> sizes;
    sizes.push_back(obs_size);
    sizes.insert(sizes.end(), o.hidden.begin(), o.hidden.end());
    sizes.push_back(num_actions);
    return sizes;
  }

  void forward_values(const ObsIndices& obs) {
    const int L = mlp_.num_layers();
    act_scratch_.resize(L - 1);
    act_scratch_[0] = mlp_.biases[0];
    for (int k = 0; k < obs.count; ++k) {
      act_scratch_[0] += mlp_.weights[0].col(obs.idx[k]);
    }
    act_scratch_[0] = act_scratch_[0].cwiseMax(Scalar(0));
    for (int l = 1; l < L - 1; ++l) {
      act_scratch_[l].noalias() = mlp_.weights[l] * act_scratch_[l - 1];
      act_scratch_[l] += mlp_.biases[l];
      act_scratch_[l] = act_scratch_[l].cwiseMax(Scalar(0));
    }
    q_.resize(mlp_.output_size());
    Eigen::Map<typename Mlp<Scalar>::Vector> q(q_.data(), mlp_.output_size());
    q.noalias() = mlp_.weights[L - 1] * act_scratch_[L - 2];
    q += mlp_.biases[L - 1];
  }

  LearnerOptions opt_;
  Mlp<Scalar> mlp_;
  Adam<Scalar> adam_;
  ReplayBuffer buffer_;
  Rng replay_rng_;
  SarsaWorkspace<Scalar> ws_fresh_;
  SarsaWorkspace<Scalar> ws_replay_;
  std::vector<Transition> replay_scratch_;
  std::vector<Scalar> q_;
  std::vector<typename Mlp<Scalar>::Vector> act_scratch_;
  long updates_ = 0;
};

/// Versioned binary dump of one learner: layer sizes, weights, biases, Adam
/// moments and step count, and the schedule position (current episode).
/// Round-trips exactly. load_checkpoint overwrites the learner's parameters
/// in place and returns the stored episode; the learner must have been built
/// with matching layer sizes.
template <typename Scalar>
void save_checkpoint(const SarsaLearner<Scalar>& learner, long episode,
                     std::ostream& out);
template <typename Scalar>
long load_checkpoint(SarsaLearner<Scalar>& learner, std::istream& in);

extern template void save_checkpoint<double>(const SarsaLearner<double>&, long,
                                             std::ostream&);
extern template void save_checkpoint<float>(const SarsaLearner<float>&, long,
                                            std::ostream&);
extern template long load_checkpoint<double>(SarsaLearner<double>&, std::istream&);
extern template long load_checkpoint<float>(SarsaLearner<float>&, std::istream&);

}  // namespace smlab
