#include "smlab/learner.hpp"

#include <cstring>
#include <istream>
#include <ostream>

namespace smlab {

void ReplayBuffer::begin_episode() {
  episodes_.emplace_back();
  while (static_cast<int>(episodes_.size()) > max_episodes_) {
    total_ -= episodes_.front().size();
    episodes_.pop_front();
  }
}

void ReplayBuffer::push(const Transition& t) {
  if (episodes_.empty()) episodes_.emplace_back();
  episodes_.back().push_back(t);
  ++total_;
}

const Transition& ReplayBuffer::sample(Rng& rng) const {
  if (total_ == 0) throw ContractViolation("replay buffer: sample from empty buffer");
  int k = rng.uniform_int(static_cast<int>(total_));
  for (const auto& ep : episodes_) {
    if (k < static_cast<int>(ep.size())) return ep[k];
    k -= static_cast<int>(ep.size());
  }
  return episodes_.back().back();  // unreachable
}

double EpsilonSchedule::tau_for(long episodes, double at_fraction,
                                double target_eps, double eps0) {
  return at_fraction * static_cast<double>(episodes) / std::log(eps0 / target_eps);
}

namespace {

constexpr char kCheckpointMagic[8] = {'S', 'M', 'L', 'A', 'B', 'C', 'K', '1'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error("checkpoint: truncated stream");
}

template <typename Scalar>
void write_block(std::ostream& out, const Scalar* data, std::int64_t count) {
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(count * sizeof(Scalar)));
}

template <typename Scalar>
void read_block(std::istream& in, Scalar* data, std::int64_t count) {
  in.read(reinterpret_cast<char*>(data),
          static_cast<std::streamsize>(count * sizeof(Scalar)));
  if (!in) throw Error("checkpoint: truncated stream");
}

}  // namespace

template <typename Scalar>
void save_checkpoint(const SarsaLearner<Scalar>& learner, long episode,
                     std::ostream& out) {
  const Mlp<Scalar>& mlp = learner.mlp();
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_pod(out, static_cast<std::uint8_t>(sizeof(Scalar)));
  write_pod(out, static_cast<std::int32_t>(mlp.layer_sizes().size()));
  for (int s : mlp.layer_sizes()) write_pod(out, static_cast<std::int32_t>(s));
  for (int l = 0; l < mlp.num_layers(); ++l) {
    write_block(out, mlp.weights[l].data(), mlp.weights[l].size());
    write_block(out, mlp.biases[l].data(), mlp.biases[l].size());
  }
  const Adam<Scalar>& adam = learner.adam();
  write_pod(out, static_cast<std::int64_t>(adam.step_count()));
  for (int l = 0; l < mlp.num_layers(); ++l) {
    write_block(out, adam.moment1_w()[l].data(), adam.moment1_w()[l].size());
    write_block(out, adam.moment2_w()[l].data(), adam.moment2_w()[l].size());
    write_block(out, adam.moment1_b()[l].data(), adam.moment1_b()[l].size());
    write_block(out, adam.moment2_b()[l].data(), adam.moment2_b()[l].size());
  }
  write_pod(out, static_cast<std::int64_t>(episode));
  if (!out) throw Error("checkpoint: write failed");
}

template <typename Scalar>
long load_checkpoint(SarsaLearner<Scalar>& learner, std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw Error("checkpoint: bad magic");
  }
  std::uint8_t scalar_size = 0;
  read_pod(in, scalar_size);
  if (scalar_size != sizeof(Scalar)) {
    throw Error("checkpoint: scalar width mismatch");
  }
  Mlp<Scalar>& mlp = learner.mlp();
  std::int32_t n_layers = 0;
  read_pod(in, n_layers);
  if (n_layers != static_cast<std::int32_t>(mlp.layer_sizes().size())) {
    throw Error("checkpoint: layer count mismatch");
  }
  for (int s : mlp.layer_sizes()) {
    std::int32_t stored = 0;
    read_pod(in, stored);
    if (stored != s) throw Error("checkpoint: layer size mismatch");
  }
  for (int l = 0; l < mlp.num_layers(); ++l) {
    read_block(in, mlp.weights[l].data(), mlp.weights[l].size());
    read_block(in, mlp.biases[l].data(), mlp.biases[l].size());
  }
  Adam<Scalar>& adam = learner.adam();
  std::int64_t steps = 0;
  read_pod(in, steps);
  adam.set_step_count(steps);
  for (int l = 0; l < mlp.num_layers(); ++l) {
    read_block(in, adam.moment1_w()[l].data(), adam.moment1_w()[l].size());
    read_block(in, adam.moment2_w()[l].data(), adam.moment2_w()[l].size());
    read_block(in, adam.moment1_b()[l].data(), adam.moment1_b()[l].size());
    read_block(in, adam.moment2_b()[l].data(), adam.moment2_b()[l].size());
  }
  std::int64_t episode = 0;
  read_pod(in, episode);
  return static_cast<long>(episode);
}

template void save_checkpoint<double>(const SarsaLearner<double>&, long,
                                      std::ostream&);
template void save_checkpoint<float>(const SarsaLearner<float>&, long,
                                     std::ostream&);
template long load_checkpoint<double>(SarsaLearner<double>&, std::istream&);
template long load_checkpoint<float>(SarsaLearner<float>&, std::istream&);

}  // namespace smlab
