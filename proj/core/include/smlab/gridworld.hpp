#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "smlab/instance.hpp"
#include "smlab/matching.hpp"
#include "smlab/rng.hpp"

namespace smlab {

inline constexpr int kNoAgent = -1;

/// Grid geometry and episode parameters. Cells are indexed row-major:
/// cell = row * cols + col. start_cells has one entry per agent; agents
/// return to these cells at every reset.
struct GridConfig {
  int rows = 3;
  int cols = 3;
  std::vector<int> start_cells;
  int steps_per_episode = 300;
  double noise_sigma = 0.1;
  double unmatched_penalty = -1.0;

  int cells() const { return rows * cols; }
};

/// Uniform random start cells for 2*n_side agents (collisions allowed).
std::vector<int> draw_start_cells(int rows, int cols, int n_side,
                                  std::uint64_t seed);

/// Agents carry global ids: 0..n_side-1 are side 1, n_side..2*n_side-1 are
/// side 2. Actions are per-agent integers in [0, n_side + 4):
///   0..n_side-1    express interest in the opposite-side agent with that
///                  local index (the agent stays in its cell),
///   n_side + 0..3  move up / down / left / right (clamped at the edges).
inline constexpr int kMoveUp = 0;
inline constexpr int kMoveDown = 1;
inline constexpr int kMoveLeft = 2;
inline constexpr int kMoveRight = 3;

inline int action_count(int n_side) { return n_side + 4; }
inline bool is_interest_action(int action, int n_side) {
  return action < n_side;
}
inline int interest_action(int opposite_local_index) {
  return opposite_local_index;
}
inline int move_action(int n_side, int direction) { return n_side + direction; }

struct EnvState {
  std::vector<int> positions;      // cell per agent
  std::vector<int> matched_with;   // global agent id or kNoAgent
  std::vector<int> last_interest;  // global agent id or kNoAgent
  int step = 0;
  Rng reward_rng;
};

/// One agent's observation, as the positions of the set bits of the
/// [position one-hot | collocated opposite-side agents | interested-in-me]
/// bit vector of length rows*cols + 2*n_side.
struct ObsIndices {
  int count = 0;
  std::array<std::uint16_t, 31> idx{};

  void clear() { count = 0; }
  void push(int i) { idx[count++] = static_cast<std::uint16_t>(i); }
};

using Observation = std::vector<std::uint8_t>;

Observation to_bit_vector(const ObsIndices& indices, int length);

/// Pure view of `state` through agent_id's eyes. The interest flags reflect
/// the interest actions of the previous step (agents cannot see intentions
/// announced simultaneously), and an interest flag is only shown for an
/// agent standing in the same cell.
ObsIndices observe(const GridConfig& config, int n_side, const EnvState& state,
                   int agent_id);
Observation encode_observation(const GridConfig& config, int n_side,
                               const EnvState& state, int agent_id);

/// The simultaneous-move matching game. Transitions are deterministic;
/// reward noise is pseudorandom from the episode seed, so whole episodes
/// replay bit-identically.
///
/// step() resolves the joint action in a fixed order:
///   1. dissolve: a matched agent whose action is not "interest in its
///      current partner" dissolves the match; both ends count as unmatched
///      for this step's rewards,
///   2. move: movement actions take effect (interest actions hold still),
///   3. form: an unmatched cross-side pair becomes matched iff collocated
///      after movement and both picked interest in each other this step,
///   4. rewards: each matched agent draws utility * Normal(1, noise_sigma)
///      independently; every unmatched agent receives unmatched_penalty,
///   5. bookkeeping: last_interest is replaced by this step's interest
///      actions and observations are rebuilt.
class GridWorld {
 public:
  GridWorld(GridConfig config, Instance instance);

  struct StepOutput {
    std::vector<double> rewards;
    std::vector<ObsIndices> observations;
  };

  /// Places agents on their start cells, clears matches and interests,
  /// reseeds the reward stream. Returns the initial observations (rewards
  /// zeroed). The reference stays valid until the next step/reset.
  const StepOutput& reset(std::uint64_t episode_seed);

  /// Advances one step. joint_actions must hold one valid action per agent;
  /// anything else is a ContractViolation.
  const StepOutput& step(std::span<const int> joint_actions);

  const EnvState& state() const { return state_; }
  const GridConfig& config() const { return config_; }
  const Instance& instance() const { return instance_; }
  int n_side() const { return instance_.n_side; }
  int num_agents() const { return 2 * instance_.n_side; }
  int observation_size() const { return config_.cells() + 2 * instance_.n_side; }
  int num_actions() const { return action_count(instance_.n_side); }

  /// Current match structure as a side-1/side-2 matching.
  Matching current_matching() const;

  /// True utility the given agent receives from its current match.
  double match_utility(int agent_id) const;

 private:
  void rebuild_observations();

  GridConfig config_;
  Instance instance_;
  EnvState state_;
  StepOutput out_;
};

/// Line-delimited trajectory record (one JSON object per line) used by the
/// optional debug dump: step, positions, matches, rewards.
void dump_trajectory_line(std::ostream& out, const EnvState& state,
                          std::span<const double> rewards);

}  // namespace smlab
