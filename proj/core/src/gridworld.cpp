#include "smlab/gridworld.hpp"

#include <ostream>

#include "smlab/error.hpp"

namespace smlab {

std::vector<int> draw_start_cells(int rows, int cols, int n_side,
                                  std::uint64_t seed) {
  Rng rng(mix_seed({0x57a7u, seed}));
  std::vector<int> cells(2 * static_cast<size_t>(n_side));
  for (int& c : cells) c = rng.uniform_int(rows * cols);
  return cells;
}

Observation to_bit_vector(const ObsIndices& indices, int length) {
  Observation bits(length, 0);
  for (int k = 0; k < indices.count; ++k) bits[indices.idx[k]] = 1;
  return bits;
}

ObsIndices observe(const GridConfig& config, int n_side, const EnvState& state,
                   int agent_id) {
  ObsIndices out;
  const int my_cell = state.positions[agent_id];
  out.push(my_cell);

  const bool side1 = agent_id < n_side;
  const int opp_base = side1 ? n_side : 0;
  const int presence_base = config.cells();
  const int interest_base = config.cells() + n_side;
  for (int k = 0; k < n_side; ++k) {
    const int other = opp_base + k;
    if (state.positions[other] != my_cell) continue;
    out.push(presence_base + k);
    if (state.last_interest[other] == agent_id) out.push(interest_base + k);
  }
  return out;
}

Observation encode_observation(const GridConfig& config, int n_side,
                               const EnvState& state, int agent_id) {
  return to_bit_vector(observe(config, n_side, state, agent_id),
                       config.cells() + 2 * n_side);
}

GridWorld::GridWorld(GridConfig config, Instance instance)
    : config_(std::move(config)), instance_(std::move(instance)) {
  const int agents = 2 * instance_.n_side;
  if (config_.rows < 1 || config_.cols < 1) {
    throw ContractViolation("gridworld: grid must have at least one cell");
  }
  if (static_cast<int>(config_.start_cells.size()) != agents) {
    throw ContractViolation("gridworld: start_cells must have one entry per agent");
  }
  for (int c : config_.start_cells) {
    if (c < 0 || c >= config_.cells()) {
      throw ContractViolation("gridworld: start cell outside the grid");
    }
  }
  state_.positions.resize(agents);
  state_.matched_with.resize(agents);
  state_.last_interest.resize(agents);
  out_.rewards.resize(agents);
  out_.observations.resize(agents);
}

const GridWorld::StepOutput& GridWorld::reset(std::uint64_t episode_seed) {
  state_.positions = config_.start_cells;
  std::fill(state_.matched_with.begin(), state_.matched_with.end(), kNoAgent);
  std::fill(state_.last_interest.begin(), state_.last_interest.end(), kNoAgent);
  state_.step = 0;
  state_.reward_rng = Rng(mix_seed({0x3e9u, episode_seed}));
  std::fill(out_.rewards.begin(), out_.rewards.end(), 0.0);
  rebuild_observations();
  return out_;
}

const GridWorld::StepOutput& GridWorld::step(std::span<const int> joint_actions) {
  const int n = instance_.n_side;
  const int agents = 2 * n;
  if (static_cast<int>(joint_actions.size()) != agents) {
    throw ContractViolation("gridworld: one action per agent required");
  }
  for (int a : joint_actions) {
    if (a < 0 || a >= num_actions()) {
      throw ContractViolation("gridworld: action id out of range");
    }
  }
  auto interest_target = [&](int agent) {
    int act = joint_actions[agent];
    if (!is_interest_action(act, n)) return kNoAgent;
    return agent < n ? n + act : act;  // global id of the targeted agent
  };

  // 1. Dissolve. A match survives only if both ends re-express interest.
  for (int a = 0; a < agents; ++a) {
    int partner = state_.matched_with[a];
    if (partner == kNoAgent) continue;
    if (interest_target(a) != partner) {
      state_.matched_with[a] = kNoAgent;
      state_.matched_with[partner] = kNoAgent;
    }
  }

  // 2. Move. Interest actions keep the agent in place.
  for (int a = 0; a < agents; ++a) {
    int act = joint_actions[a];
    if (is_interest_action(act, n)) continue;
    int row = state_.positions[a] / config_.cols;
    int col = state_.positions[a] % config_.cols;
    switch (act - n) {
      case kMoveUp: row = std::max(0, row - 1); break;
      case kMoveDown: row = std::min(config_.rows - 1, row + 1); break;
      case kMoveLeft: col = std::max(0, col - 1); break;
      case kMoveRight: col = std::min(config_.cols - 1, col + 1); break;
    }
    state_.positions[a] = row * config_.cols + col;
  }

  // 3. Form. Mutual interest between collocated unmatched cross-side agents.
  for (int i = 0; i < n; ++i) {
    if (state_.matched_with[i] != kNoAgent) continue;
    int j = interest_target(i);
    if (j == kNoAgent || state_.matched_with[j] != kNoAgent) continue;
    if (state_.positions[i] != state_.positions[j]) continue;
    if (interest_target(j) == i) {
      state_.matched_with[i] = j;
      state_.matched_with[j] = i;
    }
  }

  // 4. Rewards, noise drawn per matched agent in agent-id order.
  for (int a = 0; a < agents; ++a) {
    if (state_.matched_with[a] == kNoAgent) {
      out_.rewards[a] = config_.unmatched_penalty;
    } else {
      out_.rewards[a] =
          match_utility(a) * state_.reward_rng.normal(1.0, config_.noise_sigma);
    }
  }

  // 5. Remember this step's interests, rebuild views.
  for (int a = 0; a < agents; ++a) state_.last_interest[a] = interest_target(a);
  ++state_.step;
  rebuild_observations();
  return out_;
}

double GridWorld::match_utility(int agent_id) const {
  const int n = instance_.n_side;
  int partner = state_.matched_with[agent_id];
  if (partner == kNoAgent) return 0.0;
  if (agent_id < n) return instance_.utility_1(agent_id, partner - n);
  return instance_.utility_2(agent_id - n, partner);
}

Matching GridWorld::current_matching() const {
  const int n = instance_.n_side;
  Matching m = Matching::empty(n);
  for (int i = 0; i < n; ++i) {
    if (state_.matched_with[i] != kNoAgent) {
      m.match(i, state_.matched_with[i] - n);
    }
  }
  return m;
}

void GridWorld::rebuild_observations() {
  for (int a = 0; a < num_agents(); ++a) {
    out_.observations[a] = observe(config_, instance_.n_side, state_, a);
  }
}

void dump_trajectory_line(std::ostream& out, const EnvState& state,
                          std::span<const double> rewards) {
  out << "{\"step\":" << state.step << ",\"positions\":[";
  for (size_t i = 0; i < state.positions.size(); ++i) {
    out << (i ? "," : "") << state.positions[i];
  }
  out << "],\"matched_with\":[";
  for (size_t i = 0; i < state.matched_with.size(); ++i) {
    out << (i ? "," : "") << state.matched_with[i];
  }
  out << "],\"rewards\":[";
  for (size_t i = 0; i < rewards.size(); ++i) {
    out << (i ? "," : "") << rewards[i];
  }
  out << "]}\n";
}

}  // namespace smlab
