#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "smlab/error.hpp"
#include "smlab/learner.hpp"

using namespace smlab;

namespace {

ObsIndices bits(std::initializer_list<int> idx) {
  ObsIndices o;
  for (int i : idx) o.push(i);
  return o;
}

Eigen::VectorXd dense(const ObsIndices& o, int size) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(size);
  for (int k = 0; k < o.count; ++k) v[o.idx[k]] = 1.0;
  return v;
}

void zero_parameters(Mlp<double>& mlp) {
  for (auto& w : mlp.weights) w.setZero();
  for (auto& b : mlp.biases) b.setZero();
}

// Loss with targets frozen at the given values; used as the scalar function
// for finite differencing.
double frozen_loss(const Mlp<double>& mlp, std::span<const Transition> batch,
                   std::span<const double> targets) {
  double loss = 0.0;
  for (size_t s = 0; s < batch.size(); ++s) {
    Eigen::VectorXd q = mlp.forward(dense(batch[s].obs, mlp.input_size()));
    double td = q[batch[s].action] - targets[s];
    loss += td * td;
  }
  return loss / static_cast<double>(batch.size());
}

}  // namespace

TEST_CASE("a zeroed network maps every observation to zero values") {
  Mlp<double> mlp({5, 4, 3}, 1);
  zero_parameters(mlp);
  Observation obs{1, 0, 1, 1, 0};
  auto q = q_values(mlp, obs);
  REQUIRE(q.size() == 3);
  for (double v : q) CHECK(v == 0.0);
}

TEST_CASE("forward pass reproduces a hand-computed 2-2-2 network") {
  Mlp<double> mlp({2, 2, 2}, 0);
  mlp.weights[0] << 1.0, -1.0, 0.5, 2.0;
  mlp.biases[0] << 0.1, -0.2;
  mlp.weights[1] << 1.0, 1.0, -1.0, 2.0;
  mlp.biases[1] << 0.0, 0.3;
  // input (1, 0): hidden = relu(1.1, 0.3); out = (1.4, -0.2)
  auto q = q_values(mlp, Observation{1, 0});
  CHECK(q[0] == doctest::Approx(1.4));
  CHECK(q[1] == doctest::Approx(-0.2));
  // input (0, 1): hidden = relu(-0.9, 1.8) = (0, 1.8); out = (1.8, 3.9)
  q = q_values(mlp, Observation{0, 1});
  CHECK(q[0] == doctest::Approx(1.8));
  CHECK(q[1] == doctest::Approx(3.9));
}

TEST_CASE("q-vector length always equals the action count") {
  for (int actions : {5, 8, 12}) {
    Mlp<double> mlp({7, 50, 25, actions}, 3);
    Observation obs(7, 0);
    obs[2] = 1;
    CHECK(static_cast<int>(q_values(mlp, obs).size()) == actions);
  }
  Mlp<double> mlp({7, 4, 4}, 3);
  CHECK_THROWS_AS(q_values(mlp, Observation(6, 0)), ContractViolation);
}

TEST_CASE("greedy selection takes the argmax, lowest index on ties") {
  Rng rng(2);
  CHECK(select_action({1.0, 3.0, 2.0}, 0.0, rng) == 1);
  CHECK(select_action({0.0, 1.0, 5.0, 5.0, 1.0, 5.0}, 0.0, rng) == 2);
  CHECK(select_action(std::vector<double>{7.0}, 0.0, rng) == 0);
}

TEST_CASE("full exploration is uniform within three sigma") {
  Rng rng(424242);
  const int draws = 100000;
  const int k = 6;
  std::vector<int> counts(k, 0);
  std::vector<double> q{0.0, 9.0, 1.0, 2.0, 3.0, 4.0};  // values must not matter
  for (int i = 0; i < draws; ++i) ++counts[select_action(q, 1.0, rng)];
  const double expected = static_cast<double>(draws) / k;
  const double sigma = std::sqrt(draws * (1.0 / k) * (1.0 - 1.0 / k));
  for (int a = 0; a < k; ++a) {
    CHECK(std::abs(counts[a] - expected) <= 3.0 * sigma);
  }
}

TEST_CASE("zero TD error leaves parameters untouched") {
  Mlp<double> mlp({3, 4, 2}, 9);
  Adam<double> adam(mlp, {});
  Mlp<double> before = mlp;

  // Terminal transition whose reward equals the current prediction.
  Transition t;
  t.obs = bits({0, 2});
  t.action = 1;
  t.terminal = true;
  t.reward = mlp.forward(dense(t.obs, 3))[1];

  double loss = sarsa_update<double>(mlp, adam, std::span(&t, 1), 0.9);
  CHECK(loss == doctest::Approx(0.0));
  for (int l = 0; l < mlp.num_layers(); ++l) {
    CHECK((mlp.weights[l] - before.weights[l]).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((mlp.biases[l] - before.biases[l]).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("terminal squared error comes out exactly") {
  Mlp<double> mlp({3, 4, 2}, 4);
  zero_parameters(mlp);
  Adam<double> adam(mlp, {});
  Transition t;
  t.obs = bits({1});
  t.action = 0;
  t.reward = 5.0;
  t.terminal = true;
  CHECK(sarsa_update<double>(mlp, adam, std::span(&t, 1), 0.9) ==
        doctest::Approx(25.0));
}

TEST_CASE("the update bootstraps from the taken successor action, not the max") {
  // Zero weights, output biases (0, 4): every observation values action 1 at
  // 4. The stored successor action is 0, so the target must be
  // r + 0.9 * Q(o', 0) = 0, giving zero loss. A max-based target would give
  // (0 - 0.9 * 4)^2 = 12.96.
  Mlp<double> mlp({3, 4, 2}, 4);
  zero_parameters(mlp);
  mlp.biases[1] << 0.0, 4.0;
  Adam<double> adam(mlp, {});
  Transition t;
  t.obs = bits({0});
  t.next_obs = bits({1});
  t.action = 0;
  t.next_action = 0;
  t.reward = 0.0;
  t.terminal = false;
  CHECK(sarsa_update<double>(mlp, adam, std::span(&t, 1), 0.9) ==
        doctest::Approx(0.0));
}

TEST_CASE("non-finite losses surface as training failures") {
  Mlp<double> mlp({3, 4, 2}, 4);
  Adam<double> adam(mlp, {});
  Transition t;
  t.obs = bits({0});
  t.action = 0;
  t.reward = std::numeric_limits<double>::quiet_NaN();
  t.terminal = true;
  CHECK_THROWS_AS(sarsa_update<double>(mlp, adam, std::span(&t, 1), 0.9),
                  TrainingError);
}

TEST_CASE("backpropagation matches central finite differences") {
  const double h = 1e-5;
  const double gamma = 0.9;
  Rng rng(314159);
  int checked = 0;

  for (int net = 0; net < 100; ++net) {
    Mlp<double> mlp({3, 4, 3, 2}, 1000 + net);
    // Fresh nets have zero biases, which parks pre-activations exactly on
    // the rectifier kink for sparse inputs; jitter the biases so the check
    // runs at generic positions where the loss is differentiable.
    for (auto& b : mlp.biases) {
      for (int i = 0; i < b.size(); ++i) b[i] = rng.uniform_real(-0.5, 0.5);
    }
    // Batch of four random transitions over 3 input bits.
    std::vector<Transition> batch(4);
    for (Transition& t : batch) {
      for (int b = 0; b < 3; ++b) {
        if (rng.uniform() < 0.5) t.obs.push(b);
      }
      if (rng.uniform() < 0.5) t.next_obs.push(rng.uniform_int(3));
      t.action = rng.uniform_int(2);
      t.next_action = rng.uniform_int(2);
      t.reward = rng.uniform_real(-2.0, 2.0);
      t.terminal = rng.uniform() < 0.25;
    }

    // Freeze the targets the update will use (computed before it mutates
    // anything).
    std::vector<double> targets(batch.size());
    for (size_t s = 0; s < batch.size(); ++s) {
      const Transition& t = batch[s];
      targets[s] = t.terminal
                       ? t.reward
                       : t.reward + gamma * mlp.forward(dense(
                                                t.next_obs, 3))[t.next_action];
    }

    // Fresh Adam: after one step the first moment is (1 - beta1) * grad,
    // which recovers the raw backpropagated gradient exactly.
    Mlp<double> updated = mlp;
    Adam<double> adam(updated, {});
    sarsa_update<double>(updated, adam, batch, gamma);
    const double unscale = 1.0 / (1.0 - adam.config().beta1);

    for (int l = 0; l < mlp.num_layers(); ++l) {
      auto check_param = [&](double& ref, double analytic) {
        const double saved = ref;
        ref = saved + h;
        const double up = frozen_loss(mlp, batch, targets);
        ref = saved - h;
        const double down = frozen_loss(mlp, batch, targets);
        ref = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double scale = std::max({1e-6, std::abs(analytic), std::abs(numeric)});
        CHECK(std::abs(analytic - numeric) / scale <= 1e-4);
        ++checked;
      };
      for (int idx = 0; idx < mlp.weights[l].size(); ++idx) {
        check_param(mlp.weights[l].data()[idx],
                    adam.moment1_w()[l].data()[idx] * unscale);
      }
      for (int idx = 0; idx < mlp.biases[l].size(); ++idx) {
        check_param(mlp.biases[l].data()[idx],
                    adam.moment1_b()[l].data()[idx] * unscale);
      }
    }
  }
  CHECK(checked == 100 * (3 * 4 + 4 + 4 * 3 + 3 + 3 * 2 + 2));
}

TEST_CASE("exploration decay follows the closed form with a floor") {
  EpsilonSchedule s;
  s.eps0 = 1.0;
  s.tau = 100.0;
  CHECK(s.at(0) == doctest::Approx(1.0));
  CHECK(s.at(100) == doctest::Approx(std::exp(-1.0)));
  CHECK(s.at(1e9) == doctest::Approx(0.05));
  for (int e = 0; e < 2000; e += 10) {
    CHECK(s.at(e + 10) <= s.at(e));
    CHECK(s.at(e) >= 0.05);
  }

  const long budget = 20000;
  EpsilonSchedule derived;
  derived.tau = EpsilonSchedule::tau_for(budget, 0.8, 0.06, 1.0);
  CHECK(derived.at(0.8 * budget) == doctest::Approx(0.06));
}

TEST_CASE("replay buffer forgets episodes beyond its horizon") {
  ReplayBuffer buf(10);
  Rng rng(6);
  for (int episode = 0; episode < 25; ++episode) {
    buf.begin_episode();
    for (int t = 0; t < 7; ++t) {
      Transition tr;
      tr.reward = episode;  // tag the transition with its episode
      buf.push(tr);
    }
    CHECK(buf.episodes() <= 10);
    for (int draw = 0; draw < 50; ++draw) {
      double tag = buf.sample(rng).reward;
      CHECK(tag > episode - 10);
      CHECK(tag <= episode);
    }
  }
  CHECK(buf.size() == 10 * 7);
}

TEST_CASE("learners update on fresh data plus one replay batch per step") {
  LearnerOptions opts;
  opts.hidden = {8, 6};
  opts.replay_batch = 4;
  SarsaLearner<double> learner(5, 3, opts, 1, 2);
  learner.begin_episode();
  Rng arng(3);
  for (int t = 0; t < 10; ++t) {
    Transition tr;
    tr.obs = bits({t % 5});
    tr.next_obs = bits({(t + 1) % 5});
    tr.action = learner.select(tr.obs, 0.5, arng);
    tr.next_action = 0;
    tr.reward = 1.0;
    tr.terminal = (t == 9);
    learner.observe(tr);
  }
  CHECK(learner.updates() == 20);  // fresh + replay for each step
  CHECK(learner.buffer().size() == 10);
  CHECK(learner.mlp().parameters_finite());
}

TEST_CASE("checkpoints restore the exact training state") {
  LearnerOptions opts;
  opts.hidden = {8, 6};
  SarsaLearner<double> a(5, 3, opts, 11, 12);
  Rng arng(4);
  a.begin_episode();
  for (int t = 0; t < 25; ++t) {
    Transition tr;
    tr.obs = bits({t % 5, (t * 2) % 5});
    tr.next_obs = bits({(t + 1) % 5});
    tr.action = a.select(tr.obs, 0.3, arng);
    tr.next_action = 1;
    tr.reward = 0.5 * t;
    tr.terminal = false;
    a.observe(tr);
  }

  std::stringstream ss;
  save_checkpoint(a, 17, ss);

  SarsaLearner<double> b(5, 3, opts, 999, 998);  // different init on purpose
  CHECK(load_checkpoint(b, ss) == 17);
  for (int l = 0; l < a.mlp().num_layers(); ++l) {
    CHECK(a.mlp().weights[l] == b.mlp().weights[l]);
    CHECK(a.mlp().biases[l] == b.mlp().biases[l]);
  }
  CHECK(a.adam().step_count() == b.adam().step_count());
  for (int l = 0; l < a.mlp().num_layers(); ++l) {
    CHECK(a.adam().moment1_w()[l] == b.adam().moment1_w()[l]);
    CHECK(a.adam().moment2_w()[l] == b.adam().moment2_w()[l]);
    CHECK(a.adam().moment1_b()[l] == b.adam().moment1_b()[l]);
    CHECK(a.adam().moment2_b()[l] == b.adam().moment2_b()[l]);
  }

  SarsaLearner<double> wrong(6, 3, opts, 1, 2);
  std::stringstream ss2;
  save_checkpoint(a, 17, ss2);
  CHECK_THROWS_AS(load_checkpoint(wrong, ss2), Error);
}
