#include <cmath>
#include <map>

#include "doctest.h"
#include "helpers.hpp"
#include "uavnfv/agent.hpp"
#include "uavnfv/training.hpp"

using namespace uavnfv;

namespace {

// Pearson statistic of observed counts against a uniform expectation.
double chi_square(const std::vector<int>& counts) {
  double total = 0;
  for (int c : counts) total += c;
  const double e = total / static_cast<double>(counts.size());
  double x = 0;
  for (int c : counts) x += (c - e) * (c - e) / e;
  return x;
}

// 0.999 quantiles of chi-square for small degrees of freedom.
double chi_crit(int dof) {
  static const double q[] = {0, 10.83, 13.82, 16.27, 18.47, 20.52, 22.46, 24.32, 26.12, 27.88, 29.59};
  return q[dof];
}

void fill(HhcdaAgent& agent, const ScenarioConfig& cfg, int episodes) {
  Env env(cfg);
  for (int e = 0; e < episodes; ++e) run_episode(env, agent, e, 50 + e, true, true);
}

}  // namespace

TEST_SUITE("agent") {

TEST_CASE("replay buffer is a FIFO ring") {
  ReplayBuffer<int> b(3);
  for (int i = 0; i < 5; ++i) b.push(i);
  CHECK(b.size() == 3);
  CHECK(b.at(0) == 2);
  CHECK(b.at(1) == 3);
  CHECK(b.at(2) == 4);
  CHECK_THROWS_AS(ReplayBuffer<int>(0), std::invalid_argument);
}

TEST_CASE("replay sampling is uniform") {
  ReplayBuffer<int> b(10);
  for (int i = 0; i < 25; ++i) b.push(i);
  Rng rng(4);
  std::vector<int> counts(10, 0);
  for (const int* p : b.sample(50000, rng)) ++counts[static_cast<std::size_t>(*p - 15)];
  CHECK(chi_square(counts) < chi_crit(9));
}

TEST_CASE("td targets") {
  Vec r(3), d(3), q(3);
  r << 1, -2, 0.5;
  d << 0, 1, 0;
  q << 10, 10, -4;
  const Vec y = td_targets(r, d, q, 0.9);
  CHECK(y(0) == doctest::Approx(10.0));
  CHECK(y(1) == doctest::Approx(-2.0));
  CHECK(y(2) == doctest::Approx(0.5 - 3.6));
}

TEST_CASE("actor step climbs a known action-value surface") {
  Mlp actor({2, 16, 1}, Activation::Tanh, 8);
  Adam opt(actor, 1e-3);
  Rng rng(2);
  for (int it = 0; it < 2000; ++it) {
    Mat s(2, 16);
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = rng.uniform(-1, 1);
    actor_step(actor, opt, s, [](const Mat&, const Mat& a, Mat& g) {
      g = -2.0 * (a.array() - 0.3).matrix();
      return Vec((-(a.array() - 0.3).square()).matrix().row(0).transpose());
    });
  }
  for (int t = 0; t < 10; ++t) {
    Vec s(2);
    s << rng.uniform(-1, 1), rng.uniform(-1, 1);
    CHECK(std::abs(actor.forward_one(s)(0) - 0.3) < 0.02);
  }
}

TEST_CASE("dqn step converges to the value-iteration answer on a two-state chain") {
  // Action 1 flips the state, action 0 stays.
  const double R[2][2] = {{0.0, 1.0}, {2.0, 0.0}};
  const double gamma = 0.5;
  double Q[2][2] = {};
  for (int it = 0; it < 200; ++it) {
    double n[2][2];
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) {
        const int s1 = a == 1 ? 1 - s : s;
        n[s][a] = R[s][a] + gamma * std::max(Q[s1][0], Q[s1][1]);
      }
    std::copy(&n[0][0], &n[0][0] + 4, &Q[0][0]);
  }

  Mlp q({2, 32, 2}, Activation::Identity, 6), target = q;
  Adam opt(q, 1e-3);
  const std::vector<HeadSlice> heads{{0, 2}};
  DqnBatch b;
  b.x = Mat::Zero(2, 4);
  Mat x1 = Mat::Zero(2, 4);
  b.chosen.resize(1, 4);
  b.mask = Eigen::MatrixXi::Ones(1, 4);
  b.r.resize(4);
  b.done = Vec::Zero(4);
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) {
      const int c = 2 * s + a;
      b.x(s, c) = 1.0;
      x1(a == 1 ? 1 - s : s, c) = 1.0;
      b.chosen(0, c) = a;
      b.r(c) = R[s][a];
    }
  for (int it = 0; it < 6000; ++it) {
    if (it % 50 == 0) target = q;
    b.q_next = target.forward(x1);
    dqn_step(q, opt, b, heads, gamma);
  }
  const Mat out = q.forward(Mat::Identity(2, 2));
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) CHECK(std::abs(out(a, s) - Q[s][a]) < 1e-2);
}

TEST_CASE("dqn targets take the max per head and masked heads get no gradient") {
  DqnBatch b;
  b.q_next.resize(5, 1);
  b.q_next << 1, 4, 2, -1, -3;
  b.r = Vec::Constant(1, 0.5);
  b.done = Vec::Zero(1);
  const std::vector<HeadSlice> heads{{0, 3}, {3, 2}};
  const Mat y = dqn_targets(b, heads, 0.5);
  CHECK(y(0, 0) == doctest::Approx(2.5));
  CHECK(y(1, 0) == doctest::Approx(0.0));

  Mlp q({1, 4, 5}, Activation::Identity, 2);
  const Mlp before = q;
  Adam opt(q, 1e-2);
  b.x = Mat::Ones(1, 1);
  b.chosen.resize(2, 1);
  b.chosen << 0, 1;
  b.mask = Eigen::MatrixXi::Zero(2, 1);
  CHECK(dqn_step(q, opt, b, heads, 0.5) == 0.0);
  CHECK(q == before);
}

TEST_CASE("quantize and schedule") {
  CHECK(quantize(0.9, 4) == 3);
  CHECK(quantize(-1.0, 4) == 0);
  CHECK(quantize(1.0, 4) == 3);
  CHECK(quantize(-0.01, 2) == 0);
  CHECK(quantize(0.0, 2) == 1);
  CHECK(quantize(7.0, 3) == 2);

  AgentConfig a;
  a.epsilon_start = 1.0;
  a.epsilon_decay = 0.01;
  a.epsilon_min = 0.05;
  a.lr_decay = 0.5;
  CHECK(schedule_at(a, 0).epsilon == 1.0);
  CHECK(schedule_at(a, 50).epsilon == doctest::Approx(0.5));
  CHECK(schedule_at(a, 500).epsilon == 0.05);
  CHECK(schedule_at(a, 2).lr_scale == doctest::Approx(0.5));
  CHECK(schedule_at(a, 0).noise == a.noise_std);
  CHECK(schedule_at(a, 1000).noise == a.noise_min);
}

TEST_CASE("dqn input is the state with the continuous action appended") {
  auto cfg = testing::tiny_config(3, 6);
  HhcdaAgent single(cfg, 1);
  CHECK(single.agents() == 1);
  CHECK(single.dqn_input_size(0) == single.layout().obs_dim + single.layout().cont_dim);
  CHECK(single.critic().input_size() == single.layout().obs_dim + single.layout().cont_dim);
  CHECK(single.dqn(0).output_size() == single.layout().total_categories());

  cfg.agent.mode = AgentMode::Multi;
  HhcdaAgent multi(cfg, 1);
  REQUIRE(multi.agents() == 3);
  int cont = 0;
  for (int a = 0; a < 3; ++a) {
    const auto own = static_cast<int>(multi.partition().cont[static_cast<std::size_t>(a)].size());
    CHECK(multi.dqn_input_size(a) == multi.layout().obs_dim + own);
    CHECK(multi.actor(a).output_size() == own);
    cont += own;
  }
  CHECK(cont == multi.layout().cont_dim);
  CHECK(multi.critic().input_size() == multi.layout().obs_dim + multi.layout().cont_dim);
}

TEST_CASE("epsilon one picks every category uniformly") {
  auto cfg = testing::tiny_config(2, 4);
  HhcdaAgent agent(cfg, 3);
  Schedule s;
  s.epsilon = 1.0;
  agent.set_schedule(s);
  Env env(cfg);
  const auto obs = env.reset(1);
  const int head = env.layout().dl_head(0);
  const int n = env.layout().heads[static_cast<std::size_t>(head)].size;
  std::vector<int> counts(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < 20000; ++i) ++counts[static_cast<std::size_t>(agent.act(obs, true).disc[static_cast<std::size_t>(head)])];
  CHECK(chi_square(counts) < chi_crit(n - 1));

  s.epsilon = 0.0;
  agent.set_schedule(s);
  const auto a = agent.act(obs, true);
  CHECK(agent.act(obs, false) == agent.act(obs, false));
  CHECK(agent.act(obs, false).disc == a.disc);
}

TEST_CASE("each training step only touches its own networks") {
  auto cfg = testing::tiny_config(2, 4);
  cfg.agent.target_period = 1000;
  HhcdaAgent agent(cfg, 5);
  fill(agent, cfg, 2);
  REQUIRE(agent.replay().size() >= 8);
  Rng rng(1);

  auto snap = [&] {
    return std::vector<Mlp>{agent.actor(0), agent.actor_target(0), agent.dqn(0), agent.dqn_target(0),
                            agent.critic(), agent.critic_target()};
  };
  auto changed = [](const std::vector<Mlp>& a, const std::vector<Mlp>& b) {
    std::vector<bool> out;
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(!(a[i] == b[i]));
    return out;
  };

  auto s0 = snap();
  agent.train_dqn(agent.replay_dqn().sample(8, rng));
  CHECK(changed(s0, snap()) == std::vector<bool>{false, false, true, false, false, false});

  s0 = snap();
  agent.train_critic(agent.replay().sample(8, rng));
  CHECK(changed(s0, snap()) == std::vector<bool>{false, false, false, false, true, false});

  s0 = snap();
  agent.train_actor(agent.replay().sample(8, rng));
  CHECK(changed(s0, snap()) == std::vector<bool>{true, false, false, false, false, false});
}

TEST_CASE("targets stay frozen until the sync period") {
  auto cfg = testing::tiny_config(2, 4);
  cfg.agent.target_period = 5;
  HhcdaAgent agent(cfg, 5);
  fill(agent, cfg, 2);
  const long base = agent.gradient_steps();
  // Advance to just after a sync so the next four steps leave targets alone.
  while ((agent.gradient_steps()) % 5 != 0) REQUIRE(agent.update());
  const Mlp at = agent.actor_target(0), ct = agent.critic_target(), dt = agent.dqn_target(0);
  CHECK(at == agent.actor(0));
  for (int i = 0; i < 4; ++i) REQUIRE(agent.update());
  CHECK(agent.actor_target(0) == at);
  CHECK(agent.critic_target() == ct);
  CHECK(agent.dqn_target(0) == dt);
  CHECK_FALSE(agent.actor(0) == at);
  REQUIRE(agent.update());
  CHECK(agent.actor_target(0) == agent.actor(0));
  CHECK(agent.critic_target() == agent.critic());
  CHECK(agent.dqn_target(0) == agent.dqn(0));
  CHECK(agent.gradient_steps() > base);
}

TEST_CASE("critic targets use the target actor and target critic") {
  auto cfg = testing::tiny_config(2, 4);
  cfg.agent.gamma = 0.8;
  HhcdaAgent agent(cfg, 7);
  fill(agent, cfg, 1);
  Rng rng(3);
  const auto batch = agent.replay().sample(8, rng);
  const Vec y = agent.critic_targets(batch);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& t = *batch[b];
    const Vec s1 = Eigen::Map<const Vec>(t.s_next.data(), static_cast<Eigen::Index>(t.s_next.size()));
    const Vec a1 = agent.actor_target(0).forward_one(s1);
    Vec in(s1.size() + a1.size());
    in << s1, a1;
    const double q = agent.critic_target().forward_one(in)(0);
    const double want = t.r + (t.done ? 0.0 : 0.8 * q);
    CHECK(y(static_cast<Eigen::Index>(b)) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("dqn replay stores the continuous action chosen at the next step") {
  auto cfg = testing::tiny_config(2, 4);
  HhcdaAgent agent(cfg, 9);
  fill(agent, cfg, 1);
  const auto& d = agent.replay_dqn();
  REQUIRE(d.size() == static_cast<std::size_t>(cfg.slots_per_episode));
  for (std::size_t i = 0; i + 1 < d.size(); ++i) CHECK(d.at(i).a_next == d.at(i + 1).a);
  CHECK(d.at(d.size() - 1).done);
  CHECK(d.at(d.size() - 1).a_next == agent.continuous(d.at(d.size() - 1).s_next));
}

TEST_CASE("checkpoints restore every network") {
  auto cfg = testing::tiny_config(2, 4);
  cfg.agent.mode = AgentMode::Multi;
  HhcdaAgent a(cfg, 1), b(cfg, 2);
  fill(a, cfg, 2);
  const auto dir = testing::scratch_dir("agent_ckpt");
  a.save(dir / "a.bin");
  b.load(dir / "a.bin");
  CHECK(b.critic() == a.critic());
  for (int i = 0; i < a.agents(); ++i) {
    CHECK(b.actor(i) == a.actor(i));
    CHECK(b.dqn_target(i) == a.dqn_target(i));
  }
  auto other = testing::tiny_config(2, 4);
  HhcdaAgent c(other, 1);
  CHECK_THROWS(c.load(dir / "a.bin"));

  QuantizedDdpgAgent q(cfg, 1), q2(cfg, 4);
  q.save(dir / "q.bin");
  q2.load(dir / "q.bin");
  CHECK_THROWS(q2.load(dir / "a.bin"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("quantized ddpg decodes continuous then binned heads") {
  auto cfg = testing::tiny_config(2, 4);
  QuantizedDdpgAgent q(cfg, 1);
  const ActionLayout L(cfg);
  std::vector<double> raw(static_cast<std::size_t>(L.cont_dim + L.disc_dim()), 0.9);
  const auto a = q.decode(raw);
  CHECK(a.cont == std::vector<double>(static_cast<std::size_t>(L.cont_dim), 0.9));
  for (int h = 0; h < L.disc_dim(); ++h)
    CHECK(a.disc[static_cast<std::size_t>(h)] == quantize(0.9, L.heads[static_cast<std::size_t>(h)].size));
}

TEST_CASE("random policy stays inside the action space") {
  auto cfg = testing::tiny_config(3, 5);
  Env env(cfg);
  auto p = make_policy("random", cfg, 1);
  auto obs = env.reset(2);
  for (int i = 0; i < 200; ++i) {
    const auto a = p->act(env, obs, true);
    REQUIRE(static_cast<int>(a.cont.size()) == env.layout().cont_dim);
    for (double x : a.cont) CHECK((x >= -1.0 && x <= 1.0));
    for (int h = 0; h < env.layout().disc_dim(); ++h)
      CHECK((a.disc[static_cast<std::size_t>(h)] >= 0 &&
             a.disc[static_cast<std::size_t>(h)] < env.layout().heads[static_cast<std::size_t>(h)].size));
  }
  CHECK_THROWS_AS(make_policy("nope", cfg, 1), std::invalid_argument);
}

TEST_CASE("greedy with one uav keeps everything on it and never moves") {
  auto cfg = testing::tiny_config(1, 4);
  Env env(cfg);
  GreedyPolicy g;
  auto obs = env.reset(3);
  for (int t = 0; t < cfg.slots_per_episode; ++t) {
    const auto a = g.act(env, obs, false);
    const auto& L = env.layout();
    CHECK(a.cont[static_cast<std::size_t>(L.move_dist(0))] == -1.0);
    for (int k = 0; k < L.K; ++k) {
      CHECK(a.disc[static_cast<std::size_t>(L.dl_head(k))] < cfg.num_sc_dl);
      CHECK(a.disc[static_cast<std::size_t>(L.ul_head(k))] < cfg.num_sc_ul);
    }
    for (int i = 0; i < L.I; ++i)
      for (int j = 0; j < L.J; ++j) CHECK(a.disc[static_cast<std::size_t>(L.host_head(i, j))] == 0);
    auto r = env.step(a);
    CHECK(r.invariants_ok);
    for (const auto& p : r.placements)
      if (p.served) CHECK(p.hosts == std::vector<int>(p.hosts.size(), 0));
    obs = r.obs;
  }
}

}
