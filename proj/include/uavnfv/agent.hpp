#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavnfv/env.hpp"
#include "uavnfv/neural.hpp"
#include "uavnfv/rng.hpp"

namespace uavnfv {

// Fixed-capacity FIFO store with uniform sampling.
template <typename T>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : cap_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
  }

  void push(T item) {
    if (items_.size() < cap_) {
      items_.push_back(std::move(item));
    } else {
      items_[head_] = std::move(item);
      head_ = (head_ + 1) % cap_;
    }
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return cap_; }
  // i = 0 is the oldest item still held.
  const T& at(std::size_t i) const { return items_[(head_ + i) % items_.size()]; }

  std::vector<const T*> sample(std::size_t n, Rng& rng) const {
    std::vector<const T*> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      out.push_back(&items_[static_cast<std::size_t>(rng.below(static_cast<int>(items_.size())))]);
    return out;
  }

 private:
  std::size_t cap_;
  std::size_t head_ = 0;
  std::vector<T> items_;
};

// Entry of D: (s, a_cont, r, s').
struct CriticSample {
  std::vector<double> s;
  std::vector<double> a;
  double r = 0.0;
  std::vector<double> s_next;
  bool done = false;
};

// Entry of D_DQN: s_DQN = s with a_cont appended, for both t and t+1.
struct DqnSample {
  std::vector<double> s;
  std::vector<double> a;
  std::vector<int> disc;
  std::vector<std::uint8_t> mask;  // heads that mattered at t
  double r = 0.0;
  std::vector<double> s_next;
  std::vector<double> a_next;
  bool done = false;
};

// One environment transition as seen by a policy.
struct Experience {
  std::vector<double> obs;
  HybridAction action;
  std::vector<std::uint8_t> mask;
  double reward = 0.0;
  std::vector<double> next_obs;
  std::vector<double> next_cont;  // continuous action chosen at t+1; empty at episode end
  bool done = false;
};

// y = r + gamma (1 - done) q_next
Vec td_targets(const Vec& r, const Vec& done, const Vec& q_next, double gamma);

// One Adam step on the mean squared error of a scalar-output network. Returns the loss.
double regression_step(Mlp& net, Adam& opt, const Mat& x, const Vec& y);

// Q(s, a) and dQ/da for a batch of actions (columns).
using ActionValueFn = std::function<Vec(const Mat& states, const Mat& actions, Mat& dq_da)>;

// Deterministic policy gradient step: ascends mean Q(s, actor(s)). Returns that mean.
double actor_step(Mlp& actor, Adam& opt, const Mat& states, const ActionValueFn& q);

struct HeadSlice {
  int offset = 0;
  int size = 1;
};

struct DqnBatch {
  Mat x;                      // inputs at t
  Mat q_next;                 // Q values at t+1 (from the target network)
  Eigen::MatrixXi chosen;     // heads x batch
  Eigen::MatrixXi mask;       // heads x batch, 1 = trained
  Vec r;
  Vec done;
};

// Per-head targets r + gamma max_c Q_next(head, c). Returns heads x batch.
Mat dqn_targets(const DqnBatch& b, const std::vector<HeadSlice>& heads, double gamma);
// Mean squared error over masked (head, sample) pairs; one Adam step. Returns the loss.
double dqn_step(Mlp& q, Adam& opt, const DqnBatch& b, const std::vector<HeadSlice>& heads,
                double gamma);

// Bin for an output a in [-1, 1] split into n equal intervals.
int quantize(double a, int n);

struct Schedule {
  double epsilon = 1.0;
  double noise = 0.0;
  double lr_scale = 1.0;
};
Schedule schedule_at(const AgentConfig& a, int episode);

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual HybridAction act(const Env& env, const std::vector<double>& obs, bool explore) = 0;
  virtual void record(const Experience&) {}
  virtual void begin_episode(int /*episode*/) {}
  virtual void end_episode() {}
  virtual bool learns() const { return false; }
  virtual double epsilon() const { return 0.0; }
  virtual double learning_rate() const { return 0.0; }
  virtual void save(const std::filesystem::path&) const {}
  virtual void load(const std::filesystem::path&) {}
};

// Hierarchical hybrid agent: actors pick the continuous half, DQNs conditioned on
// state and that half pick the discrete heads. Multi mode keeps one actor and one
// DQN per UAV with a single critic over the joint continuous action.
class HhcdaAgent : public Policy {
 public:
  HhcdaAgent(const ScenarioConfig& cfg, std::uint64_t seed);

  std::string name() const override { return "hhcda"; }
  HybridAction act(const Env& env, const std::vector<double>& obs, bool explore) override;
  HybridAction act(const std::vector<double>& obs, bool explore);
  void record(const Experience& e) override;
  void begin_episode(int episode) override;
  void end_episode() override;
  bool learns() const override { return true; }
  double epsilon() const override { return sched_.epsilon; }
  double learning_rate() const override { return cfg_.agent.lr_actor * sched_.lr_scale; }
  void save(const std::filesystem::path& path) const override;
  void load(const std::filesystem::path& path) override;

  // Noiseless joint continuous action.
  std::vector<double> continuous(const std::vector<double>& obs) const;

  double train_critic(const std::vector<const CriticSample*>& batch);
  double train_actor(const std::vector<const CriticSample*>& batch);
  double train_dqn(const std::vector<const DqnSample*>& batch);
  // Samples both stores and runs one step of each; false if the stores are not ready.
  bool update();
  // TD targets the critic step would regress onto.
  Vec critic_targets(const std::vector<const CriticSample*>& batch) const;

  int agents() const { return part_.agents; }
  int dqn_input_size(int agent) const;
  const AgentPartition& partition() const { return part_; }
  const ActionLayout& layout() const { return layout_; }
  void set_schedule(const Schedule& s);

  const Mlp& actor(int a) const { return actors_[static_cast<std::size_t>(a)]; }
  const Mlp& actor_target(int a) const { return actor_targets_[static_cast<std::size_t>(a)]; }
  const Mlp& dqn(int a) const { return dqns_[static_cast<std::size_t>(a)]; }
  const Mlp& dqn_target(int a) const { return dqn_targets_[static_cast<std::size_t>(a)]; }
  const Mlp& critic() const { return critic_; }
  const Mlp& critic_target() const { return critic_target_; }
  long gradient_steps() const { return grad_steps_; }
  const ReplayBuffer<CriticSample>& replay() const { return replay_; }
  const ReplayBuffer<DqnSample>& replay_dqn() const { return replay_dqn_; }

 private:
  Mat views(const Mat& s, int agent) const;
  Mat joint_target_action(const Mat& s_next) const;
  std::vector<double> own(const std::vector<double>& cont, int agent) const;
  void sync_targets();
  bool ready() const;

  ScenarioConfig cfg_;
  ActionLayout layout_;
  AgentPartition part_;
  std::vector<std::vector<HeadSlice>> slices_;  // per agent, in partition head order
  std::vector<Mlp> actors_, actor_targets_, dqns_, dqn_targets_;
  Mlp critic_, critic_target_;
  std::vector<Adam> actor_opt_, dqn_opt_;
  Adam critic_opt_;
  ReplayBuffer<CriticSample> replay_;
  ReplayBuffer<DqnSample> replay_dqn_;
  Rng rng_;
  Schedule sched_;
  long grad_steps_ = 0;
  long env_steps_ = 0;
};

// DDPG over a fully continuous action; discrete heads come from binning extra outputs.
class QuantizedDdpgAgent : public Policy {
 public:
  QuantizedDdpgAgent(const ScenarioConfig& cfg, std::uint64_t seed);

  std::string name() const override { return "quantized-ddpg"; }
  HybridAction act(const Env& env, const std::vector<double>& obs, bool explore) override;
  void record(const Experience& e) override;
  void begin_episode(int episode) override;
  void end_episode() override;
  bool learns() const override { return true; }
  double epsilon() const override { return sched_.epsilon; }
  double learning_rate() const override { return cfg_.agent.lr_actor * sched_.lr_scale; }
  void save(const std::filesystem::path& path) const override;
  void load(const std::filesystem::path& path) override;

  HybridAction decode(const std::vector<double>& raw) const;
  bool update();

 private:
  ScenarioConfig cfg_;
  ActionLayout layout_;
  Mlp actor_, actor_target_, critic_, critic_target_;
  Adam actor_opt_, critic_opt_;
  ReplayBuffer<CriticSample> replay_;
  Rng rng_;
  Schedule sched_;
  std::vector<double> last_raw_, prev_raw_;
  long grad_steps_ = 0;
  long env_steps_ = 0;
};

class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
  std::string name() const override { return "random"; }
  HybridAction act(const Env& env, const std::vector<double>& obs, bool explore) override;

 private:
  Rng rng_;
};

// Nearest-UAV association, equal power split, first-feasible host, no migration.
class GreedyPolicy : public Policy {
 public:
  std::string name() const override { return "greedy"; }
  HybridAction act(const Env& env, const std::vector<double>& obs, bool explore) override;
};

// kind: hhcda | quantized-ddpg | random | greedy
std::unique_ptr<Policy> make_policy(const std::string& kind, const ScenarioConfig& cfg,
                                    std::uint64_t seed);

}  // namespace uavnfv
