#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uavnfv/channel.hpp"
#include "uavnfv/config.hpp"
#include "uavnfv/kinematics.hpp"
#include "uavnfv/metrics.hpp"
#include "uavnfv/nfv.hpp"
#include "uavnfv/radio.hpp"
#include "uavnfv/rng.hpp"
#include "uavnfv/scenario.hpp"

namespace uavnfv {

struct HeadSpec {
  enum Kind : std::uint8_t { Dl, Ul, Host, Relay, Sigma } kind = Dl;
  int a = 0;     // user, service slot or backhaul subcarrier
  int b = 0;     // function position for Host heads
  int size = 1;  // number of categories
};

// Shapes of the observation and of both halves of the action.
struct ActionLayout {
  int U = 0, K = 0, I = 0, J = 0;
  int cont_dim = 0;  // 3U + 2K
  int obs_dim = 0;   // 3U + 2K + IJK + U + U(U-1)
  std::vector<HeadSpec> heads;

  explicit ActionLayout(const ScenarioConfig& cfg);
  ActionLayout() = default;

  int disc_dim() const { return static_cast<int>(heads.size()); }
  int total_categories() const;

  // Continuous slots.
  int move_dist(int u) const { return 3 * u; }
  int move_heading(int u) const { return 3 * u + 1; }
  int backhaul_level(int u) const { return 3 * u + 2; }
  int dl_level(int k) const { return 3 * U + k; }
  int ul_level(int k) const { return 3 * U + K + k; }

  // Discrete heads; -1 when the head does not exist.
  int dl_head(int k) const { return k; }
  int ul_head(int k) const { return K + k; }
  int host_head(int i, int j) const { return 2 * K + i * J + j; }
  int relay_head(int i) const { return 2 * K + I * J + i; }
  int sigma_head(int v) const;

  // Observation offsets.
  int obs_user(int k) const { return 3 * U + 2 * k; }
  int obs_request(int i, int j, int k) const { return 3 * U + 2 * K + (i * J + j) * K + k; }
  int obs_cpu(int u) const { return 3 * U + 2 * K + I * J * K + u; }
  int obs_link(int u, int v) const;  // u != v

  // Ordered UAV pair for backhaul category c >= 1.
  std::pair<int, int> pair_of(int c) const;
};

struct HybridAction {
  std::vector<double> cont;  // in [-1, 1]
  std::vector<int> disc;     // category per head
  bool operator==(const HybridAction&) const = default;
};

struct ActiveService {
  Service svc;
  Placement placement;       // placement of the last slot it was served
  bool admitted = false;
};

struct NetworkState {
  int t = 0;
  std::vector<Vec3> uavs;
  std::vector<Vec3> users;
  GainTable gains;
  std::vector<std::optional<ActiveService>> slots;  // size I
  std::vector<double> capacity;   // backhaul capacity of the last slot [u * U + v]
  std::vector<double> link_load;  // bit/s carried last slot
  std::vector<double> cpu_load;   // cycles/s used last slot
};

struct DecodedAction {
  RadioAllocation radio;
  std::vector<Move> moves;
  std::vector<std::vector<int>> hosts;  // per service slot; empty when the slot is free
  std::vector<int> relay;               // per service slot, -1 for none
  std::vector<int> ingress;             // per service slot: UL UAV of the source, -1 if none
  std::vector<int> egress;              // per service slot: DL UAV of the destination
  int repairs = 0;                      // budget renormalisations and C9 repairs
};

struct PlacementRecord {
  int service_id = 0;
  int slot_index = 0;
  std::vector<int> hosts;
  std::vector<Edge> edges;
  std::vector<Migration> migrations;
  bool served = false;
  bool is_new = false;
  std::string reason;
};

struct StepResult {
  std::vector<double> obs;
  double reward = 0.0;
  SlotMetrics metrics;
  bool done = false;
  std::vector<PlacementRecord> placements;
  std::vector<std::pair<int, int>> separation_violations;
  bool invariants_ok = true;  // post-repair hard constraints held
};

// Users are split into contiguous blocks, one block per UAV agent.
struct AgentPartition {
  int agents = 1;
  int users_per_agent = 0;
  std::vector<int> user_owner;          // per user
  std::vector<std::vector<int>> cont;   // continuous indices per agent
  std::vector<std::vector<int>> heads;  // discrete head indices per agent
  std::vector<std::vector<std::uint8_t>> obs_mask;  // 1 = visible

  AgentPartition(const ScenarioConfig& cfg, const ActionLayout& layout);
  std::vector<double> view(const std::vector<double>& obs, int agent) const;
};

class Env {
 public:
  explicit Env(const ScenarioConfig& cfg);

  std::vector<double> reset(std::uint64_t seed);
  StepResult step(const HybridAction& a);

  std::vector<double> observe() const;
  // 1 for heads whose choice affects the coming slot.
  std::vector<std::uint8_t> active_heads() const;
  DecodedAction decode_action(const HybridAction& a) const;
  // Inactive heads set to 0, continuous entries clipped to [-1, 1].
  HybridAction canonical(const HybridAction& a) const;

  const ScenarioConfig& config() const { return cfg_; }
  const ActionLayout& layout() const { return layout_; }
  const NetworkState& state() const { return st_; }
  bool done() const { return st_.t >= cfg_.slots_per_episode; }

 private:
  void place_requests(std::vector<Service> fresh);
  std::vector<bool> idle_users() const;

  ScenarioConfig cfg_;
  ActionLayout layout_;
  NetworkState st_;
  Rng mobility_rng_;
  std::optional<RequestGenerator> requests_;
};

}  // namespace uavnfv
