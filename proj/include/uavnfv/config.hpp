#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace uavnfv {

/// Ranges from which service requests are drawn.
struct ServiceCatalog {
  double arrival_prob = 0.2;        // per idle user per slot
  int chain_length_min = 1;
  int chain_length_max = 3;
  int num_vnf_types = 4;
  double bit_rate_min = 0.2e6;      // bit/s
  double bit_rate_max = 1.0e6;
  int duration_min = 5;             // slots
  int duration_max = 20;
  double delay_budget = 0.1;        // s
  double reduced_budget_factor = 0.8;
  double migration_payload_slots = 1.0;  // payload = bit_rate * slot_duration * this
};

enum class AgentMode { Single, Multi };

struct AgentConfig {
  AgentMode mode = AgentMode::Single;
  double gamma = 0.99;
  std::vector<int> hidden_layers{512, 512, 512};
  double lr_actor = 1e-3;
  double lr_critic = 1e-3;
  double lr_dqn = 1e-3;
  double lr_decay = 1e-3;           // alpha_e = alpha0 / (1 + lr_decay * episode)
  int batch_size = 128;
  int buffer_capacity = 100000;
  int target_period = 1000;         // gradient steps between target syncs
  double target_mix = 1.0;          // 1 = hard copy
  double epsilon_start = 1.0;
  double epsilon_decay = 0.01;      // per episode
  double epsilon_min = 0.05;
  double noise_std = 0.3;           // Gaussian exploration on continuous actions
  double noise_min = 0.02;
  bool update_every_step = false;
  int updates_per_episode = 1;
  int update_interval = 1;          // env steps per gradient step when update_every_step
  int warmup_transitions = 0;
  bool dqn_use_target = true;
  int users_per_agent = 0;          // 0 = ceil(K / U)
  int episodes = 3000;
};

/// Static description of one experiment. Field names mirror the config file keys.
struct ScenarioConfig {
  int num_uavs = 6;
  int num_users = 12;
  double uav_altitude = 75.0;        // m
  double uav_speed_max = 10.0;       // m/s
  double user_speed_max = 3.0 / 3.6; // m/s
  double slot_duration = 0.5;        // s
  double min_uav_separation = 10.0;  // m
  double area_side = 1000.0;         // m

  double bw_backhaul = 5e6;          // Hz
  double bw_dl = 5e6;
  double bw_ul = 5e6;
  int num_sc_backhaul = 4;
  int num_sc_dl = 4;
  int num_sc_ul = 4;
  double noise_psd = 1e-20;          // W/Hz
  double carrier_freq = 2e9;         // Hz
  double pathloss_exp = 3.5;
  double nlos_extra_loss = 0.2;
  double env_beta1 = 0.36;
  double env_beta2 = 0.21;

  double max_power_uav = 5.0;        // W, DL budget per UAV
  double max_power_user = 5.0;       // W, UL budget per user
  double max_power_backhaul = 5.0;   // W, backhaul budget per UAV

  std::vector<double> cpu_capacity{1e9};  // cycles/s, one value or one per UAV
  double cycles_per_bit = 10.0;
  double move_power = 0.05;          // W per metre
  double static_power = 0.01;        // W

  double weight_ee = 1.0;
  double weight_delay = 1.0;
  double ee_ref = 0.0;               // 0 = derived
  double delay_ref = 0.0;            // 0 = catalog delay budget
  double violation_penalty = 1.0;

  int slots_per_episode = 100;
  int num_service_slots = 12;        // I
  bool migration_enabled = true;
  bool sigma_in_action = true;
  bool strict_c9 = false;
  bool hard_separation = false;

  ServiceCatalog catalog;
  AgentConfig agent;
  std::uint64_t rng_seed = 1;

  double max_step() const { return uav_speed_max * slot_duration; }
  double cpu_of(int uav) const {
    return cpu_capacity.size() == 1 ? cpu_capacity.front()
                                    : cpu_capacity.at(static_cast<std::size_t>(uav));
  }
  double sc_bw_dl() const { return bw_dl / num_sc_dl; }
  double sc_bw_ul() const { return bw_ul / num_sc_ul; }
  double sc_bw_backhaul() const { return bw_backhaul / num_sc_backhaul; }
  int max_chain_length() const { return catalog.chain_length_max; }
  double effective_delay_ref() const {
    return delay_ref > 0.0 ? delay_ref : catalog.delay_budget;
  }
  double effective_ee_ref() const;
};

struct ConfigIssue {
  std::string path;
  std::string message;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Every violated invariant, with the offending field path. Empty means valid.
std::vector<ConfigIssue> validate_config(const ScenarioConfig& cfg);

nlohmann::json to_json(const ScenarioConfig& cfg);
/// Throws ConfigError on unknown keys or type mismatches.
ScenarioConfig config_from_json(const nlohmann::json& doc);
ScenarioConfig load_config(const std::filesystem::path& path);
void save_config(const ScenarioConfig& cfg, const std::filesystem::path& path);

/// Applies `key=value` with a dotted key path; value is parsed as JSON, falling back to a string.
void apply_override(ScenarioConfig& cfg, const std::string& assignment);

std::string to_string(AgentMode mode);

}  // namespace uavnfv
