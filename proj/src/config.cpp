#include "uavnfv/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <variant>

#include "uavnfv/channel.hpp"

namespace uavnfv {

using nlohmann::json;

namespace {

using FieldRef = std::variant<int*, double*, bool*, std::uint64_t*, std::vector<double>*,
                              std::vector<int>*, AgentMode*>;

// Dotted path -> field. Insertion order is kept so dumps are stable.
std::vector<std::pair<std::string, FieldRef>> field_table(ScenarioConfig& c) {
  auto& s = c.catalog;
  auto& a = c.agent;
  return {
      {"num_uavs", &c.num_uavs},
      {"num_users", &c.num_users},
      {"uav_altitude", &c.uav_altitude},
      {"uav_speed_max", &c.uav_speed_max},
      {"user_speed_max", &c.user_speed_max},
      {"slot_duration", &c.slot_duration},
      {"min_uav_separation", &c.min_uav_separation},
      {"area_side", &c.area_side},
      {"bw_backhaul", &c.bw_backhaul},
      {"bw_dl", &c.bw_dl},
      {"bw_ul", &c.bw_ul},
      {"num_sc_backhaul", &c.num_sc_backhaul},
      {"num_sc_dl", &c.num_sc_dl},
      {"num_sc_ul", &c.num_sc_ul},
      {"noise_psd", &c.noise_psd},
      {"carrier_freq", &c.carrier_freq},
      {"pathloss_exp", &c.pathloss_exp},
      {"nlos_extra_loss", &c.nlos_extra_loss},
      {"env_beta1", &c.env_beta1},
      {"env_beta2", &c.env_beta2},
      {"max_power_uav", &c.max_power_uav},
      {"max_power_user", &c.max_power_user},
      {"max_power_backhaul", &c.max_power_backhaul},
      {"cpu_capacity", &c.cpu_capacity},
      {"cycles_per_bit", &c.cycles_per_bit},
      {"move_power", &c.move_power},
      {"static_power", &c.static_power},
      {"weight_ee", &c.weight_ee},
      {"weight_delay", &c.weight_delay},
      {"ee_ref", &c.ee_ref},
      {"delay_ref", &c.delay_ref},
      {"violation_penalty", &c.violation_penalty},
      {"slots_per_episode", &c.slots_per_episode},
      {"num_service_slots", &c.num_service_slots},
      {"migration_enabled", &c.migration_enabled},
      {"sigma_in_action", &c.sigma_in_action},
      {"strict_c9", &c.strict_c9},
      {"hard_separation", &c.hard_separation},
      {"rng_seed", &c.rng_seed},
      {"catalog.arrival_prob", &s.arrival_prob},
      {"catalog.chain_length_min", &s.chain_length_min},
      {"catalog.chain_length_max", &s.chain_length_max},
      {"catalog.num_vnf_types", &s.num_vnf_types},
      {"catalog.bit_rate_min", &s.bit_rate_min},
      {"catalog.bit_rate_max", &s.bit_rate_max},
      {"catalog.duration_min", &s.duration_min},
      {"catalog.duration_max", &s.duration_max},
      {"catalog.delay_budget", &s.delay_budget},
      {"catalog.reduced_budget_factor", &s.reduced_budget_factor},
      {"catalog.migration_payload_slots", &s.migration_payload_slots},
      {"agent.mode", &a.mode},
      {"agent.gamma", &a.gamma},
      {"agent.hidden_layers", &a.hidden_layers},
      {"agent.lr_actor", &a.lr_actor},
      {"agent.lr_critic", &a.lr_critic},
      {"agent.lr_dqn", &a.lr_dqn},
      {"agent.lr_decay", &a.lr_decay},
      {"agent.batch_size", &a.batch_size},
      {"agent.buffer_capacity", &a.buffer_capacity},
      {"agent.target_period", &a.target_period},
      {"agent.target_mix", &a.target_mix},
      {"agent.epsilon_start", &a.epsilon_start},
      {"agent.epsilon_decay", &a.epsilon_decay},
      {"agent.epsilon_min", &a.epsilon_min},
      {"agent.noise_std", &a.noise_std},
      {"agent.noise_min", &a.noise_min},
      {"agent.update_every_step", &a.update_every_step},
      {"agent.updates_per_episode", &a.updates_per_episode},
      {"agent.update_interval", &a.update_interval},
      {"agent.warmup_transitions", &a.warmup_transitions},
      {"agent.dqn_use_target", &a.dqn_use_target},
      {"agent.users_per_agent", &a.users_per_agent},
      {"agent.episodes", &a.episodes},
  };
}

AgentMode parse_mode(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path + ": expected \"single\" or \"multi\"");
  const auto s = v.get<std::string>();
  if (s == "single") return AgentMode::Single;
  if (s == "multi") return AgentMode::Multi;
  throw ConfigError(path + ": unknown agent mode '" + s + "'");
}

void assign(const FieldRef& ref, const json& v, const std::string& path) {
  auto fail = [&](const char* expected) {
    throw ConfigError(path + ": expected " + expected + ", got " + v.dump());
  };
  std::visit(
      [&](auto* field) {
        using T = std::remove_pointer_t<decltype(field)>;
        if constexpr (std::is_same_v<T, bool>) {
          if (!v.is_boolean()) fail("boolean");
          *field = v.get<bool>();
        } else if constexpr (std::is_same_v<T, int>) {
          if (!v.is_number_integer()) fail("integer");
          *field = v.get<int>();
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
          if (!v.is_number_integer() || v.get<long long>() < 0) fail("non-negative integer");
          *field = v.get<std::uint64_t>();
        } else if constexpr (std::is_same_v<T, double>) {
          if (!v.is_number()) fail("number");
          *field = v.get<double>();
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
          if (v.is_number()) {
            *field = {v.get<double>()};
          } else {
            if (!v.is_array()) fail("number or array of numbers");
            std::vector<double> out;
            for (const auto& e : v) {
              if (!e.is_number()) fail("array of numbers");
              out.push_back(e.get<double>());
            }
            *field = std::move(out);
          }
        } else if constexpr (std::is_same_v<T, std::vector<int>>) {
          if (!v.is_array()) fail("array of integers");
          std::vector<int> out;
          for (const auto& e : v) {
            if (!e.is_number_integer()) fail("array of integers");
            out.push_back(e.get<int>());
          }
          *field = std::move(out);
        } else if constexpr (std::is_same_v<T, AgentMode>) {
          *field = parse_mode(v, path);
        }
      },
      ref);
}

json field_value(const FieldRef& ref) {
  return std::visit(
      [](auto* field) -> json {
        using T = std::remove_pointer_t<decltype(field)>;
        if constexpr (std::is_same_v<T, AgentMode>) {
          return to_string(*field);
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
          if (field->size() == 1) return field->front();
          return *field;
        } else {
          return *field;
        }
      },
      ref);
}

void flatten(const json& node, const std::string& prefix,
             std::vector<std::pair<std::string, json>>& out) {
  for (auto it = node.begin(); it != node.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) {
      flatten(*it, path, out);
    } else {
      out.emplace_back(path, *it);
    }
  }
}

}  // namespace

std::string to_string(AgentMode mode) {
  return mode == AgentMode::Single ? "single" : "multi";
}

double ScenarioConfig::effective_ee_ref() const {
  if (ee_ref > 0.0) return ee_ref;
  // Single user directly below a UAV, alone on its subcarrier, at full power.
  const double los = fspl_gain(uav_altitude, carrier_freq, pathloss_exp);
  const double plos = los_probability(uav_altitude, 0.0, env_beta1, env_beta2);
  const double gain = expected_gain(plos, los, nlos_extra_loss * los);
  const double b1 = sc_bw_dl();
  const double rate = b1 * std::log2(1.0 + max_power_uav * gain / (b1 * noise_psd));
  return rate / max_power_uav;
}

std::vector<ConfigIssue> validate_config(const ScenarioConfig& c) {
  std::vector<ConfigIssue> issues;
  auto need = [&](bool ok, const char* path, const std::string& msg) {
    if (!ok) issues.push_back({path, msg});
  };
  auto positive = [&](double v, const char* path) {
    need(std::isfinite(v) && v > 0.0, path, "must be strictly positive");
  };
  need(c.num_uavs >= 1, "num_uavs", "must be >= 1");
  need(c.num_users >= 2, "num_users", "must be >= 2 (services need distinct endpoints)");
  positive(c.uav_altitude, "uav_altitude");
  positive(c.uav_speed_max, "uav_speed_max");
  need(std::isfinite(c.user_speed_max) && c.user_speed_max >= 0.0, "user_speed_max",
       "must be non-negative");
  positive(c.slot_duration, "slot_duration");
  positive(c.min_uav_separation, "min_uav_separation");
  positive(c.area_side, "area_side");
  need(!(c.min_uav_separation >= c.area_side), "min_uav_separation", "must be below area_side");
  positive(c.bw_backhaul, "bw_backhaul");
  positive(c.bw_dl, "bw_dl");
  positive(c.bw_ul, "bw_ul");
  need(c.num_sc_backhaul >= 1, "num_sc_backhaul", "must be >= 1");
  need(c.num_sc_dl >= 1, "num_sc_dl", "must be >= 1");
  need(c.num_sc_ul >= 1, "num_sc_ul", "must be >= 1");
  positive(c.noise_psd, "noise_psd");
  positive(c.carrier_freq, "carrier_freq");
  positive(c.pathloss_exp, "pathloss_exp");
  need(c.nlos_extra_loss > 0.0 && c.nlos_extra_loss <= 1.0, "nlos_extra_loss",
       "must lie in (0, 1]");
  need(std::isfinite(c.env_beta1) && c.env_beta1 >= 0.0, "env_beta1", "must be non-negative");
  positive(c.env_beta2, "env_beta2");
  positive(c.max_power_uav, "max_power_uav");
  positive(c.max_power_user, "max_power_user");
  positive(c.max_power_backhaul, "max_power_backhaul");
  need(c.cpu_capacity.size() == 1 ||
           c.cpu_capacity.size() == static_cast<std::size_t>(std::max(c.num_uavs, 0)),
       "cpu_capacity", "must hold one value or one value per UAV");
  for (double v : c.cpu_capacity) positive(v, "cpu_capacity");
  positive(c.cycles_per_bit, "cycles_per_bit");
  positive(c.move_power, "move_power");
  positive(c.static_power, "static_power");
  need(c.weight_ee >= 0.0 && c.weight_delay >= 0.0, "weights", "must be non-negative");
  need(c.weight_ee > 0.0 || c.weight_delay > 0.0, "weights",
       "weight_ee and weight_delay cannot both be zero");
  need(c.ee_ref >= 0.0, "ee_ref", "must be non-negative (0 selects the derived reference)");
  need(c.delay_ref >= 0.0, "delay_ref", "must be non-negative (0 selects the delay budget)");
  need(c.violation_penalty >= 0.0, "violation_penalty", "must be non-negative");
  need(c.slots_per_episode >= 1, "slots_per_episode", "must be >= 1");
  need(c.num_service_slots >= 1, "num_service_slots", "must be >= 1");

  const auto& s = c.catalog;
  need(s.arrival_prob >= 0.0 && s.arrival_prob <= 1.0, "catalog.arrival_prob",
       "must lie in [0, 1]");
  need(s.chain_length_min >= 1, "catalog.chain_length_min", "must be >= 1");
  need(s.chain_length_max >= s.chain_length_min, "catalog.chain_length_max",
       "must be >= chain_length_min");
  need(s.num_vnf_types >= 1, "catalog.num_vnf_types", "must be >= 1");
  positive(s.bit_rate_min, "catalog.bit_rate_min");
  need(s.bit_rate_max >= s.bit_rate_min, "catalog.bit_rate_max", "must be >= bit_rate_min");
  need(s.duration_min >= 1, "catalog.duration_min", "must be >= 1");
  need(s.duration_max >= s.duration_min, "catalog.duration_max", "must be >= duration_min");
  positive(s.delay_budget, "catalog.delay_budget");
  need(s.reduced_budget_factor > 0.0 && s.reduced_budget_factor <= 1.0,
       "catalog.reduced_budget_factor", "must lie in (0, 1]");
  positive(s.migration_payload_slots, "catalog.migration_payload_slots");

  const auto& a = c.agent;
  need(a.gamma >= 0.0 && a.gamma < 1.0, "agent.gamma", "must lie in [0, 1)");
  need(!a.hidden_layers.empty(), "agent.hidden_layers", "needs at least one layer");
  for (int h : a.hidden_layers) need(h >= 1, "agent.hidden_layers", "sizes must be >= 1");
  positive(a.lr_actor, "agent.lr_actor");
  positive(a.lr_critic, "agent.lr_critic");
  positive(a.lr_dqn, "agent.lr_dqn");
  need(a.lr_decay >= 0.0, "agent.lr_decay", "must be non-negative");
  need(a.batch_size >= 1, "agent.batch_size", "must be >= 1");
  need(a.batch_size <= a.buffer_capacity, "agent.batch_size", "must not exceed buffer_capacity");
  need(a.target_period >= 1, "agent.target_period", "must be >= 1");
  need(a.target_mix > 0.0 && a.target_mix <= 1.0, "agent.target_mix", "must lie in (0, 1]");
  need(a.epsilon_min >= 0.0 && a.epsilon_min <= a.epsilon_start && a.epsilon_start <= 1.0,
       "agent.epsilon_start", "need 0 <= epsilon_min <= epsilon_start <= 1");
  need(a.epsilon_decay >= 0.0, "agent.epsilon_decay", "must be non-negative");
  need(a.noise_std >= 0.0 && a.noise_min >= 0.0, "agent.noise_std", "must be non-negative");
  need(a.updates_per_episode >= 0, "agent.updates_per_episode", "must be non-negative");
  need(a.update_interval >= 1, "agent.update_interval", "must be >= 1");
  need(a.warmup_transitions >= 0, "agent.warmup_transitions", "must be non-negative");
  need(a.users_per_agent >= 0, "agent.users_per_agent", "must be non-negative");
  need(a.episodes >= 1, "agent.episodes", "must be >= 1");
  return issues;
}

json to_json(const ScenarioConfig& cfg) {
  ScenarioConfig copy = cfg;
  json doc = json::object();
  for (const auto& [path, ref] : field_table(copy)) {
    doc[json::json_pointer("/" + [&] {
      std::string p = path;
      for (auto& ch : p)
        if (ch == '.') ch = '/';
      return p;
    }())] = field_value(ref);
  }
  return doc;
}

ScenarioConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config root must be an object");
  ScenarioConfig cfg;
  auto table = field_table(cfg);
  std::map<std::string, FieldRef> index(table.begin(), table.end());
  std::vector<std::pair<std::string, json>> leaves;
  flatten(doc, "", leaves);
  for (const auto& [path, value] : leaves) {
    auto it = index.find(path);
    if (it == index.end()) throw ConfigError("unknown config key '" + path + "'");
    assign(it->second, value, path);
  }
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed config '" + path.string() + "': " + e.what());
  }
  return config_from_json(doc);
}

void save_config(const ScenarioConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << to_json(cfg).dump(2) << '\n';
}

void apply_override(ScenarioConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  auto table = field_table(cfg);
  for (auto& [path, ref] : table) {
    if (path == key) {
      assign(ref, value, path);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "' in override");
}

}  // namespace uavnfv
